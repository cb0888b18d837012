"""Sectioned key-value configuration files.

The grammar is INI (see README).  Section names map one-to-one onto the
model dataclasses; every key is optional and falls back to the dataclass
default.  Unknown sections or keys are errors so typos do not pass silently.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .battery import BatterySpec
from .daq import MAX_FAULTS, MIN_UPTIME
from .dispatch import LoadItem
from .engine import SystemConfig, default_mppt
from .errors import ConfigError
from .inverter import InverterSpec
from .planning import CatalogItem, CostCatalog, PnlScenario, basic_catalog, usd_to_cents
from .pmic import ConverterSpec, MpptState, chip_scale_spec
from .pv import PanelSpec

SYSTEM_KEYS = (
    "step_s", "optical_gain", "soiling_init", "soiling_floor", "soiling_rate_per_day",
    "temp_coeff_voc", "temp_coeff_isc", "hysteresis", "min_dwell_steps", "soc_full",
)


@dataclass(frozen=True)
class ProjectConfig:
    system: SystemConfig
    catalog: CostCatalog
    pnl: PnlScenario
    day: str = "clear:8h:667"
    ambient_c: float = 25.0
    years: int = 3
    daily_kwh: float = 2.4
    thresholds: dict = field(default_factory=lambda: {"min_uptime": MIN_UPTIME, "max_faults": MAX_FAULTS})
    source: str = ""


def _convert(value: str, target, where: str):
    text = value.strip()
    try:
        if target is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if target is int:
            return int(text)
        if target is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{where}: cannot read {text!r} as {target.__name__}") from None
    return text


def _field_types(cls):
    hints = {}
    for f in dataclasses.fields(cls):
        t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
        if "int" in t and "float" not in t:
            hints[f.name] = int
        elif "float" in t:
            hints[f.name] = float
        elif "bool" in t:
            hints[f.name] = bool
        else:
            hints[f.name] = str
    return hints


def _build(cls, section, where, skip=(), base=None):
    types = _field_types(cls)
    kwargs = {}
    for key, value in section.items():
        if key in skip:
            continue
        if key not in types:
            raise ConfigError(f"{where}: unknown key {key!r} (valid: {', '.join(sorted(types))})")
        kwargs[key] = _convert(value, types[key], f"{where}.{key}")
    try:
        if base is not None:
            return dataclasses.replace(base, **kwargs)
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}] {exc}") from None


def _parse_hours(text: str, where: str):
    windows = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        start, sep, end = part.partition("-")
        if not sep:
            raise ConfigError(f"{where}: window {part!r} must look like 18-22")
        windows.append((_convert(start, float, where), _convert(end, float, where)))
    return tuple(windows)


def _parse_range(text: str, where: str):
    text = text.strip()
    if not text or text.lower() == "none":
        return None
    lo, sep, hi = text.partition("-")
    if not sep:
        v = _convert(lo, float, where)
        return (v, v)
    return (_convert(lo, float, where), _convert(hi, float, where))


def parse_config(text: str, source: str = "<string>") -> ProjectConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}".splitlines()[0]) from None

    simple = {"system", "panel", "converter", "battery", "inverter", "mppt",
              "catalog", "pnl", "econ", "daq", "sim"}
    loads, items = [], []
    for name in parser.sections():
        if name in simple:
            continue
        kind, _, rest = name.partition(" ")
        if kind == "load" and rest.strip():
            loads.append(rest.strip())
        elif kind == "item" and rest.strip():
            items.append(rest.strip())
        else:
            raise ConfigError(
                f"{source}: unknown section [{name}]; expected one of "
                f"{', '.join(sorted(simple))}, [load <name>] or [item <name>]"
            )

    def sec(name):
        return dict(parser[name]) if parser.has_section(name) else {}

    panel = _build(PanelSpec, sec("panel"), "panel")
    conv_sec = sec("converter")
    conv_base = chip_scale_spec() if conv_sec.pop("preset", "system").strip() == "chip" else None
    converter = _build(ConverterSpec, conv_sec, "converter", base=conv_base)
    battery = _build(BatterySpec, sec("battery"), "battery")
    inverter = _build(InverterSpec, sec("inverter"), "inverter")
    mppt = _build(MpptState, sec("mppt"), "mppt", base=default_mppt(panel))

    load_items = []
    for lname in loads:
        s = sec(f"load {lname}")
        hours = _parse_hours(s.pop("hours", ""), f"load {lname}.hours")
        item = _build(LoadItem, s, f"load {lname}", skip=("name",), base=LoadItem(lname))
        load_items.append(dataclasses.replace(item, hours=hours))

    system_sec = sec("system")
    for key in system_sec:
        if key not in SYSTEM_KEYS:
            raise ConfigError(f"system: unknown key {key!r} (valid: {', '.join(SYSTEM_KEYS)})")
    system = SystemConfig(panel=panel, converter=converter, battery=battery, inverter=inverter,
                          loads=tuple(load_items), mppt=mppt)
    system = _build(SystemConfig, system_sec, "system", base=system)

    cat_sec = sec("catalog")
    known_cat = {"shipping_usd", "free_years", "annual_fee_usd", "replace_battery_year"}
    for key in cat_sec:
        if key not in known_cat:
            raise ConfigError(f"catalog: unknown key {key!r} (valid: {', '.join(sorted(known_cat))})")
    default_cat = basic_catalog()
    catalog_items = default_cat.items
    if items:
        catalog_items = []
        for iname in items:
            s = sec(f"item {iname}")
            where = f"item {iname}"
            known = {"unit_price_usd", "quantity", "lifetime_years", "scales"}
            for key in s:
                if key not in known:
                    raise ConfigError(f"{where}: unknown key {key!r} (valid: {', '.join(sorted(known))})")
            scales = s.get("scales", "none").strip().lower()
            try:
                catalog_items.append(CatalogItem(
                    iname,
                    usd_to_cents(_convert(s.get("unit_price_usd", "0"), float, where)),
                    _convert(s.get("quantity", "1"), int, where),
                    _parse_range(s.get("lifetime_years", ""), where),
                    None if scales == "none" else scales,
                ))
            except ValueError as exc:
                raise ConfigError(f"[{where}] {exc}") from None
    try:
        rby = cat_sec.get("replace_battery_year", "none").strip()
        catalog = CostCatalog(
            items=tuple(catalog_items),
            shipping_cents=usd_to_cents(_convert(cat_sec["shipping_usd"], float, "catalog"))
            if "shipping_usd" in cat_sec else default_cat.shipping_cents,
            free_years=_convert(cat_sec.get("free_years", str(default_cat.free_years)), int, "catalog"),
            annual_fee_cents=usd_to_cents(_convert(cat_sec["annual_fee_usd"], float, "catalog"))
            if "annual_fee_usd" in cat_sec else default_cat.annual_fee_cents,
            replace_battery_year=None if rby.lower() == "none" else _convert(rby, int, "catalog"),
        )
    except ValueError as exc:
        raise ConfigError(f"[catalog] {exc}") from None

    pnl_sec = sec("pnl")
    units = pnl_sec.pop("units_sold_per_year", None)
    pnl = _build(PnlScenario, pnl_sec, "pnl", skip=())
    if units is not None:
        try:
            pnl = dataclasses.replace(pnl, units_sold_per_year=tuple(
                _convert(u, int, "pnl.units_sold_per_year") for u in units.split(",") if u.strip()))
        except ValueError as exc:
            raise ConfigError(f"[pnl] {exc}") from None

    extra = {}
    for sname, keys in (("econ", {"years": int, "daily_kwh": float}),
                        ("sim", {"day": str, "ambient_c": float}),
                        ("daq", {"min_uptime": float, "max_faults": int})):
        for key, value in sec(sname).items():
            if key not in keys:
                raise ConfigError(f"{sname}: unknown key {key!r} (valid: {', '.join(sorted(keys))})")
            extra[(sname, key)] = _convert(value, keys[key], f"{sname}.{key}")

    try:
        system.validate()
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    return ProjectConfig(
        system=system,
        catalog=catalog,
        pnl=pnl,
        day=extra.get(("sim", "day"), "clear:8h:667"),
        ambient_c=extra.get(("sim", "ambient_c"), 25.0),
        years=extra.get(("econ", "years"), 3),
        daily_kwh=extra.get(("econ", "daily_kwh"), 2.4),
        thresholds={
            "min_uptime": extra.get(("daq", "min_uptime"), MIN_UPTIME),
            "max_faults": extra.get(("daq", "max_faults"), MAX_FAULTS),
        },
        source=source,
    )


def load_config(path) -> ProjectConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))
