"""Per-step power arbitration between PV, battery and household loads."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import battery as batt
from .errors import ValidationError
from .inverter import InverterSpec
from .pmic import Mode


class LoadKind(str, enum.Enum):
    DC = "DC"
    AC = "AC"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class LoadItem:
    """A household load.  Lower ``priority`` is shed first.

    ``hours`` lists daily ``(start_h, end_h)`` windows when the load is on;
    an empty tuple means always on.  Windows with ``start_h > end_h`` wrap
    past midnight.
    """

    name: str
    kind: LoadKind = LoadKind.DC
    p_w: float = 0.0
    priority: int = 0
    hours: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", LoadKind(self.kind))
        object.__setattr__(self, "hours", tuple(tuple(map(float, w)) for w in self.hours))
        if self.p_w < 0:
            raise ValidationError(f"load {self.name!r}: p_w must be non-negative")
        for start, end in self.hours:
            if not (0 <= start <= 24 and 0 <= end <= 24):
                raise ValidationError(f"load {self.name!r}: window hours must be in [0, 24]")

    def is_active(self, t_s: float) -> bool:
        if not self.hours:
            return True
        h = (t_s % 86400.0) / 3600.0
        for start, end in self.hours:
            if start <= end:
                if start <= h < end:
                    return True
            elif h >= start or h < end:
                return True
        return False

    def bus_cost(self, inv: InverterSpec) -> float:
        """Power drawn at the DC bus to run this load."""
        return self.p_w / inv.eta_inv if self.kind is LoadKind.AC else self.p_w


def demand_at_bus(loads, inv: InverterSpec) -> float:
    return sum(load.bus_cost(inv) for load in loads)


@dataclass(frozen=True)
class DispatchDecision:
    pv_to_load_w: float = 0.0
    pv_to_batt_w: float = 0.0
    batt_to_load_w: float = 0.0
    conversion_loss_w: float = 0.0
    inverter_loss_w: float = 0.0
    curtailed_pv_w: float = 0.0
    served: tuple = ()
    shed: tuple = ()
    harvested_w: float = 0.0
    served_w: float = 0.0
    shed_w: float = 0.0
    ac_out_w: float = 0.0

    @property
    def available_w(self) -> float:
        return self.harvested_w - self.conversion_loss_w

    @property
    def converter_out_w(self) -> float:
        return self.pv_to_load_w + self.pv_to_batt_w

    @property
    def battery_w(self) -> float:
        """Net battery terminal power, positive when discharging."""
        return self.batt_to_load_w - self.pv_to_batt_w

    def residual(self) -> float:
        """Largest ledger imbalance relative to harvested plus discharged power."""
        source = self.pv_to_load_w + self.pv_to_batt_w + self.conversion_loss_w + self.curtailed_pv_w
        r_pv = abs(self.harvested_w - source)
        r_load = abs(self.served_w - (self.pv_to_load_w + self.batt_to_load_w - self.inverter_loss_w))
        scale = self.harvested_w + self.batt_to_load_w
        r = max(r_pv, r_load)
        return r / scale if scale > 0 else r


def dispatch_step(
    p_mpp: float,
    conv_eta: float,
    loads,
    batt_state: batt.BatteryState,
    batt_spec: batt.BatterySpec,
    inv_spec: InverterSpec,
    mode: Mode,
    dt: float,
    charge_enabled: bool = True,
):
    """Arbitrate one step.  Returns ``(DispatchDecision, BatteryState)``.

    Loads are served whole in descending priority until the first that
    cannot be covered; it and every lower-priority load are shed.  The
    battery covers deficits in PFM, and also the small deficits PWM holds
    through its hysteresis band and dwell.  Surplus converter output charges
    the battery (when ``charge_enabled``) and the remainder is curtailed.
    In Fault nothing flows and every load is shed.
    """
    if p_mpp < 0:
        raise ValidationError(f"p_mpp must be non-negative, got {p_mpp!r}")
    if not (0 < conv_eta <= 1):
        raise ValidationError(f"conv_eta must be in (0, 1], got {conv_eta!r}")
    mode = Mode(mode)
    # Stable sort keeps input order among equal priorities.
    ordered = sorted(loads, key=lambda l: -l.priority)

    if mode is Mode.FAULT:
        return DispatchDecision(
            curtailed_pv_w=p_mpp, harvested_w=p_mpp,
            shed=tuple(l.name for l in ordered), shed_w=sum(l.p_w for l in ordered),
        ), batt_state

    available = p_mpp * conv_eta
    conversion_loss = p_mpp - available
    batt_cap = batt.max_discharge_power(batt_state, batt_spec, dt)
    budget = available + batt_cap

    served, shed = [], []
    cost = served_w = shed_w = ac_out = inv_loss = 0.0
    shedding = False
    for load in ordered:
        c = load.bus_cost(inv_spec)
        is_ac = load.kind is LoadKind.AC
        fits = cost + c <= budget and (not is_ac or ac_out + load.p_w <= inv_spec.p_rated_w)
        if shedding or not fits:
            shedding = True
            shed.append(load.name)
            shed_w += load.p_w
            continue
        served.append(load.name)
        cost += c
        served_w += load.p_w
        if is_ac:
            ac_out += load.p_w
            inv_loss += c - load.p_w

    pv_to_load = min(cost, available)
    batt_to_load = 0.0
    state = batt_state
    if cost > pv_to_load:
        state, batt_to_load = batt.discharge(state, batt_spec, cost - pv_to_load, dt)

    surplus = available - pv_to_load
    pv_to_batt = 0.0
    if surplus > 0 and charge_enabled:
        state, pv_to_batt = batt.charge(state, batt_spec, surplus, dt)
    curtailed = surplus - pv_to_batt

    decision = DispatchDecision(
        pv_to_load_w=pv_to_load, pv_to_batt_w=pv_to_batt, batt_to_load_w=batt_to_load,
        conversion_loss_w=conversion_loss, inverter_loss_w=inv_loss, curtailed_pv_w=curtailed,
        served=tuple(served), shed=tuple(shed), harvested_w=p_mpp, served_w=served_w,
        shed_w=shed_w, ac_out_w=ac_out,
    )
    return decision, state
