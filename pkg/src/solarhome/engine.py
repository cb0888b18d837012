"""Fixed-step orchestration of the whole solar-home chain.

Each step runs, in order: environment read, soiling update, MPPT,
PWM/PFM mode selection, protection, dispatch and battery update, then
appends a trace row.
"""

from __future__ import annotations

import functools
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from . import battery as batt
from . import pmic
from .dispatch import LoadItem, demand_at_bus, dispatch_step
from .environment import ScenarioProfile
from .errors import OutOfTemperatureError, ValidationError
from .inverter import InverterSpec
from .io import fmt_float
from .pmic import ConverterSpec, ConverterState, MpptState
from .pv import PanelSpec, PvModel, ZERO_POINT, apply_soiling_step, fit_model

TRACE_HEADER = (
    "t_s", "g_wm2", "temp_c", "p_mpp_w", "mode", "f_sw_hz", "eta", "p_served_w",
    "p_shed_w", "p_curtail_w", "soc", "batt_v", "p_batt_w", "p_ac_w", "fault",
)
TOTAL_KEYS = (
    "harvested_wh", "delivered_wh", "charged_wh", "discharged_wh",
    "curtailed_wh", "shed_wh", "loss_wh",
)


@dataclass(frozen=True)
class SystemConfig:
    panel: PanelSpec = field(default_factory=lambda: PanelSpec(count=2))
    converter: ConverterSpec = field(default_factory=ConverterSpec)
    battery: batt.BatterySpec = field(default_factory=lambda: batt.BatterySpec(count=2))
    inverter: InverterSpec = field(default_factory=InverterSpec)
    loads: tuple = ()
    mppt: MpptState | None = None
    step_s: float = 60.0
    optical_gain: float = 1.0
    soiling_init: float = 1.0
    soiling_floor: float = 0.95
    soiling_rate_per_day: float = 0.01
    temp_coeff_voc: float = -0.0030
    temp_coeff_isc: float = 0.0005
    hysteresis: float = pmic.HYSTERESIS
    min_dwell_steps: int = pmic.MIN_DWELL_STEPS
    soc_full: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "loads", tuple(self.loads))
        if self.mppt is None:
            object.__setattr__(self, "mppt", default_mppt(self.panel))

    def validate(self) -> None:
        if not (1 <= self.step_s <= 3600):
            raise ValidationError(f"step_s must be in [1, 3600], got {self.step_s!r}")
        names = [l.name for l in self.loads]
        if len(set(names)) != len(names):
            raise ValidationError("load names must be unique")
        for l in self.loads:
            if not isinstance(l, LoadItem):
                raise ValidationError(f"not a LoadItem: {l!r}")
        if not (0 <= self.hysteresis < 1):
            raise ValidationError("hysteresis must be in [0, 1)")
        if self.min_dwell_steps < 1:
            raise ValidationError("min_dwell_steps must be at least 1")
        if not (0 < self.soc_full <= 1):
            raise ValidationError("soc_full must be in (0, 1]")
        self.pv_model()

    def pv_model(self) -> PvModel:
        model = _fitted(self.panel, self.temp_coeff_voc, self.temp_coeff_isc,
                        self.soiling_floor, self.soiling_rate_per_day)
        return replace(model, soiling=self.soiling_init, optical_gain=self.optical_gain)

    def with_counts(self, n_panels: int, n_batteries: int) -> "SystemConfig":
        return replace(self, panel=replace(self.panel, count=n_panels),
                       battery=replace(self.battery, count=n_batteries))


def default_mppt(panel: PanelSpec) -> MpptState:
    """Tracker that restarts at the datasheet Vmp/Voc ratio after darkness."""
    return MpptState(target_v=0.0, step_v=0.2, restart_fraction=panel.v_mp / panel.v_oc)


@functools.lru_cache(maxsize=64)
def _fitted(panel, temp_coeff_voc, temp_coeff_isc, soiling_floor, soiling_rate_per_day):
    return fit_model(panel, temp_coeff_voc=temp_coeff_voc, temp_coeff_isc=temp_coeff_isc,
                     soiling_floor=soiling_floor, soiling_rate_per_day=soiling_rate_per_day)


@dataclass(frozen=True)
class TraceRow:
    t_s: float
    g_wm2: float
    temp_c: float
    p_mpp_w: float
    mode: str
    f_sw_hz: float
    eta: float
    p_served_w: float
    p_shed_w: float
    p_curtail_w: float
    soc: float
    batt_v: float
    p_batt_w: float
    p_ac_w: float
    fault: str
    pv_v: float = 0.0
    pv_i: float = 0.0
    duty: float = 0.0
    p_avail_w: float = 0.0
    shed_names: tuple = ()
    residual: float = 0.0

    def csv_fields(self):
        out = []
        for name in TRACE_HEADER:
            v = getattr(self, name)
            out.append(v if isinstance(v, str) else fmt_float(v))
        return out


@dataclass(frozen=True)
class SimResult:
    trace: tuple
    totals: dict
    peak_delivered_w: float
    fault_events: tuple
    start_soc: float
    end_soc: float
    label: str = ""
    seed: int = 0

    def conservation_residual(self) -> float:
        t = self.totals
        rhs = (t["delivered_wh"] + t["charged_wh"] - t["discharged_wh"]
               + t["curtailed_wh"] + t["loss_wh"])
        scale = max(t["harvested_wh"], t["discharged_wh"], t["delivered_wh"])
        r = abs(t["harvested_wh"] - rhs)
        return r / scale if scale > 0 else r

    def max_step_residual(self) -> float:
        return max((row.residual for row in self.trace), default=0.0)

    def summary(self) -> dict:
        return {
            "label": self.label,
            "seed": self.seed,
            "steps": len(self.trace),
            "totals": dict(self.totals),
            "peak_delivered_w": self.peak_delivered_w,
            "start_soc": self.start_soc,
            "end_soc": self.end_soc,
            "fault_events": [dict(e) for e in self.fault_events],
        }

    def trace_csv_text(self) -> str:
        lines = [",".join(TRACE_HEADER)]
        lines.extend(",".join(row.csv_fields()) for row in self.trace)
        return "\n".join(lines) + "\n"


def run(config: SystemConfig, profile: ScenarioProfile, seed: int = 0) -> SimResult:
    """Simulate ``profile`` through ``config``.

    The simulation is deterministic; ``seed`` is recorded with the result so
    seeded profile generators can be traced back.
    """
    config.validate()
    if len(profile) < 1:
        raise ValidationError("profile must cover at least one step")
    dt = float(profile.step_s)
    model = config.pv_model()
    conv_spec = config.converter
    bspec = config.battery
    inv = config.inverter

    tracker = config.mppt
    conv = ConverterState(f_sw=conv_spec.f_nominal)
    bstate = batt.initial_state(bspec)
    start_soc = bstate.soc

    rows = []
    harvested, delivered, charged, discharged, curtailed, shed, loss = ([] for _ in range(7))
    peak = 0.0
    events = []
    panel_fault = False

    for s in profile.samples:
        g, temp = s.irradiance_g, s.ambient_temp
        model = apply_soiling_step(model, dt, s.rain)

        op = ZERO_POINT
        if not conv.faulted:
            try:
                tracker, op = pmic.mppt_step(tracker, model, g, temp)
                panel_fault = False
            except OutOfTemperatureError:
                if not panel_fault:
                    events.append({"t_s": s.t, "code": "PANEL_TEMP"})
                panel_fault = True
                op = ZERO_POINT

        active = [l for l in config.loads if l.is_active(s.t)]
        p_demand = demand_at_bus(active, inv)

        duty, v_out = pmic.regulate(conv_spec, op.v)
        frac = pmic.load_fraction(conv_spec, op.p / conv_spec.v_out_nominal)
        eta = pmic.efficiency_at(conv_spec, frac, temp)
        was_faulted = conv.faulted
        if not was_faulted:
            conv = replace(conv, duty=duty, v_in=op.v, v_out=v_out, p_in=op.p,
                           p_out=op.p * eta, efficiency=eta if op.p > 0 else 0.0,
                           f_sw=pmic.equivalent_frequency(conv_spec, tracker.target_v))
            conv = pmic.mode_transition(conv, op.p * eta, p_demand, bstate.soc, config.soc_full,
                                        config.hysteresis, config.min_dwell_steps)
            conv = pmic.protection_check(conv, conv_spec, temp)
            if conv.faulted:
                events.append({"t_s": s.t, "code": str(conv.fault_code)})

        decision, bstate = dispatch_step(op.p, eta, active, bstate, bspec, inv, conv.mode, dt,
                                         charge_enabled=conv.charge_enabled)

        h = dt / 3600.0
        harvested.append(decision.harvested_w * h)
        delivered.append(decision.served_w * h)
        charged.append(decision.pv_to_batt_w * h)
        discharged.append(decision.batt_to_load_w * h)
        curtailed.append(decision.curtailed_pv_w * h)
        shed.append(decision.shed_w * h)
        loss.append((decision.conversion_loss_w + decision.inverter_loss_w) * h)
        peak = max(peak, decision.converter_out_w)

        rows.append(TraceRow(
            t_s=s.t, g_wm2=g, temp_c=temp, p_mpp_w=op.p, mode=str(conv.mode),
            f_sw_hz=conv.f_sw, eta=eta, p_served_w=decision.served_w, p_shed_w=decision.shed_w,
            p_curtail_w=decision.curtailed_pv_w, soc=bstate.soc, batt_v=bstate.terminal_v,
            p_batt_w=decision.battery_w, p_ac_w=decision.ac_out_w,
            fault=str(conv.fault_code) if conv.faulted else "",
            pv_v=op.v, pv_i=op.i, duty=conv.duty, p_avail_w=decision.available_w,
            shed_names=decision.shed, residual=decision.residual(),
        ))

    totals = {
        "harvested_wh": math.fsum(harvested),
        "delivered_wh": math.fsum(delivered),
        "charged_wh": math.fsum(charged),
        "discharged_wh": math.fsum(discharged),
        "curtailed_wh": math.fsum(curtailed),
        "shed_wh": math.fsum(shed),
        "loss_wh": math.fsum(loss),
    }
    return SimResult(tuple(rows), totals, peak, tuple(events), start_soc, bstate.soc,
                     profile.label, seed)


def _run_pair(args):
    config, profile, seed = args
    return run(config, profile, seed)


def run_sweep(configs, profiles, seed: int = 0, workers: int | None = None):
    """Run every (config, profile) pair, config-major.

    All configurations are validated first; errors are reported together.
    With ``workers > 1`` runs execute in a process pool, order preserved.
    """
    configs = list(configs)
    profiles = list(profiles)
    if not configs or not profiles:
        raise ValidationError("run_sweep needs at least one config and one profile")
    problems = []
    for k, cfg in enumerate(configs):
        try:
            cfg.validate()
        except ValidationError as exc:
            problems.append(f"config {k}: {exc}")
    if problems:
        raise ValidationError("; ".join(problems))
    jobs = [(c, p, seed) for c, p in itertools.product(configs, profiles)]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_pair, jobs))
    return [_run_pair(j) for j in jobs]
