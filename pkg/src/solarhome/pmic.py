"""Behavioural model of the power-management IC.

Covers the averaged boost conversion law, output ripple, load- and
temperature-dependent efficiency, perturb-and-observe MPPT, the PWM/PFM
mode machine and the latching OVP/OTP protection.  Every transition is a
pure function from old state to new state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import ValidationError
from .pv import PvModel, iv_at

DUTY_MIN = 0.01
DUTY_MAX = 0.95
HYSTERESIS = 0.05
MIN_DWELL_STEPS = 5


class Mode(str, enum.Enum):
    PWM = "PWM"
    PFM = "PFM"
    FAULT = "Fault"

    def __str__(self):
        return self.value


class FaultCode(str, enum.Enum):
    OVP = "OVP"
    OTP = "OTP"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ConverterSpec:
    """Converter parameters.  Defaults describe the household-scale part;
    :func:`chip_scale_spec` gives the characterised chip."""

    f_nominal: float = 100e3
    v_in_nominal: float = 36.0
    v_out_nominal: float = 48.0
    eta_min: float = 0.70
    eta_max: float = 0.85
    i_load_lo: float = 1.25
    i_load_hi: float = 12.5
    c_out: float = 470e-6
    ovp_threshold: float | None = None
    otp_threshold: float = 85.0
    temp_derate_per_c: float = 0.0

    def __post_init__(self):
        if self.ovp_threshold is None:
            object.__setattr__(self, "ovp_threshold", 1.15 * self.v_out_nominal)
        if not (0 < self.eta_min <= self.eta_max <= 1):
            raise ValidationError("need 0 < eta_min <= eta_max <= 1")
        if not (0 <= self.i_load_lo < self.i_load_hi):
            raise ValidationError("need 0 <= i_load_lo < i_load_hi")
        for name in ("f_nominal", "v_in_nominal", "v_out_nominal", "c_out",
                     "ovp_threshold", "otp_threshold"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if self.temp_derate_per_c < 0:
            raise ValidationError("temp_derate_per_c must be non-negative")


def chip_scale_spec() -> ConverterSpec:
    """The 1.2 V -> 2.4 V, 30 MHz, 100-500 mA characterised converter chip."""
    f = 30e6
    # c_out solved from ripple = I*D/(f*C) at 0.5 A, D = 0.5, 4.45 mV.
    c_out = 0.5 * 0.5 / (f * 4.45e-3)
    return ConverterSpec(
        f_nominal=f, v_in_nominal=1.2, v_out_nominal=2.4, eta_min=0.70, eta_max=0.85,
        i_load_lo=0.1, i_load_hi=0.5, c_out=c_out,
    )


def ideal_boost_ratio(v_in: float, duty: float) -> float:
    """Averaged continuous-conduction boost output, ``v_in / (1 - duty)``."""
    if not (0.0 <= duty <= DUTY_MAX):
        raise ValidationError(f"duty must be in [0, {DUTY_MAX}], got {duty!r}")
    return v_in / (1.0 - duty)


def output_ripple(i_load: float, duty: float, f_sw: float, c_out: float) -> float:
    if i_load < 0 or duty < 0 or f_sw <= 0 or c_out <= 0:
        raise ValidationError("ripple inputs must be positive")
    return i_load * duty / (f_sw * c_out)


def load_fraction(spec: ConverterSpec, i_load: float) -> float:
    """Map a load current onto [0, 1] between the low and high anchors."""
    x = (i_load - spec.i_load_lo) / (spec.i_load_hi - spec.i_load_lo)
    return min(1.0, max(0.0, x))


def efficiency_at(spec: ConverterSpec, load_fraction: float, temp: float = 25.0) -> float:
    if not (0.0 <= load_fraction <= 1.0):
        raise ValidationError(f"load_fraction must be in [0, 1], got {load_fraction!r}")
    eta = spec.eta_min + (spec.eta_max - spec.eta_min) * load_fraction
    eta *= max(0.0, 1.0 - spec.temp_derate_per_c * max(0.0, temp - 25.0))
    return min(spec.eta_max, max(0.01, eta))


def regulate(spec: ConverterSpec, v_in: float) -> tuple[float, float]:
    """Duty and output voltage when regulating toward ``v_out_nominal``."""
    if v_in <= 0:
        return DUTY_MAX, 0.0
    duty = min(DUTY_MAX, max(DUTY_MIN, 1.0 - v_in / spec.v_out_nominal))
    return duty, ideal_boost_ratio(v_in, duty)


def equivalent_frequency(spec: ConverterSpec, target_v: float) -> float:
    """Switching frequency reported for a tracked input voltage.

    Tracking is done in the voltage domain; the frequency is the equivalent
    knob ``f_nominal * v_in_nominal / target_v``.
    """
    if target_v <= 0:
        return spec.f_nominal
    return spec.f_nominal * spec.v_in_nominal / target_v


# --- MPPT ---------------------------------------------------------------

@dataclass(frozen=True)
class MpptState:
    target_v: float = 0.0
    step_v: float = 0.2
    last_power: float = 0.0
    direction: int = 1
    # On wake from darkness, restart at this fraction of Voc (0 disables).
    restart_fraction: float = 0.0

    def __post_init__(self):
        if self.target_v < 0:
            raise ValidationError("target_v must be non-negative")
        if self.step_v <= 0:
            raise ValidationError("step_v must be positive")
        if self.direction not in (1, -1):
            raise ValidationError("direction must be +1 or -1")
        if not (0.0 <= self.restart_fraction < 1.0):
            raise ValidationError("restart_fraction must be in [0, 1)")


def mppt_step(state: MpptState, model: PvModel, g: float, temp: float = 25.0):
    """One perturb-and-observe iteration.

    Returns the updated tracker and the operating point applied this step.
    Raises :class:`~solarhome.errors.OutOfTemperatureError` if the panel is
    outside its operating window.
    """
    if g < 0:
        raise ValidationError(f"irradiance must be non-negative, got {g!r}")
    model.check_temperature(temp)
    voc = model.open_circuit_voltage(g, temp) if model.spec.count else 0.0
    target = state.target_v
    direction = state.direction
    last_power = state.last_power
    if target <= 0.0 and voc > 0.0 and state.restart_fraction > 0.0:
        # Wake from darkness climbing, in step with the morning Vmp rise.
        target = state.restart_fraction * voc
        direction, last_power = 1, 0.0
    v = min(max(target, 0.0), voc)
    op = iv_at(model, v, g, temp)
    if op.p < last_power:
        direction = -direction
    # Pinned at a curve end (e.g. target above a dimmed Voc): turn back.
    if voc > 0.0 and ((direction > 0 and v >= voc) or (direction < 0 and v <= 0.0)):
        direction = -direction
    new_target = min(max(v + direction * state.step_v, 0.0), voc)
    return replace(state, target_v=new_target, last_power=op.p, direction=direction), op


# --- Mode machine ---------------------------------------------------------

@dataclass(frozen=True)
class ConverterState:
    mode: Mode = Mode.PWM
    f_sw: float = 100e3
    duty: float = DUTY_MAX
    v_in: float = 0.0
    v_out: float = 0.0
    p_in: float = 0.0
    p_out: float = 0.0
    efficiency: float = 0.0
    fault_code: FaultCode | None = None
    # Steps that must still elapse before another PWM/PFM change.
    dwell_remaining: int = 0
    charge_enabled: bool = True

    def __post_init__(self):
        if (self.mode is Mode.FAULT) != (self.fault_code is not None):
            raise ValidationError("mode is Fault exactly when a fault code is set")
        if not (0.0 < self.duty <= DUTY_MAX):
            raise ValidationError(f"duty must be in (0, {DUTY_MAX}], got {self.duty!r}")
        if self.p_out > self.p_in + 1e-9 * max(1.0, self.p_in):
            raise ValidationError("p_out cannot exceed p_in")

    @property
    def faulted(self) -> bool:
        return self.mode is Mode.FAULT


def mode_transition(
    state: ConverterState,
    p_mpp: float,
    p_demand: float,
    soc: float,
    soc_full: float = 1.0,
    hysteresis: float = HYSTERESIS,
    min_dwell: int = MIN_DWELL_STEPS,
) -> ConverterState:
    """PWM/PFM selection with a hysteresis band and a minimum dwell.

    PWM is requested when the tracked power covers the demand; PFM when it
    falls below ``(1 - hysteresis)`` of the demand.  In between, the current
    mode holds.  A latched Fault is returned unchanged.
    """
    if state.faulted:
        return state
    if p_mpp < 0 or p_demand < 0 or soc < 0:
        raise ValidationError("mode_transition inputs must be non-negative")
    if p_mpp >= p_demand:
        wanted = Mode.PWM
    elif p_mpp < p_demand * (1.0 - hysteresis):
        wanted = Mode.PFM
    else:
        wanted = state.mode
    charge_enabled = soc < soc_full
    if wanted is not state.mode and state.dwell_remaining <= 0:
        return replace(state, mode=wanted, dwell_remaining=max(0, min_dwell - 1),
                       charge_enabled=charge_enabled)
    return replace(state, dwell_remaining=max(0, state.dwell_remaining - 1),
                   charge_enabled=charge_enabled)


def protection_check(state: ConverterState, spec: ConverterSpec, temp: float) -> ConverterState:
    """Latch OVP/OTP faults; a latched fault stays until :func:`reset_fault`."""
    if state.faulted:
        return state
    code = None
    if state.v_out > spec.ovp_threshold:
        code = FaultCode.OVP
    elif temp > spec.otp_threshold:
        code = FaultCode.OTP
    if code is None:
        return state
    return replace(state, mode=Mode.FAULT, fault_code=code, p_out=0.0, efficiency=0.0)


def reset_fault(state: ConverterState) -> ConverterState:
    if not state.faulted:
        return state
    return replace(state, mode=Mode.PFM, fault_code=None, dwell_remaining=0)
