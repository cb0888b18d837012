"""Coulomb-counting state-of-charge model of a VRLA bank.

Powers are measured at the battery terminals.  Charging stores
``p * eta_charge``; discharging removes ``p / eta_discharge`` from storage.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ValidationError

V_FLOOR = 11.8
V_CEIL = 12.9


@dataclass(frozen=True)
class BatterySpec:
    capacity_ah: float = 200.0
    v_nominal: float = 12.0
    energy_kwh: float = 2.4
    count: int = 1
    soc_min: float = 0.5
    soc_init: float = 0.8
    eta_charge: float = 0.90
    eta_discharge: float = 0.90
    max_charge_w: float = 480.0
    max_discharge_w: float = 480.0
    v_floor: float = V_FLOOR
    v_ceil: float = V_CEIL

    def __post_init__(self):
        wh = self.energy_kwh * 1000.0
        if wh <= 0 or self.capacity_ah <= 0 or self.v_nominal <= 0:
            raise ValidationError("capacity, voltage and energy must be positive")
        if abs(self.capacity_ah * self.v_nominal - wh) / wh > 0.01:
            raise ValidationError(
                f"capacity {self.capacity_ah:g} Ah x {self.v_nominal:g} V does not match "
                f"{self.energy_kwh:g} kWh"
            )
        # count == 0 models a system without storage.
        if int(self.count) != self.count or self.count < 0:
            raise ValidationError(f"count must be a non-negative integer, got {self.count!r}")
        if not (0.0 <= self.soc_min < self.soc_init <= 1.0):
            raise ValidationError("need 0 <= soc_min < soc_init <= 1")
        if not (0 < self.eta_charge <= 1 and 0 < self.eta_discharge <= 1):
            raise ValidationError("efficiencies must be in (0, 1]")
        if self.max_charge_w < 0 or self.max_discharge_w < 0:
            raise ValidationError("power limits must be non-negative")
        if not (0 < self.v_floor < self.v_ceil):
            raise ValidationError("need 0 < v_floor < v_ceil")

    @property
    def energy_wh_total(self) -> float:
        return self.energy_kwh * 1000.0 * self.count


@dataclass(frozen=True)
class BatteryState:
    soc: float
    terminal_v: float
    throughput_wh: float = 0.0


def terminal_voltage(state_or_soc, spec: BatterySpec) -> float:
    """Linear open-circuit approximation between ``v_floor`` and ``v_ceil``.

    Scaled to the bank's nominal voltage; units are in parallel.
    """
    soc = state_or_soc.soc if isinstance(state_or_soc, BatteryState) else float(state_or_soc)
    if not (0.0 <= soc <= 1.0):
        raise ValidationError(f"soc must be in [0, 1], got {soc!r}")
    scale = spec.v_nominal / 12.0
    return scale * (spec.v_floor + (spec.v_ceil - spec.v_floor) * soc)


def initial_state(spec: BatterySpec) -> BatteryState:
    return BatteryState(spec.soc_init, terminal_voltage(spec.soc_init, spec), 0.0)


def _clamp_soc(soc, spec):
    return min(1.0, max(spec.soc_min, soc))


def max_charge_power(state: BatteryState, spec: BatterySpec, dt: float) -> float:
    """Largest terminal power that can be accepted over ``dt`` seconds."""
    e_wh = spec.energy_wh_total
    if e_wh <= 0 or dt <= 0 or state.soc >= 1.0:
        return 0.0
    fill = (1.0 - state.soc) * e_wh * 3600.0 / (spec.eta_charge * dt)
    return max(0.0, min(spec.max_charge_w * spec.count, fill))


def max_discharge_power(state: BatteryState, spec: BatterySpec, dt: float) -> float:
    """Largest terminal power deliverable over ``dt`` without crossing ``soc_min``."""
    e_wh = spec.energy_wh_total
    if e_wh <= 0 or dt <= 0 or state.soc <= spec.soc_min:
        return 0.0
    avail = (state.soc - spec.soc_min) * e_wh * 3600.0 * spec.eta_discharge / dt
    return max(0.0, min(spec.max_discharge_w * spec.count, avail))


def charge(state: BatteryState, spec: BatterySpec, p_offered: float, dt: float):
    """Accept up to ``p_offered`` watts for ``dt`` seconds.

    Returns ``(new_state, p_accepted)``.
    """
    if p_offered < 0:
        raise ValidationError(f"p_offered must be non-negative, got {p_offered!r}")
    p = min(p_offered, max_charge_power(state, spec, dt))
    if p <= 0.0:
        return state, 0.0
    soc = state.soc + p * spec.eta_charge * dt / (3600.0 * spec.energy_wh_total)
    soc = _clamp_soc(soc, spec)
    return BatteryState(soc, terminal_voltage(soc, spec), state.throughput_wh + p * dt / 3600.0), p


def discharge(state: BatteryState, spec: BatterySpec, p_requested: float, dt: float):
    """Deliver up to ``p_requested`` watts for ``dt`` seconds.

    Returns ``(new_state, p_delivered)``; shortfall is left to the caller.
    """
    if p_requested < 0:
        raise ValidationError(f"p_requested must be non-negative, got {p_requested!r}")
    p = min(p_requested, max_discharge_power(state, spec, dt))
    if p <= 0.0:
        return state, 0.0
    soc = state.soc - (p / spec.eta_discharge) * dt / (3600.0 * spec.energy_wh_total)
    soc = _clamp_soc(soc, spec)
    return BatteryState(soc, terminal_voltage(soc, spec), state.throughput_wh + p * dt / 3600.0), p


def stored_wh(state: BatteryState, spec: BatterySpec) -> float:
    return state.soc * spec.energy_wh_total


def with_soc(state: BatteryState, spec: BatterySpec, soc: float) -> BatteryState:
    soc = _clamp_soc(soc, spec)
    return replace(state, soc=soc, terminal_v=terminal_voltage(soc, spec))
