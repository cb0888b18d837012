"""Panel I-V model: 3-parameter single-diode curve fitted to datasheet points.

The curve per panel is

    I(V) = I_ph - I_0 * (exp(V / a) - 1)

with ``I_ph = Isc`` and ``I_0`` chosen so that ``I(Voc) = 0``.  The lumped
thermal voltage ``a`` is found by a 1-D root search so that the curve's
maximum power equals the datasheet ``Vmp * Imp``.  Identical panels are
wired in parallel, so array current is ``count`` times panel current.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import FitError, OutOfTemperatureError, ValidationError

G_STC = 1000.0
T_STC = 25.0
V_T_BOUNDS = (0.5, 10.0)
FIT_TOLERANCE = 0.02


@dataclass(frozen=True)
class PanelSpec:
    """Datasheet parameters of one panel plus the number wired in parallel."""

    p_max: float = 300.0
    v_mp: float = 36.0
    i_mp: float = 8.33
    v_oc: float = 43.0
    i_sc: float = 9.17
    area: float = 4.0
    cell_efficiency: float = 0.219
    temp_min: float = -40.0
    temp_max: float = 85.0
    count: int = 1

    def __post_init__(self):
        if not (0 < self.v_mp < self.v_oc):
            raise ValidationError(f"need 0 < v_mp < v_oc, got v_mp={self.v_mp}, v_oc={self.v_oc}")
        if not (0 < self.i_mp < self.i_sc):
            raise ValidationError(f"need 0 < i_mp < i_sc, got i_mp={self.i_mp}, i_sc={self.i_sc}")
        if self.p_max <= 0:
            raise ValidationError("p_max must be positive")
        if abs(self.v_mp * self.i_mp - self.p_max) / self.p_max > 0.01:
            raise ValidationError(
                f"datasheet inconsistent: v_mp*i_mp={self.v_mp * self.i_mp:g} W vs p_max={self.p_max:g} W"
            )
        ff = self.p_max / (self.v_oc * self.i_sc)
        if not (0.5 < ff < 0.9):
            raise ValidationError(f"fill factor {ff:.3f} outside (0.5, 0.9)")
        if self.area <= 0 or not (0 < self.cell_efficiency <= 1):
            raise ValidationError("area must be positive and cell_efficiency in (0, 1]")
        if self.temp_min >= self.temp_max:
            raise ValidationError("temp_min must be below temp_max")
        # count == 0 is allowed so sizing can evaluate a PV-less system.
        if int(self.count) != self.count or self.count < 0:
            raise ValidationError(f"count must be a non-negative integer, got {self.count!r}")

    @property
    def fill_factor(self) -> float:
        return self.p_max / (self.v_oc * self.i_sc)


@dataclass(frozen=True)
class PvOperatingPoint:
    v: float
    i: float
    p: float

    @classmethod
    def at(cls, v: float, i: float) -> "PvOperatingPoint":
        v = float(v)
        i = float(i)
        return cls(v, i, v * i)


ZERO_POINT = PvOperatingPoint(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PvModel:
    spec: PanelSpec
    i_ph_stc: float
    i_0: float
    v_t_eff: float
    soiling: float = 1.0
    optical_gain: float = 1.0
    temp_coeff_voc: float = -0.0030
    temp_coeff_isc: float = 0.0005
    soiling_floor: float = 0.95
    soiling_rate_per_day: float = 0.01

    def __post_init__(self):
        if self.i_0 <= 0 or self.v_t_eff <= 0:
            raise ValidationError("i_0 and v_t_eff must be positive")
        if not (0 < self.soiling <= 1):
            raise ValidationError(f"soiling must be in (0, 1], got {self.soiling!r}")
        if not (0 < self.optical_gain <= 1.1):
            raise ValidationError(f"optical_gain must be in (0, 1.1], got {self.optical_gain!r}")
        if not (0 < self.soiling_floor <= 1) or self.soiling_rate_per_day < 0:
            raise ValidationError("soiling_floor must be in (0, 1] and soiling_rate_per_day >= 0")

    # All curve helpers below are per panel; array quantities multiply by count.

    def check_temperature(self, temp: float) -> None:
        if not (self.spec.temp_min <= temp <= self.spec.temp_max):
            raise OutOfTemperatureError(temp, self.spec.temp_min, self.spec.temp_max)

    def _dt(self, temp):
        return temp - T_STC

    def photo_current(self, g: float, temp: float = T_STC) -> float:
        isc_t = self.i_ph_stc * (1.0 + self.temp_coeff_isc * self._dt(temp))
        return isc_t * (g / G_STC) * self.soiling * self.optical_gain

    def saturation_current(self, temp: float = T_STC) -> float:
        isc_t = self.i_ph_stc * (1.0 + self.temp_coeff_isc * self._dt(temp))
        voc_t = self.spec.v_oc * (1.0 + self.temp_coeff_voc * self._dt(temp))
        return isc_t / math.expm1(voc_t / self.v_t_eff)

    def open_circuit_voltage(self, g: float, temp: float = T_STC) -> float:
        i_ph = self.photo_current(g, temp)
        if i_ph <= 0:
            return 0.0
        return self.v_t_eff * math.log1p(i_ph / self.saturation_current(temp))

    def panel_current(self, v, g: float, temp: float = T_STC):
        """Unclamped per-panel current; accepts scalars or arrays."""
        i_ph = self.photo_current(g, temp)
        i_0 = self.saturation_current(temp)
        return i_ph - i_0 * np.expm1(np.asarray(v, dtype=float) / self.v_t_eff)

    def max_power_voltage(self, g: float, temp: float = T_STC) -> float:
        """Voltage where dP/dV = 0, found by bracketed root search."""
        voc = self.open_circuit_voltage(g, temp)
        if voc <= 0:
            return 0.0
        i_ph = self.photo_current(g, temp)
        i_0 = self.saturation_current(temp)
        a = self.v_t_eff

        def dp_dv(v):
            return i_ph + i_0 - i_0 * math.exp(v / a) * (1.0 + v / a)

        return brentq(dp_dv, 0.0, voc, xtol=1e-12, rtol=1e-14)


def _max_power_per_panel(v_oc, i_sc, a):
    i_0 = i_sc / math.expm1(v_oc / a)

    def dp_dv(v):
        return i_sc + i_0 - i_0 * math.exp(v / a) * (1.0 + v / a)

    v = brentq(dp_dv, 0.0, v_oc, xtol=1e-13, rtol=1e-15)
    return v * (i_sc - i_0 * math.expm1(v / a)), v


def fit_model(spec: PanelSpec, **kwargs) -> PvModel:
    """Fit the 3-parameter curve so that Isc, Voc and the maximum power match.

    Extra keyword arguments set the non-fitted :class:`PvModel` fields
    (temperature coefficients, soiling parameters, optical gain).
    """
    target = spec.v_mp * spec.i_mp
    lo, hi = V_T_BOUNDS

    def residual(a):
        return _max_power_per_panel(spec.v_oc, spec.i_sc, a)[0] - target

    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo * r_hi > 0:
        raise FitError(
            f"no thermal voltage in [{lo}, {hi}] V reproduces Pmp={target:g} W "
            f"(curve spans {r_hi + target:.2f}..{r_lo + target:.2f} W)"
        )
    a = brentq(residual, lo, hi, xtol=1e-14, rtol=1e-15)
    p_mp, _ = _max_power_per_panel(spec.v_oc, spec.i_sc, a)
    if abs(p_mp - target) / spec.p_max > FIT_TOLERANCE:
        raise FitError(f"fitted Pmp {p_mp:g} W misses datasheet {target:g} W by more than 2%")
    i_0 = spec.i_sc / math.expm1(spec.v_oc / a)
    return PvModel(spec=spec, i_ph_stc=spec.i_sc, i_0=i_0, v_t_eff=a, **kwargs)


def iv_at(model: PvModel, v: float, g: float, temp: float = T_STC) -> PvOperatingPoint:
    """Array operating point at terminal voltage ``v``.

    Raises :class:`OutOfTemperatureError` outside the panel's datasheet window.
    Current is clamped at zero past open circuit.
    """
    model.check_temperature(temp)
    if v < 0:
        raise ValidationError(f"voltage must be non-negative, got {v!r}")
    if g < 0:
        raise ValidationError(f"irradiance must be non-negative, got {g!r}")
    if g == 0 or model.spec.count == 0:
        return PvOperatingPoint.at(v, 0.0)
    i = max(0.0, float(model.panel_current(v, g, temp))) * model.spec.count
    return PvOperatingPoint.at(v, i)


def mpp_scan(model: PvModel, g: float, temp: float = T_STC, step_v: float = 0.001) -> PvOperatingPoint:
    """Brute-force grid scan of the array P-V curve from 0 to open circuit."""
    if not (0 < step_v <= 0.5):
        raise ValidationError(f"step_v must be in (0, 0.5], got {step_v!r}")
    model.check_temperature(temp)
    voc = model.open_circuit_voltage(g, temp)
    if voc <= 0 or model.spec.count == 0:
        return ZERO_POINT
    v = np.append(np.arange(0.0, voc, step_v), voc)
    i = np.clip(model.panel_current(v, g, temp), 0.0, None) * model.spec.count
    k = int(np.argmax(v * i))
    return PvOperatingPoint.at(v[k], i[k])


def max_power_point(model: PvModel, g: float, temp: float = T_STC) -> PvOperatingPoint:
    """Exact maximum power point from the stationarity condition."""
    model.check_temperature(temp)
    v = model.max_power_voltage(g, temp)
    if v <= 0 or model.spec.count == 0:
        return ZERO_POINT
    i = max(0.0, float(model.panel_current(v, g, temp))) * model.spec.count
    return PvOperatingPoint.at(v, i)


def apply_soiling_step(model: PvModel, dt: float, rain: bool) -> PvModel:
    """Advance soiling by ``dt`` seconds; rain washes the panel fully clean."""
    if dt < 0:
        raise ValidationError(f"dt must be non-negative, got {dt!r}")
    if rain:
        return model if model.soiling == 1.0 else replace(model, soiling=1.0)
    if dt == 0 or model.soiling <= model.soiling_floor:
        return model
    soiling = max(model.soiling_floor, model.soiling - model.soiling_rate_per_day * dt / 86400.0)
    return replace(model, soiling=soiling)


def raw_cell_power(area: float, efficiency: float, g: float = G_STC) -> float:
    """Cell output from area, conversion efficiency and irradiance alone."""
    return area * efficiency * g


def area_yield_wh(area: float, efficiency: float, profile, path_eta: float = 1.0) -> float:
    """Energy from area and efficiency over a profile, after a lumped path efficiency."""
    if area < 0 or not (0 < efficiency <= 1) or not (0 < path_eta <= 1):
        raise ValidationError("area must be >= 0; efficiency and path_eta in (0, 1]")
    g = np.asarray(profile.irradiance, dtype=float)
    return float(area * efficiency * path_eta * g.sum() * profile.step_s / 3600.0)
