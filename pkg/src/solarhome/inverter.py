"""DC to AC conversion and the DC-versus-AC transmission capacity ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

RADIANS = "radians"
POWER_FACTOR = "powerfactor"


@dataclass(frozen=True)
class InverterSpec:
    eta_inv: float = 0.90
    p_rated_w: float = 300.0

    def __post_init__(self):
        if not (0 < self.eta_inv <= 1):
            raise ValidationError(f"eta_inv must be in (0, 1], got {self.eta_inv!r}")
        if self.p_rated_w <= 0:
            raise ValidationError("p_rated_w must be positive")

    @property
    def max_dc_input_w(self) -> float:
        return self.p_rated_w / self.eta_inv


def convert(spec: InverterSpec, p_dc_in: float) -> float:
    """AC output for a DC input, clipped at the rated output."""
    if p_dc_in < 0:
        raise ValidationError(f"p_dc_in must be non-negative, got {p_dc_in!r}")
    return spec.eta_inv * min(p_dc_in, spec.max_dc_input_w)


def clipped_dc(spec: InverterSpec, p_dc_in: float) -> float:
    """DC input power the inverter cannot pass because of its rating."""
    return max(0.0, p_dc_in - spec.max_dc_input_w)


@dataclass(frozen=True)
class AcDcComparison:
    v_dc: float
    i_dc: float
    v_ac: float
    i_ac: float
    power_factor_arg: float = 0.9

    def __post_init__(self):
        if min(self.v_dc, self.i_dc, self.v_ac, self.i_ac, self.power_factor_arg) <= 0:
            raise ValidationError("all comparison fields must be positive")

    @classmethod
    def same_conductor(cls, v_ac: float, i_ac: float, power_factor_arg: float = 0.9):
        """Build the comparison with ``V_dc = sqrt(2) V_ac`` and ``I_dc = I_ac / sqrt(3)``."""
        return cls(math.sqrt(2.0) * v_ac, i_ac / math.sqrt(3.0), v_ac, i_ac, power_factor_arg)


def dc_capacity_ratio(c: AcDcComparison, mode: str = RADIANS) -> float:
    """``2 V_dc I_dc / (sqrt(3) V_ac I_ac cos(x))``.

    ``mode="radians"`` takes the cosine of ``power_factor_arg`` in radians;
    ``mode="powerfactor"`` treats ``power_factor_arg`` as the power factor.
    """
    if mode == RADIANS:
        pf = math.cos(c.power_factor_arg)
    elif mode == POWER_FACTOR:
        pf = c.power_factor_arg
    else:
        raise ValidationError(f"unknown mode {mode!r}; use {RADIANS!r} or {POWER_FACTOR!r}")
    if pf <= 0:
        raise ValidationError(f"cosine term {pf:g} is not positive")
    return 2.0 * c.v_dc * c.i_dc / (math.sqrt(3.0) * c.v_ac * c.i_ac * pf)
