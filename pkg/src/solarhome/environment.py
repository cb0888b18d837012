"""Irradiance and ambient-temperature time series that drive a simulation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import NonUniformStepError, ParseError, ValidationError
from .io import atomic_write_text

DAY_S = 86400
G_MAX = 1500.0
TEMP_BOUNDS = (-60.0, 90.0)
CSV_HEADER = ("t_s", "g_wm2", "temp_c", "rain")


@dataclass(frozen=True)
class EnvironmentSample:
    t: float
    irradiance_g: float
    ambient_temp: float
    rain: bool = False

    def __post_init__(self):
        if not (0.0 <= self.irradiance_g <= G_MAX) or math.isnan(self.irradiance_g):
            raise ValidationError(
                f"irradiance {self.irradiance_g!r} W/m2 outside [0, {G_MAX:g}]"
            )
        lo, hi = TEMP_BOUNDS
        if not (lo <= self.ambient_temp <= hi):
            raise ValidationError(
                f"ambient temperature {self.ambient_temp!r} degC outside [{lo:g}, {hi:g}]"
            )


@dataclass(frozen=True)
class ScenarioProfile:
    samples: tuple[EnvironmentSample, ...]
    step_s: float
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if not self.samples:
            raise ValidationError("profile must contain at least one sample")
        if self.step_s <= 0:
            raise ValidationError(f"step_s must be positive, got {self.step_s!r}")
        for i in range(len(self.samples) - 1):
            dt = self.samples[i + 1].t - self.samples[i].t
            if dt <= 0:
                raise NonUniformStepError(
                    f"timestamps not strictly increasing at index {i + 1}"
                )
            if not math.isclose(dt, self.step_s, rel_tol=1e-9, abs_tol=1e-9):
                raise NonUniformStepError(
                    f"step between index {i} and {i + 1} is {dt:g} s, expected {self.step_s:g} s"
                )

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def irradiance(self) -> np.ndarray:
        return np.array([s.irradiance_g for s in self.samples])

    @property
    def duration_s(self) -> float:
        return len(self.samples) * self.step_s


def insolation_wh_m2(profile: ScenarioProfile) -> float:
    """Plane-of-array insolation, each sample held for one step."""
    return float(profile.irradiance.sum() * profile.step_s / 3600.0)


def clear_sky_day(
    sun_hours: float = 8.0,
    peak_g: float = 1000.0,
    step_s: float = 60.0,
    ambient: float = 25.0,
    label: str | None = None,
) -> ScenarioProfile:
    """Return a 24 h profile with a half-sine daylight bump centred on noon.

    The irradiance is ``peak_g * sin(pi * (t - sunrise) / daylight)`` between
    sunrise and sunset and zero elsewhere, so the daily insolation is
    ``(2/pi) * peak_g * sun_hours`` Wh/m^2.
    """
    if not (1.0 <= sun_hours <= 16.0):
        raise ValidationError(f"sun_hours must be in [1, 16], got {sun_hours!r}")
    if not (0.0 <= peak_g <= G_MAX):
        raise ValidationError(f"peak_g must be in [0, {G_MAX:g}], got {peak_g!r}")
    if not (1.0 <= step_s <= 3600.0):
        raise ValidationError(f"step_s must be in [1, 3600], got {step_s!r}")

    n = int(DAY_S // step_s)
    t = np.arange(n) * float(step_s)
    width = sun_hours * 3600.0
    rise = DAY_S / 2 - width / 2
    phase = (t - rise) / width
    g = np.where((phase > 0) & (phase < 1), peak_g * np.sin(np.pi * phase), 0.0)
    g = np.clip(g, 0.0, peak_g)
    if label is None:
        label = f"clear:{sun_hours:g}h:{peak_g:g}"
    samples = tuple(
        EnvironmentSample(float(ti), float(gi), float(ambient), False)
        for ti, gi in zip(t, g)
    )
    return ScenarioProfile(samples, float(step_s), label)


def cloudy_modifier(
    profile: ScenarioProfile, attenuation: float, seed: int = 0
) -> ScenarioProfile:
    """Scale each sample's irradiance by a seeded factor in [1 - attenuation, 1]."""
    if not (0.0 <= attenuation <= 1.0):
        raise ValidationError(f"attenuation must be in [0, 1], got {attenuation!r}")
    if attenuation == 0.0:
        return profile
    rng = np.random.default_rng(seed)
    factors = rng.uniform(1.0 - attenuation, 1.0, size=len(profile))
    samples = tuple(
        replace(s, irradiance_g=float(s.irradiance_g * f))
        for s, f in zip(profile.samples, factors)
    )
    return replace(profile, samples=samples, label=f"{profile.label}+cloudy({attenuation:g},{seed})")


def parse_day_shorthand(text: str, step_s: float = 60.0, ambient: float = 25.0, seed: int = 0):
    """Build a profile from ``clear:<hours>h:<peakG>`` or ``cloudy:<hours>h:<peakG>:<atten>``."""
    parts = text.strip().split(":")
    kind = parts[0].lower()
    try:
        if kind == "clear" and len(parts) == 3:
            hours = float(parts[1].rstrip("hH"))
            return clear_sky_day(hours, float(parts[2]), step_s, ambient, label=text)
        if kind == "cloudy" and len(parts) == 4:
            hours = float(parts[1].rstrip("hH"))
            base = clear_sky_day(hours, float(parts[2]), step_s, ambient)
            return replace(cloudy_modifier(base, float(parts[3]), seed), label=text)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad day shorthand {text!r}: {exc}") from None
    raise ValidationError(
        f"bad day shorthand {text!r}; expected clear:<hours>h:<peakG> "
        "or cloudy:<hours>h:<peakG>:<attenuation>"
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def profile_to_csv_text(profile: ScenarioProfile) -> str:
    lines = [",".join(CSV_HEADER)]
    for s in profile.samples:
        lines.append(
            f"{_fmt(s.t)},{_fmt(s.irradiance_g)},{_fmt(s.ambient_temp)},{int(bool(s.rain))}"
        )
    return "\n".join(lines) + "\n"


def write_profile_csv(profile: ScenarioProfile, path) -> None:
    atomic_write_text(path, profile_to_csv_text(profile))


def load_profile_csv(path, label: str | None = None) -> ScenarioProfile:
    """Read a profile CSV with header ``t_s,g_wm2,temp_c,rain``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", row=1) from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(
                f"header must be {','.join(CSV_HEADER)!r}, got {','.join(header)!r}", row=1
            )
        samples = []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_HEADER):
                raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", row=row_no)
            values = []
            for name, cell in zip(CSV_HEADER[:3], row[:3]):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"not a number: {cell!r}", row=row_no, column=name) from None
            rain = row[3].strip()
            if rain not in ("0", "1"):
                raise ParseError(f"rain must be 0 or 1, got {rain!r}", row=row_no, column="rain")
            try:
                samples.append(EnvironmentSample(values[0], values[1], values[2], rain == "1"))
            except ValidationError as exc:
                raise ParseError(str(exc), row=row_no) from None
    if not samples:
        raise ParseError("no data rows", row=2)
    step = samples[1].t - samples[0].t if len(samples) > 1 else 60.0
    return ScenarioProfile(tuple(samples), step, label if label is not None else path.stem)
