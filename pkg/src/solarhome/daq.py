"""Field-test DAQ log ingestion and KPI evaluation."""

from __future__ import annotations

import collections
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NonMonotoneTimeError, ParseError, ValidationError
from .io import atomic_write_text, fmt_float

DAQ_HEADER = ("t_s", "pv_v", "pv_i", "batt_v", "batt_i", "load_w", "mode", "fault")
MODES = ("PWM", "PFM", "Fault")
DAY_S = 86400.0
# A spacing above this multiple of the nominal step is a coverage hole.
HOLE_FACTOR = 1.5
MIN_UPTIME = 0.95
MAX_FAULTS = 3


@dataclass(frozen=True)
class DaqRecord:
    t_s: float
    pv_v: float
    pv_i: float
    batt_v: float
    batt_i: float
    load_w: float
    mode: str
    fault: str | None = None

    @property
    def is_fault(self) -> bool:
        return self.mode == "Fault"


class DaqLog(list):
    """Records of one DAQ file; ``holes`` lists gaps found while reading."""

    def __init__(self, records=(), step_s=None):
        super().__init__(records)
        self.step_s = step_s if step_s is not None else nominal_step(self)
        self.holes = coverage_holes(self, self.step_s)


def nominal_step(records) -> float | None:
    """Most common spacing between consecutive records (smallest on ties)."""
    diffs = collections.Counter(
        round(b.t_s - a.t_s, 9) for a, b in zip(records, records[1:])
    )
    if not diffs:
        return None
    best = max(diffs.values())
    return min(d for d, n in diffs.items() if n == best)


def _is_gap(dt, step):
    return step is not None and dt > HOLE_FACTOR * step


def coverage_holes(records, step_s=None) -> list:
    """Gaps wider than the nominal step, as ``{start, end, missing}`` dicts."""
    if step_s is None:
        step_s = nominal_step(records)
    holes = []
    for a, b in zip(records, records[1:]):
        dt = b.t_s - a.t_s
        if _is_gap(dt, step_s):
            holes.append({"start": a.t_s, "end": b.t_s, "missing": int(round(dt / step_s)) - 1})
    return holes


def _parse_float(cell, row, column):
    try:
        x = float(cell)
    except ValueError:
        raise ParseError(f"not a number: {cell!r}", row=row, column=column) from None
    if not math.isfinite(x):
        raise ParseError(f"non-finite value {cell!r}", row=row, column=column)
    return x


def ingest(path) -> DaqLog:
    """Read a DAQ CSV.  Missing steps are kept as coverage holes, not filled."""
    path = Path(path)
    records = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", row=1) from None
        if tuple(h.strip() for h in header) != DAQ_HEADER:
            raise ParseError(f"header must be {','.join(DAQ_HEADER)!r}", row=1)
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(DAQ_HEADER):
                raise ParseError(f"expected {len(DAQ_HEADER)} fields, got {len(row)}", row=row_no)
            nums = [_parse_float(c, row_no, name) for name, c in zip(DAQ_HEADER[:6], row[:6])]
            mode = row[6].strip()
            if mode not in MODES:
                raise ParseError(f"mode must be one of {MODES}, got {mode!r}", row=row_no, column="mode")
            fault = row[7].strip() or None
            rec = DaqRecord(*nums, mode=mode, fault=fault)
            if records and rec.t_s <= records[-1].t_s:
                raise NonMonotoneTimeError(
                    f"row {row_no}: t_s={rec.t_s:g} does not increase past {records[-1].t_s:g}"
                )
            records.append(rec)
    return DaqLog(records)


def records_to_csv_text(records) -> str:
    lines = [",".join(DAQ_HEADER)]
    for r in records:
        nums = (r.t_s, r.pv_v, r.pv_i, r.batt_v, r.batt_i, r.load_w)
        lines.append(",".join([*map(fmt_float, nums), r.mode, r.fault or ""]))
    return "\n".join(lines) + "\n"


def write_daq_csv(records, path) -> None:
    atomic_write_text(path, records_to_csv_text(records))


def records_from_sim(result) -> list:
    """Express a simulation trace as DAQ records (one per step)."""
    out = []
    for row in result.trace:
        batt_i = row.p_batt_w / row.batt_v if row.batt_v > 0 else 0.0
        out.append(DaqRecord(row.t_s, row.pv_v, row.pv_i, row.batt_v, batt_i,
                             row.p_served_w, row.mode, row.fault or None))
    return out


@dataclass
class KpiReport:
    uptime_fraction: float
    fault_count: int
    fault_events: list
    daily_energy_wh: list
    passed: bool
    first_day: int = 0
    n_records: int = 0
    n_up: int = 0
    n_fault: int = 0
    coverage_holes: list = field(default_factory=list)
    missing_samples: int = 0
    step_s: float | None = None
    min_uptime: float = MIN_UPTIME
    max_faults: int = MAX_FAULTS
    # Boundary records, kept so reports of adjacent logs can be merged.
    first: DaqRecord | None = field(default=None, repr=False)
    last: DaqRecord | None = field(default=None, repr=False)

    @property
    def fault_fraction(self) -> float:
        return 1.0 - self.uptime_fraction

    def to_dict(self) -> dict:
        return {
            "uptime_fraction": self.uptime_fraction,
            "fault_fraction": self.fault_fraction,
            "fault_count": self.fault_count,
            "fault_events": [dict(e) for e in self.fault_events],
            "daily_energy_wh": list(self.daily_energy_wh),
            "first_day": self.first_day,
            "pass": self.passed,
            "n_records": self.n_records,
            "coverage_holes": [dict(h) for h in self.coverage_holes],
            "missing_samples": self.missing_samples,
            "step_s": self.step_s,
            "thresholds": {"min_uptime": self.min_uptime, "max_faults": self.max_faults},
        }


def _add_interval(days: dict, a: DaqRecord, b: DaqRecord) -> None:
    """Trapezoid energy of load_w over [a, b], split at midnight boundaries."""
    t0, p0 = a.t_s, a.load_w
    slope = (b.load_w - a.load_w) / (b.t_s - a.t_s)
    while t0 < b.t_s:
        day = math.floor(t0 / DAY_S)
        t1 = min(b.t_s, (day + 1) * DAY_S)
        p1 = a.load_w + slope * (t1 - a.t_s)
        days[day] = days.get(day, 0.0) + 0.5 * (p0 + p1) * (t1 - t0) / 3600.0
        t0, p0 = t1, p1


def _fault_code(rec):
    return rec.fault or "UNKNOWN"


def _days_list(days: dict):
    if not days:
        return 0, []
    lo, hi = min(days), max(days)
    return lo, [days.get(d, 0.0) for d in range(lo, hi + 1)]


def _finish(n, n_up, events, days, holes, step, min_uptime, max_faults, first, last):
    uptime = n_up / n
    first_day, daily = _days_list(days)
    return KpiReport(
        uptime_fraction=uptime,
        fault_count=len(events),
        fault_events=events,
        daily_energy_wh=daily,
        passed=uptime >= min_uptime and len(events) <= max_faults,
        first_day=first_day,
        n_records=n,
        n_up=n_up,
        n_fault=n - n_up,
        coverage_holes=holes,
        missing_samples=sum(h["missing"] for h in holes),
        step_s=step,
        min_uptime=min_uptime,
        max_faults=max_faults,
        first=first,
        last=last,
    )


def evaluate(records, min_uptime: float = MIN_UPTIME, max_faults: int = MAX_FAULTS,
             step_s: float | None = None) -> KpiReport:
    """Uptime, fault events and per-day load energy of a DAQ log.

    Uptime counts records not in Fault.  Contiguous Fault records collapse
    into one event; a coverage hole ends a run.  Load energy is integrated
    by trapezoid per calendar day, skipping holes.
    """
    if step_s is None:
        step_s = getattr(records, "step_s", None)
    records = list(records)
    if not records:
        raise ValidationError("evaluate needs at least one record")
    if step_s is None:
        step_s = nominal_step(records)
    n_up = sum(1 for r in records if not r.is_fault)
    events = []
    days = {}
    prev = None
    for rec in records:
        gap = prev is not None and _is_gap(rec.t_s - prev.t_s, step_s)
        if prev is not None and not gap:
            _add_interval(days, prev, rec)
        if rec.is_fault:
            if prev is not None and prev.is_fault and not gap:
                events[-1]["end"] = rec.t_s
            else:
                events.append({"start": rec.t_s, "end": rec.t_s, "code": _fault_code(rec)})
        prev = rec
    holes = coverage_holes(records, step_s)
    return _finish(len(records), n_up, events, days, holes, step_s,
                   min_uptime, max_faults, records[0], records[-1])


def merge_reports(a: KpiReport, b: KpiReport) -> KpiReport:
    """Combine reports of two logs where ``b`` follows ``a`` in time.

    Equals evaluating the concatenated log.
    """
    if b.first.t_s <= a.last.t_s:
        raise NonMonotoneTimeError("second report must start after the first ends")
    steps = {s for s in (a.step_s, b.step_s) if s is not None}
    if len(steps) > 1:
        raise ValidationError(f"reports use different steps: {sorted(steps)}")
    step = steps.pop() if steps else b.first.t_s - a.last.t_s

    days = {}
    for rep in (a, b):
        for k, wh in enumerate(rep.daily_energy_wh):
            days[rep.first_day + k] = days.get(rep.first_day + k, 0.0) + wh
    gap = _is_gap(b.first.t_s - a.last.t_s, step)
    holes = [dict(h) for h in a.coverage_holes]
    if gap:
        dt = b.first.t_s - a.last.t_s
        holes.append({"start": a.last.t_s, "end": b.first.t_s, "missing": int(round(dt / step)) - 1})
    else:
        _add_interval(days, a.last, b.first)
    holes.extend(dict(h) for h in b.coverage_holes)

    events = [dict(e) for e in a.fault_events]
    b_events = [dict(e) for e in b.fault_events]
    if a.last.is_fault and b.first.is_fault and not gap:
        events[-1]["end"] = b_events.pop(0)["end"]
    events.extend(b_events)
    return _finish(a.n_records + b.n_records, a.n_up + b.n_up, events, days, holes, step,
                   a.min_uptime, a.max_faults, a.first, b.last)


def parse_thresholds(text: str) -> dict:
    """Parse ``min_uptime=0.95,max_faults=3`` (either key optional)."""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in ("min_uptime", "max_faults"):
            raise ValidationError(
                f"bad threshold {part!r}; expected min_uptime=<fraction>,max_faults=<int>"
            )
        try:
            out[key] = int(value) if key == "max_faults" else float(value)
        except ValueError:
            raise ValidationError(f"bad threshold value {value!r} for {key}") from None
    if "min_uptime" in out and not (0 <= out["min_uptime"] <= 1):
        raise ValidationError("min_uptime must be in [0, 1]")
    if "max_faults" in out and out["max_faults"] < 0:
        raise ValidationError("max_faults must be non-negative")
    return out
