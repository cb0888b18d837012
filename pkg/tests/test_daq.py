import pytest
from hypothesis import given, settings, strategies as st

from solarhome.daq import (
    DaqLog, DaqRecord, evaluate, ingest, merge_reports, parse_thresholds, records_to_csv_text,
    write_daq_csv,
)
from solarhome.errors import NonMonotoneTimeError, ParseError, ValidationError


def _rec(t, mode="PWM", load=100.0, fault=None):
    return DaqRecord(float(t), 30.0, 5.0, 12.5, 1.0, load, mode, fault)


def test_uptime_and_events():
    modes = ["PWM"] * 5 + ["Fault"] * 3 + ["PFM"] * 2 + ["Fault"] + ["PWM"] * 9
    recs = [_rec(60 * k, m, fault="OVP" if m == "Fault" else None) for k, m in enumerate(modes)]
    rep = evaluate(recs)
    assert rep.uptime_fraction == 16 / 20
    assert rep.fault_count == 2
    assert rep.fault_events[0] == {"start": 300.0, "end": 420.0, "code": "OVP"}
    assert not rep.passed


def test_daily_energy_split_at_midnight():
    recs = [_rec(t) for t in range(0, 2 * 86400 + 1, 3600)]
    rep = evaluate(recs)
    assert rep.daily_energy_wh == pytest.approx([2400.0, 2400.0])


def test_holes_are_reported_not_filled():
    recs = [_rec(0), _rec(60), _rec(120), _rec(600), _rec(660)]
    rep = evaluate(recs)
    assert rep.coverage_holes == [{"start": 120.0, "end": 600.0, "missing": 7}]
    assert rep.missing_samples == 7
    assert sum(rep.daily_energy_wh) == pytest.approx(100 * 180 / 3600)


def test_hole_splits_fault_run():
    recs = [_rec(0, "Fault"), _rec(60, "Fault"), _rec(600, "Fault")]
    assert evaluate(recs).fault_count == 2


def test_thresholds():
    recs = [_rec(60 * k, "Fault" if k == 0 else "PWM") for k in range(100)]
    assert evaluate(recs).passed
    assert not evaluate(recs, min_uptime=0.995).passed
    assert not evaluate(recs, max_faults=0).passed
    assert parse_thresholds("min_uptime=0.9, max_faults=1") == {"min_uptime": 0.9, "max_faults": 1}
    for bad in ("uptime=1", "min_uptime=2", "max_faults=x"):
        with pytest.raises(ValidationError):
            parse_thresholds(bad)


def test_ingest_round_trip(tmp_path):
    recs = [_rec(60 * k, "Fault" if k in (3, 4) else "PFM", fault="OTP" if k in (3, 4) else None)
            for k in range(10)]
    path = tmp_path / "log.csv"
    write_daq_csv(recs, path)
    log = ingest(path)
    assert list(log) == recs
    assert log.step_s == 60
    assert records_to_csv_text(log) == path.read_text()


def test_ingest_errors(tmp_path):
    path = tmp_path / "log.csv"
    head = "t_s,pv_v,pv_i,batt_v,batt_i,load_w,mode,fault\n"
    path.write_text(head + "0,1,1,1,1,1,PWM,\n60,1,x,1,1,1,PWM,\n")
    with pytest.raises(ParseError) as exc:
        ingest(path)
    assert exc.value.row == 3 and exc.value.column == "pv_i"
    path.write_text(head + "0,1,1,1,1,1,PWM,\n0,1,1,1,1,1,PWM,\n")
    with pytest.raises(NonMonotoneTimeError):
        ingest(path)
    path.write_text(head + "0,1,1,1,1,1,Idle,\n")
    with pytest.raises(ParseError):
        ingest(path)
    path.write_text("a,b\n")
    with pytest.raises(ParseError):
        ingest(path)


def test_empty_log_rejected():
    with pytest.raises(ValidationError):
        evaluate([])


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["PWM", "PFM", "Fault"]), st.floats(0, 500),
                          st.sampled_from([1, 1, 1, 1, 7])), min_size=2, max_size=120),
       st.integers(1, 118))
def test_merge_equals_concatenation(rows, cut):
    t, recs = 0.0, []
    for mode, load, gap in rows:
        t += 60.0 * gap
        recs.append(_rec(t, mode, load, "OVP" if mode == "Fault" else None))
    cut = min(cut, len(recs) - 1)
    whole = evaluate(DaqLog(recs, step_s=60.0))
    merged = merge_reports(evaluate(recs[:cut], step_s=60.0), evaluate(recs[cut:], step_s=60.0))
    a, b = whole.to_dict(), merged.to_dict()
    assert a.pop("daily_energy_wh") == pytest.approx(b.pop("daily_energy_wh"))
    assert a.pop("uptime_fraction") == pytest.approx(b.pop("uptime_fraction"))
    assert a.pop("fault_fraction") == pytest.approx(b.pop("fault_fraction"))
    assert a == b
