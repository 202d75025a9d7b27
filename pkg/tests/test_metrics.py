import pytest
from hypothesis import given, strategies as st

from samaqm.metrics import (CSV_HEADER, ConservationError, MetricsLog, RunSummary, export_csv,
                            format_csv, format_summary_csv, format_table, read_csv, summary)


def test_events_bucket_by_second():
    log = MetricsLog(10)
    for t in (0.1, 0.5, 0.9):
        log.on_event("arrival", t)
    log.on_event("arrival", 1.0)
    s = log.series
    assert s[0].arrivals == 3 and s[1].arrivals == 1
    assert len(s) == 10
    assert s[7] == type(s[7])(7, 0, 0, 0, 0.0)


def test_event_at_horizon_lands_in_last_bucket():
    log = MetricsLog(10)
    log.on_event("drop", 10.0)
    assert log.series[-1].drops == 1


def test_unknown_event_kind():
    with pytest.raises(ValueError):
        MetricsLog(1).on_event("ack", 0.0)


def test_constant_occupancy_average():
    log = MetricsLog(10)
    log.sample_queue(50, 0.0)
    log.finish(10.0)
    assert log.avg_queue == 50


def test_time_weighted_average():
    log = MetricsLog(10)
    log.sample_queue(100, 5.0)
    log.finish(10.0)
    assert log.avg_queue == 50


def test_empty_run():
    log = MetricsLog(0)
    log.finish(0.0)
    assert log.avg_queue == 0.0 and log.totals == (0, 0, 0)
    s = summary(log, "none")
    assert (s.total_arrivals, s.total_departures, s.total_drops, s.avg_queue) == (0, 0, 0, 0.0)


def test_tick_series_and_cv():
    log = MetricsLog(3)
    for k, q in enumerate([0, 0, 10, 20, 10, 20]):
        log.tick(q, 0.5 * k)
    assert log.series[1].queue == 15
    assert log.tick_mean_queue == pytest.approx(60 / 6)
    assert log.queue_cv(warmup=1.0) == pytest.approx(5 / 15)
    assert log.queue_cv(warmup=100) == 0.0


@given(st.lists(st.tuples(st.sampled_from(["arrival", "departure", "drop"]), st.floats(0, 20)),
                max_size=200))
def test_series_totals_match_run_totals(events):
    log = MetricsLog(20)
    for kind, t in events:
        log.on_event(kind, t)
    s = log.series
    assert log.totals == (sum(r.arrivals for r in s), sum(r.departures for r in s),
                          sum(r.drops for r in s))
    assert log.totals[0] == sum(k == "arrival" for k, _ in events)


def test_summary_checks_conservation():
    log = MetricsLog(5)
    for kind, n in (("arrival", 100), ("departure", 90), ("drop", 8)):
        for _ in range(n):
            log.on_event(kind, 1.0)
    assert summary(log, "red", final_occupancy=1, in_service=1).conserved
    with pytest.raises(ConservationError):
        summary(log, "red", final_occupancy=0)


def test_table_row_structure():
    # reference SAM totals: arrivals - departures - drops leaves a standing queue of 398
    arrivals, departures, drops, avg = 273_815, 236_901, 36_516, 397
    residue = arrivals - departures - drops
    assert residue == 398
    assert abs(residue - avg) <= 1
    s = RunSummary("sam", arrivals, departures, drops, avg, final_occupancy=397, in_service=1)
    assert s.conserved


def test_csv_round_trip(tmp_path):
    log = MetricsLog(180)
    for k in range(1800):
        log.tick(k % 37, k / 10)
        log.on_event("arrival", k / 10)
    path = tmp_path / "run.csv"
    export_csv(log, path)
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert len(text.splitlines()) == 181
    back = read_csv(path)
    assert [(r.t, r.arrivals, r.departures, r.drops) for r in back] == \
           [(r.t, r.arrivals, r.departures, r.drops) for r in log.series]
    assert [r.queue for r in back] == [round(r.queue, 3) for r in log.series]
    assert format_csv(log) == text


def test_read_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_table_formatting():
    rows = [RunSummary("red", 1000, 900, 90, 10.0, 10, 0, 9.5),
            RunSummary("blue", 2000, 1800, 150, 50.0, 49, 1, 51.2)]
    text = format_table(rows)
    lines = text.splitlines()
    assert lines[0].split("  ")[0].strip() == "Controller"
    for col in ("Total Arrivals", "Total Departures", "Total Drops", "Average Queue Size"):
        assert col in lines[0]
    assert len(lines) == 3 and "2,000" in lines[2]
    assert format_summary_csv(rows).splitlines() == [
        "controller,arrivals,departures,drops,avg_queue",
        "red,1000,900,90,10.000",
        "blue,2000,1800,150,50.000",
    ]
