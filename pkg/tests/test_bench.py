import csv
import json

import numpy as np
import pytest

from logconcave.bench import (CSV_COLUMNS, RATES, LSCResult, RiskTable, Scenario, emit,
                              loglog_slope, lsc_demo, lsc_sequence, run_scenario, to_csv, to_svg,
                              uniform_interval_scenario, uniform_polygon_scenario, welch_t)
from logconcave.densities import GaussianDensity
from logconcave.geometry import convex_hull

SQUARE = convex_hull(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


def small_scenario(seed=0):
    return uniform_interval_scenario(replicates=3, seed=seed, n_grid=(10, 20, 40))


def test_scenario_validation():
    g = GaussianDensity(d=1)
    with pytest.raises(ValueError):
        Scenario(g, 1, [20, 10], 1)
    with pytest.raises(ValueError):
        Scenario(g, 1, [1, 10], 1)
    with pytest.raises(ValueError):
        Scenario(g, 1, [10], 0)
    with pytest.raises(ValueError):
        Scenario(g, 2, [10], 1)


def test_scenario_json_roundtrip():
    s = uniform_polygon_scenario("triangle", replicates=2, n_grid=(10, 20))
    t = Scenario.from_json(json.loads(json.dumps(s.to_json())))
    assert t.n_grid == s.n_grid and t.replicates == 2 and t.name == "uniform_triangle"
    X = np.array([[0.0, 0.0], [5.0, 5.0]])
    assert np.array_equal(t.density.logpdf(X), s.density.logpdf(X))


def test_run_is_deterministic_and_complete():
    a = run_scenario(small_scenario())
    b = run_scenario(small_scenario())
    assert len(a.rows) == 9
    assert to_csv(a, timings=False) == to_csv(b, timings=False)
    assert to_csv(a, timings=False) != to_csv(run_scenario(small_scenario(seed=1)), timings=False)
    assert all(r["dx_sq"] >= -1e-9 for r in a.rows)
    assert a.failures() == 0


def test_threads_do_not_change_rows():
    a = run_scenario(small_scenario(), threads=1)
    b = run_scenario(small_scenario(), threads=3)
    assert to_csv(a, timings=False) == to_csv(b, timings=False)


def test_partial_file(tmp_path):
    p = tmp_path / "partial.csv"
    run_scenario(small_scenario(), partial_path=str(p))
    rows = list(csv.DictReader(open(p)))
    assert len(rows) == 9 and list(rows[0]) == CSV_COLUMNS


def test_empty_table_csv_header_only():
    assert to_csv(RiskTable()) == ",".join(CSV_COLUMNS) + "\n"


def test_failed_fits_excluded():
    rows = [{"n": 10, "replicate": r, "dx_sq": 0.1 * (r + 1), "hellinger_sq": float("nan"),
             "iterations": 1, "wall_ms": 0.0, "converged": r != 2} for r in range(3)]
    t = RiskTable(rows)
    assert t.failures() == 1
    s = t.summary()[0]
    assert s["count"] == 2 and s["mean"] == pytest.approx(0.15)


def test_two_point_slope_is_log_ratio():
    n, r = [100, 400], [0.3, 0.07]
    slope, se = loglog_slope(n, r)
    assert slope == pytest.approx(np.log(0.07 / 0.3) / np.log(4), rel=1e-14)
    assert se == 0.0


def test_slope_of_power_law():
    n = np.array([50, 100, 200, 400])
    slope, se = loglog_slope(n, 3.0 * n ** -0.75)
    assert slope == pytest.approx(-0.75, abs=1e-12) and se < 1e-10


def test_welch_t():
    a = np.array([1.0, 2.0, 3.0])
    b = a + 3
    assert welch_t(a, b) == pytest.approx(3 / np.sqrt(2 / 3), rel=1e-14)


def test_rate_registry():
    assert RATES.worst_case == {1: 4 / 5, 2: 2 / 3, 3: 1 / 2}
    assert RATES.polylog_adaptive[2] == 4.5 and RATES.polylog_polytope[2] == 3.0
    assert RATES.smooth_rate(1.0) == pytest.approx(0.5)
    assert RATES.smooth_rate(100.0) == pytest.approx(4 / 7)
    assert RATES.band("uniform_64gon") == (-0.80, -0.55)


def test_emit_formats(tmp_path):
    t = run_scenario(small_scenario())
    for fmt in ("csv", "svg", "json"):
        emit(t, fmt, str(tmp_path / f"out.{fmt}"), timings=False)
    js = json.load(open(tmp_path / "out.json"))
    assert js["rows"] == 9 and len(js["summary"]) == 3
    svg = (tmp_path / "out.svg").read_text()
    assert svg.startswith("<svg") and "slope" in svg and svg.count("<circle") == 3
    with pytest.raises(ValueError):
        emit(t, "xml", str(tmp_path / "x"))
    assert to_svg(RiskTable()).startswith("<svg")


def _grid_mass(f, k=400):
    u = (np.arange(k) + 0.5) / k
    X = np.stack(np.meshgrid(u, u), axis=-1).reshape(-1, 2)
    return np.exp(f.logpdf(X)).mean()


def test_lsc_sequence_masses():
    f0 = lsc_sequence(SQUARE, 0)
    assert _grid_mass(f0) == pytest.approx(1.0, abs=1e-9)
    f5 = lsc_sequence(SQUARE, 5)
    assert f5.mass_in_ball() == pytest.approx(0.8, abs=1e-8)
    assert _grid_mass(f5) == pytest.approx(1.0, abs=1e-3)


def test_lsc_single_ell_passes():
    res = LSCResult([{"ell": 3, "replicate": 0, "dx_sq": 0.1}], [3], [0.5])
    assert res.passed() and res.trend_pvalue() == 0.0


def test_lsc_trend_and_negative_control():
    rows = [{"ell": l, "replicate": r, "dx_sq": 0.01 * (1 + l) + 0.001 * ((7 * r) % 5)}
            for l in (0, 5) for r in range(40)]
    res = LSCResult(rows, [0, 5], [0.0, 0.8])
    assert res.passed()
    assert res.trend_pvalue(permute_seed=1) > 0.05


def test_lsc_demo_small():
    res = lsc_demo(ell_grid=(0, 5), n=30, replicates=3)
    assert len(res.rows) == 6 and res.masses[1] == pytest.approx(0.8, abs=1e-6)
    assert set(res.means()) == {0, 5}
