import math

import pytest

from fdalloc import harness, scenarios
from fdalloc.errors import DomainError
from fdalloc.harness import Scenario, SolverOptions, Sweep, SweepTarget

BASE = {"total_bw": 100e3, "pairs": [{"z": 1, "theta": 0.01, "weights": 0.5, "video": ["Bus", "Coastguard"]}]}


def small(values=(0.02, 0.05), methods=("optimal", "ebop"), base=BASE, name="small"):
    return Scenario(name, base, Sweep("theta_11", tuple(values), (SweepTarget("pairs.0.theta_1"),)), methods,
                    SolverOptions(eps=1e-2))


@pytest.fixture(scope="module")
def small_run():
    return harness.run_scenario(small(), workers=1)


def test_fig3_rows(fig3_run):
    rows = fig3_run.rows
    assert len(rows) == 10
    assert [r["x"] for r in rows] == list(scenarios.THETAS)
    for r in rows:
        assert r["status"] == "Converged"
        if r["x"] <= 0.06:
            assert r["p1_1"] == 5.0


def test_rows_in_order(small_run):
    assert [(r["x"], r["method"]) for r in small_run.rows] == [
        (0.02, "optimal"), (0.02, "ebop"), (0.05, "optimal"), (0.05, "ebop")]
    assert small_run.traces[0] is not None and small_run.traces[1] is None
    assert small_run.meta["backend"] in ("cython", "python")
    assert len(small_run.meta["wall_time_s"]) == 4


def test_pool_matches_serial(small_run):
    pooled = harness.run_scenario(small(), workers=2)
    assert repr(pooled.rows) == repr(small_run.rows)   # repr: NaN fields compare equal


@pytest.mark.parametrize("values", [(), (0.01, 0.03, 0.02), (0.01, math.nan)])
def test_bad_sweep(values, monkeypatch):
    def boom(*a, **k):
        raise AssertionError("solver must not run")

    monkeypatch.setattr(harness, "_run_one", boom)
    with pytest.raises(DomainError):
        harness.run_scenario(small(values=values), workers=1)


def test_unknown_method():
    with pytest.raises(DomainError):
        harness.run_scenario(small(methods=("magic",)), workers=1)


def test_infeasible_row_recorded():
    base = {"total_bw": 2e3, "pairs": [{"z": 1, "theta": 0.01, "weights": 0.5, "video": ["Bus", "Coastguard"]}]}
    table = harness.run_scenario(small(base=base, values=(0.01,)), workers=1)
    assert [r["status"] for r in table.rows] == ["Infeasible", "Infeasible"]
    assert "bandwidth" in table.rows[0]["error"] or "floor" in table.rows[0]["error"]
    assert math.isnan(table.rows[0]["weighted_sum"])
    assert table.meta["notes"]


def test_emit_one_row(tmp_path):
    table = harness.run_scenario(small(values=(0.03,), methods=("optimal",)), workers=1)
    paths = harness.emit(table, tmp_path, ("csv", "long"))
    csvs = [p for p in paths if p.suffix == ".csv"]
    assert len(csvs) == 2
    wide = (tmp_path / "small.csv").read_text().splitlines()
    assert len(wide) == 2
    assert wide[0].split(",") == table.columns
    long = (tmp_path / "small_long.csv").read_text().splitlines()
    assert long[0] == "scenario,x,series,value"
    assert any(line.startswith("small,0.03,optimal:weighted_sum,") for line in long)


def test_round_trip(tmp_path, small_run):
    harness.emit(small_run, tmp_path)
    back = harness.read_csv(tmp_path / "small.csv")
    assert len(back) == len(small_run.rows)
    for got, want in zip(back, small_run.rows):
        for c in small_run.columns:
            if isinstance(want[c], float):
                if math.isnan(want[c]):
                    assert math.isnan(got[c])
                else:
                    assert got[c] == pytest.approx(want[c], rel=1e-12, abs=0)
            else:
                assert got[c] == want[c]


def test_rerun_is_bit_identical(tmp_path, small_run):
    harness.emit(small_run, tmp_path / "a")
    harness.emit(harness.run_scenario(small(), workers=1), tmp_path / "b")
    assert (tmp_path / "a" / "small.csv").read_bytes() == (tmp_path / "b" / "small.csv").read_bytes()


def test_emit_errors(tmp_path, small_run):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        harness.emit(small_run, blocker / "sub")
    with pytest.raises(DomainError):
        harness.emit(harness.ResultTable("e", [], []), tmp_path)
    with pytest.raises(DomainError):
        harness.emit(small_run, tmp_path, ("xlsx",))


def test_builtin_scenarios_validate():
    for name in scenarios.names():
        sc = scenarios.get(name)
        sc.validate()
        assert sc.description
    with pytest.raises(DomainError):
        scenarios.get("fig99")


def test_from_mapping():
    data = dict(BASE, scenario={"name": "mine", "methods": ["ebop"],
                                "sweep": {"label": "w", "values": [0.2, 0.4],
                                          "set": [{"path": "pairs.0.w1"},
                                                  {"path": "pairs.0.w2", "scale": -1, "offset": 1}]}},
                solver={"eps": 0.05})
    sc = scenarios.from_mapping(data)
    assert sc.name == "mine" and sc.methods == ("ebop",) and sc.solver.eps == 0.05
    pts = list(sc.points())
    assert [p[1]["pairs"][0]["w2"] for p in pts] == pytest.approx([0.8, 0.6])
