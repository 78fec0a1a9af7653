import csv
import io
from pathlib import Path

import pytest

from socialfield.bench import SweepSpec, cmd_bench, memory_plan, recurrent_fanout
from socialfield.cli import main
from socialfield.grid import Footprint, GridGeometry
from socialfield.scenario_io import read_metrics

SCENARIOS = Path(__file__).parent.parent / "scenarios"


@pytest.fixture
def small(tmp_path):
    path = tmp_path / "small.scn"
    path.write_text("grid = 24x24\ndensity = 0.5\nticks = 5\nseed = 3\n")
    return path


def test_run_writes_metrics(small, tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["run", "--scenario", str(small), "--out", str(out)]) == 0
    assert len(read_metrics(out)) == 5
    assert "final tick 5" in capsys.readouterr().out


def test_run_parallel_mode(small):
    assert main(["run", "--scenario", str(small), "--mode", "par", "--workers", "3", "--ticks", "2"]) == 0


def test_run_parse_error(tmp_path):
    bad = tmp_path / "bad.scn"
    bad.write_text("grid = 24x24\nthis is not a key value line\n")
    assert main(["run", "--scenario", str(bad)]) == 1
    assert main(["run", "--scenario", str(tmp_path / "missing.scn")]) == 1


def test_run_density_too_high_for_footprint(tmp_path):
    path = tmp_path / "dense.scn"
    path.write_text("grid = 10x10\ndensity = 1.0\npedestrian_geometry = 3x3\nfield_geometry = 3x3\n")
    assert main(["run", "--scenario", str(path)]) == 2


def test_validate_identical(small, capsys):
    assert main(["validate", "--scenario", str(small), "--ticks", "10", "--workers", "1,8"]) == 0
    out = capsys.readouterr().out
    assert out.count("identical over 10 ticks") == 2


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.scn")), ids=lambda p: p.stem)
def test_validate_shipped_scenarios(path):
    ticks = "1" if path.stem == "full_scale_baseline" else "10"
    workers = "4" if path.stem == "full_scale_baseline" else "1,2,4,8"
    assert main(["validate", "--scenario", str(path), "--ticks", ticks, "--workers", workers]) == 0


def test_validate_injected_fault_diverges(capsys):
    path = SCENARIOS / "desk_64.scn"
    assert main(["validate", "--scenario", str(path), "--ticks", "5", "--inject-fault"]) == 4
    assert "DIVERGED at tick 0, phase k3_vote" in capsys.readouterr().out


def test_bench_counts_rows(tmp_path):
    out = tmp_path / "b.csv"
    args = ["bench", "--grids", "16,24", "--densities", "0.2,0.5", "--directions", "bi",
            "--ticks", "2", "--repeats", "2", "--out", str(out)]
    assert main(args) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    assert all(r["status"] == "ok" and r["repeats"] == "2" for r in rows)
    assert float(rows[0]["ratio_to_first"]) == 1.0


def test_bench_period_preset_rows():
    spec = SweepSpec.preset("period", grids=[16], ticks=1, repeats=1, warmup_ticks=0)
    report = cmd_bench(spec)
    assert [r.case.max_period for r in report.rows] == [1, 3, 5, 7, 9, 11]


def test_bench_records_failures_and_continues():
    spec = SweepSpec(grids=[8, 16], densities=[0.1], ticks=1, repeats=1, warmup_ticks=0)
    rows = cmd_bench(spec).rows
    assert rows[0].status.startswith("error") and rows[1].status == "ok"
    buf = io.StringIO()
    cmd_bench(spec).write(buf)
    assert buf.getvalue().count("\n") == 3


def test_bench_combo_follows_pedestrian_geometry():
    spec = SweepSpec.preset("combo", grids=[40], max_periods=[1], ticks=1, repeats=1, warmup_ticks=0)
    rows = cmd_bench(spec).rows
    assert [r.fanout for r in rows] == [recurrent_fanout(Footprint(7 * n, 7 * n)) for n in (1, 3, 5)]


def test_unknown_preset():
    with pytest.raises(ValueError):
        SweepSpec.preset("nope")


def test_fanout_command(capsys):
    assert main(["fanout", "--geometry", "7x7"]) == 0
    out = capsys.readouterr().out
    assert "fanout        7" in out and "oracle fanout 7" in out
    assert main(["fanout", "--geometry", "4x3"]) == 1


def test_plan_memory_command(capsys):
    assert main(["plan-memory", "--fanout", "6,808"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].endswith(",6,192,768,768000000,0.7")
    assert lines[2].split(",")[-1] == "96.3"
    assert main(["plan-memory", "--ratio", "1,3"]) == 0
    assert main(["plan-memory", "--ratio", "2"]) == 1


def test_memory_plan_zero():
    plan = memory_plan(0, GridGeometry(1000, 1000))
    assert plan.m_recur == plan.m_total == plan.M_total == 0
