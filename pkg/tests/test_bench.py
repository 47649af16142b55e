import csv
import io
import json
import math

import numpy as np
import pytest

from safepath.baselines import bfs_reachable
from safepath.bench import (
    ABLATION_COLUMNS,
    ABLATION_MODES,
    BORDER,
    CLUTTERED,
    CSV_COLUMNS,
    SPARSE,
    BenchReport,
    BenchRow,
    GenerationError,
    MapSpec,
    ablation_config,
    aggregate,
    generate_map,
    run_ablation,
    run_benchmark,
    sample_scenarios,
)
from safepath.gridmap import OccupancyGrid, distance_transform, parse_map
from safepath.metrics import min_clearance, path_length, turning_angle
from safepath.upp import UppConfig


def _drop_time(text):
    rows = list(csv.reader(io.StringIO(text)))
    idx = rows[0].index("time_ms")
    return [r[:idx] + r[idx + 1 :] for r in rows]


def test_map_spec_parse():
    spec = MapSpec.parse("cluttered-scatter:64x32:0.1:9")
    assert (spec.width, spec.height, spec.density, spec.seed, spec.cell_size) == (64, 32, 0.1, 9, 0.05)
    assert MapSpec.parse("sparse-blocks:10x10:0.2:1:0.1").cell_size == 0.1
    for bad in ("cluttered-scatter:64:0.1:9", "x:1x1", "sparse-blocks:axb:0.1:1"):
        with pytest.raises(ValueError):
            MapSpec.parse(bad)


def test_generation_is_deterministic():
    for style in (SPARSE, CLUTTERED):
        spec = MapSpec(64, 48, 0.05, 0.25, style, 42)
        assert generate_map(spec) == generate_map(spec)
    assert generate_map(MapSpec(density=0.2, seed=1)) != generate_map(MapSpec(density=0.2, seed=2))


@pytest.mark.parametrize("style", [SPARSE, CLUTTERED])
@pytest.mark.parametrize("density", [0.03, 0.1, 0.3, 0.5])
def test_generated_density_and_border(style, density):
    g = generate_map(MapSpec(128, 128, 0.05, density, style, 3))
    realized = g.obstacle_count() / g.cells.size
    assert abs(realized - density) <= 0.03
    assert not g.cells[:BORDER].any() and not g.cells[-BORDER:].any()
    assert not g.cells[:, :BORDER].any() and not g.cells[:, -BORDER:].any()


def test_cluttered_target_density_example():
    g = generate_map(MapSpec(128, 128, 0.05, 0.30, CLUTTERED, 0))
    assert 0.27 <= g.obstacle_count() / g.cells.size <= 0.33


def test_zero_density_is_open():
    assert not generate_map(MapSpec(40, 40, 0.05, 0.0, SPARSE, 1)).cells.any()


@pytest.mark.parametrize("density", [-0.1, 0.6, 0.9])
def test_density_out_of_range(density):
    with pytest.raises(ValueError):
        generate_map(MapSpec(density=density))


def test_unknown_style():
    with pytest.raises(ValueError):
        generate_map(MapSpec(style="mazes"))


def test_scenarios_are_valid_and_deterministic():
    g = generate_map(MapSpec(64, 64, 0.05, 0.3, CLUTTERED, 5))
    a = sample_scenarios(g, 12, seed=99, map_id="m")
    assert a == sample_scenarios(g, 12, seed=99, map_id="m")
    assert len(a) == 12
    for i, sc in enumerate(a):
        assert sc.index == i and sc.scenario_id == f"m#{i}"
        assert sc.s != sc.t
        assert g.is_free(sc.s) and g.is_free(sc.t)
        assert bfs_reachable(g, sc.s, sc.t)
        assert max(abs(sc.s[0] - sc.t[0]), abs(sc.s[1] - sc.t[1])) >= 16


def test_scenarios_on_open_grid(open_grid):
    (sc,) = sample_scenarios(open_grid(8, 8), 1, seed=0)
    assert sc.s != sc.t


def test_scenarios_need_two_free_cells():
    cells = np.ones((5, 5), dtype=bool)
    cells[2, 2] = False
    with pytest.raises(GenerationError):
        sample_scenarios(OccupancyGrid(cells), 1, seed=0)


def test_scenarios_give_up_when_no_pair_is_far_enough():
    g = parse_map("cell 1\n#####\n#..##\n#####\n#####\n#####\n")
    with pytest.raises(GenerationError):
        sample_scenarios(g, 1, seed=0, max_tries=20)


def test_zero_trials_gives_header_only(tmp_path):
    report = run_benchmark([MapSpec(32, 32, 0.05, 0.1, CLUTTERED, 1)], trials=0, out_dir=tmp_path)
    assert report.rows == []
    assert (tmp_path / "report.csv").read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_benchmark_rows_and_files(tmp_path):
    specs = [MapSpec(40, 40, 0.05, 0.15, CLUTTERED, 2), MapSpec(40, 40, 0.05, 0.2, SPARSE, 3)]
    report = run_benchmark(specs, ("upp", "astar", "maximin"), trials=3, seed=4, out_dir=tmp_path)
    assert len(report.rows) == 2 * 3 * 3
    text = (tmp_path / "report.csv").read_text()
    header = text.splitlines()[0].split(",")
    assert tuple(header) == CSV_COLUMNS
    data = json.loads((tmp_path / "report.json").read_text())
    assert set(data["aggregates"]) == {"upp", "astar", "maximin"}
    assert "time_ms" in data["note"]
    for row in report.rows:
        assert row.outcome == "success"
        assert 0.0 <= row.osi <= 1.0
    by = {(r.scenario_id, r.planner): r for r in report.rows}
    for (sid, planner), row in by.items():
        if planner == "astar":
            assert row.O == 1.0
            assert row.length_m <= by[(sid, "upp")].length_m + 1e-12
        if planner == "maximin":
            assert row.C == 1.0


def test_sidecar_paths_reproduce_metrics(tmp_path):
    specs = [MapSpec(48, 48, 0.05, 0.1, CLUTTERED, 8)]
    report = run_benchmark(specs, ("upp", "astar"), trials=4, seed=1, out_dir=tmp_path)
    grid = generate_map(specs[0])
    d = distance_transform(grid)
    rows = {(r.scenario_id, r.planner): r for r in report.rows}
    lines = (tmp_path / "report_paths.jsonl").read_text().splitlines()
    assert len(lines) == len(report.rows)
    for line in lines:
        rec = json.loads(line)
        path = [tuple(n) for n in rec["path"]]
        row = rows[(rec["scenario_id"], rec["planner"])]
        assert path_length(path, 0.05) == pytest.approx(row.length_m)
        assert min_clearance(path, d, 0.05) * 100 == pytest.approx(row.clearance_cm)
        assert turning_angle(path) == pytest.approx(row.turn_deg)


def test_benchmark_csv_is_reproducible():
    specs = [MapSpec(40, 40, 0.05, 0.2, CLUTTERED, 6)]
    a = run_benchmark(specs, ("upp", "astar"), trials=4, seed=3).to_csv()
    b = run_benchmark(specs, ("upp", "astar"), trials=4, seed=3).to_csv()
    assert _drop_time(a) == _drop_time(b)
    c = run_benchmark(specs, ("upp", "astar"), trials=4, seed=4).to_csv()
    assert _drop_time(a) != _drop_time(c)


def test_benchmark_rejects_unknown_planner():
    with pytest.raises(ValueError):
        run_benchmark([MapSpec(32, 32)], ("rrt",), trials=1)
    with pytest.raises(ValueError):
        run_benchmark([MapSpec(32, 32)], (), trials=1)


def test_success_rate_arithmetic():
    rows = [
        BenchRow("a#0", "upp", "success", length_m=1.0, clearance_cm=5.0, turn_deg=0.0, osi=0.5, time_ms=1.0),
        BenchRow("a#1", "upp", "failure"),
        BenchRow("a#2", "upp", "error"),
        BenchRow("a#3", "upp", "success", length_m=3.0, clearance_cm=7.0, turn_deg=90.0, osi=0.7, time_ms=2.0),
    ]
    agg = aggregate(rows)
    assert agg["rows"] == 4 and agg["successes"] == 2
    assert agg["success_rate"] == 50.0
    assert agg["length_m"]["mean"] == 2.0 and agg["length_m"]["min"] == 1.0
    assert agg["clearance_cm"]["median"] == 6.0
    assert math.isnan(aggregate([])["success_rate"])


def test_failed_rows_leave_metrics_blank():
    report = BenchReport(rows=[BenchRow("m#0", "upp", "failure", time_ms=1.5)])
    line = report.to_csv().splitlines()[1]
    assert line == "m#0,upp,failure,1.500000,,,,,,"


def test_crashing_planner_marks_row(monkeypatch):
    import safepath.bench as bench

    def boom(grid, s, t):
        raise RuntimeError("boom")

    monkeypatch.setattr(bench, "astar_shortest", boom)
    report = run_benchmark([MapSpec(32, 32, 0.05, 0.1, CLUTTERED, 1)], ("astar", "upp"), trials=2)
    assert [r.outcome for r in report.rows_for("astar")] == ["error", "error"]
    assert all(r.outcome == "success" for r in report.rows_for("upp"))


def test_ablation_config_switches():
    base = UppConfig()
    for mode, (aa, ab) in ABLATION_MODES.items():
        cfg = ablation_config(base, mode, 0.25, 2.5)
        assert (cfg.adapt_alpha, cfg.adapt_beta) == (aa, ab)
        assert (cfg.alpha_base, cfg.beta_base) == (0.25, 2.5)
    with pytest.raises(ValueError):
        ablation_config(base, "half-adaptive", 0.5, 10)


def test_ablation_report(tmp_path):
    spec = MapSpec(40, 40, 0.05, 0.1, CLUTTERED, 2)
    inits = [(0.25, 2.5), (0.75, 40.0)]
    report = run_ablation(spec, modes=["both-fixed", "both-adaptive"], inits=inits, trials=2, seed=1, out_dir=tmp_path)
    assert report.columns == ABLATION_COLUMNS
    assert len(report.rows) == 2 * 2 * 2
    assert len(report.rows_for("upp", mode="both-fixed", alpha0=0.75, beta0=40.0)) == 2
    header = (tmp_path / "ablation.csv").read_text().splitlines()[0]
    assert tuple(header.split(",")) == ABLATION_COLUMNS
    assert all(r.expanded > 0 for r in report.rows)
