import json

import numpy as np
import pytest

from evobench import (AggregateStats, ExperimentSpec, IncompatibleSpecError,
                      RunRecord, SeriesPoint, SweepSpec, aggregate, emit_plot,
                      export_csv, export_json, import_json, run, run_sweep)
from evobench import cli, harness
from evobench.backend import BackendSpec
from evobench.core import Budget, VirtualClock


def _spec(**kw):
    base = dict(algo="pso", problem="sphere", dim=5, pop=8,
                budget=Budget.generations(5), reps=2, seed=3)
    base.update(kw)
    return ExperimentSpec(**base)


def _strip_time(rec: RunRecord):
    series = [(pt.gen, pt.nfe, pt.quality, pt.diversity) for pt in rec.series]
    final = {k: v for k, v in rec.final.items() if k != "elapsed_s"}
    return rec.seed, rec.stream_id, series, final


def _manual_record(qualities, stream_id=0, nfe_step=16):
    series = [SeriesPoint(g, g * nfe_step + 8, 0.1 * g, q, 1.0 + g)
              for g, q in enumerate(qualities)]
    last = series[-1]
    final = {"gen": last.gen, "nfe": last.nfe, "elapsed_s": last.elapsed_s,
             "quality": last.quality, "diversity": last.diversity}
    return RunRecord(3, stream_id, series, final)


# ---------------------------------------------------------------------------
# Running experiments
# ---------------------------------------------------------------------------

class TestRun:
    def test_zero_generation_budget_records_initialization_only(self):
        recs = run(_spec(budget=Budget.generations(0), reps=1))
        assert len(recs[0].series) == 1
        pt = recs[0].series[0]
        assert pt.gen == 0 and pt.nfe == 8

    def test_repetitions_are_distinct_but_reproducible(self):
        a = run(_spec())
        b = run(_spec())
        assert len(a) == 2
        assert a[0].stream_id != a[1].stream_id
        assert a[0].final["quality"] != a[1].final["quality"]
        assert [_strip_time(r) for r in a] == [_strip_time(r) for r in b]

    def test_reference_instance_lands_in_expected_band(self):
        spec = ExperimentSpec(algo="pso", problem="sphere", dim=50, pop=128,
                              budget=Budget.generations(100), reps=2, seed=7)
        for rec in run(spec):
            assert 0.0 <= rec.final["quality"] <= 50.0

    def test_single_objective_quality_is_non_increasing(self):
        for algo in ("pso", "de", "ga", "cmaes"):
            recs = run(_spec(algo=algo, pop=12,
                             budget=Budget.generations(10), reps=1))
            q = [pt.quality for pt in recs[0].series]
            assert all(b <= a + 1e-12 for a, b in zip(q, q[1:]))

    def test_series_counters_are_monotone(self):
        recs = run(_spec(algo="nsga2", problem="zdt1", dim=6, pop=10,
                         budget=Budget.generations(6)))
        for rec in recs:
            nfe = [pt.nfe for pt in rec.series]
            ela = [pt.elapsed_s for pt in rec.series]
            assert len(rec.series) >= 1
            assert all(b > a for a, b in zip(nfe, nfe[1:]))
            assert all(b >= a for a, b in zip(ela, ela[1:]))

    def test_evaluation_budget_axis(self):
        recs = run(_spec(budget=Budget.evaluations(50), reps=1))
        # 8 init + 8 per generation; the first check at or past 50 stops
        assert recs[0].final["nfe"] >= 50

    def test_walltime_budget_with_virtual_clock(self):
        spec = _spec(budget=Budget.walltime(10.0), reps=1)
        recs = run(spec, clock=VirtualClock(tick=1.0))
        assert recs[0].final["elapsed_s"] >= 10.0
        again = run(spec, clock=VirtualClock(tick=1.0))
        assert [_strip_time(r) for r in recs] == [_strip_time(r) for r in again]

    def test_fixed_budget_runs_ignore_the_clock(self):
        spec = _spec(budget=Budget.generations(5))
        real = run(spec)
        virt = run(spec, clock=VirtualClock(tick=123.0))
        assert [_strip_time(r) for r in real] == [_strip_time(r) for r in virt]

    def test_mismatched_family_raises(self):
        with pytest.raises(IncompatibleSpecError):
            run(_spec(algo="de", problem="zdt1", dim=6))
        with pytest.raises(IncompatibleSpecError):
            run(_spec(algo="nsga2", problem="sphere"))

    def test_parallel_backend_reproduces_serial_runs(self):
        spec = _spec(pop=16)
        serial = run(spec)
        par = run(_spec(pop=16, backend=BackendSpec.parallel(2, chunk=3)))
        assert [_strip_time(r) for r in serial] == [_strip_time(r) for r in par]

    def test_moea_quality_is_front_distance(self):
        recs = run(_spec(algo="nsga2", problem="zdt1", dim=8, pop=16,
                         budget=Budget.generations(30), reps=1))
        q = [pt.quality for pt in recs[0].series]
        assert q[-1] < q[0]  # converges toward the reference front

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            _spec(algo="annealing")
        with pytest.raises(ValueError):
            _spec(pop=0)
        with pytest.raises(ValueError):
            _spec(reps=0)
        with pytest.raises(ValueError):
            _spec(history_stride=0)

    def test_config_hash_tracks_spec_identity(self):
        a, b = _spec(), _spec()
        assert harness.config_hash(a) == harness.config_hash(b)
        assert harness.config_hash(_spec(pop=16)) != harness.config_hash(a)
        assert len(harness.config_hash(a)) == 16


class TestHistoryStride:
    def test_every_generation_recorded_by_default(self):
        recs = run(_spec(budget=Budget.generations(7), reps=1))
        assert [pt.gen for pt in recs[0].series] == list(range(8))

    def test_explicit_stride(self):
        recs = run(_spec(budget=Budget.generations(50), reps=1,
                         history_stride=10))
        assert [pt.gen for pt in recs[0].series] == [0, 10, 20, 30, 40, 50]

    def test_long_runs_are_thinned(self):
        assert harness.default_history_stride(
            Budget.generations(1000), 8) == 1
        assert harness.default_history_stride(
            Budget.generations(2500), 8) == 3
        assert harness.default_history_stride(
            Budget.evaluations(4000), 8) == 1
        assert harness.default_history_stride(
            Budget.walltime(30.0), 8) is None
        recs = run(ExperimentSpec(algo="pso", problem="sphere", dim=2, pop=4,
                                  budget=Budget.generations(2500), reps=1,
                                  seed=1))
        gens = [pt.gen for pt in recs[0].series]
        assert len(gens) <= 1002
        assert gens[0] == 0 and gens[-1] == 2500
        assert all(g % 3 == 0 for g in gens[:-1])

    def test_open_ended_runs_stay_bounded(self):
        spec = ExperimentSpec(algo="pso", problem="sphere", dim=2, pop=4,
                              budget=Budget.walltime(10.0), reps=1, seed=1)
        recs = run(spec, clock=VirtualClock(tick=0.004))
        series = recs[0].series
        assert 1 <= len(series) <= harness._HISTORY_CAP + 1
        assert series[0].gen == 0
        assert series[-1].gen == recs[0].final["gen"]


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

class TestAggregate:
    def test_single_record_has_zero_spread(self):
        agg = aggregate(run(_spec(reps=1)))
        assert np.all(agg.quality_std == 0.0)
        assert agg.final["quality"][1] == 0.0

    def test_symmetric_pair_mean_and_population_std(self):
        a = 10.0
        d = 2.5
        recs = [_manual_record([20.0, a + d], stream_id=0),
                _manual_record([20.0, a - d], stream_id=1)]
        agg = aggregate(recs)
        assert agg.final["quality"] == (a, d)
        assert agg.quality_mean[1] == a
        assert agg.quality_std[1] == d

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(5)
        vals = rng.random((4, 3)) * 10
        recs = [_manual_record(list(v), stream_id=i)
                for i, v in enumerate(vals)]
        agg = aggregate(recs)
        for j in range(3):
            col = vals[:, j]
            mean = sum(col) / len(col)
            var = sum((v - mean) ** 2 for v in col) / len(col)
            assert agg.quality_mean[j] == pytest.approx(mean, rel=1e-12)
            assert agg.quality_std[j] == pytest.approx(var ** 0.5, rel=1e-12)

    def test_unequal_lengths_truncate_to_shortest(self):
        recs = [_manual_record([5.0, 4.0, 3.0]), _manual_record([6.0, 2.0])]
        agg = aggregate(recs)
        assert len(agg.quality_mean) == 2
        assert agg.count == 2

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

class TestSweep:
    def test_single_value_sweep_equals_direct_run(self):
        base = _spec(pop=16)
        sweep = SweepSpec(base, axis="pop", values=(16,),
                          gen_budget=Budget.generations(5), time_budget=None)
        rows = run_sweep(sweep)
        direct = aggregate(run(_spec(pop=16, budget=Budget.generations(5))))
        assert rows[0]["value"] == 16
        assert rows[0]["gen_quality_mean"] == direct.final["quality"][0]
        assert rows[0]["gen_nfe_mean"] == direct.final["nfe"][0]
        assert "time_quality_mean" not in rows[0]

    def test_time_rows_report_throughput(self):
        base = _spec(pop=8)
        sweep = SweepSpec(base, axis="dim", values=(4, 8),
                          gen_budget=Budget.generations(3),
                          time_budget=Budget.walltime(5.0))
        rows = run_sweep(sweep, clock=VirtualClock(tick=0.5))
        assert len(rows) == 2
        for row in rows:
            assert row["time_nfe_per_s"] == pytest.approx(
                row["time_nfe_mean"] / row["time_elapsed_s_mean"])

    def test_axis_validation(self):
        with pytest.raises(ValueError):
            SweepSpec(_spec(), axis="seed", values=(1, 2))
        with pytest.raises(ValueError):
            SweepSpec(_spec(), axis="dim", values=())
        with pytest.raises(ValueError):
            SweepSpec(_spec(), axis="dim", values=(8, 8))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

class TestPersistence:
    def test_json_round_trip_is_lossless(self, tmp_path):
        spec = _spec()
        recs = run(spec)
        path = tmp_path / "runs.json"
        export_json(str(path), spec, recs)
        spec2, recs2 = import_json(str(path))
        assert spec2 == spec
        assert recs2 == recs

    def test_document_shape(self, tmp_path):
        spec = _spec(reps=1)
        recs = run(spec)
        path = tmp_path / "runs.json"
        export_json(str(path), spec, recs)
        doc = json.loads(path.read_text())
        assert doc["schema_version"] == 1
        assert doc["spec"]["algo"] == "pso"
        assert "config_hash" in doc and "transform_hash" in doc
        pt = doc["runs"][0]["series"][0]
        assert set(pt) == {"gen", "nfe", "elapsed_s", "quality", "diversity"}
        assert set(doc["runs"][0]["final"]) == {"gen", "nfe", "elapsed_s",
                                                "quality", "diversity"}

    def test_empty_run_list_is_valid(self, tmp_path):
        spec = _spec()
        path = tmp_path / "empty.json"
        export_json(str(path), spec, [])
        spec2, recs2 = import_json(str(path))
        assert spec2 == spec and recs2 == []

    def test_unknown_schema_version_rejected(self, tmp_path):
        spec = _spec()
        path = tmp_path / "runs.json"
        export_json(str(path), spec, [])
        doc = json.loads(path.read_text())
        doc["schema_version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            import_json(str(path))

    def test_csv_has_one_row_per_series_point(self, tmp_path):
        recs = run(_spec())
        path = tmp_path / "runs.csv"
        export_csv(str(path), recs)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "gen,nfe,elapsed_s,quality,diversity,rep"
        assert len(lines) == 1 + sum(len(r.series) for r in recs)

    def test_sweep_round_trip(self, tmp_path):
        base = _spec(pop=8)
        sweep = SweepSpec(base, axis="pop", values=(8, 16),
                          gen_budget=Budget.generations(2), time_budget=None)
        rows = run_sweep(sweep)
        path = tmp_path / "sweep.json"
        harness.export_sweep_json(str(path), sweep, rows)
        meta, rows2 = harness.import_sweep_json(str(path))
        assert rows2 == rows
        assert meta["axis"] == "pop"


# ---------------------------------------------------------------------------
# Plots
# ---------------------------------------------------------------------------

def _manual_agg():
    recs = [_manual_record([50.0, 40.0, 30.0], stream_id=i) for i in range(2)]
    return aggregate(recs)


class TestPlots:
    def test_output_is_deterministic(self):
        agg = _manual_agg()
        a = emit_plot(agg, "quality_vs_nfe")
        b = emit_plot(agg, "quality_vs_nfe")
        assert a == b and a.startswith("<svg")

    def test_empty_input_renders_axes_only(self):
        svg = emit_plot([], "quality_vs_nfe")
        assert "<!-- data-range 0 1 0 1 -->" in svg
        assert "<polyline" not in svg

    def test_declared_range_matches_the_data(self):
        svg = emit_plot(_manual_agg(), "quality_vs_nfe")
        tag = [ln for ln in svg.splitlines() if "data-range" in ln][0]
        x0, x1, y0, y1 = map(float, tag.split()[2:6])
        assert (x0, x1) == (8.0, 40.0)   # nfe positions 8, 24, 40
        assert (y0, y1) == (30.0, 50.0)  # quality spread, zero std band

    def test_file_output_matches_returned_text(self, tmp_path):
        path = tmp_path / "plot.svg"
        svg = emit_plot(_manual_agg(), "convergence", path=str(path))
        assert path.read_text() == svg

    def test_multi_series_and_diversity_kinds(self):
        agg = _manual_agg()
        svg = emit_plot([("a", agg), ("b", agg)], "diversity")
        assert svg.count("<polyline") >= 2

    def test_runtime_kind_consumes_sweep_rows(self):
        rows = [{"axis": "dim", "value": 4, "gen_elapsed_s_mean": 0.5,
                 "time_nfe_mean": 100.0, "time_elapsed_s_mean": 5.0,
                 "time_nfe_per_s": 20.0},
                {"axis": "dim", "value": 8, "gen_elapsed_s_mean": 1.0,
                 "time_nfe_mean": 150.0, "time_elapsed_s_mean": 5.0,
                 "time_nfe_per_s": 30.0}]
        svg = emit_plot(rows, "runtime_vs_axis")
        assert "runtime scaling" in svg

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            emit_plot(_manual_agg(), "pie")


# ---------------------------------------------------------------------------
# Command-line interface
# ---------------------------------------------------------------------------

class TestCli:
    def test_run_and_report_pipeline(self, tmp_path):
        out = tmp_path / "runs.json"
        code = cli.main(["run", "--algo", "pso", "--problem", "sphere",
                         "--dim", "4", "--pop", "8", "--reps", "2",
                         "--budget", "gen:3", "--seed", "1",
                         "--out", str(out)])
        assert code == 0 and out.exists()
        svg = tmp_path / "plot.svg"
        assert cli.main(["report", "--in", str(out), "--kind",
                         "quality_vs_nfe", "--out", str(svg)]) == 0
        assert svg.read_text().startswith("<svg")
        csvf = tmp_path / "agg.csv"
        assert cli.main(["report", "--in", str(out), "--kind",
                         "quality_vs_nfe", "--format", "csv",
                         "--out", str(csvf)]) == 0
        assert csvf.read_text().startswith("gen,")

    def test_list_command(self, capsys):
        assert cli.main(["list"]) == 0
        text = capsys.readouterr().out
        assert "pso" in text and "nsga2" in text and "sphere" in text

    def test_usage_errors_exit_2(self):
        assert cli.main(["run", "--algo", "pso", "--problem", "sphere",
                         "--budget", "lightyears:3"]) == 2
        assert cli.main(["frobnicate"]) == 2

    def test_incompatible_spec_exits_3(self, tmp_path):
        code = cli.main(["run", "--algo", "de", "--problem", "zdt1",
                         "--dim", "6", "--pop", "8", "--reps", "1",
                         "--budget", "gen:1",
                         "--out", str(tmp_path / "x.json")])
        assert code == 3

    def test_missing_input_exits_4(self, tmp_path):
        assert cli.main(["report", "--in", str(tmp_path / "nope.json"),
                         "--kind", "convergence",
                         "--out", str(tmp_path / "o.svg")]) == 4

    def test_sweep_command(self, tmp_path):
        out = tmp_path / "sweep.json"
        code = cli.main(["sweep", "--algo", "pso", "--problem", "sphere",
                         "--dim", "4", "--pop", "8", "--reps", "1",
                         "--axis", "pop", "--values", "8,16",
                         "--gen-budget", "gen:2", "--time-budget", "none",
                         "--out", str(out)])
        assert code == 0
        meta, rows = harness.import_sweep_json(str(out))
        assert [r["value"] for r in rows] == [8, 16]
