"""Loop behavior: matrix building, dispatch, refinement, and budget."""

from __future__ import annotations

import threading
import time

import pytest

from strategy_tuner import (
    AnalysisTask,
    Completed,
    CostModel,
    Crashed,
    IntVal,
    InvalidSettingsError,
    Poisson,
    SyntheticAlarm,
    SyntheticAnalyzer,
    SyntheticProfile,
    TimedOut,
    TunerSettings,
    build_result_matrix,
    config_dominates,
    leq,
    tune,
)
from strategy_tuner.paramspace import Configuration


def _configs_with_slevel(catalog, values):
    return [catalog.base_configuration().replace("slevel", IntVal(v)) for v in values]


class TestBuildResultMatrix:
    def test_failed_analyses_excluded(self, catalog):
        # six analyses, the last one failed; the universe covers exactly
        # the alarms some completed analysis produced
        values = [58, 103, 104, 1000, 9, 9999]
        configs = _configs_with_slevel(catalog, values)
        alarm_sets = [
            {"alarm-3", "alarm-4"},
            {"alarm-3", "alarm-4"},
            {"alarm-4"},
            {"alarm-4"},
            {"alarm-2", "alarm-3", "alarm-4"},
        ]
        outcomes = [Completed(frozenset(s), 1.0) for s in alarm_sets] + [TimedOut(5.0)]
        matrix = build_result_matrix(outcomes, configs)
        assert matrix.num_rows == 5
        assert set(matrix.alarms) == {"alarm-2", "alarm-3", "alarm-4"}
        assert matrix.values_per_param["slevel"] == (
            IntVal(58),
            IntVal(103),
            IntVal(104),
            IntVal(1000),
            IntVal(9),
        )
        for j in range(matrix.num_alarms):
            assert any(row.produced[j] for row in matrix.rows)

    def test_zero_completed(self, catalog):
        configs = _configs_with_slevel(catalog, [1, 2])
        matrix = build_result_matrix([TimedOut(1.0), Crashed("boom")], configs)
        assert matrix.num_rows == 0
        assert matrix.num_alarms == 0

    def test_universe_orders_by_first_appearance_then_lex(self, catalog):
        configs = _configs_with_slevel(catalog, [1, 2])
        outcomes = [
            Completed(frozenset({"zeta", "beta"}), 1.0),
            Completed(frozenset({"alpha", "beta"}), 1.0),
        ]
        matrix = build_result_matrix(outcomes, configs)
        assert matrix.alarms == ("beta", "zeta", "alpha")

    def test_duplicate_alarm_sets_counted_once(self, catalog):
        configs = _configs_with_slevel(catalog, [1, 2])
        outcomes = [
            Completed(frozenset({"a", "b"}), 1.0),
            Completed(frozenset({"a", "b"}), 1.0),
        ]
        matrix = build_result_matrix(outcomes, configs)
        assert matrix.num_alarms == 2

    def test_misaligned_inputs_rejected(self, catalog):
        with pytest.raises(ValueError):
            build_result_matrix([TimedOut(1.0)], [])


class TestSettingsValidation:
    def test_defaults_are_valid(self):
        settings = TunerSettings(time_budget=60.0)
        assert settings.num_sample == 4

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"time_budget": 0.0},
            {"time_budget": 60.0, "num_sample": 0},
            {"time_budget": 60.0, "num_process": 0},
            {"time_budget": 60.0, "iteration_fraction": 0.0},
            {"time_budget": 60.0, "iteration_fraction": 1.5},
            {"time_budget": 60.0, "min_slice": 0.0},
            {"time_budget": 60.0, "max_iterations": -1},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(InvalidSettingsError):
            TunerSettings(**kwargs)


class ConcurrencyProbe:
    """Records peak concurrent run() calls; completes with no alarms."""

    def __init__(self, hold: float = 0.05):
        self.hold = hold
        self._lock = threading.Lock()
        self._active = 0
        self.peak = 0

    def run(self, task: AnalysisTask):
        with self._lock:
            self._active += 1
            self.peak = max(self.peak, self._active)
        time.sleep(self.hold)
        with self._lock:
            self._active -= 1
        return Completed(frozenset(), self.hold)


class TestDispatch:
    def test_peak_concurrency_bounded(self, catalog):
        probe = ConcurrencyProbe()
        settings = TunerSettings(
            time_budget=30.0, num_sample=4, num_process=2, seed=0, max_iterations=1
        )
        result = tune("prog", catalog, settings, probe)
        assert len(result.iteration_trace) == 1
        assert probe.peak <= 2

    def test_exactly_num_sample_tasks(self, catalog):
        probe = ConcurrencyProbe(hold=0.0)
        settings = TunerSettings(
            time_budget=30.0, num_sample=6, num_process=3, seed=0, max_iterations=2
        )
        result = tune("prog", catalog, settings, probe)
        for record in result.iteration_trace:
            assert len(record.sampled_configs) == 6
            assert len(record.outcomes) == 6

    def test_raising_analyzer_recorded_as_crash(self, catalog):
        class Exploding:
            def run(self, task):
                raise RuntimeError("kaboom")

        settings = TunerSettings(time_budget=30.0, seed=0, max_iterations=1)
        result = tune("prog", catalog, settings, Exploding())
        record = result.iteration_trace[0]
        assert all(isinstance(o, Crashed) for o in record.outcomes)
        assert record.completed == 0


@pytest.fixture
def incompressible_profile(catalog):
    return SyntheticProfile(
        catalog=catalog,
        alarms=(SyntheticAlarm("stuck-1", None), SyntheticAlarm("stuck-2", None)),
        cost=CostModel(base_cost=0.2),
    )


class TestEtaScaling:
    def test_all_timed_out_scales_down(self, catalog):
        profile = SyntheticProfile(
            catalog=catalog, alarms=(), cost=CostModel(base_cost=10_000.0)
        )
        settings = TunerSettings(
            time_budget=100.0, num_sample=4, num_process=4, seed=0, max_iterations=1
        )
        result = tune("synthetic", catalog, settings, SyntheticAnalyzer(profile))
        record = result.iteration_trace[0]
        assert all(isinstance(o, TimedOut) for o in record.outcomes)
        assert record.eta == 0.25
        before = record.distributions_before["slevel"]
        after = record.distributions_after["slevel"]
        assert after.delta == Poisson(before.delta.lam * 0.25)
        assert after.base == before.base
        q_before = record.distributions_before["split-return"].delta.q
        q_after = record.distributions_after["split-return"].delta.q
        assert q_after == pytest.approx(1.0 - (1.0 - q_before) ** 0.25)

    def test_all_completed_scales_up(self, catalog, incompressible_profile):
        settings = TunerSettings(
            time_budget=100.0, num_sample=4, num_process=4, seed=0, max_iterations=1
        )
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(incompressible_profile)
        )
        record = result.iteration_trace[0]
        assert record.completed == 4
        assert record.eta == 2.25

    def test_loop_continues_after_zero_completions(self, catalog):
        profile = SyntheticProfile(
            catalog=catalog, alarms=(), cost=CostModel(base_cost=10_000.0)
        )
        settings = TunerSettings(
            time_budget=40_000.0, num_sample=2, num_process=2, seed=0, max_iterations=3
        )
        result = tune("synthetic", catalog, settings, SyntheticAnalyzer(profile))
        assert len(result.iteration_trace) >= 2


class TestBudget:
    def test_budget_below_min_slice_runs_nothing(self, catalog, incompressible_profile):
        settings = TunerSettings(time_budget=0.5, min_slice=1.0, seed=0)
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(incompressible_profile)
        )
        assert result.iteration_trace == ()
        assert result.recommended_config == catalog.base_configuration()

    def test_virtual_budget_exact_compliance(self, catalog, incompressible_profile):
        settings = TunerSettings(time_budget=3.0, min_slice=0.5, seed=3)
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(incompressible_profile)
        )
        assert result.iteration_trace
        assert result.wall_time_total <= settings.time_budget
        assert result.wall_time_total == pytest.approx(
            sum(r.elapsed for r in result.iteration_trace)
        )

    def test_real_clock_budget_with_grace(self, catalog):
        class Sleeper:
            def run(self, task):
                wait = min(0.02, task.timeout)
                time.sleep(wait)
                return Completed(frozenset(), wait)

        settings = TunerSettings(
            time_budget=0.6, min_slice=0.05, num_sample=2, num_process=2, seed=0
        )
        start = time.monotonic()
        result = tune("prog", catalog, settings, Sleeper())
        elapsed = time.monotonic() - start
        assert result.iteration_trace
        assert elapsed <= settings.time_budget * 1.1 + 2.0

    def test_analyze_phase_fits_one_slice(self, catalog, incompressible_profile):
        # num_process < num_sample: per-analysis deadline shrinks by the
        # number of waves, so one iteration still costs <= one slice
        settings = TunerSettings(
            time_budget=100.0,
            num_sample=4,
            num_process=1,
            iteration_fraction=0.5,
            seed=0,
            max_iterations=1,
        )
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(incompressible_profile)
        )
        assert result.iteration_trace[0].elapsed <= 50.0 + 1e-9


class TestStateEvolution:
    def test_bases_never_regress(self, catalog, convergence_profile):
        settings = TunerSettings(
            time_budget=1e9, num_sample=4, num_process=4, seed=9, max_iterations=12
        )
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(convergence_profile)
        )
        for record in result.iteration_trace:
            for name in catalog.names():
                assert leq(
                    record.distributions_before[name].base,
                    record.distributions_after[name].base,
                )

    def test_samples_dominate_iteration_base(self, catalog, convergence_profile):
        settings = TunerSettings(
            time_budget=1e9, num_sample=4, num_process=4, seed=11, max_iterations=12
        )
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(convergence_profile)
        )
        for record in result.iteration_trace:
            base_config = Configuration(
                tuple(
                    (name, record.distributions_before[name].base)
                    for name in catalog.names()
                )
            )
            for config in record.sampled_configs:
                assert config_dominates(config, base_config)

    def test_incompressible_only_profile_keeps_bases(self, catalog, incompressible_profile):
        settings = TunerSettings(
            time_budget=1e9, num_sample=4, num_process=4, seed=5, max_iterations=8
        )
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(incompressible_profile)
        )
        assert result.recommended_config == catalog.base_configuration()

    def test_best_round_alarm_count_non_increasing(self, catalog, convergence_profile):
        settings = TunerSettings(
            time_budget=1e9, num_sample=4, num_process=4, seed=9, max_iterations=15
        )
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(convergence_profile)
        )
        best_counts = []
        for record in result.iteration_trace:
            counts = [len(o.alarms) for o in record.outcomes if isinstance(o, Completed)]
            assert counts, "benign cost model should never time out"
            best_counts.append(min(counts))
        assert all(b >= a for a, b in zip(best_counts[1:], best_counts))

    def test_recommended_equals_final_bases(self, catalog, convergence_profile):
        settings = TunerSettings(
            time_budget=1e9, num_sample=4, num_process=4, seed=9, max_iterations=6
        )
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(convergence_profile)
        )
        for name in catalog.names():
            assert result.recommended_config[name] == result.final_distributions[name].base

    def test_best_sampled_consistency(self, catalog, convergence_profile):
        settings = TunerSettings(
            time_budget=1e9, num_sample=4, num_process=4, seed=9, max_iterations=6
        )
        result = tune(
            "synthetic", catalog, settings, SyntheticAnalyzer(convergence_profile)
        )
        assert result.best_sampled is not None
        assert result.best_sampled.alarm_count == len(result.best_sampled.alarms)


class TestReproducibility:
    def test_identical_runs_identical_traces(self, catalog, convergence_profile):
        settings = TunerSettings(
            time_budget=1e9, num_sample=4, num_process=4, seed=21, max_iterations=8
        )
        r1 = tune("synthetic", catalog, settings, SyntheticAnalyzer(convergence_profile))
        r2 = tune("synthetic", catalog, settings, SyntheticAnalyzer(convergence_profile))
        assert r1.iteration_trace == r2.iteration_trace
        assert r1.recommended_config == r2.recommended_config

    def test_different_seeds_differ(self, catalog, convergence_profile):
        base = dict(time_budget=1e9, num_sample=4, num_process=4, max_iterations=4)
        r1 = tune(
            "synthetic",
            catalog,
            TunerSettings(seed=1, **base),
            SyntheticAnalyzer(convergence_profile),
        )
        r2 = tune(
            "synthetic",
            catalog,
            TunerSettings(seed=2, **base),
            SyntheticAnalyzer(convergence_profile),
        )
        assert r1.iteration_trace[0].sampled_configs != r2.iteration_trace[0].sampled_configs
