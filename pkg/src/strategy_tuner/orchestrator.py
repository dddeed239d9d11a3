"""The sample-analyze-refine loop.

Each iteration draws ``num_sample`` configurations from the current
distributions, dispatches the analyses on a bounded worker pool, builds
the result matrix from whatever completed, and refines every parameter's
base (meet-and-join over alarm columns) and delta (completion-rate
scaling). The loop stops when the remaining budget drops below a minimum
slice or an iteration cap is reached.

Budget policy: every analysis of an iteration gets the same deadline,
``remaining * iteration_fraction / waves`` where ``waves`` is the number
of sequential batches the pool needs for ``num_sample`` tasks. At full
parallelism that is exactly ``remaining * iteration_fraction``, and at
any parallelism the analyze phase fits in one geometric slice, so the
total can never overshoot the budget.

Analyzers exposing a true ``virtual_clock`` attribute are charged
simulated time (the makespan of their reported wall times on the pool)
instead of real time; runs against them are bit-reproducible from the
seed alone.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from .analyzers import AnalysisOutcome, AnalysisTask, Analyzer, Completed, Crashed, TimedOut
from .distributions import (
    ParamDistribution,
    ResultMatrix,
    MatrixRow,
    refine_base,
    refine_delta,
    sample_param,
    scaling_factor,
)
from .errors import InvalidSettingsError
from .paramspace import Catalog, Configuration
from .rng import RandomStream


@dataclass(frozen=True)
class TunerSettings:
    time_budget: float
    num_sample: int = 4
    num_process: int = 1
    seed: int = 0
    iteration_fraction: float = 0.5
    max_iterations: int | None = None
    min_slice: float = 1.0

    def __post_init__(self) -> None:
        if not (self.time_budget > 0):
            raise InvalidSettingsError(f"time_budget must be positive, got {self.time_budget!r}")
        if self.num_sample < 1:
            raise InvalidSettingsError(f"num_sample must be positive, got {self.num_sample!r}")
        if self.num_process < 1:
            raise InvalidSettingsError(f"num_process must be positive, got {self.num_process!r}")
        if not (0.0 < self.iteration_fraction <= 1.0):
            raise InvalidSettingsError(
                f"iteration_fraction must lie in (0, 1], got {self.iteration_fraction!r}"
            )
        if self.max_iterations is not None and self.max_iterations < 0:
            raise InvalidSettingsError(
                f"max_iterations must be nonnegative, got {self.max_iterations!r}"
            )
        if not (self.min_slice > 0):
            raise InvalidSettingsError(f"min_slice must be positive, got {self.min_slice!r}")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    sampled_configs: tuple[Configuration, ...]
    outcomes: tuple[AnalysisOutcome, ...]
    alarm_universe: tuple[str, ...]
    completed: int
    eta_c: float
    eta: float
    distributions_before: dict[str, ParamDistribution]
    distributions_after: dict[str, ParamDistribution]
    elapsed: float


@dataclass(frozen=True)
class BestSample:
    config: Configuration
    alarm_count: int
    alarms: tuple[str, ...]


@dataclass(frozen=True)
class TuneResult:
    recommended_config: Configuration
    best_sampled: BestSample | None
    final_distributions: dict[str, ParamDistribution]
    iteration_trace: tuple[IterationRecord, ...]
    wall_time_total: float


def build_result_matrix(
    outcomes: list[AnalysisOutcome] | tuple[AnalysisOutcome, ...],
    sampled_configs: list[Configuration] | tuple[Configuration, ...],
) -> ResultMatrix:
    """Matrix over completed analyses only.

    The alarm universe is the union of their alarm sets, ordered by first
    appearance (then lexicographically within one row's contribution).
    """
    if len(outcomes) != len(sampled_configs):
        raise ValueError("outcomes and sampled_configs must align")
    completed = [
        (i, out) for i, out in enumerate(outcomes) if isinstance(out, Completed)
    ]
    universe: list[str] = []
    seen: set[str] = set()
    for _, out in completed:
        for alarm in sorted(out.alarms):
            if alarm not in seen:
                seen.add(alarm)
                universe.append(alarm)
    rows = tuple(
        MatrixRow(config_index=i, produced=tuple(a in out.alarms for a in universe))
        for i, out in completed
    )
    values: dict[str, tuple] = {}
    if sampled_configs:
        for name in sampled_configs[0].names():
            values[name] = tuple(sampled_configs[i][name] for i, _ in completed)
    return ResultMatrix(alarms=tuple(universe), rows=rows, values_per_param=values)


@dataclass
class TunerState:
    """Coordinator-owned, mutated only between phases."""

    program_ref: str
    catalog: Catalog
    settings: TunerSettings
    analyzer: Analyzer
    distributions: dict[str, ParamDistribution]
    remaining: float
    iteration: int = 0
    virtual_clock: bool = field(init=False)

    def __post_init__(self) -> None:
        self.virtual_clock = bool(getattr(self.analyzer, "virtual_clock", False))


def _sample_configuration(
    state: TunerState, rng: RandomStream, iteration: int, sample_index: int
) -> Configuration:
    entries = []
    for spec in state.catalog:
        stream = rng.split("iter", iteration, "sample", sample_index, "param", spec.name)
        entries.append((spec.name, sample_param(state.distributions[spec.name], stream)))
    return Configuration(tuple(entries))


def _dispatch(state: TunerState, tasks: list[AnalysisTask]) -> list[AnalysisOutcome]:
    def guarded(task: AnalysisTask) -> AnalysisOutcome:
        try:
            return state.analyzer.run(task)
        except Exception as exc:  # a raising analyzer counts as a crash
            return Crashed(exit_info=f"analyzer raised {exc!r}")

    if state.virtual_clock:
        return [guarded(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=state.settings.num_process) as pool:
        futures = [pool.submit(guarded, task) for task in tasks]
        return [f.result() for f in futures]


def _makespan(durations: list[float], workers: int) -> float:
    """Greedy earliest-free-worker schedule, matching pool dispatch order."""
    if not durations:
        return 0.0
    free = [0.0] * max(1, workers)
    for d in durations:
        idx = min(range(len(free)), key=free.__getitem__)
        free[idx] += d
    return max(free)


def _outcome_duration(outcome: AnalysisOutcome) -> float:
    if isinstance(outcome, (Completed, TimedOut)):
        return outcome.wall_time
    return 0.0


def execute_iteration(state: TunerState, rng: RandomStream) -> IterationRecord:
    """Run one sample-analyze-refine round and advance the state."""
    settings = state.settings
    started = time.monotonic()
    waves = math.ceil(settings.num_sample / settings.num_process)
    per_analysis_timeout = state.remaining * settings.iteration_fraction / waves

    # Sampling is serial and precedes dispatch, so completion order
    # cannot perturb the stream.
    configs = [
        _sample_configuration(state, rng, state.iteration, i)
        for i in range(settings.num_sample)
    ]
    tasks = [
        AnalysisTask(program_ref=state.program_ref, config=c, timeout=per_analysis_timeout)
        for c in configs
    ]

    outcomes = _dispatch(state, tasks)
    matrix = build_result_matrix(outcomes, configs)
    completed = matrix.num_rows
    eta_c = completed / settings.num_sample
    eta = scaling_factor(completed, settings.num_sample)

    before = dict(state.distributions)
    after: dict[str, ParamDistribution] = {}
    for spec in state.catalog:
        dist = state.distributions[spec.name]
        new_base = refine_base(matrix, spec.name, dist.base)
        new_delta = refine_delta(dist.delta, eta)
        after[spec.name] = ParamDistribution(new_base, new_delta)

    if state.virtual_clock:
        # charge the simulated makespan of the analyze phase
        elapsed = _makespan([_outcome_duration(o) for o in outcomes], settings.num_process)
    else:
        elapsed = time.monotonic() - started

    record = IterationRecord(
        index=state.iteration,
        sampled_configs=tuple(configs),
        outcomes=tuple(outcomes),
        alarm_universe=matrix.alarms,
        completed=completed,
        eta_c=eta_c,
        eta=eta,
        distributions_before=before,
        distributions_after=after,
        elapsed=elapsed,
    )
    state.distributions = after
    state.remaining -= elapsed
    state.iteration += 1
    return record


def tune(
    program_ref: str,
    catalog: Catalog,
    settings: TunerSettings,
    analyzer: Analyzer,
    on_record: Callable[[IterationRecord], None] | None = None,
) -> TuneResult:
    """Drive iterations until the budget or iteration cap runs out.

    ``on_record`` is invoked after each iteration (e.g. to append and
    flush a trace file), before the next one starts.
    """
    state = TunerState(
        program_ref=program_ref,
        catalog=catalog,
        settings=settings,
        analyzer=analyzer,
        distributions=catalog.initial_distributions(),
        remaining=settings.time_budget,
    )
    rng = RandomStream(settings.seed)
    records: list[IterationRecord] = []
    best: BestSample | None = None
    started = time.monotonic()

    while state.remaining >= settings.min_slice:
        if settings.max_iterations is not None and state.iteration >= settings.max_iterations:
            break
        record = execute_iteration(state, rng)
        records.append(record)
        for config, outcome in zip(record.sampled_configs, record.outcomes):
            if isinstance(outcome, Completed):
                count = len(outcome.alarms)
                if best is None or count < best.alarm_count:
                    best = BestSample(
                        config=config,
                        alarm_count=count,
                        alarms=tuple(sorted(outcome.alarms)),
                    )
        if on_record is not None:
            on_record(record)

    if state.virtual_clock:
        wall_total = settings.time_budget - state.remaining
    else:
        wall_total = time.monotonic() - started
    recommended = Configuration(
        tuple((spec.name, state.distributions[spec.name].base) for spec in catalog)
    )
    return TuneResult(
        recommended_config=recommended,
        best_sampled=best,
        final_distributions=dict(state.distributions),
        iteration_trace=tuple(records),
        wall_time_total=wall_total,
    )
