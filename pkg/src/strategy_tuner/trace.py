"""Newline-delimited trace and result serialization.

One JSON record per iteration, self-describing: every record carries a
schema version and the full before/after distributions, whose delta kind
fixes how the lattice literals in the same record parse back. A record
round-trips losslessly into an IterationRecord without a catalog.
"""

from __future__ import annotations

import json
from typing import Any, TextIO

from .analyzers import AnalysisOutcome, Completed, Crashed, TimedOut
from .distributions import Bernoulli, BernoulliVector, DeltaDistribution, ParamDistribution, Poisson
from .errors import ConfigParseError
from .lattice import (
    BitsKind,
    BoolKind,
    IntKind,
    Kind,
    LatticeValue,
    format_value,
    parse_value,
)
from .orchestrator import IterationRecord, TuneResult
from .paramspace import Configuration

SCHEMA_VERSION = 1


def delta_to_json(delta: DeltaDistribution) -> dict[str, Any]:
    if isinstance(delta, Poisson):
        return {"kind": "poisson", "lambda": delta.lam}
    if isinstance(delta, Bernoulli):
        return {"kind": "bernoulli", "q": delta.q}
    return {"kind": "bernoulli_vector", "qs": list(delta.qs)}


def delta_from_json(obj: dict[str, Any]) -> DeltaDistribution:
    kind = obj.get("kind")
    if kind == "poisson":
        return Poisson(float(obj["lambda"]))
    if kind == "bernoulli":
        return Bernoulli(float(obj["q"]))
    if kind == "bernoulli_vector":
        return BernoulliVector(tuple(float(q) for q in obj["qs"]))
    raise ConfigParseError(f"unknown delta kind {kind!r}")


def _kind_for_delta(delta: DeltaDistribution) -> Kind:
    if isinstance(delta, Poisson):
        return IntKind()
    if isinstance(delta, Bernoulli):
        return BoolKind()
    return BitsKind(delta.width)


def distribution_to_json(dist: ParamDistribution) -> dict[str, Any]:
    return {"base": format_value(dist.base), "delta": delta_to_json(dist.delta)}


def distribution_from_json(obj: dict[str, Any]) -> ParamDistribution:
    delta = delta_from_json(obj["delta"])
    base = parse_value(_kind_for_delta(delta), obj["base"])
    return ParamDistribution(base, delta)


def _config_to_json(config: Configuration) -> dict[str, str]:
    return {name: format_value(value) for name, value in config.entries}


def _config_from_json(obj: dict[str, str], kinds: dict[str, Kind]) -> Configuration:
    entries: list[tuple[str, LatticeValue]] = []
    for name, literal in obj.items():
        if name not in kinds:
            raise ConfigParseError(f"configuration names unknown parameter {name!r}")
        entries.append((name, parse_value(kinds[name], literal)))
    return Configuration(tuple(entries))


def outcome_to_json(outcome: AnalysisOutcome) -> dict[str, Any]:
    if isinstance(outcome, Completed):
        return {
            "status": "completed",
            "alarms": sorted(outcome.alarms),
            "wall_time": outcome.wall_time,
        }
    if isinstance(outcome, TimedOut):
        return {"status": "timed_out", "wall_time": outcome.wall_time}
    return {"status": "crashed", "exit_info": outcome.exit_info}


def outcome_from_json(obj: dict[str, Any]) -> AnalysisOutcome:
    status = obj.get("status")
    if status == "completed":
        return Completed(alarms=frozenset(obj["alarms"]), wall_time=float(obj["wall_time"]))
    if status == "timed_out":
        return TimedOut(wall_time=float(obj["wall_time"]))
    if status == "crashed":
        return Crashed(exit_info=str(obj["exit_info"]))
    raise ConfigParseError(f"unknown outcome status {status!r}")


def record_to_json(record: IterationRecord) -> dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "index": record.index,
        "sampled_configs": [_config_to_json(c) for c in record.sampled_configs],
        "outcomes": [outcome_to_json(o) for o in record.outcomes],
        "alarm_universe": list(record.alarm_universe),
        "completed": record.completed,
        "eta_c": record.eta_c,
        "eta": record.eta,
        "distributions_before": {
            name: distribution_to_json(d) for name, d in record.distributions_before.items()
        },
        "distributions_after": {
            name: distribution_to_json(d) for name, d in record.distributions_after.items()
        },
        "elapsed": record.elapsed,
    }


def record_from_json(obj: dict[str, Any]) -> IterationRecord:
    if obj.get("schema") != SCHEMA_VERSION:
        raise ConfigParseError(f"unsupported trace schema {obj.get('schema')!r}")
    before = {
        name: distribution_from_json(d) for name, d in obj["distributions_before"].items()
    }
    after = {
        name: distribution_from_json(d) for name, d in obj["distributions_after"].items()
    }
    kinds = {name: _kind_for_delta(dist.delta) for name, dist in before.items()}
    return IterationRecord(
        index=int(obj["index"]),
        sampled_configs=tuple(_config_from_json(c, kinds) for c in obj["sampled_configs"]),
        outcomes=tuple(outcome_from_json(o) for o in obj["outcomes"]),
        alarm_universe=tuple(obj["alarm_universe"]),
        completed=int(obj["completed"]),
        eta_c=float(obj["eta_c"]),
        eta=float(obj["eta"]),
        distributions_before=before,
        distributions_after=after,
        elapsed=float(obj["elapsed"]),
    )


def write_record(stream: TextIO, record: IterationRecord) -> None:
    """Append one record and flush, keeping partial traces readable."""
    stream.write(json.dumps(record_to_json(record)) + "\n")
    stream.flush()


def read_trace(text: str) -> list[IterationRecord]:
    """Parse a trace; errors name the first offending record index."""
    records: list[IterationRecord] = []
    for index, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        try:
            records.append(record_from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError, ConfigParseError) as exc:
            raise ConfigParseError(f"trace record {index} is malformed: {exc}")
    return records


def result_to_json(result: TuneResult) -> dict[str, Any]:
    best: dict[str, Any] | None = None
    if result.best_sampled is not None:
        best = {
            "config": _config_to_json(result.best_sampled.config),
            "alarm_count": result.best_sampled.alarm_count,
            "alarms": list(result.best_sampled.alarms),
        }
    return {
        "schema": SCHEMA_VERSION,
        "recommended_config": _config_to_json(result.recommended_config),
        "best_sampled": best,
        "final_distributions": {
            name: distribution_to_json(d) for name, d in result.final_distributions.items()
        },
        "iterations": len(result.iteration_trace),
        "wall_time_total": result.wall_time_total,
    }
