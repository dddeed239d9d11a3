"""Composite parameter distributions and their refinement operators.

Each parameter is a pair of random variables combined as base (+) delta:
the base is a Dirac point holding everything learned so far, the delta is
the stochastic exploration component (Poisson for integers, Bernoulli for
booleans, an independent Bernoulli per bit for vectors). Sampling never
falls below the base, so accumulated knowledge is preserved.

Refinement has two halves:

* the base moves up the lattice by joining, per alarm, the meet of all
  sampled values whose analysis eliminated that alarm (``refine_base``);
* the delta is scaled by the completion-rate factor eta, growing
  exploration when analyses finish and shrinking it when they time out
  (``refine_delta`` / ``scaling_factor``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .errors import InvalidSettingsError
from .lattice import (
    INT_CEILING,
    BitsVal,
    BoolVal,
    IntVal,
    LatticeValue,
    join,
    kind_of,
    leq,
    meet,
    saturating_add,
    top,
)
from .rng import RandomStream

#: Cap applied to Poisson rates during refinement so repeated eta > 1
#: scaling cannot diverge.
LAMBDA_CAP = 100_000.0


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self) -> None:
        if not (self.lam >= 0.0):
            raise ValueError(f"Poisson rate must be nonnegative, got {self.lam!r}")


@dataclass(frozen=True)
class Bernoulli:
    q: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.q <= 1.0):
            raise ValueError(f"Bernoulli parameter must lie in [0, 1], got {self.q!r}")


@dataclass(frozen=True)
class BernoulliVector:
    qs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.qs) == 0:
            raise ValueError("Bernoulli vectors must have positive width")
        if not all(0.0 <= q <= 1.0 for q in self.qs):
            raise ValueError(f"Bernoulli parameters must lie in [0, 1], got {self.qs!r}")

    @property
    def width(self) -> int:
        return len(self.qs)


DeltaDistribution = Union[Poisson, Bernoulli, BernoulliVector]


def _check_pairing(base: LatticeValue, delta: DeltaDistribution) -> None:
    ok = (
        (isinstance(base, IntVal) and isinstance(delta, Poisson))
        or (isinstance(base, BoolVal) and isinstance(delta, Bernoulli))
        or (
            isinstance(base, BitsVal)
            and isinstance(delta, BernoulliVector)
            and base.width == delta.width
        )
    )
    if not ok:
        raise ValueError(
            f"base {type(base).__name__} does not pair with delta {type(delta).__name__}"
        )


@dataclass(frozen=True)
class ParamDistribution:
    """Dirac base point plus exploration delta for one parameter."""

    base: LatticeValue
    delta: DeltaDistribution

    def __post_init__(self) -> None:
        _check_pairing(self.base, self.delta)


def sample_poisson(lam: float, rng: RandomStream, ceiling: int = INT_CEILING) -> int:
    """Draw from Poisson(lam), capped at the saturation ceiling.

    Uses inversion by sequential search for rates below 30; larger rates
    are split into sub-30 chunks and the draws summed (a sum of
    independent Poissons is Poisson of the summed rate). Exact up to
    float rounding, with no rejection-method edge cases.
    """
    if lam < 0:
        raise ValueError(f"Poisson rate must be nonnegative, got {lam!r}")
    if lam == 0:
        return 0
    total = 0
    remaining = lam
    while remaining >= 30.0:
        total += _poisson_sequential(29.0, rng)
        remaining -= 29.0
        if total >= ceiling:
            return ceiling
    total += _poisson_sequential(remaining, rng)
    return min(total, ceiling)


def _poisson_sequential(lam: float, rng: RandomStream) -> int:
    u = rng.random()
    p = math.exp(-lam)
    cdf = p
    k = 0
    # The cdf accumulates to 1 - epsilon; the hard bound guards against
    # a float plateau below u once p underflows.
    limit = int(lam + 40.0 * math.sqrt(lam) + 100.0)
    while u > cdf and k < limit:
        k += 1
        p *= lam / k
        cdf += p
    return k


def sample_delta(delta: DeltaDistribution, rng: RandomStream) -> "int | bool | tuple[bool, ...]":
    if isinstance(delta, Poisson):
        return sample_poisson(delta.lam, rng)
    if isinstance(delta, Bernoulli):
        return rng.random() < delta.q
    return tuple(rng.random() < q for q in delta.qs)


def sample_param(dist: ParamDistribution, rng: RandomStream) -> LatticeValue:
    """Draw base (+) delta: saturating add, or, pointwise or.

    The result always dominates the base point.
    """
    draw = sample_delta(dist.delta, rng)
    base = dist.base
    if isinstance(base, IntVal):
        return saturating_add(base, draw)  # type: ignore[arg-type]
    if isinstance(base, BoolVal):
        return BoolVal(base.value or draw)  # type: ignore[arg-type]
    assert isinstance(base, BitsVal)
    return BitsVal(tuple(b or d for b, d in zip(base.bits, draw)))  # type: ignore[arg-type]


@dataclass(frozen=True)
class MatrixRow:
    """One completed analysis: which alarms of the universe it produced."""

    config_index: int
    produced: tuple[bool, ...]


@dataclass(frozen=True)
class ResultMatrix:
    """Per-iteration intermediate results over the alarm universe.

    Rows cover only analyses that completed; ``values_per_param`` holds,
    for each parameter, the sampled value used by each row.
    """

    alarms: tuple[str, ...]
    rows: tuple[MatrixRow, ...]
    values_per_param: dict[str, tuple[LatticeValue, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.alarms)
        for row in self.rows:
            if len(row.produced) != n:
                raise ValueError(
                    f"row for config {row.config_index} has {len(row.produced)} cells, expected {n}"
                )
        m = len(self.rows)
        for name, values in self.values_per_param.items():
            if len(values) != m:
                raise ValueError(f"value vector for {name!r} has {len(values)} entries, expected {m}")

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def num_alarms(self) -> int:
        return len(self.alarms)


def refine_base(
    matrix: ResultMatrix, param: str, current_base: LatticeValue
) -> LatticeValue:
    """Move the base point up to cover every alarm eliminated this round.

    For each alarm column, take the meet of the sampled values across all
    rows that did NOT produce the alarm (the least precise setting that
    still eliminated it); join every such meet into the base. Columns
    where no row eliminated the alarm contribute nothing. The result
    always dominates ``current_base``; with no completed rows it is
    returned unchanged.
    """
    values = matrix.values_per_param.get(param, ())
    if len(values) != matrix.num_rows:
        raise ValueError(f"no value vector for parameter {param!r}")
    top_elem = top(kind_of(current_base))
    acc = current_base
    for j in range(matrix.num_alarms):
        tmp = top_elem
        for i, row in enumerate(matrix.rows):
            if not row.produced[j]:
                tmp = meet(tmp, values[i])
        if tmp != top_elem:
            acc = join(acc, tmp)
    return acc


def refine_delta(
    delta: DeltaDistribution, eta: float, lam_cap: float = LAMBDA_CAP
) -> DeltaDistribution:
    """Scale exploration by eta: lam * eta (capped), q -> 1 - (1-q)^eta."""
    if not (eta > 0.0):
        raise ValueError(f"scaling factor must be positive, got {eta!r}")
    if isinstance(delta, Poisson):
        return Poisson(min(delta.lam * eta, lam_cap))
    if isinstance(delta, Bernoulli):
        return Bernoulli(_scale_q(delta.q, eta))
    return BernoulliVector(tuple(_scale_q(q, eta) for q in delta.qs))


def _scale_q(q: float, eta: float) -> float:
    scaled = 1.0 - (1.0 - q) ** eta
    return min(max(scaled, 0.0), 1.0)


def scaling_factor(completed: int, num_sample: int) -> float:
    """eta = 2 * completion_rate + 1 / num_sample."""
    if num_sample < 1:
        raise InvalidSettingsError(f"num_sample must be positive, got {num_sample}")
    if not (0 <= completed <= num_sample):
        raise ValueError(f"completed must lie in [0, {num_sample}], got {completed}")
    return 2.0 * (completed / num_sample) + 1.0 / num_sample


def dominates(value: LatticeValue, lower: LatticeValue) -> bool:
    """True iff lower <= value in the lattice order."""
    return leq(lower, value)
