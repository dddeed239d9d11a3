"""Base-point refinement against an independent brute-force oracle."""

from __future__ import annotations

import random
from functools import reduce

import pytest

from strategy_tuner import (
    BitsKind,
    BitsVal,
    BoolKind,
    BoolVal,
    IntKind,
    IntVal,
    MatrixRow,
    ResultMatrix,
    join,
    leq,
    meet,
    refine_base,
    top,
)
from strategy_tuner.lattice import kind_of


def oracle_refine_base(matrix: ResultMatrix, param: str, current_base):
    """Re-derivation of the meet-and-join rule in a functional style.

    For each alarm, the set of sampled values whose analysis eliminated
    it; a column contributes the meet of that set unless it is empty or
    the meet equals top. The result folds join over the contributions,
    seeded with the current base.
    """
    values = matrix.values_per_param[param]
    top_elem = top(kind_of(current_base))
    contributions = []
    for j in range(len(matrix.alarms)):
        eliminators = [values[i] for i, row in enumerate(matrix.rows) if not row.produced[j]]
        if not eliminators:
            continue
        lowest = reduce(meet, eliminators)
        if lowest != top_elem:
            contributions.append(lowest)
    return reduce(join, contributions, current_base)


def slevel_worked_matrix() -> ResultMatrix:
    """Five completed analyses over four alarms; the sixth analysis
    failed and is excluded. True marks a produced alarm."""
    produced = [
        (False, False, True, True),  # value 58
        (False, False, True, True),  # value 103
        (False, False, False, True),  # value 104
        (False, False, False, True),  # value 1000
        (False, True, True, True),  # value 9
    ]
    return ResultMatrix(
        alarms=("alarm-1", "alarm-2", "alarm-3", "alarm-4"),
        rows=tuple(MatrixRow(i, row) for i, row in enumerate(produced)),
        values_per_param={
            "slevel": (IntVal(58), IntVal(103), IntVal(104), IntVal(1000), IntVal(9))
        },
    )


class TestWorkedExample:
    def test_refines_zero_to_104(self):
        matrix = slevel_worked_matrix()
        assert refine_base(matrix, "slevel", IntVal(0)) == IntVal(104)

    def test_high_base_retained(self):
        matrix = slevel_worked_matrix()
        assert refine_base(matrix, "slevel", IntVal(200)) == IntVal(200)

    def test_matches_oracle(self):
        matrix = slevel_worked_matrix()
        for base in (IntVal(0), IntVal(60), IntVal(200)):
            assert refine_base(matrix, "slevel", base) == oracle_refine_base(
                matrix, "slevel", base
            )


class TestEdgeCases:
    def test_all_alarms_produced_everywhere(self):
        matrix = ResultMatrix(
            alarms=("a", "b"),
            rows=(MatrixRow(0, (True, True)), MatrixRow(1, (True, True))),
            values_per_param={"p": (IntVal(3), IntVal(7))},
        )
        assert refine_base(matrix, "p", IntVal(1)) == IntVal(1)

    def test_no_completed_analyses(self):
        matrix = ResultMatrix(alarms=(), rows=(), values_per_param={"p": ()})
        assert refine_base(matrix, "p", IntVal(5)) == IntVal(5)

    def test_missing_value_vector(self):
        matrix = slevel_worked_matrix()
        with pytest.raises(ValueError):
            refine_base(matrix, "nonexistent", IntVal(0))

    def test_boolean_top_meet_is_skipped(self):
        # the only eliminating analysis used the top value; the rule must
        # not snap the base to top
        matrix = ResultMatrix(
            alarms=("a",),
            rows=(MatrixRow(0, (False,)), MatrixRow(1, (True,))),
            values_per_param={"p": (BoolVal(True), BoolVal(False))},
        )
        assert refine_base(matrix, "p", BoolVal(False)) == BoolVal(False)
        assert oracle_refine_base(matrix, "p", BoolVal(False)) == BoolVal(False)


def _random_matrix(rng: random.Random, kind) -> ResultMatrix:
    m = rng.randint(0, 6)
    n = rng.randint(0, 5)
    if isinstance(kind, IntKind):
        values = tuple(IntVal(rng.randint(0, 20)) for _ in range(m))
    elif isinstance(kind, BoolKind):
        values = tuple(BoolVal(rng.random() < 0.5) for _ in range(m))
    else:
        values = tuple(
            BitsVal(tuple(rng.random() < 0.5 for _ in range(5))) for _ in range(m)
        )
    rows = tuple(
        MatrixRow(i, tuple(rng.random() < 0.5 for _ in range(n))) for i in range(m)
    )
    return ResultMatrix(alarms=tuple(f"a{j}" for j in range(n)), rows=rows, values_per_param={"p": values})


def _random_base(rng: random.Random, kind):
    if isinstance(kind, IntKind):
        return IntVal(rng.randint(0, 20))
    if isinstance(kind, BoolKind):
        return BoolVal(rng.random() < 0.5)
    return BitsVal(tuple(rng.random() < 0.5 for _ in range(5)))


KINDS = (IntKind(), BoolKind(), BitsKind(5))


class TestRandomizedOracleEquivalence:
    def test_matches_brute_force(self):
        rng = random.Random(20240901)
        for trial in range(300):
            kind = KINDS[trial % 3]
            matrix = _random_matrix(rng, kind)
            base = _random_base(rng, kind)
            assert refine_base(matrix, "p", base) == oracle_refine_base(matrix, "p", base)

    def test_monotone_in_base(self):
        rng = random.Random(77)
        for trial in range(300):
            kind = KINDS[trial % 3]
            matrix = _random_matrix(rng, kind)
            base = _random_base(rng, kind)
            assert leq(base, refine_base(matrix, "p", base))

    def test_row_and_column_permutation_invariance(self):
        rng = random.Random(123)
        for trial in range(150):
            kind = KINDS[trial % 3]
            matrix = _random_matrix(rng, kind)
            base = _random_base(rng, kind)
            expected = refine_base(matrix, "p", base)

            row_order = list(range(matrix.num_rows))
            col_order = list(range(matrix.num_alarms))
            rng.shuffle(row_order)
            rng.shuffle(col_order)
            values = matrix.values_per_param["p"]
            shuffled = ResultMatrix(
                alarms=tuple(matrix.alarms[j] for j in col_order),
                rows=tuple(
                    MatrixRow(
                        matrix.rows[i].config_index,
                        tuple(matrix.rows[i].produced[j] for j in col_order),
                    )
                    for i in row_order
                ),
                values_per_param={"p": tuple(values[i] for i in row_order)},
            )
            assert refine_base(shuffled, "p", base) == expected


class TestMatrixValidation:
    def test_row_width_mismatch(self):
        with pytest.raises(ValueError):
            ResultMatrix(
                alarms=("a", "b"),
                rows=(MatrixRow(0, (True,)),),
                values_per_param={},
            )

    def test_value_vector_length_mismatch(self):
        with pytest.raises(ValueError):
            ResultMatrix(
                alarms=("a",),
                rows=(MatrixRow(0, (True,)),),
                values_per_param={"p": ()},
            )
