from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from conforma.linalg import RHS, Inconsistent, check_certificate, nullspace, rank, solve_affine, span_contains

COLS = ["x0", "x1", "x2", "x3", "x4"]

small = st.fractions(min_value=-4, max_value=4, max_denominator=3)
rows_st = st.lists(st.lists(small, min_size=len(COLS), max_size=len(COLS)), min_size=1, max_size=5)


def as_rows(mat):
    return [{c: v for c, v in zip(COLS, r) if v} for r in mat]


def as_vec(v):
    return [v.get(c, Fraction(0)) for c in COLS]


@given(rows_st)
def test_nullspace_against_sympy(mat):
    basis = nullspace(as_rows(mat), COLS)
    M = sp.Matrix(mat)
    assert len(basis) == len(M.nullspace())
    for b in basis:
        assert M * sp.Matrix(as_vec(b)) == sp.zeros(len(mat), 1)
    assert rank(as_rows(mat)) == M.rank()


@given(rows_st, st.lists(small, min_size=5, max_size=5))
def test_affine_solution_or_certificate(mat, rhs):
    rows = as_rows(mat)
    for r, b in zip(rows, rhs):
        if b:
            r[RHS] = b
    M = sp.Matrix(mat)
    aug = M.row_join(sp.Matrix(rhs[: len(mat)]))
    try:
        part, basis = solve_affine(rows, COLS)
    except Inconsistent as exc:
        assert aug.rank() > M.rank()
        assert check_certificate(rows, exc.certificate)
        return
    assert aug.rank() == M.rank()
    assert M * sp.Matrix(as_vec(part)) == sp.Matrix(rhs[: len(mat)])
    assert len(basis) == len(COLS) - M.rank()


def test_inconsistent_pair():
    rows = [{"x": Fraction(1), RHS: Fraction(1)}, {"x": Fraction(2), RHS: Fraction(3)}]
    with pytest.raises(Inconsistent) as exc:
        solve_affine(rows, ["x"])
    assert check_certificate(rows, exc.value.certificate)


def test_span_contains():
    basis = [{"a": Fraction(1), "b": Fraction(1)}, {"c": Fraction(2)}]
    assert span_contains(basis, {"a": Fraction(3), "b": Fraction(3), "c": Fraction(1)})
    assert not span_contains(basis, {"a": Fraction(1)})
    assert span_contains([], {})
