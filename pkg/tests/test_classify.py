import math
import random
from fractions import Fraction

import pytest
import sympy as sp

from conforma.algebra import Elem, H, OutOfRange
from conforma.classify import (
    STAGES,
    ClosedForm,
    Specialization,
    build_ansatz,
    forward_verify,
    inverse_solve,
    matches_closed_form,
    normalize_basis,
    random_specialization,
    replay_stage,
    rescale,
    stored_pairs,
    table_from_values,
    window_sweep,
)
from conforma.lca import check_skew
from conforma.poly import Poly
import oracle


def hand_f(i, j, a, g1):
    if i == -1:
        return a[j]
    if j == -1:
        return -a[i]
    num = math.prod(a[k] for k in range(1, j + 1))
    den = math.prod(a[k] for k in range(i + 1, i + j + 1))
    return num / den * Fraction(math.factorial(i + j + 1), math.factorial(i + 1) * math.factorial(j + 1)) * (j - i) * g1


def sympy_closed_rule(N, al, be, g1, a):
    """The closed-form table written out independently for the oracle."""

    def rule(g, h):
        gi = None if g == "L" else int(g[2:])
        hi = None if h == "L" else int(h[2:])
        if gi is None and hi is None:
            return {"L": oracle.d + 2 * oracle.l}
        if gi is None:
            return {h: oracle.d + (hi * al - hi + 1) * oracle.l + hi * be}
        if hi is None:
            return oracle.skew_partner(rule(h, g))
        if gi == 0 and hi == 0:
            return {}
        if gi == 0:
            return {h: sp.Integer(hi) * g1}
        if hi == 0:
            return {g: sp.Integer(-gi) * g1}
        if gi == hi:
            return {}
        if gi + hi > N:
            raise LookupError(g, h)
        return {f"H_{gi + hi}": sp.Rational(hand_f(gi, hi, a, g1))}

    return rule


SPEC = Specialization(Fraction(3), Fraction(-2, 3), Fraction(5, 2), {1: Fraction(2), 2: Fraction(-1, 3), 3: Fraction(7), 4: Fraction(3, 5)})


# ------------------------------------------------------------ closed form


def test_closed_form_against_hand_formula():
    cf = ClosedForm.numeric(4, SPEC.alpha1, SPEC.beta1, SPEC.gamma1, SPEC.a)
    for i, j in stored_pairs(4):
        assert cf.f(i, j) == Poly.const(hand_f(i, j, SPEC.a, SPEC.gamma1))
    # f_{1,2} = (a_1 a_2 / (a_2 a_3)) * 4!/(2! 3!) * 1 * gamma1
    assert cf.f(1, 2) == Poly.const(Fraction(2, 7) * 2 * Fraction(5, 2))


def test_forward_verify_symbolic():
    rep = forward_verify(ClosedForm.symbolic(4))
    assert rep.ok and rep.triples > 100 and rep.skipped > 0


def test_closed_form_passes_oracle_jacobi():
    N = 3
    rule = sympy_closed_rule(N, sp.Integer(3), sp.Rational(-2, 3), sp.Rational(5, 2), SPEC.a)
    names = oracle.hv_window(N)
    checked = 0
    for a in names:
        for b in names:
            for c in names:
                try:
                    r = oracle.jacobi(rule, a, b, c)
                except LookupError:
                    continue
                assert r == {}, (a, b, c)
                checked += 1
    assert checked > 50


def test_perturbed_entry_breaks_jacobi():
    A = ClosedForm.numeric(4, SPEC.alpha1, SPEC.beta1, SPEC.gamma1, SPEC.a).table()
    A._table[(H(1), H(2))] = A._table[(H(1), H(2))] + Elem.gen(H(3), 1)
    rep = window_sweep(A)
    assert not rep.ok
    bad = {frozenset(t) for t, _ in rep.failures}
    assert frozenset((H(-1), H(1), H(2))) in bad


def test_zero_gamma_rejected():
    cf = ClosedForm.numeric(2, 1, 0, 0, {1: 1, 2: 1})
    with pytest.raises(ZeroDivisionError):
        cf.table()


def test_skew_partner_is_structural():
    A = ClosedForm.symbolic(3).table()
    for g in A.generators():
        for h in A.generators():
            try:
                assert check_skew(A, g, h).is_zero()
            except OutOfRange:
                assert A.grade(g) + A.grade(h) > 3


# ---------------------------------------------------------- inverse solve


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_inverse_solve_unique_and_closed(seed):
    res = inverse_solve(4, 2, seed=seed)
    assert res.status == "UNIQUE"
    an = build_ansatz(4, 2)
    s = res.spec
    cf = ClosedForm.numeric(4, s.alpha1, s.beta1, s.gamma1, s.a)
    assert matches_closed_form(res.families[0], cf, an)
    assert "gamma_-1 != 0" in res.consumed


def test_inverse_solve_small_window_relations():
    spec = Specialization(Fraction(5, 3), Fraction(2), Fraction(1), {1: Fraction(1), 2: Fraction(1)})
    (fam,) = inverse_solve(2, 2, spec).families
    v = fam.values
    assert v["al_m1"] + v["al_1"] == Poly.const(2)
    assert v["be_m1"] + v["be_1"] == Poly()


def test_dropping_nonvanishing_gives_degenerate_branch():
    res = inverse_solve(3, 2, seed=2, drop_nonzero=[2])
    assert len(res.families) > 1
    assert any(f.values["f_m1_2_0_0"].is_zero() for f in res.families)


# ------------------------------------------------------------- normalize


def test_normalize_unit_scalars_is_verbatim():
    n = normalize_basis(ClosedForm.numeric(4, 2, 1, 1, {i: 1 for i in range(1, 5)}).table())
    assert n.ok and n.alpha == Poly.const(2) and n.beta == Poly.const(1)
    assert n.scales[H(0)] == Poly.const(1) and n.scales[H(3)] == Poly.const(24)


@pytest.mark.parametrize("seed", [4, 5, 6])
def test_normalize_random_solution(seed):
    res = inverse_solve(4, 2, seed=seed)
    an = build_ansatz(4, 2)
    n = normalize_basis(table_from_values(an, res.families[0].values))
    assert n.ok
    assert n.alpha == Poly.const(res.spec.alpha1) and n.beta == Poly.const(res.spec.beta1)


def test_rescale_round_trip():
    A = ClosedForm.numeric(3, 2, 1, 3, {1: 2, 2: 5, 3: -1}).table()
    rng = random.Random(0)
    s = {g: Poly.const(Fraction(rng.randint(1, 9), rng.randint(1, 4))) for g in A.generators()}
    inv = {g: Poly.const(1 / p.constant_value()) for g, p in s.items()}
    B = rescale(rescale(A, s), inv)
    assert B._table == A._table


def test_normalize_rejects_zero_gamma():
    an = build_ansatz(2, 1)
    vals = {u: Poly() for u in an.unknowns}
    with pytest.raises(ZeroDivisionError):
        normalize_basis(table_from_values(an, vals))


# ---------------------------------------------------------------- replays


@pytest.mark.parametrize("stage", STAGES)
def test_replays_hold(stage):
    rep = replay_stage(stage, 2, 4, seed=3)
    assert rep.holds
    assert rep.consumed


def test_scalar_replay_conclusions():
    rep = replay_stage("scalars", 2, 4)
    assert all("NOT" not in c for c in rep.conclusions)
    assert any(c.startswith("beta_-1 = -1 beta_1") for c in rep.conclusions)


def test_replay_rejects_degree_one():
    with pytest.raises(ValueError):
        replay_stage("ratios", 1)
    with pytest.raises(ValueError):
        replay_stage("nope")


def test_random_specialization_nonzero():
    rng = random.Random(9)
    for _ in range(20):
        s = random_specialization(4, rng)
        assert s.gamma1 and s.alpha1 and all(s.a.values())
