import random

import pytest
from hypothesis import given, strategies as st

from conforma.algebra import (
    Elem,
    Gen,
    H,
    L,
    OutOfRange,
    algebra_from_spec,
    algebra_to_spec,
    builtin,
    make_cur,
    make_gc_n,
    make_hv,
    make_hv_ab,
    make_vir,
)
from conforma.lca import (
    INCONCLUSIVE,
    NILPOTENT,
    NOT_NILPOTENT,
    bracket,
    check_jacobi,
    check_sesquilinear,
    check_skew,
    derived_products_span_check,
    grade_sweep,
    is_ideal_window,
    iterated_ad,
    jacobi_sweep,
    locally_nilpotent_window,
    random_low_element,
    random_top_element,
    skew_sweep,
)
from conforma.poly import D, LAM, Poly
import oracle

HVAB = make_hv_ab()
AL, BE = Poly.var("alpha"), Poly.var("beta")


def gen_elem(g, p=1):
    return Elem.gen(g, p)


# ------------------------------------------------------------ tables


def test_builtin_tables():
    assert bracket(make_vir(), L(), L()) == gen_elem(L(), D + 2 * LAM)
    assert bracket(HVAB, H(1), H(3)) == gen_elem(H(4), 2)
    assert bracket(HVAB, L(), H(2)) == gen_elem(H(2), D + (2 * AL - 1) * LAM + 2 * BE)
    hv = make_hv()
    assert bracket(hv, Gen("H"), L()) == gen_elem(Gen("H"), LAM)
    assert bracket(hv, L(), Gen("H")) == gen_elem(Gen("H"), D + LAM)


def test_sesquilinearity_examples():
    vir = make_vir()
    got = bracket(vir, gen_elem(L(), D), L())
    assert got == gen_elem(L(), -LAM * (D + 2 * LAM))
    got = bracket(HVAB, H(-1), L())
    assert got == gen_elem(H(-1), (1 - AL) * D + (2 - AL) * LAM + BE)
    got = bracket(HVAB, L(), gen_elem(H(0), D))
    assert got == gen_elem(H(0), (D + LAM) ** 2)


def test_skew_examples():
    assert check_skew(make_vir(), L(), L()).is_zero()
    assert check_skew(make_hv(), Gen("H"), Gen("H")).is_zero()
    assert check_skew(HVAB, L(), H(2)).is_zero()


def test_jacobi_examples():
    assert check_jacobi(make_hv(), Gen("H"), Gen("H"), Gen("H")).is_zero()
    assert check_jacobi(HVAB, L(), H(1), H(2)).is_zero()
    for i in range(-1, 9):
        assert check_jacobi(HVAB, L(), L(), H(i)).is_zero()


def test_out_of_range_generator():
    with pytest.raises(OutOfRange):
        bracket(HVAB, H(-2), L())


def test_make_cur_rejects_non_lie_constants():
    bad = {("x", "y"): {"x": 1}, ("y", "x"): {"x": 1}}
    with pytest.raises(ValueError):
        make_cur(["x", "y"], bad)


def test_sl2_constants_are_lie():
    A = builtin("cur_sl2")
    assert {str(g) for g in A.generators()} == {"e", "f", "h"}


# ------------------------------------------------------------ sweeps


@pytest.mark.parametrize("name", ["vir", "cur_sl2", "vir_cur_sl2", "hv"])
def test_finite_builtins_pass(name):
    A = builtin(name)
    assert skew_sweep(A).ok
    assert jacobi_sweep(A).ok


def test_hv_ab_symbolic_window():
    assert skew_sweep(HVAB, 5).ok
    assert jacobi_sweep(HVAB, 4).ok
    assert grade_sweep(HVAB, 6).ok


@pytest.mark.parametrize("N", [1, 2])
def test_gc_n_small_window(N):
    A = make_gc_n(N)
    assert skew_sweep(A, 2).ok
    assert jacobi_sweep(A, 1 if N == 2 else 2).ok


def test_gc_1_bracket_values():
    A = make_gc_n(1)
    J = lambda n: Gen("J", (n, 0, 0))
    # [J^1_l J^0] = (l + d) J^0 + J^1 - J^1
    assert bracket(A, J(1), J(0)) == gen_elem(J(0), LAM + D)
    assert bracket(A, J(0), J(1)) == gen_elem(J(0), LAM)


def test_broken_table_fails_jacobi_not_skew():
    spec = {
        "name": "broken",
        "parameters": [],
        "generators": [{"family": "L", "grade-range": None}],
        "brackets": [{"lhs": "L", "rhs": "L", "value": [{"gen": "L", "poly": "(d + 2*l)^3"}]}],
    }
    A = algebra_from_spec(spec)
    assert skew_sweep(A).ok
    sw = jacobi_sweep(A)
    assert not sw.ok
    (tup, res), = sw.failures
    rule = lambda g, h: {"L": (oracle.d + 2 * oracle.l) ** 3}
    assert oracle.from_json(res.to_json()) == oracle.jacobi(rule, "L", "L", "L")


def test_spec_round_trip():
    for A in (make_vir(), make_hv(), builtin("cur_sl2")):
        B = algebra_from_spec(algebra_to_spec(A))
        for g in A.generators():
            for h in A.generators():
                assert A.table(g, h) == B.table(g, h)


def test_windowed_spec_round_trip():
    spec = algebra_to_spec(HVAB, 3)
    B = algebra_from_spec(spec)
    assert B.params == ["alpha", "beta"] or tuple(B.params) == ("alpha", "beta")
    for g in HVAB.generators(3):
        for h in HVAB.generators(3):
            k = HVAB.table(g, h)
            if all(HVAB.grade(s) <= 3 for s in k.support()):
                assert B.table(g, h) == k


# ------------------------------------------------- oracle agreement


def test_hv_ab_axioms_match_oracle():
    rule = oracle.hv_ab_table()
    gens = oracle.hv_window(3)
    for a in gens:
        for b in gens:
            assert oracle.skew(rule, a, b) == {}
    for a, b, c in [("L", "L", "H_2"), ("L", "H_-1", "H_1"), ("H_-1", "H_1", "H_2"), ("L", "H_1", "H_2")]:
        assert oracle.jacobi(rule, a, b, c) == {}


names = st.sampled_from(["L", "H_-1", "H_0", "H_1", "H_2", "H_3"])
coeffs = st.lists(st.integers(-3, 3), min_size=1, max_size=3)


@st.composite
def elements(draw):
    e, se = Elem(), {}
    for _ in range(draw(st.integers(1, 3))):
        g = draw(names)
        cs = draw(coeffs)
        p = sum((c * D**k for k, c in enumerate(cs)), Poly())
        e = e + Elem.gen(Gen.parse(g), p)
        se[g] = se.get(g, 0) + sum(c * oracle.d**k for k, c in enumerate(cs))
    return e, oracle.clean(se)


@given(elements(), elements())
def test_bracket_matches_oracle(x, y):
    (e1, s1), (e2, s2) = x, y
    got = oracle.from_json(bracket(HVAB, e1, e2).to_json())
    assert got == oracle.bracket(oracle.hv_ab_table(), s1, s2)


@given(elements(), elements(), st.integers(-3, 3))
def test_bilinear(x, y, c):
    (a, _), (b, _) = x, y
    assert bracket(HVAB, a.scale(c) + b, b) == bracket(HVAB, a, b).scale(c) + bracket(HVAB, b, b)


@given(elements(), elements())
def test_sesquilinear_rules(x, y):
    left, right = check_sesquilinear(HVAB, x[0], y[0])
    assert left.is_zero() and right.is_zero()


@given(elements(), elements(), st.integers(0, 3))
def test_iterated_ad_recursion(x, y, k):
    a, b = x[0], y[0]
    assert iterated_ad(HVAB, a, b, k + 1) == bracket(HVAB, a, iterated_ad(HVAB, a, b, k))


# ------------------------------------------------------ ideals


def test_ideal_examples():
    ok, _ = is_ideal_window(HVAB, lambda g: g.family == "H", 8)
    assert ok
    ok, _ = is_ideal_window(make_hv(), lambda g: g.family == "H")
    assert ok
    ok, _ = is_ideal_window(make_vir(), lambda g: True)
    assert ok


def test_abelian_ideal_certificates():
    assert derived_products_span_check(make_hv(), [Gen("H")])[0]
    assert not derived_products_span_check(make_vir(), [L()])[0]
    assert not derived_products_span_check(builtin("cur_sl2"), [Gen("e")])[0]
    with pytest.raises(ValueError):
        derived_products_span_check(HVAB, [H(0)])


# ------------------------------------------------------ nilpotency


def test_iterated_ad_examples():
    assert iterated_ad(HVAB, H(-1), H(0), 1) == gen_elem(H(-1), 1)
    assert iterated_ad(HVAB, H(-1), H(0), 2).is_zero()
    assert iterated_ad(HVAB, H(1), H(2), 3) == gen_elem(H(5), 1 * 2 * 3)
    assert iterated_ad(HVAB, H(-1), L(), 2).is_zero()


def test_nilpotency_examples():
    A = make_hv_ab(2, 1)
    x = gen_elem(H(-1), 3 * D**2 + 1)
    assert locally_nilpotent_window(A, x, 6, 10).verdict == NILPOTENT
    v = locally_nilpotent_window(A, H(1), 6, 10)
    assert v.verdict == NOT_NILPOTENT and v.witness == H(2)
    assert locally_nilpotent_window(A, L(), 6, 10).verdict == NOT_NILPOTENT


def test_nilpotency_random_classes():
    rng = random.Random(11)
    for _ in range(5):
        assert locally_nilpotent_window(HVAB, random_low_element(rng), 6, 12).verdict == NILPOTENT
        v = locally_nilpotent_window(HVAB, random_top_element(rng), 6, 12)
        assert v.verdict == NOT_NILPOTENT and v.witness is not None


def test_nilpotency_without_certificate_is_inconclusive():
    assert locally_nilpotent_window(make_gc_n(1), Gen("J", (1, 0, 0)), 2, 3).verdict == INCONCLUSIVE
