import pytest

from conforma.algebra import Elem, Gen, H, L, make_hv, make_hv_ab, make_vir
from conforma.coeffalg import (
    RELABEL,
    ModeAlgebra,
    Modes,
    ClosedModeTable,
    annihilation_closed,
    check_lie,
    check_partial_derivation,
    crosscheck_annihilation,
    derive_relabeling,
    extended_partial,
    hv_ab_annihilation_bracket,
    jth_products,
    mode_basis,
    mode_bracket,
    closed_basis,
)
from conforma.poly import D, Poly

AL, BE = Poly.var("alpha"), Poly.var("beta")
HVAB = make_hv_ab()


def M(g, n, c=1):
    return Modes.mode(g, n, c)


def test_jth_products_examples():
    assert jth_products(make_vir(), L(), L()) == [(0, Elem.gen(L(), D)), (1, Elem.gen(L(), 2))]
    i = 3
    got = jth_products(HVAB, L(), H(i))
    assert got == [(0, Elem.gen(H(i), D + i * BE)), (1, Elem.gen(H(i), i * AL - i + 1))]
    assert jth_products(make_hv(), Gen("H"), Gen("H")) == []


def test_mode_bracket_examples():
    assert mode_bracket(make_vir(), M(L(), 1), M(L(), 2)) == M(L(), 2, -1)
    assert mode_bracket(make_hv(), M(Gen("H"), 2), M(Gen("H"), 3)).is_zero()
    assert mode_bracket(HVAB, M(H(-1), 0), M(H(1), 0)) == M(H(0), 0, 2)


def test_extended_partial_examples():
    assert extended_partial(M(L(), 3)) == M(L(), 2, -3)
    assert extended_partial(M(L(), 0)).is_zero()
    x = M(H(1), 2, 2) + M(H(2), 1)
    assert extended_partial(x) == M(H(1), 1, -4) + M(H(2), 0, -1)


def test_closed_table_examples():
    got = hv_ab_annihilation_bracket((L(), 1), (H(2), 0))
    assert got == M(H(2), 1, 4 * AL - 4) + M(H(2), 2, 2 * BE)
    assert hv_ab_annihilation_bracket((H(1), 2), (H(3), 0)) == M(H(4), 2, 2)
    assert hv_ab_annihilation_bracket((L(), 0), (L(), 0)).is_zero()


def test_witt_against_hand_formula():
    lie = ModeAlgebra(make_vir())
    for m in range(-2, 6):
        for n in range(-2, 6):
            # [L_(m), L_(n)] = (m - n) L_(m+n-1)
            assert lie.basis_bracket((L(), m), (L(), n)) == M(L(), m + n - 1, m - n)
    t = ClosedModeTable()
    for m in range(-1, 5):
        for n in range(-1, 5):
            assert t.basis_bracket((L(), m), (L(), n)) == M(L(), m + n, m - n)


def test_hv_ab_modes_against_hand_formula():
    # from [L_l H_i] = (d + c l + i beta) H_i with c = i alpha - i + 1:
    # [L_(m), H_i(n)] = (m (c - 1) - n) H_i(m+n-1) + i beta H_i(m+n)
    lie = ModeAlgebra(HVAB)
    for i in range(-1, 4):
        c = i * AL - i + 1
        for m in range(0, 5):
            for n in range(0, 5):
                want = M(H(i), m + n - 1, m * (c - 1) - n) + M(H(i), m + n, i * BE)
                assert lie.basis_bracket((L(), m), (H(i), n)) == want


def test_crosscheck_matches_at_pinned_relabel():
    rep = crosscheck_annihilation(HVAB, 4, 4)
    assert rep.match and rep.checked > 0


def test_off_by_one_relabel_mismatches():
    rep = crosscheck_annihilation(HVAB, 2, 2, shifts={"L": 0, "H": 0})
    assert not rep.match
    assert rep.to_json()["status"] == "MISMATCH"


def test_relabeling_is_unique():
    assert derive_relabeling(HVAB) == [RELABEL]


@pytest.mark.parametrize("A", [make_vir(), make_hv(), HVAB], ids=["vir", "hv", "hv_ab"])
def test_mode_algebra_is_lie(A):
    basis = mode_basis(A, 3, 3)
    assert check_lie(ModeAlgebra(A), basis).ok
    assert check_partial_derivation(A, basis) == []
    assert annihilation_closed(A, basis)


def test_closed_table_is_lie():
    assert check_lie(ClosedModeTable(), closed_basis(3, 3)).ok


def test_check_lie_detects_broken_table():
    class Bad(ClosedModeTable):
        def basis_bracket(self, a, b):
            out = super().basis_bracket(a, b)
            if a == (L(), 0) and b == (H(1), 0):
                out = out + M(H(1), 0)
            return out

    assert not check_lie(Bad(), closed_basis(1, 1)).ok
