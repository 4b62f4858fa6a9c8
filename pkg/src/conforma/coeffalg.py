"""Coefficient algebra Lie(A), its annihilation part and the HV(alpha, beta) table.

Modes ``a_(n)`` are stored only for generators; ``(d a)_(n) = -n a_(n-1)``
is applied on the way in, so equality is plain dict comparison.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .algebra import Algebra, Elem, Gen, HVab
from .poly import ONE, ZERO, Poly

Mode = Tuple[Gen, int]

# Closed-table labels versus raw modes: L_m is L_(m+1), H_{i,m} is H_i(m).
# Found by derive_relabeling() and pinned here.
RELABEL = {"L": 1, "H": 0}


class Modes:
    """Finite combination of modes with coefficients polynomial in the parameters."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Optional[Mapping[Mode, object]] = None):
        self._c: Dict[Mode, Poly] = {}
        for k, v in (coeffs or {}).items():
            v = Poly._coerce(v)
            if v:
                self._c[k] = v

    @classmethod
    def mode(cls, g: Gen, n: int, coeff=ONE) -> "Modes":
        return cls({(g, n): coeff})

    def items(self):
        return sorted(self._c.items())

    def coeff(self, g: Gen, n: int) -> Poly:
        return self._c.get((g, n), ZERO)

    def is_zero(self):
        return not self._c

    __bool__ = lambda self: bool(self._c)

    def __eq__(self, other):
        if isinstance(other, Modes):
            return self._c == other._c
        if other == 0:
            return not self._c
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def __add__(self, other: "Modes") -> "Modes":
        out = dict(self._c)
        for k, v in other._c.items():
            s = out.get(k, ZERO) + v
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        m = Modes()
        m._c = out
        return m

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "Modes":
        c = Poly._coerce(c)
        return Modes({k: c * v for k, v in self._c.items()})

    def relabel(self, shifts: Mapping[str, int]) -> "Modes":
        """Raw modes to table labels: index n becomes n - shift[family]."""
        return Modes({(g, n - shifts.get(g.family, 0)): v for (g, n), v in self._c.items()})

    def __str__(self):
        if not self._c:
            return "0"
        return " + ".join(f"({v})*{g}({n})" for (g, n), v in self.items())

    __repr__ = __str__

    def to_json(self):
        return [{"gen": str(g), "mode": n, "coeff": str(v)} for (g, n), v in self.items()]


def gen_binom(m: int, j: int) -> int:
    """m choose j for any integer m and j >= 0."""
    num = 1
    for k in range(j):
        num *= m - k
    return num // factorial(j)


def falling(n: int, r: int) -> int:
    out = 1
    for k in range(r):
        out *= n - k
    return out


def jth_products(A: Algebra, x: Gen, y: Gen) -> List[Tuple[int, Elem]]:
    """Nonzero ``x_(j) y = j! * coefficient of l^j`` in [x_l y]."""
    val = A.table(x, y)
    top = max((p.degree("l") for _, p in val.items()), default=-1)
    out = []
    for j in range(top + 1):
        e = val.map(lambda p: p.coeff_of("l", j) * factorial(j))
        if not e.is_zero():
            out.append((j, e))
    return out


def elem_mode(e: Elem, n: int) -> Modes:
    """(sum p_g(d) g)_(n) expressed in generator modes."""
    acc: Dict[Mode, Poly] = {}
    for g, p in e.items():
        for r in range(p.degree("d") + 1):
            c = p.coeff_of("d", r)
            if not c:
                continue
            f = falling(n, r)
            if f == 0:
                continue
            k = (g, n - r)
            acc[k] = acc.get(k, ZERO) + c * ((-1) ** r * f)
    return Modes(acc)


class ModeAlgebra:
    """Lie(A) with bracket [a_(m), b_(n)] = sum_j C(m, j) (a_(j) b)_(m+n-j)."""

    def __init__(self, A: Algebra):
        self.A = A
        self._jp: Dict[Tuple[Gen, Gen], List[Tuple[int, Elem]]] = {}

    def products(self, g: Gen, h: Gen):
        k = (g, h)
        if k not in self._jp:
            self._jp[k] = jth_products(self.A, g, h)
        return self._jp[k]

    def basis_bracket(self, a: Mode, b: Mode) -> Modes:
        (g, m), (h, n) = a, b
        out = Modes()
        for j, e in self.products(g, h):
            c = gen_binom(m, j)
            if c:
                out = out + elem_mode(e, m + n - j).scale(c)
        return out

    def bracket(self, x: Modes, y: Modes) -> Modes:
        out = Modes()
        for a, ca in x.items():
            for b, cb in y.items():
                out = out + self.basis_bracket(a, b).scale(ca * cb)
        return out


def mode_bracket(A: Algebra, x: Modes, y: Modes) -> Modes:
    return ModeAlgebra(A).bracket(x, y)


def extended_partial(x: Modes) -> Modes:
    """d(a_(n)) = -n a_(n-1)."""
    return Modes({(g, n - 1): v * (-n) for (g, n), v in x.items() if n})


# ------------------------------------------------------- closed-form table


class ClosedModeTable:
    """Closed-form bracket of the annihilation algebra of HV(alpha, beta).

    Labels: ``(L, m)`` is L_m and ``(H_i, m)`` is H_{i,m}.
    """

    def __init__(self, alpha="alpha", beta="beta"):
        self.hv = HVab(alpha, beta)
        self.alpha, self.beta = self.hv.alpha, self.hv.beta

    def basis_bracket(self, a: Mode, b: Mode) -> Modes:
        (g, m), (h, n) = a, b
        if g.family == "L" and h.family == "L":
            return Modes.mode(g, m + n, m - n)
        if g.family == "L":
            i = h.index[0]
            c = (m + 1) * (self.alpha * i - i) - n
            return Modes({(h, m + n): c, (h, m + n + 1): self.beta * i})
        if h.family == "L":
            return -self.basis_bracket(b, a)
        i, j = g.index[0], h.index[0]
        if i == j:
            return Modes()
        return Modes.mode(Gen("H", (i + j,)), m + n, j - i)

    def bracket(self, x: Modes, y: Modes) -> Modes:
        out = Modes()
        for a, ca in x.items():
            for b, cb in y.items():
                out = out + self.basis_bracket(a, b).scale(ca * cb)
        return out


def hv_ab_annihilation_bracket(a: Mode, b: Mode, alpha="alpha", beta="beta") -> Modes:
    return ClosedModeTable(alpha, beta).basis_bracket(a, b)


def closed_basis(modes: int = 5, grades: int = 5) -> List[Mode]:
    Lg = Gen("L")
    out = [(Lg, m) for m in range(-1, modes + 1)]
    out += [(Gen("H", (i,)), m) for i in range(-1, grades + 1) for m in range(modes + 1)]
    return out


@dataclass
class CrossReport:
    shifts: Dict[str, int]
    checked: int = 0
    mismatches: List[Tuple[Mode, Mode, Modes, Modes]] = field(default_factory=list)

    @property
    def match(self) -> bool:
        return not self.mismatches

    def to_json(self, samples=3):
        return {
            "relabel": dict(sorted(self.shifts.items())),
            "status": "MATCH" if self.match else "MISMATCH",
            "pairs": self.checked,
            "mismatches": len(self.mismatches),
            "samples": [
                {"pair": [f"{g}({m})" for g, m in (a, b)], "derived": d.to_json(), "table": t.to_json()}
                for a, b, d, t in self.mismatches[:samples]
            ],
        }


def crosscheck_annihilation(
    A: HVab, modes: int = 5, grades: int = 5, shifts: Mapping[str, int] = RELABEL, stop_early=False
) -> CrossReport:
    """Compare the bracket built from j-th products with the closed-form table."""
    table = ClosedModeTable(A.alpha, A.beta)
    lie = ModeAlgebra(A)
    rep = CrossReport(dict(shifts))
    basis = closed_basis(modes, grades)
    for a, b in itertools.product(basis, repeat=2):
        ra = (a[0], a[1] + shifts.get(a[0].family, 0))
        rb = (b[0], b[1] + shifts.get(b[0].family, 0))
        rep.checked += 1
        derived = lie.basis_bracket(ra, rb).relabel(shifts)
        want = table.basis_bracket(a, b)
        if derived != want:
            rep.mismatches.append((a, b, derived, want))
            if stop_early:
                break
    return rep


def derive_relabeling(A: HVab, search=range(-2, 3), modes=3, grades=3) -> List[Dict[str, int]]:
    """All per-family shifts under which the two tables agree on a small window."""
    hits = []
    for sl, sh in itertools.product(search, repeat=2):
        shifts = {"L": sl, "H": sh}
        if crosscheck_annihilation(A, modes, grades, shifts, stop_early=True).match:
            hits.append(shifts)
    return hits


# ------------------------------------------------------------ Lie axioms


@dataclass
class LieReport:
    checked_pairs: int = 0
    checked_triples: int = 0
    antisym_fail: list = field(default_factory=list)
    jacobi_fail: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.antisym_fail and not self.jacobi_fail

    def to_json(self):
        return {
            "status": "PASS" if self.ok else "FAIL",
            "pairs": self.checked_pairs,
            "triples": self.checked_triples,
            "antisymmetry_failures": [[f"{g}({m})" for g, m in t] for t in self.antisym_fail[:3]],
            "jacobi_failures": [[f"{g}({m})" for g, m in t] for t in self.jacobi_fail[:3]],
        }


def check_lie(algebra, basis: Sequence[Mode]) -> LieReport:
    """Antisymmetry on all pairs, Jacobi on all 3-subsets of ``basis``.

    Once antisymmetry holds the Jacobiator is alternating, so unordered
    triples of distinct elements cover every case.
    """
    rep = LieReport()
    cache: Dict[Tuple[Mode, Mode], Modes] = {}

    def br(a, b):
        k = (a, b)
        if k not in cache:
            cache[k] = algebra.basis_bracket(a, b)
        return cache[k]

    def br_lin(a: Mode, x: Modes) -> Modes:
        out = Modes()
        for b, c in x.items():
            out = out + br(a, b).scale(c)
        return out

    for a, b in itertools.combinations_with_replacement(basis, 2):
        rep.checked_pairs += 1
        if br(a, b) + br(b, a) != 0:
            rep.antisym_fail.append((a, b))
    for a, b, c in itertools.combinations(basis, 3):
        rep.checked_triples += 1
        # [a,[b,c]] + [b,[c,a]] + [c,[a,b]]
        s = br_lin(a, br(b, c)) + br_lin(b, br(c, a)) + br_lin(c, br(a, b))
        if s != 0:
            rep.jacobi_fail.append((a, b, c))
    return rep


def mode_basis(A: Algebra, modes: int = 5, grades: int = 5, low: int = 0) -> List[Mode]:
    if A.finite:
        gens = A.generators()
    else:
        gens = A.generators(grades)
    return [(g, n) for g in gens for n in range(low, modes + 1)]


def check_partial_derivation(A: Algebra, basis: Sequence[Mode]) -> List[Tuple[Mode, Mode]]:
    """Pairs where d[x, y] != [dx, y] + [x, dy]."""
    lie = ModeAlgebra(A)
    bad = []
    for a, b in itertools.product(basis, repeat=2):
        x, y = Modes.mode(*a), Modes.mode(*b)
        lhs = extended_partial(lie.bracket(x, y))
        rhs = lie.bracket(extended_partial(x), y) + lie.bracket(x, extended_partial(y))
        if lhs != rhs:
            bad.append((a, b))
    return bad


def annihilation_closed(A: Algebra, basis: Sequence[Mode]) -> bool:
    """Brackets of nonnegative modes only produce nonnegative modes."""
    lie = ModeAlgebra(A)
    for a, b in itertools.product([m for m in basis if m[1] >= 0], repeat=2):
        if any(n < 0 for (_, n), _ in lie.basis_bracket(a, b).items()):
            return False
    return True
