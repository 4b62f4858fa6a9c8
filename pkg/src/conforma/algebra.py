"""Presentations of graded Lie conformal algebras.

An algebra is a set of C[d]-generators together with a rule giving the
lambda-bracket of any two generators as an :class:`Elem` whose
coefficients are polynomials in ``d`` and ``l``.  Infinite-rank algebras
(HV(alpha, beta), gc_N) compute table entries on demand, so every element
stays finitely supported and nothing is ever truncated.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .poly import D, LAM, ONE, ZERO, Poly, parse

__all__ = [
    "Gen",
    "L",
    "H",
    "Elem",
    "Algebra",
    "TableAlgebra",
    "HVab",
    "GcN",
    "OutOfRange",
    "make_vir",
    "make_cur",
    "make_sl2",
    "make_semidirect_vir_cur",
    "make_hv",
    "make_hv_ab",
    "make_gc_n",
    "builtin",
    "BUILTINS",
    "algebra_from_spec",
    "algebra_to_spec",
    "load_spec",
]


class OutOfRange(ValueError):
    """A generator outside the algebra's declared index range."""


@dataclass(frozen=True, order=True)
class Gen:
    family: str
    index: Tuple[int, ...] = ()

    def __str__(self) -> str:
        if not self.index:
            return self.family
        return self.family + "_" + "_".join(str(i) for i in self.index)

    __repr__ = __str__

    @classmethod
    def parse(cls, text: str) -> "Gen":
        fam, *rest = text.split("_")
        try:
            idx = tuple(int(r) for r in rest)
        except ValueError:
            raise ValueError(f"bad generator name {text!r}") from None
        return cls(fam, idx)


def L() -> Gen:
    return Gen("L")


def H(i: Optional[int] = None) -> Gen:
    return Gen("H") if i is None else Gen("H", (i,))


class Elem:
    """Finitely supported combination ``sum p_g(d, ...) * g``.

    Used both for elements of the algebra (coefficients in ``d``) and for
    lambda-bracket values (coefficients also in the slot variables).
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Optional[Mapping[Gen, Poly]] = None):
        self._c: Dict[Gen, Poly] = {}
        if coeffs:
            for g, p in coeffs.items():
                p = Poly._coerce(p)
                if p:
                    self._c[g] = p

    @classmethod
    def gen(cls, g: Gen, coeff=ONE) -> "Elem":
        return cls({g: coeff})

    @classmethod
    def _raw(cls, c: Dict[Gen, Poly]) -> "Elem":
        e = object.__new__(cls)
        e._c = c
        return e

    def items(self):
        return sorted(self._c.items())

    def support(self) -> List[Gen]:
        return sorted(self._c)

    def coeff(self, g: Gen) -> Poly:
        return self._c.get(g, ZERO)

    def __bool__(self):
        return bool(self._c)

    def is_zero(self) -> bool:
        return not self._c

    def __eq__(self, other):
        if isinstance(other, Elem):
            return self._c == other._c
        if other == 0:
            return not self._c
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def __add__(self, other: "Elem") -> "Elem":
        out = dict(self._c)
        for g, p in other._c.items():
            s = out.get(g)
            s = p if s is None else s + p
            if s:
                out[g] = s
            else:
                out.pop(g, None)
        return Elem._raw(out)

    def __neg__(self) -> "Elem":
        return Elem._raw({g: -p for g, p in self._c.items()})

    def __sub__(self, other: "Elem") -> "Elem":
        return self + (-other)

    def scale(self, f) -> "Elem":
        f = Poly._coerce(f)
        if not f:
            return Elem()
        return Elem({g: f * p for g, p in self._c.items()})

    def __mul__(self, f):
        return self.scale(f)

    __rmul__ = __mul__

    def map(self, fn: Callable[[Poly], Poly]) -> "Elem":
        return Elem({g: fn(p) for g, p in self._c.items()})

    def substitute(self, name: str, expr) -> "Elem":
        return self.map(lambda p: p.substitute(name, expr))

    def substitute_many(self, mapping) -> "Elem":
        return self.map(lambda p: p.substitute_many(mapping))

    def partial(self) -> "Elem":
        """Action of d on the module: multiply every coefficient by d."""
        return self.scale(D)

    def variables(self) -> set:
        vs = set()
        for p in self._c.values():
            vs.update(p.variables())
        return vs

    def __str__(self) -> str:
        if not self._c:
            return "0"
        parts = []
        for g, p in self.items():
            s = str(p)
            if p == 1:
                parts.append(str(g))
            elif len(p) == 1 and "+" not in s[1:] and " - " not in s:
                parts.append(f"{s}*{g}" if p != -1 else f"-{g}")
            else:
                parts.append(f"({s})*{g}")
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    __repr__ = __str__

    def to_json(self) -> list:
        return [{"gen": str(g), "poly": str(p)} for g, p in self.items()]


# ------------------------------------------------------------ presentations


class Algebra:
    """Base presentation.  Subclasses implement ``_rule``."""

    name: str = "algebra"
    params: Tuple[str, ...] = ()
    finite: bool = True

    def __init__(self):
        self._cache: Dict[Tuple[Gen, Gen], Elem] = {}

    # grade used by windows; L counts as grade 0
    def grade(self, g: Gen) -> int:
        return 0

    def generators(self, window: Optional[int] = None) -> List[Gen]:
        raise NotImplementedError

    def validate(self, g: Gen) -> None:
        pass

    def _rule(self, g: Gen, h: Gen) -> Elem:
        raise NotImplementedError

    def table(self, g: Gen, h: Gen) -> Elem:
        """[g_l h] with coefficients in d, l."""
        key = (g, h)
        e = self._cache.get(key)
        if e is None:
            self.validate(g)
            self.validate(h)
            e = self._rule(g, h)
            self._cache[key] = e
        return e

    def elem(self, text: Mapping[str, str]) -> Elem:
        """Build an element from ``{"gen": "expression"}`` strings."""
        return Elem({Gen.parse(k): parse(v, self.params) for k, v in text.items()})

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class TableAlgebra(Algebra):
    """Finite presentation given by an explicit bracket table.

    Missing entries are derived from their skew partner when present and
    are zero otherwise; with ``complete=False`` a pair absent from both
    directions raises :class:`OutOfRange` instead (used for windowed
    tables whose higher brackets are unknown).
    """

    def __init__(
        self,
        name: str,
        gens: Sequence[Gen],
        table: Mapping[Tuple[Gen, Gen], Elem],
        params: Sequence[str] = (),
        grades: Optional[Mapping[Gen, int]] = None,
        complete: bool = True,
        finite: bool = True,
    ):
        super().__init__()
        self.name = name
        self.params = tuple(params)
        self.gens = list(gens)
        self._genset = set(self.gens)
        self._table = dict(table)
        self._grades = dict(grades or {})
        self.complete = complete
        self.finite = finite

    def grade(self, g: Gen) -> int:
        return self._grades.get(g, 0)

    def generators(self, window=None) -> List[Gen]:
        if window is None:
            return list(self.gens)
        return [g for g in self.gens if self.grade(g) <= window]

    def validate(self, g: Gen) -> None:
        if g not in self._genset:
            raise OutOfRange(f"{g} is not a generator of {self.name}")

    def _rule(self, g, h):
        e = self._table.get((g, h))
        if e is not None:
            return e
        e = self._table.get((h, g))
        if e is not None:
            return skew_partner(e)
        if not self.complete:
            raise OutOfRange(f"bracket [{g}_l {h}] not known in {self.name}")
        return Elem()


def skew_partner(e: Elem) -> Elem:
    """From [a_l b] = sum q(d, l) k return [b_l a] = -sum q(d, -l-d) k."""
    return -e.substitute("l", -LAM - D)


def _as_poly(x, name: str) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, str):
        return Poly.var(x)
    return Poly.const(Fraction(x))


class HVab(Algebra):
    """HV(alpha, beta): generators L and H_i (i >= -1)."""

    finite = False

    def __init__(self, alpha="alpha", beta="beta"):
        super().__init__()
        self.alpha = _as_poly(alpha, "alpha")
        self.beta = _as_poly(beta, "beta")
        self.params = tuple(sorted(set(self.alpha.parameters()) | set(self.beta.parameters())))
        self.name = "hv_ab"

    def grade(self, g: Gen) -> int:
        return 0 if g.family == "L" else g.index[0]

    def generators(self, window=8) -> List[Gen]:
        if window is None:
            raise ValueError("HV(alpha, beta) has infinitely many generators; give a window")
        return [L()] + [H(i) for i in range(-1, window + 1)]

    def validate(self, g: Gen) -> None:
        if g.family == "L" and not g.index:
            return
        if g.family == "H" and len(g.index) == 1 and g.index[0] >= -1:
            return
        raise OutOfRange(f"{g} is not a generator of HV(alpha, beta)")

    def l_weight(self, i: int) -> Poly:
        """Coefficient of l in [L_l H_i]."""
        return self.alpha * i - i + 1

    def _rule(self, g, h):
        if g.family == "L" and h.family == "L":
            return Elem.gen(g, D + 2 * LAM)
        if g.family == "L":
            i = h.index[0]
            return Elem.gen(h, D + self.l_weight(i) * LAM + self.beta * i)
        if h.family == "L":
            i = g.index[0]
            # skew partner of the line above
            return Elem.gen(g, (self.alpha * i - i) * D + self.l_weight(i) * LAM - self.beta * i)
        i, j = g.index[0], h.index[0]
        if j == i:
            return Elem()
        return Elem.gen(H(i + j), Poly.const(j - i))


class GcN(Algebra):
    """gc_N on generators J^n_{ab} = x^n E_ab, index (n, a, b)."""

    finite = False

    def __init__(self, N: int):
        super().__init__()
        if N < 1:
            raise ValueError("matrix size must be positive")
        self.N = N
        self.name = f"gc_{N}"

    def grade(self, g: Gen) -> int:
        return g.index[0]

    def generators(self, window=4) -> List[Gen]:
        if window is None:
            raise ValueError("gc_N has infinitely many generators; give an x-degree cap")
        return [
            Gen("J", (n, a, b))
            for n in range(window + 1)
            for a in range(self.N)
            for b in range(self.N)
        ]

    def validate(self, g: Gen) -> None:
        if g.family == "J" and len(g.index) == 3:
            n, a, b = g.index
            if n >= 0 and 0 <= a < self.N and 0 <= b < self.N:
                return
        raise OutOfRange(f"{g} is not a generator of gc_{self.N}")

    def _rule(self, g, h):
        m, a, b = g.index
        n, c, dd = h.index
        out = Elem()
        if b == c:
            for s in range(m + 1):
                out = out + Elem.gen(Gen("J", (m + n - s, a, dd)), comb(m, s) * (LAM + D) ** s)
        if dd == a:
            for s in range(n + 1):
                out = out - Elem.gen(Gen("J", (m + n - s, c, b)), comb(n, s) * (-LAM) ** s)
        return out


# --------------------------------------------------------------- builtins


def make_vir() -> TableAlgebra:
    Lg = L()
    return TableAlgebra("vir", [Lg], {(Lg, Lg): Elem.gen(Lg, D + 2 * LAM)})


StructureConstants = Mapping[Tuple[str, str], Mapping[str, Union[int, Fraction]]]


def _lie(basis, consts, x: str, y: str) -> Dict[str, Fraction]:
    return {k: Fraction(v) for k, v in consts.get((x, y), {}).items() if v}


def _lie_vec(basis, consts, u: Mapping[str, Fraction], v: Mapping[str, Fraction]):
    out: Dict[str, Fraction] = {}
    for x, cx in u.items():
        for y, cy in v.items():
            for k, c in _lie(basis, consts, x, y).items():
                out[k] = out.get(k, 0) + cx * cy * c
    return {k: c for k, c in out.items() if c}


def check_lie_constants(basis: Sequence[str], consts: StructureConstants) -> None:
    """Raise ValueError unless the constants define a Lie algebra."""
    for x, y in consts:
        if x not in basis or y not in basis:
            raise ValueError(f"structure constant for unknown basis pair ({x}, {y})")
    for x in basis:
        for y in basis:
            a = _lie(basis, consts, x, y)
            b = _lie(basis, consts, y, x)
            keys = set(a) | set(b)
            if any(a.get(k, 0) + b.get(k, 0) for k in keys):
                raise ValueError(f"constants are not antisymmetric on ({x}, {y})")
    for x, y, z in itertools.product(basis, repeat=3):
        ex, ey, ez = {x: Fraction(1)}, {y: Fraction(1)}, {z: Fraction(1)}
        lhs = _lie_vec(basis, consts, ex, _lie_vec(basis, consts, ey, ez))
        r1 = _lie_vec(basis, consts, _lie_vec(basis, consts, ex, ey), ez)
        r2 = _lie_vec(basis, consts, ey, _lie_vec(basis, consts, ex, ez))
        keys = set(lhs) | set(r1) | set(r2)
        if any(lhs.get(k, 0) - r1.get(k, 0) - r2.get(k, 0) for k in keys):
            raise ValueError(f"constants violate the Jacobi identity on ({x}, {y}, {z})")


SL2_BASIS = ("e", "h", "f")
SL2_CONSTANTS = {
    ("e", "f"): {"h": 1},
    ("f", "e"): {"h": -1},
    ("h", "e"): {"e": 2},
    ("e", "h"): {"e": -2},
    ("h", "f"): {"f": -2},
    ("f", "h"): {"f": 2},
}


def make_cur(basis: Sequence[str], consts: StructureConstants, name: str = "cur") -> TableAlgebra:
    check_lie_constants(basis, consts)
    gens = [Gen(b) for b in basis]
    table = {}
    for x in basis:
        for y in basis:
            val = _lie(basis, consts, x, y)
            table[(Gen(x), Gen(y))] = Elem({Gen(k): Poly.const(c) for k, c in val.items()})
    return TableAlgebra(name, gens, table)


def make_sl2() -> TableAlgebra:
    return make_cur(SL2_BASIS, SL2_CONSTANTS, name="cur_sl2")


def make_semidirect_vir_cur(
    basis: Sequence[str] = SL2_BASIS, consts: StructureConstants = SL2_CONSTANTS, name="vir_cur_sl2"
) -> TableAlgebra:
    cur = make_cur(basis, consts)
    Lg = L()
    table = {(Lg, Lg): Elem.gen(Lg, D + 2 * LAM)}
    for b in basis:
        g = Gen(b)
        table[(Lg, g)] = Elem.gen(g, D + LAM)
        table[(g, Lg)] = Elem.gen(g, LAM)
    for x in basis:
        for y in basis:
            table[(Gen(x), Gen(y))] = cur.table(Gen(x), Gen(y))
    return TableAlgebra(name, [Lg] + [Gen(b) for b in basis], table)


def make_hv() -> TableAlgebra:
    Lg, Hg = L(), H()
    table = {
        (Lg, Lg): Elem.gen(Lg, D + 2 * LAM),
        (Lg, Hg): Elem.gen(Hg, D + LAM),
        (Hg, Lg): Elem.gen(Hg, LAM),
        (Hg, Hg): Elem(),
    }
    return TableAlgebra("hv", [Lg, Hg], table)


def make_hv_ab(alpha="alpha", beta="beta") -> HVab:
    return HVab(alpha, beta)


def make_gc_n(N: int) -> GcN:
    return GcN(N)


BUILTINS = {
    "vir": make_vir,
    "cur_sl2": make_sl2,
    "vir_cur_sl2": make_semidirect_vir_cur,
    "hv": make_hv,
    "hv_ab": make_hv_ab,
    "gc_1": lambda: make_gc_n(1),
    "gc_2": lambda: make_gc_n(2),
}


def builtin(name: str, alpha=None, beta=None) -> Algebra:
    if name == "hv_ab":
        return make_hv_ab("alpha" if alpha is None else alpha, "beta" if beta is None else beta)
    if name.startswith("gc_") and name[3:].isdigit():
        return make_gc_n(int(name[3:]))
    try:
        return BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown algebra {name!r}; choose from {', '.join(BUILTINS)}") from None


# ---------------------------------------------------------- spec file I/O


def algebra_to_spec(A: Algebra, window: Optional[int] = None) -> dict:
    """Serialize a presentation (or a window of an infinite one)."""
    if A.finite:
        gens = A.generators()
        window = None
    else:
        gens = A.generators(window if window is not None else 4)
    fams: Dict[str, List[int]] = {}
    singles = []
    for g in gens:
        if g.index and len(g.index) == 1:
            fams.setdefault(g.family, []).append(g.index[0])
        elif not g.index:
            singles.append(g)
        else:
            raise ValueError("spec files support only single-index families")
    gen_entries = [{"family": g.family, "grade-range": None} for g in singles]
    for fam, idx in fams.items():
        gen_entries.append({"family": fam, "grade-range": [min(idx), max(idx)]})
    genset = set(gens)
    brackets = []
    for g in gens:
        for h in gens:
            val = A.table(g, h)
            if not set(val.support()) <= genset:
                continue
            if val.is_zero() and window is None:
                continue  # in a windowed file an absent pair means "unknown", so zeros stay
            brackets.append({"lhs": str(g), "rhs": str(h), "value": val.to_json()})
    spec = {
        "name": A.name,
        "parameters": list(A.params),
        "generators": gen_entries,
        "brackets": brackets,
    }
    if window is not None:
        spec["window"] = window
    return spec


def algebra_from_spec(spec: Mapping) -> TableAlgebra:
    params = list(spec.get("parameters", []))
    gens: List[Gen] = []
    grades: Dict[Gen, int] = {}
    for entry in spec["generators"]:
        fam = entry["family"]
        rng = entry.get("grade-range")
        if rng is None:
            g = Gen(fam)
            gens.append(g)
            grades[g] = 0
        else:
            lo, hi = rng
            for i in range(lo, hi + 1):
                g = Gen(fam, (i,))
                gens.append(g)
                grades[g] = i
    genset = set(gens)
    table: Dict[Tuple[Gen, Gen], Elem] = {}
    for br in spec.get("brackets", []):
        g, h = Gen.parse(br["lhs"]), Gen.parse(br["rhs"])
        if g not in genset or h not in genset:
            raise ValueError(f"bracket on undeclared generator pair ({g}, {h})")
        terms = {}
        for t in br["value"]:
            k = Gen.parse(t["gen"])
            if k not in genset:
                raise ValueError(f"bracket value uses undeclared generator {k}")
            terms[k] = terms.get(k, ZERO) + parse(t["poly"], params)
        bad = [v for p in terms.values() for v in p.variables() if v in ("m", "n")]
        if bad:
            raise ValueError("bracket values may only use d and l")
        table[(g, h)] = Elem(terms)
    windowed = "window" in spec
    return TableAlgebra(
        spec.get("name", "spec"),
        gens,
        table,
        params=params,
        grades=grades,
        complete=not windowed,
        finite=True,
    )


def load_spec(path) -> TableAlgebra:
    with open(path, encoding="utf-8") as fh:
        return algebra_from_spec(json.load(fh))
