"""Conformal linear maps, the gc bracket, and derivation solving.

A map is stored by its images on generators; conformal linearity
``D_l(q(d) k) = q(d + l) D_l(k)`` supplies everything else.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .algebra import Algebra, Elem, Gen, HVab
from .cmodules import _tag
from .lca import FRESH, as_elem, bracket, window_generators
from .linalg import RHS, Inconsistent, check_certificate, nullspace, rank, solve_affine, span_contains
from .poly import D, LAM, MU, Poly

SKIPPED = "SKIPPED"


class ConformalMap:
    """Window restriction of a conformal linear map A -> C[l] (x) A."""

    def __init__(self, images: Mapping[Gen, Elem], name: str = "D"):
        self.images = dict(images)
        self.name = name

    @property
    def domain(self) -> List[Gen]:
        return sorted(self.images)

    def image(self, g: Gen) -> Elem:
        try:
            return self.images[g]
        except KeyError:
            raise KeyError(f"{g} lies outside the window of {self.name}") from None

    def covers(self, e: Elem) -> bool:
        return all(k in self.images for k in e.support())

    def apply(self, e, slot: str = "l") -> Elem:
        """D_s(sum q_k(d, ...) k) = sum q_k(d + s, ...) D_s(k)."""
        e = as_elem(e)
        S = Poly.var(slot)
        out = Elem()
        for k, q in e.items():
            img = self.image(k)
            if img.is_zero():
                continue
            if slot != "l":
                img = img.substitute("l", S)
            out = out + img.scale(q.shift_d(S))
        return out

    def substitute_many(self, mapping) -> "ConformalMap":
        return ConformalMap({g: e.substitute_many(mapping) for g, e in self.images.items()}, self.name)

    def __add__(self, other: "ConformalMap") -> "ConformalMap":
        keys = set(self.images) | set(other.images)
        return ConformalMap({g: self.images.get(g, Elem()) + other.images.get(g, Elem()) for g in keys})

    def scale(self, c) -> "ConformalMap":
        return ConformalMap({g: e.scale(c) for g, e in self.images.items()}, self.name)

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.images.values())

    def to_json(self):
        return {str(g): e.to_json() for g, e in sorted(self.images.items())}


def inner(A: Algebra, x, window: Optional[int] = None) -> ConformalMap:
    x = as_elem(x)
    return ConformalMap({g: bracket(A, x, g) for g in window_generators(A, window)}, f"ad({x})")


def d_L(A: Algebra) -> ConformalMap:
    """d^L_l a = (d + l) a on a current algebra."""
    return ConformalMap({g: Elem.gen(g, D + LAM) for g in A.generators()}, "d^L")


def gc_bracket(A: Algebra, phi: ConformalMap, psi: ConformalMap, probe) -> Elem:
    """[phi_l psi]_m a = phi_l(psi_{m-l} a) - psi_{m-l}(phi_l a)."""
    if not A.finite:
        raise ValueError("gc bracket needs a finite-rank algebra")
    a = as_elem(probe)
    shift = MU - LAM
    first = phi.apply(psi.apply(a, FRESH).substitute(FRESH, shift), "l")
    second = psi.apply(phi.apply(a, "l"), FRESH).substitute(FRESH, shift)
    return first - second


def derivation_residual(A: Algebra, Dm: ConformalMap, x: Gen, y: Gen):
    """D_l([x_m y]) - [D_l(x)_{l+m} y] - [x_m D_l(y)], or SKIPPED."""
    xy = bracket(A, x, y, "m")
    if not Dm.covers(xy) or x not in Dm.images or y not in Dm.images:
        return SKIPPED
    lhs = Dm.apply(xy, "l")
    mid = bracket(A, Dm.image(x), y, FRESH).substitute(FRESH, LAM + MU)
    rhs = bracket(A, x, Dm.image(y), "m")
    return lhs - mid - rhs


@dataclass
class DerivationCheck:
    checked: int = 0
    skipped: int = 0
    failures: List[Tuple[Gen, Gen, Elem]] = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    @property
    def skipped_fraction(self) -> Fraction:
        tot = self.checked + self.skipped
        return Fraction(self.skipped, tot) if tot else Fraction(0)

    def to_json(self):
        return {
            "status": "PASS" if self.ok else "FAIL",
            "pairs": self.checked,
            "skipped": self.skipped,
            "samples": [{"pair": [str(x), str(y)], "residual": r.to_json()} for x, y, r in self.failures[:3]],
        }


def window_pairs(gens: Sequence[Gen]) -> List[Tuple[Gen, Gen]]:
    # skew-symmetry makes (y, x) redundant once (x, y) holds
    return list(itertools.combinations_with_replacement(gens, 2))


def check_derivation(A: Algebra, Dm: ConformalMap) -> DerivationCheck:
    rep = DerivationCheck()
    for x, y in window_pairs(Dm.domain):
        r = derivation_residual(A, Dm, x, y)
        if r is SKIPPED:
            rep.skipped += 1
            continue
        rep.checked += 1
        if not r.is_zero():
            rep.failures.append((x, y, r))
    return rep


# ------------------------------------------------------------- the solver


def shift_targets(A: HVab, g: Gen, shift: int) -> List[Gen]:
    """Generators of grade grade(g) + shift, i.e. where D^shift sends g."""
    t = A.grade(g) + shift
    if t < -1:
        return []
    if t == 0:
        return [Gen("L"), Gen("H", (0,))]
    return [Gen("H", (t,))]


def _uname(g: Gen, k: Gen, r: int, s: int) -> str:
    return f"c_{_tag(g)}__{_tag(k)}_{r}_{s}"


def derivation_ansatz(A: HVab, shift: int, window: int, degree: int):
    """Images with unknown coefficients; total degree <= degree in d, l."""
    images, unknowns = {}, []
    for g in A.generators(window):
        img = Elem()
        for k in shift_targets(A, g, shift):
            p = Poly()
            for tot in range(degree + 1):
                for r in range(tot, -1, -1):
                    n = _uname(g, k, r, tot - r)
                    unknowns.append(n)
                    p = p + Poly.var(n) * D**r * LAM ** (tot - r)
            img = img + Elem.gen(k, p)
        images[g] = img
    return ConformalMap(images, f"D^{shift}"), unknowns


def map_vector(Dm: ConformalMap, unknowns: Sequence[str]) -> Optional[Dict[str, Fraction]]:
    """Coordinates of a concrete map in the ansatz basis; None if it does not fit."""
    known = set(unknowns)
    vec = {}
    for g, e in Dm.images.items():
        for k, p in e.items():
            for (r, s), c in p.split_by(("d", "l")).items():
                if not c.is_constant():
                    return None
                n = _uname(g, k, r, s)
                if n not in known:
                    return None
                vec[n] = Fraction(c.constant_value())
    return vec


def vector_map(template: ConformalMap, vec: Mapping[str, Fraction], unknowns: Sequence[str]) -> ConformalMap:
    sub = {u: Poly.const(vec.get(u, 0)) for u in unknowns}
    return template.substitute_many(sub)


def linear_rows(residual: Elem, unknowns: set) -> List[Dict[str, Fraction]]:
    rows = []
    for _, p in residual.items():
        for c in p.split_by(("d", "l", "m")).values():
            row = {}
            for mono, v in c.items():
                if not mono:
                    row[RHS] = -Fraction(v)
                    continue
                ((u, e),) = mono.items()
                if u not in unknowns or e != 1:
                    raise ValueError(f"nonlinear or unspecialized term {c}")
                row[u] = Fraction(v)
            if row:
                rows.append(row)
    return rows


@dataclass
class DerivationSolution:
    shift: int
    window: int
    degree: int
    basis: List[Dict[str, Fraction]]
    unknowns: List[str]
    template: ConformalMap
    pairs: int
    skipped: int

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def skipped_fraction(self) -> Fraction:
        return Fraction(self.skipped, self.pairs + self.skipped)

    @property
    def status(self) -> str:
        return "WINDOW-INCONCLUSIVE" if self.pairs == 0 else "SOLVED"

    def maps(self) -> List[ConformalMap]:
        return [vector_map(self.template, v, self.unknowns) for v in self.basis]


def solve_derivations(A: HVab, shift: int, window: int = 6, degree: int = 4) -> DerivationSolution:
    if A.params:
        raise ValueError("specialize alpha and beta to rationals before solving")
    tmpl, unknowns = derivation_ansatz(A, shift, window, degree)
    unk = set(unknowns)
    rows, pairs, skipped = [], 0, 0
    for x, y in window_pairs(tmpl.domain):
        r = derivation_residual(A, tmpl, x, y)
        if r is SKIPPED:
            skipped += 1
            continue
        pairs += 1
        rows += linear_rows(r, unk)
    basis = nullspace(rows, unknowns)
    return DerivationSolution(shift, window, degree, basis, unknowns, tmpl, pairs, skipped)


def grade_generators(A: HVab, shift: int) -> List[Gen]:
    """C[d]-generators of grade ``shift``: L and H_0 at grade 0."""
    if shift == 0:
        return [Gen("L"), Gen("H", (0,))]
    return [Gen("H", (shift,))]


def inner_span(A: HVab, sol: DerivationSolution) -> List[Dict[str, Fraction]]:
    """Windowed ad(d^k X) for every grade-shift generator X and k < degree."""
    vecs = []
    for X in grade_generators(A, sol.shift):
        for k in range(sol.degree):
            m = inner(A, Elem.gen(X, D**k), sol.window)
            v = map_vector(m, sol.unknowns)
            if v is None:
                raise ValueError(f"ad(d^{k} {X}) does not fit the ansatz")
            vecs.append(v)
    return vecs


@dataclass
class Comparison:
    solver_dim: int
    inner_dim: int
    inner_in_solutions: bool
    solutions_in_inner: bool

    @property
    def equal(self):
        return (
            self.solver_dim == self.inner_dim and self.inner_in_solutions and self.solutions_in_inner
        )

    def to_json(self):
        return {
            "status": "PASS" if self.equal else "FAIL",
            "solver_dim": self.solver_dim,
            "inner_dim": self.inner_dim,
            "inner_in_solutions": self.inner_in_solutions,
            "solutions_in_inner": self.solutions_in_inner,
        }


def compare_with_inner(A: HVab, sol: DerivationSolution) -> Comparison:
    inn = inner_span(A, sol)
    return Comparison(
        sol.dim,
        rank(inn),
        all(span_contains(sol.basis, v) for v in inn),
        all(span_contains(inn, v) for v in sol.basis),
    )


# --------------------------------------------------------------- innerness


@dataclass
class InnerVerdict:
    verdict: str  # INNER | NOT-INNER | INCONCLUSIVE
    witness: Optional[Elem] = None
    bound: int = 0
    certificate: Optional[Dict[int, Fraction]] = None
    certificate_checked: bool = False

    def to_json(self):
        return {
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_json(),
            "bound": self.bound,
            "certificate_rows": None if self.certificate is None else len(self.certificate),
            "certificate_checked": self.certificate_checked,
        }


def is_inner_on_window(A: Algebra, Dm: ConformalMap, bound: int = 6) -> InnerVerdict:
    """Solve ad x = D on the map's domain for x of d-degree <= bound."""
    dom = Dm.domain
    if not dom:
        return InnerVerdict("INCONCLUSIVE", bound=bound)
    if A.finite:
        support = A.generators()
    else:
        # grades beyond the images' top grade + 1 cannot contribute
        top = max([A.grade(k) for e in Dm.images.values() for k in e.support()] + [A.grade(g) for g in dom])
        support = A.generators(top + 1)
    x, unknowns = Elem(), []
    for g in support:
        p = Poly()
        for r in range(bound + 1):
            n = f"x_{_tag(g)}_{r}"
            unknowns.append(n)
            p = p + Poly.var(n) * D**r
        x = x + Elem.gen(g, p)
    unk = set(unknowns)
    rows = []
    for g in dom:
        rows += linear_rows(bracket(A, x, g) - Dm.image(g), unk)
    try:
        part, _ = solve_affine(rows, unknowns)
    except Inconsistent as exc:
        ok = check_certificate(rows, exc.certificate)
        return InnerVerdict("NOT-INNER", bound=bound, certificate=exc.certificate, certificate_checked=ok)
    w = x.substitute_many({u: Poly.const(part.get(u, 0)) for u in unknowns})
    return InnerVerdict("INNER", witness=w, bound=bound)
