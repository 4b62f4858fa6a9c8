"""Branch-and-linearize solver for small polynomial systems over Q.

Unknowns are ordinary Poly variables.  The solver repeats four moves:

1. an equation linear in some unknown with a constant coefficient is
   solved for it and substituted everywhere;
2. an equation whose terms share an unknown factor ``u`` splits into the
   branches ``u = 0`` and ``u != 0`` (equation divided by ``u``);
3. an equation in a single unknown branches over its rational roots;
4. an equation that factors over Q branches over its factors.

A branch where none applies is returned as undecided.  Every family in
the result is therefore an exact solution set, and the union of the
families plus the undecided branches covers all solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import sympy

from .linalg import rref, span_contains
from .poly import Poly

MAX_BRANCHES = 20000


@dataclass
class Branch:
    subs: Dict[str, Poly]
    eqs: List[Poly]
    nonzero: List[str] = field(default_factory=list)
    trace: List[str] = field(default_factory=list)


@dataclass
class Family:
    """Solution set parametrized by the unknowns left free."""

    values: Dict[str, Poly]
    free: List[str]
    nonzero: List[str]
    trace: List[str]

    def affine(self) -> Optional[Tuple[Dict[str, Fraction], List[Dict[str, Fraction]]]]:
        """(point, direction basis) when every value is affine in the free unknowns."""
        point: Dict[str, Fraction] = {}
        dirs: Dict[str, Dict[str, Fraction]] = {f: {} for f in self.free}
        for u, p in self.values.items():
            if p.total_degree_in(self.free) > 1:
                return None
            for mono, c in p.items():
                if not mono:
                    point[u] = Fraction(c)
                else:
                    if len(mono) != 1 or list(mono.values()) != [1] or not set(mono) <= set(dirs):
                        return None
                    ((f, _),) = mono.items()
                    dirs[f][u] = Fraction(c)
        return point, [dirs[f] for f in self.free]

    def key(self):
        aff = self.affine()
        if aff is None:
            return ("nl", tuple(sorted((u, str(p)) for u, p in self.values.items())))
        point, basis = aff
        prow, piv, _ = rref(basis)
        # reduce the point modulo the directions for a canonical representative
        pt = dict(point)
        for r, pc in zip(prow, piv):
            c = pt.get(pc)
            if c:
                for k, v in r.items():
                    pt[k] = pt.get(k, 0) - c * v
        pt = {k: v for k, v in pt.items() if v}
        rows = tuple(tuple(sorted((str(k), v) for k, v in r.items())) for r in prow)
        return ("aff", tuple(sorted((str(k), v) for k, v in pt.items())), tuple(sorted(rows)))


@dataclass
class SolveResult:
    families: List[Family]
    undecided: List[Branch]

    @property
    def decided(self) -> bool:
        return not self.undecided


def _apply(p: Poly, subs: Dict[str, Poly]) -> Poly:
    if not subs:
        return p
    vs = set(p.variables())
    use = {k: v for k, v in subs.items() if k in vs}
    return p.substitute_many(use) if use else p


def _clean_eqs(eqs: Iterable[Poly], nonzero: Sequence[str] = ()) -> Optional[List[Poly]]:
    out = []
    seen = set()
    nz = set(nonzero)
    for e in eqs:
        if e.is_zero():
            continue
        if nz:
            e = _strip_nonzero(e, nz)
        if e.is_constant():
            return None
        e = _monic(e)
        if e in seen:
            continue
        seen.add(e)
        out.append(e)
    return out


def _strip_nonzero(e: Poly, nz: set) -> Poly:
    """Divide out the largest monomial in assumed-nonzero unknowns (exponents may be negative)."""
    low: Optional[Dict[str, int]] = None
    for mono, _ in e.items():
        here = {v: mono.get(v, 0) for v in nz}
        low = here if low is None else {v: min(k, here[v]) for v, k in low.items()}
    shift = {v: -k for v, k in (low or {}).items() if k}
    if not shift:
        return e
    return e * Poly.from_terms([(shift, 1)])


def _invertible(c: Poly, nz: set) -> bool:
    """A nonzero constant times a monomial in assumed-nonzero unknowns."""
    if c.is_constant():
        return not c.is_zero()
    if len(c) != 1:
        return False
    ((mono, _),) = list(c.items())
    return set(mono) <= nz


def _inverse(c: Poly) -> Poly:
    ((mono, v),) = list(c.items())
    return Poly.from_terms([({k: -x for k, x in mono.items()}, Fraction(1) / Fraction(v))])


def _monic(e: Poly) -> Poly:
    lead = e.sorted_terms()[0][1]
    return e if lead == 1 else e / lead


def _negative(polys: Iterable[Poly]) -> set:
    out = set()
    for p in polys:
        for mono, _ in p.items():
            out.update(v for v, k in mono.items() if k < 0)
    return out


def _linear_pick(eqs: List[Poly], unknowns: set, nz: set = frozenset(), blocked: set = frozenset()):
    best = None
    for idx, e in enumerate(eqs):
        for u in e.variables():
            if u not in unknowns or u in blocked or e.degree(u) != 1:
                continue
            c = e.coeff_of(u, 1)
            if not _invertible(c, nz):
                continue
            # fully linear equations first: plain elimination before nonlinear substitution
            score = (e.total_degree_in(unknowns), len(e), u)
            if best is None or score < best[0]:
                best = (score, idx, u, c)
    return best


def _content_pick(eqs: List[Poly], unknowns: set):
    for idx, e in enumerate(eqs):
        mins: Dict[str, int] = {}
        first = True
        for mono, _ in e.items():
            here = {v: k for v, k in mono.items() if v in unknowns}
            if first:
                mins = here
                first = False
            else:
                mins = {v: min(k, here[v]) for v, k in mins.items() if v in here}
            if not mins:
                break
        if mins:
            u = min(mins)
            return idx, u, mins[u]
    return None


def _univariate_pick(eqs: List[Poly], unknowns: set):
    for idx, e in enumerate(eqs):
        vs = [v for v in e.variables() if v in unknowns]
        if len(vs) == 1:
            return idx, vs[0]
    return None


def rational_roots(e: Poly, u: str) -> Tuple[List[Fraction], bool]:
    """Rational roots of a univariate polynomial and whether that is all of them."""
    x = sympy.Symbol("x")
    deg = e.degree(u)
    coeffs = [sympy.Rational(Fraction(e.coeff_of(u, k).constant_value())) for k in range(deg, -1, -1)]
    _, factors = sympy.Poly(coeffs, x, domain="QQ").factor_list()
    roots, complete = [], True
    for f, _ in factors:
        if f.degree() == 1:
            a, b = f.all_coeffs()
            roots.append(Fraction(int((-b / a).p), int((-b / a).q)))
        else:
            complete = False
    return sorted(set(roots)), complete


def _to_sympy(e: Poly):
    syms = {}
    expr = 0
    for mono, c in e.items():
        term = sympy.Rational(Fraction(c).numerator, Fraction(c).denominator)
        for v, k in mono.items():
            term *= syms.setdefault(v, sympy.Symbol(v)) ** k
        expr += term
    return expr, syms


def _from_sympy(expr, syms) -> Poly:
    names = list(syms)
    P = sympy.Poly(expr, *[syms[n] for n in names])
    return Poly.from_terms(
        ({n: k for n, k in zip(names, mono) if k}, Fraction(int(c.p), int(c.q))) for mono, c in P.terms()
    )


def factors(e: Poly) -> List[Poly]:
    """Distinct nonconstant irreducible factors over Q (one entry if irreducible)."""
    if any(k < 0 for mono, _ in e.items() for k in mono.values()):
        return [e]
    expr, syms = _to_sympy(e)
    _, fl = sympy.factor_list(expr)
    out = [_from_sympy(f, syms) for f, _ in fl]
    return [f for f in out if not f.is_constant()] or [e]


def _factor_pick(eqs: List[Poly], unknowns: set):
    for idx, e in enumerate(eqs):
        fs = factors(e)
        if len(fs) > 1:
            return idx, fs
    return None


def _assign(br: Branch, u: str, val: Poly, note: str) -> Optional[Branch]:
    if val.is_zero() and u in br.nonzero:
        return None
    subs = {k: _apply(v, {u: val}) for k, v in br.subs.items()}
    subs[u] = val
    if any(subs.get(z) is not None and subs[z].is_zero() for z in br.nonzero):
        return None
    eqs = _clean_eqs((_apply(e, {u: val}) for e in br.eqs), br.nonzero)
    if eqs is None:
        return None
    return Branch(subs, eqs, list(br.nonzero), br.trace + [note])


def solve(
    stages: Sequence[Sequence[Poly]],
    unknowns: Sequence[str],
    max_branches: int = MAX_BRANCHES,
    nonzero: Sequence[str] = (),
) -> SolveResult:
    """Solve the equations stage by stage; all equations must hold.

    ``nonzero`` lists unknowns assumed nonzero from the start; branches
    contradicting them are dropped and they may be divided out.
    """
    unk = set(unknowns)
    branches = [Branch({}, [], list(nonzero))]
    undecided: List[Branch] = []
    for stage in stages:
        nxt = []
        for br in branches:
            eqs = _clean_eqs(list(br.eqs) + [_apply(e, br.subs) for e in stage], br.nonzero)
            if eqs is None:
                continue
            nxt.extend(_run(Branch(br.subs, eqs, br.nonzero, br.trace), unk, undecided, max_branches))
        branches = nxt
    families = []
    seen = set()
    for br in branches:
        vals = {u: br.subs.get(u, Poly.var(u)) for u in unknowns}
        free = sorted({v for p in vals.values() for v in p.variables() if v in unk}, key=list(unknowns).index)
        if any(vals[u].is_zero() for u in br.nonzero):
            continue  # covered by the u = 0 branch
        fam = Family(vals, free, br.nonzero, br.trace)
        k = fam.key()
        if k in seen:
            continue
        seen.add(k)
        families.append(fam)
    families = [f for i, f in enumerate(families) if not any(
        j != i and _contained(f, g) and not (j > i and _contained(g, f)) for j, g in enumerate(families)
    )]
    return SolveResult(families, undecided)


def _contained(f: Family, g: Family) -> bool:
    """Is the affine family f a subset of the affine family g?"""
    af, ag = f.affine(), g.affine()
    if af is None or ag is None:
        return False
    (pf, df), (pg, dg) = af, ag
    if not all(span_contains(dg, v) for v in df if v):
        return False
    diff = dict(pf)
    for k, v in pg.items():
        diff[k] = diff.get(k, 0) - v
    diff = {k: v for k, v in diff.items() if v}
    return not diff or span_contains(dg, diff)


def _run(start: Branch, unk: set, undecided: List[Branch], limit: int) -> List[Branch]:
    done: List[Branch] = []
    todo = [start]
    count = 0
    while todo:
        count += 1
        if count > limit:
            undecided.extend(todo)
            break
        br = todo.pop()
        while True:
            if not br.eqs:
                done.append(br)
                break
            blocked = _negative(list(br.eqs) + list(br.subs.values())) if br.nonzero else set()
            pick = _linear_pick(br.eqs, unk, set(br.nonzero), blocked)
            if pick:
                _, idx, u, c = pick
                e = br.eqs[idx]
                val = -(e - c * Poly.var(u)) * _inverse(c)
                nb = _assign(br, u, val, f"{u} = {val}")
                if nb is None:
                    break
                br = nb
                continue
            pick = _content_pick(br.eqs, unk)
            if pick:
                idx, u, k = pick
                e = br.eqs[idx]
                zero = _assign(br, u, Poly(), f"{u} = 0")
                q = Poly.from_terms(
                    ({v: (x - k if v == u else x) for v, x in mono.items()}, c) for mono, c in e.items()
                )
                rest = _clean_eqs(br.eqs[:idx] + [q] + br.eqs[idx + 1:], br.nonzero + [u])
                if rest is not None:
                    todo.append(Branch(dict(br.subs), rest, br.nonzero + [u], br.trace + [f"{u} != 0"]))
                if zero is None:
                    break
                br = zero
                continue
            pick = _univariate_pick(br.eqs, unk)
            if pick:
                idx, u = pick
                roots, complete = rational_roots(br.eqs[idx], u)
                if not complete:
                    undecided.append(br)
                kids = [_assign(br, u, Poly.const(r), f"{u} = {r}") for r in roots]
                kids = [k for k in kids if k is not None]
                if not kids:
                    break
                todo.extend(kids[1:])
                br = kids[0]
                continue
            pick = _factor_pick(br.eqs, unk)
            if pick:
                idx, fs = pick
                for j, f in enumerate(fs):
                    rest = _clean_eqs(br.eqs[:idx] + [f] + br.eqs[idx + 1:], br.nonzero)
                    if rest is not None:
                        todo.append(Branch(dict(br.subs), rest, list(br.nonzero), br.trace + [f"factor {j}: {f} = 0"]))
                break
            undecided.append(br)
            break
    return done

