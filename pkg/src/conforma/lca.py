"""Lambda-bracket evaluation and the axiom, ideal and nilpotency checks.

Slots: a bracket is always evaluated in a named slot variable (``l``,
``m`` or an internal fresh name).  For a nested bracket
``[[x_l y]_{l+m} z]`` the outer bracket runs in a fresh slot which is
then replaced by ``l + m``, so nothing gets captured.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .algebra import Algebra, Elem, Gen, HVab, OutOfRange
from .poly import D, LAM, MU, Poly

FRESH = "_t"


def threads() -> int:
    try:
        return max(1, int(os.environ.get("CONFORMA_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn: Callable, items: Sequence) -> list:
    """Ordered map; runs on a thread pool when CONFORMA_THREADS > 1."""
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def as_elem(x) -> Elem:
    if isinstance(x, Elem):
        return x
    if isinstance(x, Gen):
        return Elem.gen(x)
    raise TypeError(f"expected Elem or Gen, got {type(x).__name__}")


def bracket(A: Algebra, x, y, slot: str = "l") -> Elem:
    """[x_s y] by sesquilinear extension of the generator table.

    For ``x = f(d) g`` and ``y = p(d) h``: ``f(-s) p(d + s) [g_s h]``.
    Coefficients of ``x`` and ``y`` may already involve other slot
    variables; they ride along untouched.
    """
    x, y = as_elem(x), as_elem(y)
    if x.is_zero() or y.is_zero():
        return Elem()
    S = Poly.var(slot)
    out = Elem()
    ys = [(h, p.shift_d(S)) for h, p in y.items()]
    for g, f in x.items():
        fs = f.substitute("d", -S)
        for h, ps in ys:
            t = A.table(g, h)
            if t.is_zero():
                continue
            if slot != "l":
                t = t.substitute("l", S)
            out = out + t.scale(fs * ps)
    return out


def bracket_at(A: Algebra, x, y, expr) -> Elem:
    """[x_e y] for an arbitrary slot expression ``e`` (e.g. l + m)."""
    return bracket(A, x, y, FRESH).substitute(FRESH, expr)


# ------------------------------------------------------------------ axioms


def check_skew(A: Algebra, x, y) -> Elem:
    """[x_l y] + [y_m x] with m -> -l-d; zero iff skew-symmetry holds."""
    return bracket(A, x, y, "l") + bracket(A, y, x, "m").substitute("m", -LAM - D)


def check_jacobi(A: Algebra, x, y, z) -> Elem:
    """[x_l [y_m z]] - [[x_l y]_{l+m} z] - [y_m [x_l z]]."""
    lhs = bracket(A, x, bracket(A, y, z, "m"), "l")
    mid = bracket_at(A, bracket(A, x, y, "l"), z, LAM + MU)
    rhs = bracket(A, y, bracket(A, x, z, "l"), "m")
    return lhs - mid - rhs


def check_sesquilinear(A: Algebra, x, y) -> Tuple[Elem, Elem]:
    """Residuals of [dx_l y] = -l[x_l y] and [x_l dy] = (d+l)[x_l y]."""
    x, y = as_elem(x), as_elem(y)
    b = bracket(A, x, y)
    left = bracket(A, x.partial(), y) + b.scale(LAM)
    right = bracket(A, x, y.partial()) - b.scale(D + LAM)
    return left, right


@dataclass
class Sweep:
    kind: str
    checked: int = 0
    skipped: int = 0
    failures: List[Tuple[Tuple[Gen, ...], Elem]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self, samples: int = 3) -> dict:
        return {
            "check": self.kind,
            "status": "PASS" if self.ok else "FAIL",
            "tuples": self.checked,
            "skipped": self.skipped,
            "failures": len(self.failures),
            "samples": [
                {"tuple": [str(g) for g in t], "residual": r.to_json()}
                for t, r in self.failures[:samples]
            ],
        }


def window_generators(A: Algebra, window: Optional[int] = None) -> List[Gen]:
    if A.finite:
        gens = A.generators()
        if window is not None:
            gens = [g for g in gens if A.grade(g) <= window]
        return gens
    return A.generators(window if window is not None else 8)


def _guard(fn):
    """Run a residual; None when a bracket leaves a windowed table."""

    def run(t):
        try:
            return fn(*t)
        except OutOfRange:
            return None

    return run


def _collect(kind: str, tuples: list, res: list) -> Sweep:
    sw = Sweep(kind)
    for t, r in zip(tuples, res):
        if r is None:
            sw.skipped += 1
            continue
        sw.checked += 1
        if not r.is_zero():
            sw.failures.append((t, r))
    return sw


def skew_sweep(A: Algebra, window: Optional[int] = None) -> Sweep:
    gens = window_generators(A, window)
    pairs = list(itertools.combinations_with_replacement(gens, 2))
    return _collect("skew-symmetry", pairs, pmap(_guard(lambda x, y: check_skew(A, x, y)), pairs))


def jacobi_sweep(A: Algebra, window: Optional[int] = None) -> Sweep:
    gens = window_generators(A, window)
    triples = list(itertools.product(gens, repeat=3))
    return _collect("jacobi", triples, pmap(_guard(lambda x, y, z: check_jacobi(A, x, y, z)), triples))


def grade_sweep(A: Algebra, window: Optional[int] = None) -> Sweep:
    """Grade additivity: support of [g_l h] sits in grade(g) + grade(h)."""
    gens = window_generators(A, window)
    sw = Sweep("grade-additivity")
    for g, h in itertools.product(gens, repeat=2):
        try:
            val = bracket(A, g, h)
        except OutOfRange:
            sw.skipped += 1
            continue
        sw.checked += 1
        want = A.grade(g) + A.grade(h)
        if any(A.grade(k) != want for k in val.support()):
            sw.failures.append(((g, h), val))
    return sw


# ------------------------------------------------------------------ ideals


def is_ideal_window(
    A: Algebra, family: Callable[[Gen], bool], window: Optional[int] = None
) -> Tuple[bool, Optional[Tuple[Gen, Gen, Elem]]]:
    """Is the C[d]-span of the family gens closed under bracketing with the window?"""
    gens = window_generators(A, window)
    for g in gens:
        if not family(g):
            continue
        for h in gens:
            for a, b in ((g, h), (h, g)):
                val = bracket(A, a, b)
                if any(not family(k) for k in val.support()):
                    return False, (a, b, val)
    return True, None


def derived_products_span_check(A: Algebra, candidate: Iterable[Gen]) -> Tuple[bool, str]:
    """Certify that C[d]-span(candidate) is a nonzero abelian ideal.

    Abelian means every j-th product inside the span vanishes, i.e. the
    lambda-bracket of any two candidate generators is zero.
    """
    if not A.finite:
        raise ValueError("derived_products_span_check needs a finite-rank presentation")
    cand = set(candidate)
    if not cand:
        return False, "empty candidate"
    ok, ce = is_ideal_window(A, lambda g: g in cand)
    if not ok:
        a, b, val = ce
        return False, f"not an ideal: [{a}_l {b}] = {val}"
    for g, h in itertools.product(sorted(cand), repeat=2):
        val = bracket(A, g, h)
        if not val.is_zero():
            return False, f"not abelian: [{g}_l {h}] = {val}"
    return True, "abelian ideal"


# -------------------------------------------------------------- nilpotency


def iterated_ad(A: Algebra, x, y, n: int, slot: str = "l") -> Elem:
    """(ad x)_s^n (y), the same slot in every step."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    cur = as_elem(y)
    x = as_elem(x)
    for _ in range(n):
        if cur.is_zero():
            break
        cur = bracket(A, x, cur, slot)
    return cur


NILPOTENT = "NILPOTENT"
NOT_NILPOTENT = "NOT-NILPOTENT"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class NilVerdict:
    verdict: str
    witness: Optional[Gen] = None
    steps: dict = field(default_factory=dict)
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": None if self.witness is None else str(self.witness),
            "steps": {str(k): v for k, v in sorted(self.steps.items())},
            "reason": self.reason,
        }


def _kill_steps(A, x, tests, bound):
    """Steps needed for (ad x)^k to kill each test generator, None if > bound."""
    out = {}
    for y in tests:
        cur = Elem.gen(y)
        k = 0
        while not cur.is_zero() and k < bound:
            cur = bracket(A, x, cur)
            k += 1
        out[y] = k if cur.is_zero() else None
    return out


def locally_nilpotent_window(A: Algebra, x, window: int = 6, bound: int = 12) -> NilVerdict:
    """Three-valued local nilpotency test.

    On HV(alpha, beta) only elements of C[d]H_-1 are certified NILPOTENT;
    growth witnesses are produced for an L-component (the L-coefficient of
    (ad x)^k L never vanishes) and for a top component H_n with n >= 0
    (the top-grade coefficient of (ad x)^k H_{n+1} never vanishes).  On a
    finite-rank algebra killing every generator is already a proof.
    """
    x = as_elem(x)
    if x.is_zero():
        return NilVerdict(NILPOTENT, reason="zero element")
    if A.finite:
        steps = _kill_steps(A, x, A.generators(), bound)
        if all(v is not None for v in steps.values()):
            return NilVerdict(NILPOTENT, steps=steps, reason="ad x kills every generator")
        return NilVerdict(INCONCLUSIVE, steps=steps, reason="some generator survives the bound")
    if not isinstance(A, HVab):
        return NilVerdict(INCONCLUSIVE, reason="no certificate available for this algebra")

    supp = x.support()
    Lg = Gen("L")
    if Lg in supp:
        # brackets never create L except from [L_l L]
        cur = Elem.gen(Lg)
        for k in range(1, bound + 1):
            cur = bracket(A, x, cur)
            if cur.coeff(Lg).is_zero():
                return NilVerdict(INCONCLUSIVE, reason=f"L-component vanished at step {k}")
        return NilVerdict(
            NOT_NILPOTENT, witness=Lg, steps={Lg: None},
            reason=f"L-coefficient of (ad x)^k L nonzero for k <= {bound}",
        )
    top = max(A.grade(g) for g in supp)
    if top == -1:
        tests = A.generators(window)
        steps = _kill_steps(A, x, tests, bound)
        if all(v is not None for v in steps.values()):
            return NilVerdict(NILPOTENT, steps=steps, reason="x in C[d]H_-1 and ad x kills the window")
        return NilVerdict(INCONCLUSIVE, steps=steps, reason="a window generator survives the bound")
    n = top
    w = Gen("H", (n + 1,))
    cur = Elem.gen(w)
    for k in range(1, bound + 1):
        cur = bracket(A, x, cur)
        target = Gen("H", (n + 1 + k * n,))
        if cur.coeff(target).is_zero():
            return NilVerdict(INCONCLUSIVE, reason=f"top-grade term vanished at step {k}")
    return NilVerdict(
        NOT_NILPOTENT, witness=w, steps={w: None},
        reason=f"coefficient of H_(n+1+kn) in (ad x)^k H_{n + 1} nonzero for k <= {bound}",
    )


# ------------------------------------------------------- random elements


def random_d_poly(rng, degree: int = 3) -> Poly:
    """Nonzero p(d) of degree <= degree with small integer coefficients."""
    while True:
        p = Poly()
        for k in range(rng.randint(0, degree) + 1):
            p = p + Poly.const(rng.randint(-5, 5)) * D**k
        if not p.is_zero():
            return p


def random_low_element(rng, degree: int = 3) -> Elem:
    """A random nonzero element of C[d] H_-1."""
    return Elem.gen(Gen("H", (-1,)), random_d_poly(rng, degree))


def random_top_element(rng, degree: int = 3, max_top: int = 4) -> Elem:
    """A random element of C[d]-span{H_-1 .. H_n} with nonzero H_n, n >= 0."""
    n = rng.randint(0, max_top)
    e = Elem.gen(Gen("H", (n,)), random_d_poly(rng, degree))
    for k in range(-1, n):
        if rng.random() < 0.5:
            e = e + Elem.gen(Gen("H", (k,)), random_d_poly(rng, degree))
    return e
