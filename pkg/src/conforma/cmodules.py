"""Rank-one conformal modules C[d]v.

An action ``g_l v = A_g(d, l) v`` is stored per generator.  Sesquilinearity
gives ``(q(d) k)_s v = q(-s) A_k(d, s) v`` and ``x_l (B(d) v) = B(d + l) A_x(d, l) v``,
which is all the residual of the module axiom needs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from . import polysolve
from .algebra import Algebra, Elem, Gen, HVab, OutOfRange
from .lca import window_generators
from .poly import D, LAM, MU, Poly

Action = Union[Mapping[Gen, Poly], Callable[[Gen], Poly]]


class RankOneModule:
    def __init__(self, A: Algebra, action: Action, params: Sequence[str] = (), name: str = "V"):
        self.A = A
        self._action = action
        self.params = tuple(params)
        self.name = name

    def act(self, g: Gen) -> Poly:
        """A_g(d, l)."""
        if callable(self._action):
            return self._action(g)
        try:
            return self._action[g]
        except KeyError:
            raise OutOfRange(f"no action recorded for {g}") from None

    def defined(self, g: Gen) -> bool:
        if callable(self._action):
            return True
        return g in self._action

    def table(self, gens: Sequence[Gen]) -> Dict[str, str]:
        return {str(g): str(self.act(g)) for g in gens}


def _in_slot(p: Poly, s) -> Poly:
    return p.substitute("l", s)


def act_elem(M: RankOneModule, e: Elem, slot) -> Poly:
    """Apply a bracket value sum q_k(d, l) k in slot ``slot`` to v.

    ``slot`` is the expression standing for the slot variable; the ``d`` in
    q acts on k, hence q(-slot, l) A_k(d, slot).
    """
    out = Poly()
    for k, q in e.items():
        out = out + q.substitute_many({"d": -slot}) * _in_slot(M.act(k), slot)
    return out


def check_module(M: RankOneModule, x: Gen, y: Gen) -> Poly:
    """[x_l y]_{l+m} v - (x_l (y_m v) - y_m (x_l v)), as a polynomial in d, l, m."""
    br = M.A.table(x, y)  # in d, l
    # the l inside q stays l; the outer slot is l + m
    lhs = Poly()
    for k, q in br.items():
        lhs = lhs + q.substitute_many({"d": -(LAM + MU)}) * _in_slot(M.act(k), LAM + MU)
    ax, ay = M.act(x), M.act(y)
    first = _in_slot(ay, MU).shift_d(LAM) * ax
    second = ax.shift_d(MU) * _in_slot(ay, MU)
    return lhs - (first - second)


def pair_in_window(M: RankOneModule, x: Gen, y: Gen) -> bool:
    return all(M.defined(k) for k in M.A.table(x, y).support())


@dataclass
class ModuleReport:
    checked: int = 0
    skipped: int = 0
    failures: List[Tuple[Gen, Gen, Poly]] = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def to_json(self):
        return {
            "status": "PASS" if self.ok else "FAIL",
            "pairs": self.checked,
            "skipped": self.skipped,
            "samples": [{"pair": [str(x), str(y)], "residual": str(r)} for x, y, r in self.failures[:3]],
        }


def module_sweep(M: RankOneModule, window: Optional[int] = None) -> ModuleReport:
    gens = window_generators(M.A, window)
    rep = ModuleReport()
    for x, y in itertools.product(gens, repeat=2):
        if not (M.defined(x) and M.defined(y) and pair_in_window(M, x, y)):
            rep.skipped += 1
            continue
        rep.checked += 1
        r = check_module(M, x, y)
        if not r.is_zero():
            rep.failures.append((x, y, r))
    return rep


# ----------------------------------------------------------- named modules


def vir_module(alpha="alpha", beta="beta", A: Optional[Algebra] = None) -> RankOneModule:
    from .algebra import make_vir

    A = A or make_vir()
    a, b = _p(alpha), _p(beta)
    return RankOneModule(A, {Gen("L"): D + a * LAM + b}, _params(a, b), "V_alpha_beta")


def hv_module(alpha="alpha", beta="beta", gamma="gamma") -> RankOneModule:
    from .algebra import make_hv

    a, b, g = _p(alpha), _p(beta), _p(gamma)
    return RankOneModule(
        make_hv(), {Gen("L"): D + a * LAM + b, Gen("H"): g}, _params(a, b, g), "V_alpha_beta_gamma"
    )


def hv_ab_module(A: HVab, a="a", b="b") -> RankOneModule:
    pa, pb = _p(a), _p(b)
    Lact = D + pa * LAM + pb

    def act(g: Gen) -> Poly:
        A.validate(g)
        return Lact if g.family == "L" else Poly()

    return RankOneModule(A, act, _params(pa, pb), "V_a_b")


def _p(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, str):
        return Poly.var(x)
    return Poly.const(x)


def _params(*ps) -> Tuple[str, ...]:
    return tuple(sorted({v for p in ps for v in p.parameters()}))


# -------------------------------------------------------------- submodules


def submodule_test(M: RankOneModule, p: Poly, window: Optional[int] = None) -> bool:
    """Is C[d] p(d) v stable under every generator in the window?

    g_l (p(d) v) = p(d + l) A_g(d, l) v must be a C[d, l]-multiple of p(d) v.
    """
    if p.is_zero():
        raise ValueError("p must be nonzero")
    if p.degree("d") == 0:
        return True
    for g in window_generators(M.A, window):
        img = p.shift_d(LAM) * M.act(g)
        _, r = img.divmod_univariate(p, "d")
        if not r.is_zero():
            return False
    return True


# ------------------------------------------------------------------ ansatz


def _tag(g: Gen) -> str:
    return g.family + "".join("_" + (f"m{-i}" if i < 0 else str(i)) for i in g.index)


def ansatz(g: Gen, degree: int, prefix: str = "u") -> Tuple[Poly, List[str]]:
    """Generic polynomial of total degree <= degree in d, l with fresh unknowns."""
    names, poly = [], Poly()
    for tot in range(degree + 1):
        for r in range(tot, -1, -1):
            s = tot - r
            name = f"{prefix}_{_tag(g)}_{r}_{s}"
            names.append(name)
            poly = poly + Poly.var(name) * D**r * LAM**s
    return poly, names


def residual_equations(r: Poly) -> List[Poly]:
    """Coefficients of every d, l, m monomial."""
    return [c for c in r.split_by(("d", "l", "m")).values() if not c.is_zero()]


def _stage_order(A: Algebra, gens: Sequence[Gen]) -> List[Gen]:
    # L first, then grade 0, then H_-1, then growing grades
    def key(g):
        if g.family == "L":
            return (0, 0)
        gr = A.grade(g)
        return (1, 0) if gr == 0 else (2, gr)

    return sorted(gens, key=lambda g: (key(g), g))


@dataclass
class ModuleFamily:
    actions: Dict[Gen, Poly]
    free: List[str]
    trace: List[str]

    def module(self, A: Algebra) -> RankOneModule:
        return RankOneModule(A, dict(self.actions), tuple(self.free))

    def is_trivial(self) -> bool:
        return all(p.is_zero() for p in self.actions.values())

    def to_json(self):
        return {
            "actions": {str(g): str(p) for g, p in sorted(self.actions.items())},
            "free": list(self.free),
        }


@dataclass
class SolverResult:
    families: List[ModuleFamily]
    undecided: int
    pairs: int
    skipped: int
    unknowns: int

    @property
    def status(self):
        return "UNDECIDED" if self.undecided else "SOLVED"


def rank_one_solver(A: Algebra, degree: int = 3, window: int = 5) -> SolverResult:
    """All nontrivial rank-one actions of total degree <= degree on the window.

    Pairs whose bracket leaves the window are skipped (their constraint
    would involve actions outside the ansatz).
    """
    gens = window_generators(A, window)
    gset = set(gens)
    acts, unknowns = {}, []
    for g in gens:
        p, names = ansatz(g, degree)
        acts[g] = p
        unknowns += names
    M = RankOneModule(A, acts)
    order = _stage_order(A, gens)
    stages, done, pairs, skipped = [], set(), 0, 0
    for k in range(len(order)):
        prefix = order[: k + 1]
        eqs = []
        for x, y in itertools.product(prefix, repeat=2):
            if (x, y) in done:
                continue
            done.add((x, y))
            if not set(A.table(x, y).support()) <= gset:
                skipped += 1
                continue
            pairs += 1
            eqs += residual_equations(check_module(M, x, y))
        stages.append(eqs)
    res = polysolve.solve(stages, unknowns)
    fams = []
    for f in res.families:
        actions = {g: acts[g].substitute_many(f.values) for g in gens}
        fam = ModuleFamily(actions, f.free, f.trace)
        if not fam.is_trivial():
            fams.append(fam)
    return SolverResult(fams, len(res.undecided), pairs, skipped, len(unknowns))


def family_matches(fam: ModuleFamily, expected: Mapping[Gen, Poly], expected_free: Sequence[str]) -> bool:
    """Same set of action tables, compared as affine subspaces of coefficient space."""
    def coeff_space(actions, free):
        # coordinates: (gen, d-exp, l-exp); each coordinate is affine in free
        point, dirs = {}, {f: {} for f in free}
        for g, p in actions.items():
            for key, c in p.split_by(("d", "l")).items():
                coord = (str(g),) + key
                if c.total_degree_in(free) > 1:
                    return None
                for mono, v in c.items():
                    if not mono:
                        point[coord] = v
                    else:
                        ((f, _),) = mono.items()
                        dirs[f][coord] = v
        return point, [d for d in dirs.values() if d]

    a = coeff_space(fam.actions, fam.free)
    b = coeff_space(expected, list(expected_free))
    if a is None or b is None:
        return False
    from .linalg import span_contains, rank

    (pa, da), (pb, db) = a, b
    if rank(da) != rank(db):
        return False
    if not all(span_contains(da, v) for v in db):
        return False
    diff = dict(pa)
    for k, v in pb.items():
        diff[k] = diff.get(k, 0) - v
    diff = {k: v for k, v in diff.items() if v}
    return not diff or span_contains(da, diff)


# ------------------------------------------------------------ proof replays


@dataclass
class Trace:
    steps: List[dict] = field(default_factory=list)
    contradiction: bool = False

    def add(self, claim: str, **data):
        self.steps.append({"claim": claim, **{k: v for k, v in data.items()}})

    def to_json(self):
        return {"contradiction": self.contradiction, "steps": self.steps}


def replay_c_contradiction(A: Optional[HVab] = None, window: int = 3, degree: int = 2) -> Trace:
    """Machine-checked chain: H_0 acting by c != 0 is impossible.

    L acts by d + a l + b, H_0 by the scalar c, H_i (i != 0) by ansatz
    polynomials f_i.  The (H_0, H_i) and (L, H_i) constraints force f_i = 0
    on both branches of c, after which the (H_-1, H_1) residual is 2c.
    """
    A = A or HVab()
    tr = Trace()
    c = Poly.var("c")
    others = [i for i in range(-1, window + 1) if i != 0]
    acts = {Gen("L"): D + Poly.var("a") * LAM + Poly.var("b"), Gen("H", (0,)): c}
    fnames = {}
    for i in others:
        p, names = ansatz(Gen("H", (i,)), degree, prefix="f")
        acts[Gen("H", (i,))] = p
        fnames[i] = names
    M = RankOneModule(A, acts)

    # (H_0, H_i): i f_i(d, l+m) = c (f_i(d+l, m) - f_i(d, m))
    combined = {}
    for i in others:
        r = check_module(M, Gen("H", (0,)), Gen("H", (i,)))
        combined[i] = r
        tr.add(f"(H_0, H_{i}) residual", residual=str(r))

    # branch c = 0: the equations collapse to i f_i(d, l+m) = 0
    zero_ok = True
    for i in others:
        r0 = combined[i].substitute("c", 0)
        sol = polysolve.solve([residual_equations(r0)], fnames[i])
        fam = sol.families
        forced = len(fam) == 1 and all(v.is_zero() for v in fam[0].values.values()) and sol.decided
        zero_ok &= forced
    tr.add("c = 0 forces f_i = 0 for all i in the window", holds=zero_ok)

    # branch c != 0: eliminate with c as an extra unknown, keep the c != 0 side
    nonzero_ok = True
    for i in others:
        sol = polysolve.solve([residual_equations(combined[i])], fnames[i] + ["c"])
        for fam in sol.families:
            if fam.values["c"].is_zero():
                continue
            if not all(fam.values[n].is_zero() for n in fnames[i]):
                nonzero_ok = False
        nonzero_ok &= sol.decided
    tr.add("c != 0 forces f_i = 0 for all i in the window", holds=nonzero_ok)

    # degree argument on the combined equation, for a generic f of d-degree k
    deg_ok = True
    for i in others:
        for k in range(degree + 1):
            # f(d, l) of d-degree k with coefficients affine in l
            fl = Poly()
            for r in range(k + 1):
                fl = fl + (Poly.var(f"g{r}_0") + Poly.var(f"g{r}_1") * LAM) * D**r
            lm = fl.substitute("l", LAM + MU)
            scale = A.alpha * i - i
            # c times the H_i-residual: c((i a - i) l - m + i b) f(d, l+m) - i (d + a l + b) f(d, l+m) + c m f(d, m)
            e = (
                c * (scale * LAM - MU + A.beta * i) * lm
                - i * (D + Poly.var("a") * LAM + Poly.var("b")) * lm
                + c * MU * fl.substitute("l", MU)
            )
            lead = e.coeff_of("d", k + 1)
            want = -i * fl.coeff_of("d", k).substitute("l", LAM + MU)
            deg_ok &= lead == want
    tr.add(
        "leading d-coefficient of c times the combined (L, H_i) equation is -i times the top coefficient of f_i",
        holds=deg_ok,
    )

    # with f_i = 0 the (H_-1, H_1) residual is 2c
    killed = {g: (p if g.family == "L" or g.index == (0,) else Poly()) for g, p in acts.items()}
    r = check_module(RankOneModule(A, killed), Gen("H", (-1,)), Gen("H", (1,)))
    tr.add("(H_-1, H_1) residual once f_i = 0", residual=str(r))
    tr.contradiction = zero_ok and nonzero_ok and deg_ok and r == 2 * c
    tr.add("2c = 0 contradicts c != 0", holds=tr.contradiction)
    return tr


def top_h_action_obstruction(i: int, A: Optional[HVab] = None, degree: int = 2) -> Tuple[int, Poly]:
    """If H_{i+1} acts trivially, the (H_-1, H_{i+1}) residual is (i+2) f_i(d, l+m).

    Returns the coefficient and the raw residual.
    """
    if i < -1:
        raise ValueError("grade must be at least -1")
    A = A or HVab()
    f, _ = ansatz(Gen("H", (i,)), degree, prefix="f")
    acts = {Gen("H", (-1,)): Poly(), Gen("H", (i + 1,)): Poly()}
    acts[Gen("H", (i,))] = f
    M = RankOneModule(A, acts)
    r = check_module(M, Gen("H", (-1,)), Gen("H", (i + 1,)))
    target = f.substitute("l", LAM + MU)
    coeff = None
    for k in range(-10, 11):
        if r == target * k:
            coeff = k
            break
    return coeff, r
