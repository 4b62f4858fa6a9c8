"""Command-line front end.

Every subcommand builds a JSON report (``"schema": 1``) and prints a short
text summary.  The exit code is 1 iff some check has status FAIL.  Reports
are deterministic given the same arguments; only ``wall_time`` varies.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from fractions import Fraction
from typing import Dict, List, Optional

from . import __version__
from .algebra import Elem, Gen, HVab, algebra_to_spec, builtin, load_spec
from .poly import Poly, parse

SCHEMA = 1


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ report


class Report:
    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.checks: List[dict] = []
        self.data: Dict[str, object] = {}

    def check(self, name: str, status: str, /, **detail) -> dict:
        entry = {**detail, "check": name, "status": status}
        self.checks.append(entry)
        return entry

    @property
    def status(self) -> str:
        return "FAIL" if any(c["status"] == "FAIL" for c in self.checks) else "PASS"

    def to_json(self, wall_time: float) -> dict:
        return {
            "schema": SCHEMA,
            "tool": f"conforma {__version__}",
            "command": self.command,
            "config": self.config,
            "status": self.status,
            "checks": self.checks,
            "data": self.data,
            "wall_time": round(wall_time, 3),
        }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def stable_view(report: dict) -> dict:
    """The report minus the wall-time field, for determinism comparisons."""
    return {k: v for k, v in report.items() if k != "wall_time"}


# ----------------------------------------------------------- arg helpers


def rational(text: str):
    """A rational number, or the string 'symbolic'."""
    if text == "symbolic":
        return text
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational or 'symbolic', got {text!r}") from None


def shift_range(text: str) -> List[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if lo > hi:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or a range like -1..4, got {text!r}") from None


def positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text!r}")
    return v


def _param(v, name: str):
    return name if v is None or v == "symbolic" else Poly.const(v)


def resolve_algebra(name: str, alpha=None, beta=None, symbolic=False):
    if name.endswith(".json") or os.path.sep in name:
        try:
            return load_spec(name)
        except OSError as exc:
            raise UsageError(f"cannot read spec file {name}: {exc.strerror}") from None
        except (ValueError, KeyError) as exc:
            raise UsageError(f"invalid spec file {name}: {exc}") from None
    if name == "hv_ab":
        if symbolic:
            alpha = beta = None
        return HVab(_param(alpha, "alpha"), _param(beta, "beta"))
    try:
        return builtin(name)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _echo(args) -> dict:
    skip = {"func", "report", "json"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = str(v) if isinstance(v, Fraction) else v
    return out


# ------------------------------------------------------------ subcommands


def cmd_verify_axioms(args, rep: Report):
    from .lca import jacobi_sweep, skew_sweep

    A = resolve_algebra(args.algebra, args.alpha, args.beta, args.symbolic)
    window = args.window
    if window is None:
        window = 4 if A.name.startswith("gc_") else 8
    rep.data["algebra"] = A.name
    rep.data["parameters"] = list(A.params)
    for sw in (skew_sweep(A, window), jacobi_sweep(A, window)):
        js = sw.to_json()
        rep.check(js.pop("check"), js.pop("status"), **js)


def cmd_annihilation(args, rep: Report):
    from .coeffalg import RELABEL, ClosedModeTable, check_lie, crosscheck_annihilation, derive_relabeling, closed_basis

    A = resolve_algebra("hv_ab", args.alpha, args.beta)
    N = args.window
    found = derive_relabeling(A)
    rep.check(
        "relabeling",
        "PASS" if found == [RELABEL] else "FAIL",
        pinned=dict(sorted(RELABEL.items())),
        derived=[dict(sorted(s.items())) for s in found],
    )
    cr = crosscheck_annihilation(A, modes=N, grades=N).to_json()
    rep.check("crosscheck", "PASS" if cr.pop("status") == "MATCH" else "FAIL", **cr)
    table = ClosedModeTable(A.alpha, A.beta)
    basis = closed_basis(N, N)
    lr = check_lie(table, basis).to_json()
    rep.check("closed-form-lie", lr.pop("status"), **lr)
    if args.table:
        rows = []
        for a in basis:
            for b in basis:
                v = table.basis_bracket(a, b)
                if v:
                    rows.append({"lhs": f"{a[0]}({a[1]})", "rhs": f"{b[0]}({b[1]})", "value": v.to_json()})
        rep.data["structure_constants"] = rows


def cmd_modules(args, rep: Report):
    from . import cmodules as cm
    from .poly import D, LAM

    name = args.algebra
    if name == "vir":
        M = cm.vir_module()
        expected, free = {Gen("L"): D + Poly.var("a") * LAM + Poly.var("b")}, ["a", "b"]
    elif name == "hv":
        M = cm.hv_module()
        expected = {Gen("L"): D + Poly.var("a") * LAM + Poly.var("b"), Gen("H"): Poly.var("c")}
        free = ["a", "b", "c"]
    elif name == "hv_ab":
        M = cm.hv_ab_module(HVab())
        expected, free = None, ["a", "b"]
    else:
        raise UsageError("modules supports vir, hv and hv_ab")
    mr = cm.module_sweep(M, 6 if not M.A.finite else None).to_json()
    rep.check(f"module-axioms:{M.name}", mr.pop("status"), **mr)

    if name == "hv_ab":
        A = resolve_algebra("hv_ab", args.alpha, args.beta)
        tr = cm.replay_c_contradiction(A)
        rep.check("c-contradiction", "PASS" if tr.contradiction else "FAIL", **tr.to_json())
        b = Poly.var("b")
        inv = cm.submodule_test(cm.hv_ab_module(A, 0, b), D + b, 6)
        rep.check("submodule:(d+beta)V_0", "PASS" if inv else "FAIL", invariant=inv)
        proper = [cm.submodule_test(cm.hv_ab_module(A, 1, b), p, 6) for p in (D + b, D, (D + b) ** 2)]
        rep.check("submodule:V_1-irreducible", "PASS" if not any(proper) else "FAIL", invariant=proper)
    if args.solve:
        if name == "hv_ab":
            A = resolve_algebra("hv_ab", args.alpha, args.beta)
            if A.params:
                raise UsageError("--solve on hv_ab needs rational --alpha and --beta")
            expected = {g: Poly() for g in A.generators(args.window)}
            expected[Gen("L")] = D + Poly.var("a") * LAM + Poly.var("b")
        else:
            A = M.A
        res = cm.rank_one_solver(A, args.degree, args.window)
        fams = [f.to_json() for f in res.families]
        ok = not res.undecided and len(res.families) == 1 and cm.family_matches(res.families[0], expected, free)
        rep.check(
            "rank-one-classification",
            "PASS" if ok else "FAIL",
            families=fams,
            undecided=res.undecided,
            pairs=res.pairs,
            skipped=res.skipped,
            unknowns=res.unknowns,
        )


def cmd_derivations(args, rep: Report):
    from . import cderiv as cd

    if args.algebra == "cur_sl2":
        A = builtin("cur_sl2")
        dl = cd.d_L(A)
        dr = cd.check_derivation(A, dl).to_json()
        rep.check("d^L-derivation", dr.pop("status"), **dr)
        iv = cd.is_inner_on_window(A, dl, args.bound).to_json()
        ok = iv["verdict"] == "NOT-INNER" and iv["certificate_checked"]
        rep.check("d^L-not-inner", "PASS" if ok else "FAIL", **iv)
        return
    if args.algebra != "hv_ab":
        raise UsageError("derivations supports hv_ab and cur_sl2")
    A = resolve_algebra("hv_ab", args.alpha, args.beta)
    if A.params:
        raise UsageError("derivations on hv_ab needs rational --alpha and --beta")
    bound = args.degree + 2
    for i in args.shift:
        sol = cd.solve_derivations(A, i, args.window, args.degree)
        cmp = cd.compare_with_inner(A, sol)
        rep.check(f"shift {i}: solutions = inner span", "PASS" if cmp.equal else "FAIL", **cmp.to_json())
        frac = sol.skipped_fraction
        rep.check(
            f"shift {i}: skipped fraction < 1/5",
            "PASS" if frac < Fraction(1, 5) else "FAIL",
            pairs=sol.pairs,
            skipped=sol.skipped,
            fraction=str(frac),
        )
        verdicts = [cd.is_inner_on_window(A, m, bound).verdict for m in sol.maps()]
        rep.check(
            f"shift {i}: basis maps inner",
            "PASS" if all(v == "INNER" for v in verdicts) else "FAIL",
            verdicts=verdicts,
            bound=bound,
        )
        if args.stability:
            big = cd.solve_derivations(A, i, args.window + 2, args.degree)
            c2 = cd.compare_with_inner(A, big)
            ok = c2.equal and big.dim == sol.dim
            rep.check(f"shift {i}: stable at window {args.window + 2}", "PASS" if ok else "FAIL", **c2.to_json())


def cmd_classify(args, rep: Report):
    from . import classify as cl

    rng = random.Random(args.seed)
    fv = cl.forward_verify(cl.ClosedForm.symbolic(args.forward_window)).to_json()
    rep.check(f"forward-verify (window {args.forward_window}, symbolic)", fv.pop("status"), **fv)
    for stage in cl.STAGES:
        r = cl.replay_stage(stage, args.degree, args.window, seed=rng.randrange(2**31)).to_json()
        rep.check(f"replay {stage}", r.pop("status"), **r)
    an = cl.build_ansatz(args.window, args.degree)
    results = []
    for k in range(args.specializations):
        spec = cl.random_specialization(args.window, rng)
        res = cl.inverse_solve(args.window, args.degree, spec)
        cf = cl.ClosedForm.numeric(args.window, spec.alpha1, spec.beta1, spec.gamma1, spec.a)
        unique = res.status == "UNIQUE" and cl.matches_closed_form(res.families[0], cf, an)
        js = res.to_json()
        rep.check(f"inverse-solve #{k + 1}", "PASS" if unique else "FAIL", **js)
        results.append(res)
        if res.status == "UNIQUE":
            norm = cl.normalize_basis(cl.table_from_values(an, res.families[0].values))
            nj = norm.to_json()
            rep.check(f"normalize #{k + 1}", nj.pop("status"), **nj)
            if k == 0:
                rep.data["final_table"] = known_brackets(norm.table)
                rep.data["normalization_map"] = nj["scales"]


def known_brackets(A) -> List[dict]:
    """Nonzero brackets of a windowed table, skipping pairs it does not know."""
    from .algebra import OutOfRange

    rows = []
    for g in A.generators():
        for h in A.generators():
            try:
                v = A.table(g, h)
            except OutOfRange:
                continue
            if not v.is_zero():
                rows.append({"lhs": str(g), "rhs": str(h), "value": v.to_json()})
    return rows


def cmd_nilpotent(args, rep: Report):
    from .lca import NILPOTENT, NOT_NILPOTENT, locally_nilpotent_window, random_low_element, random_top_element

    A = resolve_algebra(args.algebra, args.alpha, args.beta)
    rows = []
    for text in args.element or []:
        rows.append((text, parse_element(text, A.params), None))
    if args.random:
        rng = random.Random(args.seed)
        rows.append(("L", Elem.gen(Gen("L")), NOT_NILPOTENT))
        for _ in range(args.random):
            rows.append((None, random_low_element(rng, args.degree), NILPOTENT))
        for _ in range(args.random):
            rows.append((None, random_top_element(rng, args.degree), NOT_NILPOTENT))
    if not rows:
        raise UsageError("give --element or --random")
    for text, e, want in rows:
        v = locally_nilpotent_window(A, e, args.window, args.bound)
        label = text or str(e)
        if want is None:
            status = "PASS" if v.verdict != "INCONCLUSIVE" else "INCONCLUSIVE"
        else:
            status = "PASS" if v.verdict == want else "FAIL"
        rep.check(f"ad-nilpotency of {label}", status, element=e.to_json(), expected=want, **v.to_json())


def parse_element(text: str, params=()) -> Elem:
    """``GEN=POLY;GEN=POLY``, e.g. ``H_-1=3*d^2+1;L=d``; a bare generator means coefficient 1."""
    e = Elem()
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        gen, _, poly = part.partition("=")
        coeff = parse(poly, params) if poly.strip() else Poly.const(1)
        e = e + Elem.gen(Gen.parse(gen.strip()), coeff)
    return e


def cmd_emit_spec(args, rep: Report):
    A = resolve_algebra(args.algebra, args.alpha, args.beta)
    spec = algebra_to_spec(A, args.window)
    text = json.dumps(spec, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        rep.data["written"] = args.out
    else:
        sys.stdout.write(text)
    rep.check("emit", "PASS", brackets=len(spec["brackets"]))


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="conforma", description="Exact computations with Lie conformal algebras.")
    p.add_argument("--version", action="version", version=f"conforma {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, alg_default=None):
        sp.add_argument("--algebra", default=alg_default, required=alg_default is None,
                        help="builtin name (vir, cur_sl2, vir_cur_sl2, hv, hv_ab, gc_1, gc_2) or a .json spec file")
        sp.add_argument("--alpha", type=rational, default=None, help="rational or 'symbolic' (hv_ab)")
        sp.add_argument("--beta", type=rational, default=None, help="rational or 'symbolic' (hv_ab)")
        sp.add_argument("--report", help="write the JSON report here")
        sp.add_argument("--json", action="store_true", help="print the JSON report instead of the summary")

    sp = sub.add_parser("verify-axioms", help="skew-symmetry and Jacobi sweeps")
    common(sp)
    sp.add_argument("--symbolic", action="store_true", help="keep alpha, beta symbolic")
    sp.add_argument("--window", type=positive, default=None, help="top grade (x-degree for gc_N)")
    sp.set_defaults(func=cmd_verify_axioms)

    sp = sub.add_parser("annihilation", help="annihilation-algebra crosscheck")
    common(sp, "hv_ab")
    sp.add_argument("--window", type=positive, default=5, help="modes and grades up to this bound")
    sp.add_argument("--table", action="store_true", help="include the structure constants")
    sp.set_defaults(func=cmd_annihilation)

    sp = sub.add_parser("modules", help="rank-one modules")
    common(sp)
    sp.add_argument("--solve", action="store_true", help="run the rank-one classification solver")
    sp.add_argument("--degree", type=positive, default=3)
    sp.add_argument("--window", type=positive, default=5)
    sp.set_defaults(func=cmd_modules)

    sp = sub.add_parser("derivations", help="conformal derivations")
    common(sp)
    sp.add_argument("--shift", type=shift_range, default=[-1, 0, 1, 2, 3, 4])
    sp.add_argument("--window", type=positive, default=6)
    sp.add_argument("--degree", type=positive, default=4)
    sp.add_argument("--bound", type=positive, default=6, help="witness degree bound (cur_sl2)")
    sp.add_argument("--no-stability", dest="stability", action="store_false", help="skip the window+2 rerun")
    sp.set_defaults(func=cmd_derivations)

    sp = sub.add_parser("classify", help="graded extensions of HV")
    sp.add_argument("--window", type=positive, default=4)
    sp.add_argument("--degree", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--specializations", type=positive, default=3)
    sp.add_argument("--forward-window", type=positive, default=6)
    sp.add_argument("--report")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("nilpotent", help="local nilpotency of ad x")
    common(sp, "hv_ab")
    sp.add_argument("--element", action="append", help="e.g. 'H_-1=3*d^2+1;H_2=d'")
    sp.add_argument("--random", type=int, default=0, help="also test this many random elements per class")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--degree", type=positive, default=3)
    sp.add_argument("--window", type=positive, default=6)
    sp.add_argument("--bound", type=positive, default=12)
    sp.set_defaults(func=cmd_nilpotent)

    sp = sub.add_parser("emit-spec", help="dump an algebra as a spec file")
    common(sp)
    sp.add_argument("--window", type=positive, default=None)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_emit_spec)
    return p


def _join_negative(argv: List[str]) -> List[str]:
    """Let ``--shift -1..4`` through; argparse would read the value as a flag."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--shift" and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append("--shift=" + argv[i + 1])
            i += 2
            continue
        out.append(argv[i])
        i += 1
    return out


def run(argv: Optional[List[str]] = None):
    """Parse and execute; return ``(report, args)`` without printing."""
    args = build_parser().parse_args(_join_negative(sys.argv[1:] if argv is None else list(argv)))
    rep = Report(args.command, _echo(args))
    t0 = time.perf_counter()
    args.func(args, rep)
    return rep.to_json(time.perf_counter() - t0), args


def _summary(report: dict) -> str:
    lines = [f"{report['command']}: {report['status']}"]
    for c in report["checks"]:
        lines.append(f"  [{c['status']}] {c['check']}")
    return "\n".join(lines) + "\n"


def main(argv: Optional[List[str]] = None) -> int:
    try:
        report, args = run(argv)
    except UsageError as exc:
        sys.stderr.write(f"conforma: error: {exc}\n")
        return 2
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    if args.command != "emit-spec" or args.out:
        sys.stdout.write(dumps(report) if args.json else _summary(report))
    return 1 if report["status"] == "FAIL" else 0


if __name__ == "__main__":
    sys.exit(main())
