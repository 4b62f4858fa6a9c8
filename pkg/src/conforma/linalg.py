"""Exact sparse linear algebra over Q.

Rows are dicts ``column -> coefficient``; an optional right-hand side
lives under the key ``RHS``.  Columns are arbitrary hashable, sortable
labels (unknown names).  Elimination is plain Gauss-Jordan over
``Fraction``; the systems here have at most a few thousand unknowns and
very sparse rows.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

RHS = "__rhs__"

Row = Dict[Hashable, Fraction]


def _clean(row: Row) -> Row:
    return {k: v for k, v in row.items() if v}


class Inconsistent(Exception):
    """Raised by :func:`solve_affine` with a certificate row combination."""

    def __init__(self, certificate: Dict[int, Fraction]):
        super().__init__("linear system is inconsistent")
        # multipliers per input row whose combination reads 0 = nonzero
        self.certificate = certificate


def rref(rows: Sequence[Row], order: Optional[Sequence[Hashable]] = None, track: bool = False):
    """Reduced row echelon form.

    Returns ``(pivot_rows, pivots, history)``: ``pivot_rows[k]`` has pivot
    column ``pivots[k]`` with coefficient 1.  ``order`` fixes the column
    priority for pivot choice (earlier columns become pivots first).  With
    ``track`` each output row also records the input-row multipliers that
    produced it, which is what inconsistency certificates are built from.
    """
    if order is None:
        cols = set()
        for r in rows:
            cols.update(k for k in r if k != RHS)
        order = sorted(cols, key=_label_key)
    rank = {c: i for i, c in enumerate(order)}

    work: List[Tuple[Row, Dict[int, Fraction]]] = []
    for idx, r in enumerate(rows):
        r = {k: Fraction(v) for k, v in r.items() if v}
        if r:
            work.append((r, {idx: Fraction(1)} if track else {}))

    pivot_rows: List[Row] = []
    pivots: List[Hashable] = []
    hist: List[Dict[int, Fraction]] = []
    bad: List[Dict[int, Fraction]] = []
    for r, h in work:
        # reduce against existing pivots
        for k, pc in enumerate(pivots):
            c = r.get(pc)
            if c:
                pr = pivot_rows[k]
                for col, v in pr.items():
                    nv = r.get(col, 0) - c * v
                    if nv:
                        r[col] = nv
                    else:
                        r.pop(col, None)
                if track:
                    for j, v in hist[k].items():
                        nv = h.get(j, 0) - c * v
                        if nv:
                            h[j] = nv
                        else:
                            h.pop(j, None)
        cols = [c for c in r if c != RHS]
        if not cols:
            if r.get(RHS):
                bad.append(h)
            continue
        pc = min(cols, key=lambda c: rank.get(c, len(rank)))
        inv = 1 / r[pc]
        r = {k: v * inv for k, v in r.items()}
        if track:
            h = {k: v * inv for k, v in h.items()}
        # back-substitute into earlier pivot rows
        for k, pr in enumerate(pivot_rows):
            c = pr.get(pc)
            if c:
                for col, v in r.items():
                    nv = pr.get(col, 0) - c * v
                    if nv:
                        pr[col] = nv
                    else:
                        pr.pop(col, None)
                if track:
                    hk = hist[k]
                    for j, v in h.items():
                        nv = hk.get(j, 0) - c * v
                        if nv:
                            hk[j] = nv
                        else:
                            hk.pop(j, None)
        pivot_rows.append(r)
        pivots.append(pc)
        hist.append(h)
    return pivot_rows, pivots, (hist, bad)


def _label_key(c):
    return (type(c).__name__, str(c)) if not isinstance(c, tuple) else ("tuple", c)


def nullspace(rows: Sequence[Row], columns: Sequence[Hashable]) -> List[Dict[Hashable, Fraction]]:
    """Basis of {x : row . x = 0 for every row}, over the given columns.

    Each basis vector has a single free column set to 1.  Columns that
    never occur in any row are free.
    """
    prow, piv, _ = rref([{k: v for k, v in r.items() if k != RHS} for r in rows], order=columns)
    pivset = set(piv)
    basis = []
    for free in columns:
        if free in pivset:
            continue
        vec = {free: Fraction(1)}
        for pr, pc in zip(prow, piv):
            c = pr.get(free)
            if c:
                vec[pc] = -c
        basis.append(vec)
    return basis


def rank(rows: Sequence[Row]) -> int:
    return len(rref([{k: v for k, v in r.items() if k != RHS} for r in rows])[1])


def solve_affine(rows: Sequence[Row], columns: Sequence[Hashable]):
    """Solve ``row . x = row[RHS]`` for all rows.

    Returns ``(particular, basis)`` where the solution set is
    ``particular + span(basis)``.  Raises :class:`Inconsistent` carrying a
    row-combination certificate when no solution exists.
    """
    prow, piv, (hist, bad) = rref(rows, order=columns, track=True)
    if bad:
        raise Inconsistent(bad[0])
    part = {pc: pr.get(RHS, Fraction(0)) for pr, pc in zip(prow, piv)}
    part = _clean(part)
    pivset = set(piv)
    basis = []
    for free in columns:
        if free in pivset:
            continue
        vec = {free: Fraction(1)}
        for pr, pc in zip(prow, piv):
            c = pr.get(free)
            if c:
                vec[pc] = -c
        basis.append(vec)
    return part, basis


def check_certificate(rows: Sequence[Row], certificate: Dict[int, Fraction]) -> bool:
    """True iff the combination kills every column but leaves a nonzero RHS."""
    acc: Dict[Hashable, Fraction] = {}
    for i, c in certificate.items():
        for k, v in rows[i].items():
            acc[k] = acc.get(k, 0) + c * v
    acc = _clean(acc)
    return set(acc) == {RHS}


def span_contains(basis: Iterable[Dict[Hashable, Fraction]], vec: Dict[Hashable, Fraction]) -> bool:
    """Membership test for ``vec`` in the span of ``basis``."""
    basis = list(basis)
    rows = [dict(b) for b in basis]
    r0 = len(rref(rows)[1])
    r1 = len(rref(rows + [dict(vec)])[1])
    return r0 == r1
