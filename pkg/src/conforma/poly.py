"""Exact sparse multivariate polynomials over Q.

Variables are named.  ``d``, ``l``, ``m``, ``n`` are the reserved
indeterminates (the derivation and the three lambda slots); every other
name is a formal parameter.  Parameters may carry negative exponents, so
the coefficient ring for parameters is really a Laurent ring; this is
what lets rescaled structure constants like ``a1/a2`` stay exact without
rational-function machinery.  Reserved indeterminates never go negative.

Coefficients are ``int`` or ``fractions.Fraction``; there is no floating
point anywhere.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union

__all__ = [
    "Poly",
    "PolyError",
    "ParseError",
    "UnknownSymbolError",
    "MissingParameterError",
    "RESERVED",
    "parse",
    "var",
    "const",
    "D",
    "LAM",
    "MU",
    "NU",
]

RESERVED = ("d", "l", "m", "n")
# printing/term order for the parameters the library itself uses
_KNOWN_PARAMS = ("alpha", "beta", "a", "b", "c", "gamma", "gamma1")
_EXP_MAX = 2**31 - 1

Number = Union[int, Fraction]
Monomial = Tuple[Tuple[int, int], ...]


class PolyError(ValueError):
    pass


class ParseError(PolyError):
    def __init__(self, msg: str, pos: int, text: str = ""):
        super().__init__(f"{msg} at position {pos}" + (f" in {text!r}" if text else ""))
        self.pos = pos


class UnknownSymbolError(ParseError):
    pass


class MissingParameterError(PolyError):
    pass


# ---------------------------------------------------------------- variables

_index: Dict[str, int] = {}
_names: list = []


def _natural_key(name: str):
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name))


def _sort_key(name: str):
    if name in RESERVED:
        return (0, RESERVED.index(name), ())
    if name in _KNOWN_PARAMS:
        return (1, _KNOWN_PARAMS.index(name), ())
    return (2, 0, _natural_key(name))


def _vid(name: str) -> int:
    i = _index.get(name)
    if i is None:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
            raise PolyError(f"invalid variable name {name!r}")
        i = len(_names)
        _index[name] = i
        _names.append(name)
    return i


for _n in RESERVED + _KNOWN_PARAMS:
    _vid(_n)
_RESERVED_IDS = frozenset(range(len(RESERVED)))


def _norm(c: Number) -> Number:
    if type(c) is Fraction and c.denominator == 1:
        return c.numerator
    return c


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for v, e in b:
        s = out.get(v, 0) + e
        if s:
            if s > _EXP_MAX:
                raise OverflowError("exponent exceeds 2^31-1")
            out[v] = s
        else:
            del out[v]
    return tuple(sorted(out.items()))


class Poly:
    """Immutable polynomial; ``terms`` maps monomials to nonzero coefficients.

    A monomial is a sorted tuple of ``(variable id, exponent)`` pairs.
    """

    __slots__ = ("_t", "_h")

    def __init__(self, terms: Optional[Mapping[Monomial, Number]] = None):
        self._t: Dict[Monomial, Number] = (
            {k: _norm(v) for k, v in terms.items() if v} if terms else {}
        )
        self._h = None

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Number]) -> "Poly":
        p = object.__new__(cls)
        p._t = terms
        p._h = None
        return p

    # -- constructors
    @classmethod
    def const(cls, c: Number) -> "Poly":
        c = _norm(Fraction(c) if not isinstance(c, (int, Fraction)) else c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, name: str, exp: int = 1) -> "Poly":
        i = _vid(name)
        if exp < 0 and i in _RESERVED_IDS:
            raise PolyError(f"negative power of indeterminate {name}")
        if exp == 0:
            return cls._raw({(): 1})
        return cls._raw({((i, exp),): 1})

    @classmethod
    def from_terms(cls, items: Iterable[Tuple[Mapping[str, int], Number]]) -> "Poly":
        acc: Dict[Monomial, Number] = {}
        for expo, c in items:
            mono = tuple(sorted((_vid(k), e) for k, e in expo.items() if e))
            acc[mono] = acc.get(mono, 0) + c
        return cls(acc)

    # -- basic protocol
    @property
    def terms(self) -> Dict[Monomial, Number]:
        return dict(self._t)

    def items(self):
        """(exponent dict by name, coefficient) pairs, unordered."""
        for mono, c in self._t.items():
            yield {_names[v]: e for v, e in mono}, c

    def __bool__(self) -> bool:
        return bool(self._t)

    def is_zero(self) -> bool:
        return not self._t

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self._t == other._t
        if isinstance(other, (int, Fraction)):
            return self._t == ({(): other} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        if self._h is None:
            self._h = hash(frozenset(self._t.items()))
        return self._h

    def __len__(self) -> int:
        return len(self._t)

    # -- arithmetic
    @staticmethod
    def _coerce(x) -> "Poly":
        if isinstance(x, Poly):
            return x
        if isinstance(x, (int, Fraction)):
            return Poly.const(x)
        raise TypeError(f"cannot use {type(x).__name__} as a polynomial")

    def __add__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            if not other:
                return self
            t = dict(self._t)
            s = t.get((), 0) + other
            if s:
                t[()] = _norm(s)
            else:
                t.pop((), None)
            return Poly._raw(t)
        if not isinstance(other, Poly):
            return NotImplemented
        if len(other._t) > len(self._t):
            self, other = other, self
        t = dict(self._t)
        for k, v in other._t.items():
            s = t.get(k, 0) + v
            if s:
                t[k] = _norm(s)
            else:
                del t[k]
        return Poly._raw(t)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw({k: -v for k, v in self._t.items()})

    def __sub__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return self + (-other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            if not other:
                return Poly._raw({})
            return Poly._raw({k: _norm(v * other) for k, v in self._t.items()})
        if not isinstance(other, Poly):
            return NotImplemented
        a, b = self._t, other._t
        if not a or not b:
            return Poly._raw({})
        if len(b) == 1:
            ((mb, cb),) = b.items()
            return Poly._raw({_mono_mul(ma, mb): _norm(ca * cb) for ma, ca in a.items()})
        if len(a) == 1:
            ((ma, ca),) = a.items()
            return Poly._raw({_mono_mul(ma, mb): _norm(ca * cb) for mb, cb in b.items()})
        t: Dict[Monomial, Number] = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                k = _mono_mul(ma, mb)
                t[k] = t.get(k, 0) + ca * cb
        return Poly._raw({k: _norm(v) for k, v in t.items() if v})

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Poly":
        # only exact division by a rational constant
        if isinstance(other, Poly):
            if not other.is_constant():
                raise PolyError("division by a non-constant polynomial")
            other = other.constant_value()
        if not other:
            raise ZeroDivisionError("polynomial division by zero")
        inv = Fraction(1) / other
        return self * inv

    def __pow__(self, k: int) -> "Poly":
        if not isinstance(k, int) or k < 0:
            raise PolyError("only non-negative integer powers")
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    # -- inspection
    def is_constant(self) -> bool:
        return not self._t or (len(self._t) == 1 and () in self._t)

    def constant_value(self) -> Number:
        if not self.is_constant():
            raise PolyError(f"{self} is not constant")
        return self._t.get((), 0)

    def constant_term(self) -> Number:
        return self._t.get((), 0)

    def variables(self) -> Tuple[str, ...]:
        vs = {v for mono in self._t for v, _ in mono}
        return tuple(sorted((_names[v] for v in vs), key=_sort_key))

    def parameters(self) -> Tuple[str, ...]:
        return tuple(v for v in self.variables() if v not in RESERVED)

    def degree(self, name: Optional[str] = None) -> int:
        """Total degree, or degree in one variable; -1 for the zero polynomial."""
        if not self._t:
            return -1
        if name is None:
            return max(sum(e for _, e in mono) for mono in self._t)
        i = _index.get(name)
        return max((dict(mono).get(i, 0) for mono in self._t), default=0)

    def total_degree_in(self, names: Iterable[str]) -> int:
        ids = {_index[n] for n in names if n in _index}
        if not self._t:
            return -1
        return max(sum(e for v, e in mono if v in ids) for mono in self._t)

    # -- structural operations
    def coeff_of(self, name: str, k: int) -> "Poly":
        """Coefficient of ``name**k`` as a polynomial in the other variables."""
        i = _vid(name)
        out: Dict[Monomial, Number] = {}
        for mono, c in self._t.items():
            e = 0
            rest = []
            for v, x in mono:
                if v == i:
                    e = x
                else:
                    rest.append((v, x))
            if e == k:
                out[tuple(rest)] = c
        return Poly._raw(out)

    def split_by(self, names: Iterable[str]) -> Dict[Tuple[int, ...], "Poly"]:
        """Group terms by their exponents in ``names``.

        Returns ``{exponent tuple: coefficient polynomial in the remaining
        variables}``; the exponent tuple follows the order of ``names``.
        """
        names = list(names)
        ids = [_vid(n) for n in names]
        pos = {v: j for j, v in enumerate(ids)}
        groups: Dict[Tuple[int, ...], Dict[Monomial, Number]] = {}
        for mono, c in self._t.items():
            key = [0] * len(ids)
            rest = []
            for v, e in mono:
                j = pos.get(v)
                if j is None:
                    rest.append((v, e))
                else:
                    key[j] = e
            groups.setdefault(tuple(key), {})[tuple(rest)] = c
        return {k: Poly._raw(v) for k, v in groups.items()}

    def substitute(self, name: str, expr) -> "Poly":
        return self.substitute_many({name: expr})

    def substitute_many(self, mapping: Mapping[str, object]) -> "Poly":
        """Simultaneous substitution ``name -> expr`` for every key."""
        if not self._t:
            return self
        sub = {}
        for k, v in mapping.items():
            i = _index.get(k)
            if i is not None:
                sub[i] = Poly._coerce(v)
        if not sub:
            return self
        cache: Dict[Tuple[int, int], Poly] = {}

        def power(v: int, e: int) -> Poly:
            p = cache.get((v, e))
            if p is None:
                if e < 0:
                    base = sub[v]
                    if len(base._t) != 1:
                        raise PolyError(f"cannot invert {base} for Laurent substitution")
                    p = base._inverse_monomial() ** (-e)
                elif e == 1:
                    p = sub[v]
                elif e == 0:
                    p = Poly.const(1)
                else:
                    p = power(v, e - 1) * sub[v]
                cache[(v, e)] = p
            return p

        acc: Dict[Monomial, Number] = {}
        for mono, c in self._t.items():
            keep = []
            factor = None
            for v, e in mono:
                if v in sub:
                    f = power(v, e)
                    factor = f if factor is None else factor * f
                else:
                    keep.append((v, e))
            if factor is None:
                k = tuple(keep)
                acc[k] = acc.get(k, 0) + c
                continue
            km = tuple(keep)
            for mf, cf in factor._t.items():
                k = _mono_mul(km, mf)
                acc[k] = acc.get(k, 0) + c * cf
        return Poly._raw({k: _norm(v) for k, v in acc.items() if v})

    def _inverse_monomial(self) -> "Poly":
        if len(self._t) != 1:
            raise PolyError(f"cannot invert {self}")
        ((mono, c),) = self._t.items()
        if any(v in _RESERVED_IDS for v, _ in mono):
            raise PolyError("cannot invert a reserved indeterminate")
        return Poly._raw({tuple((v, -e) for v, e in mono): _norm(Fraction(1) / c)})

    def eval_params(self, assignment: Mapping[str, Number]) -> "Poly":
        """Specialize every parameter; all parameters present must be assigned."""
        missing = [p for p in self.parameters() if p not in assignment]
        if missing:
            raise MissingParameterError(f"no value for parameter(s) {', '.join(missing)}")
        return self.substitute_many({k: Poly.const(v) for k, v in assignment.items()})

    def shift_d(self, by: "Poly") -> "Poly":
        """p(d) -> p(d + by)."""
        return self.substitute_many({"d": D + by})

    def divmod_univariate(self, divisor: "Poly", name: str = "d") -> Tuple["Poly", "Poly"]:
        """Long division by ``divisor`` in the variable ``name``.

        The divisor's leading coefficient in ``name`` must be a nonzero
        constant; everything else (other variables, parameters) rides along.
        """
        if divisor.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        k = divisor.degree(name)
        top = divisor.coeff_of(name, k)
        if not top.is_constant():
            raise PolyError("divisor needs a constant leading coefficient")
        lead = top.constant_value()
        x = Poly.var(name)
        q = Poly()
        r = self
        while not r.is_zero() and r.degree(name) >= k:
            e = r.degree(name)
            top = r.coeff_of(name, e) * Fraction(1, 1) / lead
            t = top * (x ** (e - k))
            q = q + t
            r = r - t * divisor
        return q, r

    # -- printing
    def sorted_terms(self):
        """Terms in graded-lex order over the fixed variable order."""
        rows = []
        for mono, c in self._t.items():
            named = sorted(((_names[v], e) for v, e in mono), key=lambda t: _sort_key(t[0]))
            deg = sum(e for _, e in named)
            rows.append((named, deg, c))

        def key(row):
            named, deg, _ = row
            return (-deg, tuple((_sort_key(n), -e) for n, e in named))

        rows.sort(key=key)
        return [(named, c) for named, _, c in rows]

    def __str__(self) -> str:
        if not self._t:
            return "0"
        parts = []
        for named, c in self.sorted_terms():
            body = "*".join(n if e == 1 else f"{n}^{e}" for n, e in named)
            neg = c < 0
            a = -c if neg else c
            if body:
                s = body if a == 1 else f"{a}*{body}"
            else:
                s = str(a)
            if not parts:
                parts.append(("-" if neg else "") + s)
            else:
                parts.append((" - " if neg else " + ") + s)
        return "".join(parts)

    def __repr__(self) -> str:
        return f"Poly({str(self)!r})"


def var(name: str) -> Poly:
    return Poly.var(name)


def const(c: Number) -> Poly:
    return Poly.const(c)


D = Poly.var("d")
LAM = Poly.var("l")
MU = Poly.var("m")
NU = Poly.var("n")
ZERO = Poly()
ONE = Poly.const(1)


# ------------------------------------------------------------------ parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


def _tokenize(text: str) -> Iterator[Tuple[str, str, int]]:
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        if m.group(1) is not None:
            yield "num", m.group(1), m.start(1)
        elif m.group(2) is not None:
            yield "name", m.group(2), m.start(2)
        elif m.group(3) is not None:
            ch = m.group(3)
            if ch not in "+-*^/()":
                raise ParseError(f"unexpected character {ch!r}", m.start(3), text)
            yield "op", ch, m.start(3)
        pos = m.end()
    yield "end", "", len(text)


class _Parser:
    def __init__(self, text, params, bindings):
        self.text = text
        self.toks = list(_tokenize(text))
        self.i = 0
        self.params = params
        self.bindings = bindings

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_op(self, ch):
        kind, val, pos = self.take()
        if kind != "op" or val != ch:
            raise ParseError(f"expected {ch!r}", pos, self.text)

    def parse(self) -> Poly:
        p = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos, self.text)
        return p

    def expr(self) -> Poly:
        p = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                q = self.term()
                p = p + q if val == "+" else p - q
            else:
                return p

    def term(self) -> Poly:
        p = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                p = p * self.unary()
            else:
                return p

    def unary(self) -> Poly:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            p = self.unary()
            return -p if val == "-" else p
        return self.power()

    def power(self) -> Poly:
        base, laurent_ok = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            sign = 1
            kind, val, pos = self.peek()
            if kind == "op" and val == "-":
                self.take()
                sign = -1
            kind, val, pos = self.take()
            if kind != "num":
                raise ParseError("expected integer exponent", pos, self.text)
            e = sign * int(val)
            if e < 0:
                if not laurent_ok:
                    raise ParseError("negative exponent only allowed on a parameter", pos, self.text)
                return base._inverse_monomial() ** (-e)
            if e > _EXP_MAX:
                raise OverflowError("exponent exceeds 2^31-1")
            return base ** e
        return base

    def atom(self) -> Tuple[Poly, bool]:
        kind, val, pos = self.take()
        if kind == "num":
            num = int(val)
            k2, v2, _ = self.peek()
            if k2 == "op" and v2 == "/":
                self.take()
                k3, v3, p3 = self.take()
                if k3 != "num":
                    raise ParseError("expected integer denominator", p3, self.text)
                if int(v3) == 0:
                    raise ParseError("zero denominator", p3, self.text)
                return Poly.const(Fraction(num, int(v3))), False
            return Poly.const(num), False
        if kind == "name":
            if val in self.bindings:
                return Poly._coerce(self.bindings[val]), False
            if val in RESERVED:
                return Poly.var(val), False
            if val in self.params:
                return Poly.var(val), True
            raise UnknownSymbolError(f"unknown symbol {val!r}", pos, self.text)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect_op(")")
            return p, False
        if kind == "end":
            raise ParseError("unexpected end of input", pos, self.text)
        raise ParseError(f"unexpected {val!r}", pos, self.text)


def parse(
    text: str,
    params: Iterable[str] = (),
    bindings: Optional[Mapping[str, object]] = None,
) -> Poly:
    """Parse the ASCII expression grammar.

    ``params`` lists the declared parameter names; ``bindings`` maps extra
    names (e.g. a loop index ``i``) to numbers or polynomials.
    """
    return _Parser(text, frozenset(params), dict(bindings or {})).parse()
