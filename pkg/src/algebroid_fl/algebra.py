"""Exact sparse multivariate polynomials and rational functions over Q.

A polynomial is stored as a dictionary mapping exponent tuples to nonzero
``Fraction`` coefficients.  Terms are printed in graded-lexicographic order
(highest first) with ``x1 > x2 > ... > xn``, so equal values always print
identically.

Example (context x1, x2):
  x1^2*x2 - 1/2  ->  {(2, 1): Fraction(1), (0, 0): Fraction(-1, 2)}
"""

from __future__ import annotations

import heapq
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Exponent = tuple[int, ...]
Terms = dict[Exponent, Fraction]

Number = int | Fraction


class ContextMismatch(ValueError):
    """Operands live in different variable contexts."""


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int, line: int | None = None):
        self.message = message
        self.text = text
        self.pos = pos
        self.line = line
        self.column = pos + 1
        where = f"line {line}, column {self.column}" if line is not None else f"column {self.column}"
        super().__init__(f"{message} at {where}: {text!r}")


@dataclass(frozen=True)
class VarContext:
    """Ordered, duplicate-free tuple of variable names."""

    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise ValueError("a variable context needs at least one variable")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        for name in names:
            if not _NAME_RE.fullmatch(name):
                raise ValueError(f"invalid variable name {name!r}")

    @classmethod
    def of(cls, *names: str) -> VarContext:
        if len(names) == 1 and not isinstance(names[0], str):
            names = tuple(names[0])
        return cls(tuple(names))

    @classmethod
    def indexed(cls, letter: str, n: int) -> VarContext:
        return cls(tuple(f"{letter}{i}" for i in range(1, n + 1)))

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r} in context {self.names}") from None

    def var(self, i: int | str) -> Poly:
        if isinstance(i, str):
            i = self.index(i)
        if not 0 <= i < self.n:
            raise IndexError(f"variable index {i} out of range for n={self.n}")
        exp = [0] * self.n
        exp[i] = 1
        return Poly(self, {tuple(exp): Fraction(1)})

    def gens(self) -> tuple[Poly, ...]:
        return tuple(self.var(i) for i in range(self.n))

    def const(self, c: Number) -> Poly:
        return Poly.constant(self, c)

    def zero(self) -> Poly:
        return Poly(self, {})

    def one(self) -> Poly:
        return Poly.constant(self, 1)

    def parse(self, text: str) -> Poly:
        return parse_poly(text, self)

    def __str__(self) -> str:
        return " ".join(self.names)


# ---------------------------------------------------------------------------
# raw dictionary arithmetic (shared by Poly and the gcd)


def _grlex_key(exp: Exponent):
    return (sum(exp), exp)


def _add(a: Terms, b: Terms) -> Terms:
    if len(a) < len(b):
        a, b = b, a
    out = dict(a)
    for e, c in b.items():
        s = out.get(e)
        if s is None:
            out[e] = c
        else:
            s += c
            if s:
                out[e] = s
            else:
                del out[e]
    return out


def _sub(a: Terms, b: Terms) -> Terms:
    out = dict(a)
    for e, c in b.items():
        s = out.get(e)
        if s is None:
            out[e] = -c
        else:
            s -= c
            if s:
                out[e] = s
            else:
                del out[e]
    return out


def _scale(a: Terms, c: Fraction) -> Terms:
    if not c:
        return {}
    if c == 1:
        return dict(a)
    return {e: v * c for e, v in a.items()}


def _as_int_terms(a: Terms) -> tuple[dict[Exponent, int], int]:
    den = 1
    for c in a.values():
        d = c.denominator
        if d != 1 and den % d:
            den = den * d // math.gcd(den, d)
    return {e: c.numerator * (den // c.denominator) for e, c in a.items()}, den


def _mul(a: Terms, b: Terms) -> Terms:
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    # accumulate integer numerators and divide once per output term
    ai, da = _as_int_terms(a)
    bi, db = _as_int_terms(b)
    out: dict[Exponent, int] = {}
    get = out.get
    b_items = list(bi.items())
    for ea, ca in ai.items():
        for eb, cb in b_items:
            e = tuple([x + y for x, y in zip(ea, eb)])
            out[e] = get(e, 0) + ca * cb
    den = da * db
    if den == 1:
        return {e: Fraction(c) for e, c in out.items() if c}
    return {e: Fraction(c, den) for e, c in out.items() if c}


def _mono_mul(a: Terms, exp: Exponent, c: Fraction) -> Terms:
    return {tuple(x + y for x, y in zip(e, exp)): v * c for e, v in a.items()}


def _lead(a: Terms) -> Exponent:
    return max(a, key=_grlex_key)


def _divides(e: Exponent, f: Exponent) -> bool:
    return all(x <= y for x, y in zip(e, f))


def _heap_key(e: Exponent):
    return (-sum(e), tuple(-x for x in e))


def _divexact(a: Terms, b: Terms) -> Terms | None:
    """Quotient a/b if b divides a exactly, else None."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if not a:
        return {}
    lb = _lead(b)
    cb = b[lb]
    if len(b) == 1:
        if not all(_divides(lb, e) for e in a):
            return None
        inv = 1 / cb
        return {tuple(x - y for x, y in zip(e, lb)): c * inv for e, c in a.items()}
    r = dict(a)
    q: Terms = {}
    # lazy-deletion heap over the remainder's exponents, grlex-largest first
    heap = [(_heap_key(e), e) for e in r]
    heapq.heapify(heap)
    rest = [(e, c) for e, c in b.items() if e != lb]
    while r:
        while True:
            _, lr = heapq.heappop(heap)
            if lr in r:
                break
        if not _divides(lb, lr):
            return None
        shift = tuple(x - y for x, y in zip(lr, lb))
        coef = r.pop(lr) / cb
        q[shift] = coef
        for e, v in rest:
            key = tuple(x + y for x, y in zip(e, shift))
            old = r.get(key)
            if old is None:
                r[key] = -coef * v
                heapq.heappush(heap, (_heap_key(key), key))
            else:
                s = old - coef * v
                if s:
                    r[key] = s
                else:
                    del r[key]
    return q


def _monic(a: Terms) -> Terms:
    if not a:
        return {}
    lc = a[_lead(a)]
    return _scale(a, 1 / lc) if lc != 1 else dict(a)


def _is_one(a: Terms) -> bool:
    return len(a) == 1 and all(x == 0 for x in next(iter(a))) and next(iter(a.values())) == 1


def _variables(a: Terms, n: int) -> set[int]:
    found = set()
    for e in a:
        for i in range(n):
            if e[i]:
                found.add(i)
    return found


def _deg_in(a: Terms, v: int) -> int:
    return max((e[v] for e in a), default=-1)


def _coeffs_in(a: Terms, v: int) -> dict[int, Terms]:
    """Split a into {power of x_v: coefficient (free of x_v)}."""
    out: dict[int, Terms] = {}
    for e, c in a.items():
        k = e[v]
        stripped = e[:v] + (0,) + e[v + 1:]
        out.setdefault(k, {})[stripped] = c
    return out


def _content_in(a: Terms, v: int, n: int) -> Terms:
    g: Terms | None = None
    for _, coeff in sorted(_coeffs_in(a, v).items()):
        g = _monic(coeff) if g is None else _gcd(g, coeff, n)
        if _is_one(g):
            break
    return g if g is not None else {}


def _prem(a: Terms, b: Terms, v: int) -> Terms:
    """Sparse pseudo-remainder of a by b in x_v (up to a factor lc(b)^k)."""
    db = _deg_in(b, v)
    lcb = _coeffs_in(b, v)[db]
    r = a
    n = len(next(iter(a))) if a else 0
    while r:
        dr = _deg_in(r, v)
        if dr < db:
            break
        lcr = _coeffs_in(r, v)[dr]
        shift = [0] * n
        shift[v] = dr - db
        r = _sub(_mul(lcb, r), _mul(_mono_mul(lcr, tuple(shift), Fraction(1)), b))
    return r


def _monomial_gcd(mono: Exponent, b: Terms) -> Terms:
    low = list(mono)
    for e in b:
        low = [min(x, y) for x, y in zip(low, e)]
    return {tuple(low): Fraction(1)}


def _gcd(a: Terms, b: Terms, n: int) -> Terms:
    """Monic gcd over Q.

    Trivial shapes are handled directly; otherwise the heuristic integer gcd
    is tried first and the primitive-PRS recursion is the fallback.
    """
    if not a:
        return _monic(b)
    if not b:
        return _monic(a)
    if len(a) == 1:
        return _monomial_gcd(next(iter(a)), b)
    if len(b) == 1:
        return _monomial_gcd(next(iter(b)), a)
    ia, ib = _to_primitive_int(a), _to_primitive_int(b)
    try:
        h = _heu_gcd(ia, ib)
    except _HeuristicFailed:
        return _prs_gcd(a, b, n)
    return _monic({e: Fraction(c) for e, c in h.items()})


class _HeuristicFailed(Exception):
    pass


def _to_primitive_int(a: Terms) -> dict[Exponent, int]:
    den = 1
    for c in a.values():
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = {e: int(c * den) for e, c in a.items()}
    g = 0
    for c in ints.values():
        g = math.gcd(g, c)
    return {e: c // g for e, c in ints.items()}


def _int_content(a: dict[Exponent, int]) -> int:
    g = 0
    for c in a.values():
        g = math.gcd(g, c)
        if g == 1:
            break
    return g


def _divexact_int(a: dict[Exponent, int], b: dict[Exponent, int]) -> dict[Exponent, int] | None:
    if not a:
        return {}
    lb = _lead(b)
    cb = b[lb]
    r = dict(a)
    q: dict[Exponent, int] = {}
    heap = [(_heap_key(e), e) for e in r]
    heapq.heapify(heap)
    rest = [(e, c) for e, c in b.items() if e != lb]
    while r:
        while True:
            _, lr = heapq.heappop(heap)
            if lr in r:
                break
        if not _divides(lb, lr):
            return None
        c, rem = divmod(r.pop(lr), cb)
        if rem:
            return None
        shift = tuple(x - y for x, y in zip(lr, lb))
        q[shift] = c
        for e, v in rest:
            key = tuple(x + y for x, y in zip(e, shift))
            old = r.get(key)
            if old is None:
                r[key] = -c * v
                heapq.heappush(heap, (_heap_key(key), key))
            else:
                s = old - c * v
                if s:
                    r[key] = s
                else:
                    del r[key]
    return q


def _heu_gcd(f: dict[Exponent, int], g: dict[Exponent, int]) -> dict[Exponent, int]:
    """Integer gcd of f, g (content included) by evaluation and xi-adic lifting."""
    zero = (0,) * len(next(iter(f)))
    if len(f) == 1 and zero in f or len(g) == 1 and zero in g:
        return {zero: math.gcd(_int_content(f), _int_content(g))}
    n = len(zero)
    present = [i for i in range(n) if any(e[i] for e in f) or any(e[i] for e in g)]
    cf, cg = _int_content(f), _int_content(g)
    gc = math.gcd(cf, cg)
    f = {e: c // cf for e, c in f.items()}
    g = {e: c // cg for e, c in g.items()}
    v = present[-1]
    norm = min(max(abs(c) for c in f.values()), max(abs(c) for c in g.values()))
    xi = 2 * norm + 29
    for _ in range(8):
        ff = _eval_int(f, v, xi)
        gg = _eval_int(g, v, xi)
        if ff and gg:
            h = _heu_gcd(ff, gg)
            big = _interpolate_int(h, v, xi)
            cont = _int_content(big)
            big = {e: c // cont for e, c in big.items()}
            if big[_lead(big)] < 0:
                big = {e: -c for e, c in big.items()}
            if _divexact_int(f, big) is not None and _divexact_int(g, big) is not None:
                return {e: c * gc for e, c in big.items()}
        xi = xi * 73794 * math.isqrt(math.isqrt(xi)) // 27011
    raise _HeuristicFailed


def _eval_int(f: dict[Exponent, int], v: int, xi: int) -> dict[Exponent, int]:
    out: dict[Exponent, int] = {}
    for e, c in f.items():
        key = e[:v] + (0,) + e[v + 1:]
        out[key] = out.get(key, 0) + c * xi ** e[v]
    return {e: c for e, c in out.items() if c}


def _interpolate_int(h: dict[Exponent, int], v: int, xi: int) -> dict[Exponent, int]:
    out: dict[Exponent, int] = {}
    k = 0
    half = xi // 2
    while h:
        nxt = {}
        for e, c in h.items():
            r = c % xi
            if r > half:
                r -= xi
            if r:
                out[e[:v] + (k,) + e[v + 1:]] = r
            q = (c - r) // xi
            if q:
                nxt[e] = q
        h = nxt
        k += 1
    return out


def _prs_gcd(a: Terms, b: Terms, n: int) -> Terms:
    """Monic gcd by content / primitive-part recursion over the variables."""
    if not a:
        return _monic(b)
    if not b:
        return _monic(a)
    if len(a) == 1:
        return _monomial_gcd(next(iter(a)), b)
    if len(b) == 1:
        return _monomial_gcd(next(iter(b)), a)
    if len(a) < len(b):
        a, b = b, a
    if _divexact(a, b) is not None:
        return _monic(b)
    va, vb = _variables(a, n), _variables(b, n)
    for v in va - vb:
        a = _content_in(a, v, n)
    for v in vb - va:
        b = _content_in(b, v, n)
    if len(a) == 1 or len(b) == 1 or (va - vb) or (vb - va):
        return _gcd(a, b, n)
    common = va & vb
    v = min(common, key=lambda i: (max(_deg_in(a, i), _deg_in(b, i)), i))
    ca, cb = _content_in(a, v, n), _content_in(b, v, n)
    pa, pb = _divexact(a, ca), _divexact(b, cb)
    c = _gcd(ca, cb, n)
    if _deg_in(pa, v) < _deg_in(pb, v):
        pa, pb = pb, pa
    while True:
        r = _prem(pa, pb, v)
        if not r:
            break
        if _deg_in(r, v) == 0:
            pb = {}
            break
        cr = _content_in(r, v, n)
        pa, pb = pb, _divexact(r, cr)
    if not pb:
        return _monic(c)
    h = _divexact(pb, _content_in(pb, v, n))
    return _monic(_mul(c, h))


# ---------------------------------------------------------------------------


class Poly:
    """Immutable sparse polynomial over Q in a fixed :class:`VarContext`."""

    __slots__ = ("ctx", "_terms", "_hash")

    def __init__(self, ctx: VarContext, terms: Terms | None = None):
        self.ctx = ctx
        self._terms: Terms = {e: c for e, c in (terms or {}).items() if c}
        self._hash = None

    @classmethod
    def _raw(cls, ctx: VarContext, terms: Terms) -> Poly:
        p = cls.__new__(cls)
        p.ctx = ctx
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, ctx: VarContext, c: Number) -> Poly:
        c = Fraction(c)
        return cls._raw(ctx, {(0,) * ctx.n: c} if c else {})

    @classmethod
    def from_terms(cls, ctx: VarContext, items: Iterable[tuple[Sequence[int], Number]]) -> Poly:
        out: Terms = {}
        for e, c in items:
            e = tuple(int(x) for x in e)
            if len(e) != ctx.n or any(x < 0 for x in e):
                raise ValueError(f"bad exponent {e} for n={ctx.n}")
            out[e] = out.get(e, 0) + Fraction(c)
        return cls(ctx, out)

    # -- inspection -------------------------------------------------------

    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and (0,) * self.ctx.n in self._terms)

    def constant_value(self) -> Fraction:
        """Value at the origin (the constant term)."""
        return self._terms.get((0,) * self.ctx.n, Fraction(0))

    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, v: int | str) -> int:
        if isinstance(v, str):
            v = self.ctx.index(v)
        return _deg_in(self._terms, v)

    def variables(self) -> set[int]:
        return _variables(self._terms, self.ctx.n)

    def leading_term(self) -> tuple[Exponent, Fraction]:
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        e = _lead(self._terms)
        return e, self._terms[e]

    def leading_coefficient(self) -> Fraction:
        return self.leading_term()[1]

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> Poly:
        if isinstance(other, Poly):
            if other.ctx != self.ctx:
                raise ContextMismatch(f"contexts differ: {self.ctx.names} vs {other.ctx.names}")
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.constant(self.ctx, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Poly._raw(self.ctx, _add(self._terms, other._terms))

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.ctx, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Poly._raw(self.ctx, _sub(self._terms, other._terms))

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Poly._raw(self.ctx, _scale(self._terms, Fraction(other)))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Poly._raw(self.ctx, _mul(self._terms, other._terms))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("polynomial exponent must be a non-negative integer")
        result = self.ctx.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division by zero")
            return Poly._raw(self.ctx, _scale(self._terms, 1 / Fraction(other)))
        return NotImplemented

    def divexact(self, other: Poly) -> Poly | None:
        """Exact quotient, or None when ``other`` does not divide ``self``."""
        other = self._coerce(other)
        q = _divexact(self._terms, other._terms)
        return None if q is None else Poly._raw(self.ctx, q)

    def monic(self) -> Poly:
        return Poly._raw(self.ctx, _monic(self._terms))

    def gcd(self, other: Poly) -> Poly:
        other = self._coerce(other)
        return Poly._raw(self.ctx, _gcd(self._terms, other._terms, self.ctx.n))

    # -- calculus and evaluation -----------------------------------------

    def diff(self, v: int | str) -> Poly:
        if isinstance(v, str):
            v = self.ctx.index(v)
        if not 0 <= v < self.ctx.n:
            raise IndexError(f"variable index {v} out of range")
        out: Terms = {}
        for e, c in self._terms.items():
            k = e[v]
            if k:
                out[e[:v] + (k - 1,) + e[v + 1:]] = c * k
        return Poly._raw(self.ctx, out)

    def evaluate(self, point: Sequence[Number]) -> Fraction:
        if len(point) != self.ctx.n:
            raise ValueError(f"point has length {len(point)}, expected {self.ctx.n}")
        pt = [Fraction(p) for p in point]
        total = Fraction(0)
        for e, c in self._terms.items():
            v = c
            for x, k in zip(pt, e):
                if k:
                    v *= x**k
            total += v
        return total

    def substitute(self, images: Sequence[Poly], ctx: VarContext | None = None) -> Poly:
        """Replace x_i by images[i]; the result lives in the images' context."""
        if len(images) != self.ctx.n:
            raise ValueError(f"need {self.ctx.n} images, got {len(images)}")
        if ctx is None:
            ctx = images[0].ctx if images else self.ctx
        for im in images:
            if im.ctx != ctx:
                raise ContextMismatch("substitution images must share one context")
        powers: list[dict[int, Terms]] = [{0: {(0,) * ctx.n: Fraction(1)}, 1: im._terms} for im in images]

        def power(i: int, k: int) -> Terms:
            cache = powers[i]
            if k not in cache:
                cache[k] = _mul(power(i, k - 1), cache[1])
            return cache[k]

        out: Terms = {}
        for e, c in self._terms.items():
            term: Terms = {(0,) * ctx.n: c}
            for i, k in enumerate(e):
                if k:
                    term = _mul(term, power(i, k))
            out = _add(out, term)
        return Poly._raw(ctx, out)

    def in_context(self, ctx: VarContext) -> Poly:
        """Rename into a context of equal dimension (same variable order)."""
        if ctx.n != self.ctx.n:
            raise ContextMismatch("contexts have different dimensions")
        return Poly._raw(ctx, dict(self._terms))

    # -- comparison and printing -----------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.constant(self.ctx, other)
        if isinstance(other, RatFn):
            return other == self
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ctx == other.ctx and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ctx, frozenset(self._terms.items())))
        return self._hash

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                name if k == 1 else f"{name}^{k}" for name, k in zip(self.ctx.names, e) if k
            )
            mag = abs(c)
            if not mono:
                body = _fmt_rational(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{_fmt_rational(mag)}*{mono}"
            pieces.append((c < 0, body))
        first_neg, first = pieces[0]
        out = ("-" if first_neg else "") + first
        for neg, body in pieces[1:]:
            out += (" - " if neg else " + ") + body
        return out

    def __repr__(self) -> str:
        return f"Poly({str(self)!r})"


def _fmt_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------


class RatFn:
    """Reduced quotient num/den of polynomials with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        if den is None:
            den = num.ctx.one()
        if num.ctx != den.ctx:
            raise ContextMismatch("numerator and denominator contexts differ")
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            self.num, self.den = num, num.ctx.one()
            return
        if not den.is_constant():
            g = num.gcd(den)
            if not g.is_constant():
                num, den = num.divexact(g), den.divexact(g)
        lc = den.leading_coefficient()
        if lc != 1:
            num, den = num / lc, den / lc
        self.num, self.den = num, den

    @classmethod
    def _reduced(cls, num: Poly, den: Poly) -> RatFn:
        r = cls.__new__(cls)
        r.num, r.den = num, den
        return r

    @classmethod
    def from_poly(cls, p: Poly) -> RatFn:
        return cls._reduced(p, p.ctx.one())

    @classmethod
    def constant(cls, ctx: VarContext, c: Number) -> RatFn:
        return cls._reduced(Poly.constant(ctx, c), ctx.one())

    @property
    def ctx(self) -> VarContext:
        return self.num.ctx

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def as_poly(self) -> Poly:
        if not self.is_polynomial():
            raise ValueError(f"not a polynomial: {self}")
        return self.num

    def is_constant(self) -> bool:
        return self.is_polynomial() and self.num.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"not a constant: {self}")
        return self.num.constant_value()

    def _coerce(self, other) -> RatFn:
        if isinstance(other, RatFn):
            if other.ctx != self.ctx:
                raise ContextMismatch(f"contexts differ: {self.ctx.names} vs {other.ctx.names}")
            return other
        if isinstance(other, Poly):
            if other.ctx != self.ctx:
                raise ContextMismatch(f"contexts differ: {self.ctx.names} vs {other.ctx.names}")
            return RatFn.from_poly(other)
        if isinstance(other, (int, Fraction)):
            return RatFn.constant(self.ctx, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b, c, d = self.num, self.den, other.num, other.den
        if b.is_constant() and d.is_constant():
            return RatFn._reduced(a + c, b)
        if b == d:
            return RatFn(a + c, b)
        if d.is_constant():
            return RatFn._reduced(a + c * b, b)
        if b.is_constant():
            return RatFn._reduced(a * d + c, d)
        g = b.gcd(d)
        bg, dg = b.divexact(g), d.divexact(g)
        num = a * dg + c * bg
        den = bg * d
        if g.is_constant():
            return RatFn._reduced(num, den)
        return RatFn(num, den)

    __radd__ = __add__

    def __neg__(self):
        return RatFn._reduced(-self.num, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return RatFn._reduced(self.num * other, self.den) if other else RatFn.constant(self.ctx, 0)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b, c, d = self.num, self.den, other.num, other.den
        if a.is_zero() or c.is_zero():
            return RatFn.constant(self.ctx, 0)
        if b.is_constant() and d.is_constant():
            return RatFn._reduced(a * c, b)
        g1 = a.gcd(d) if not d.is_constant() else None
        g2 = c.gcd(b) if not b.is_constant() else None
        if g1 is not None and not g1.is_constant():
            a, d = a.divexact(g1), d.divexact(g1)
        if g2 is not None and not g2.is_constant():
            c, b = c.divexact(g2), b.divexact(g2)
        den = b * d
        lc = den.leading_coefficient()
        return RatFn._reduced(a * c / lc, den / lc)

    __rmul__ = __mul__

    def inverse(self) -> RatFn:
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero rational function")
        return RatFn(self.den, self.num)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division by zero")
            return RatFn._reduced(self.num / other, self.den)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RatFn._reduced(self.num**k, self.den**k)

    def diff(self, v: int | str) -> RatFn:
        a, b = self.num, self.den
        if b.is_constant():
            return RatFn._reduced(a.diff(v), b)
        db = b.diff(v)
        num = a.diff(v) * b - a * db
        if num.is_zero():
            return RatFn.constant(self.ctx, 0)
        g = num.gcd(b)
        if g.is_constant():
            return RatFn._reduced(num, b * b)
        return RatFn(num, b * b)

    def evaluate(self, point: Sequence[Number]) -> Fraction:
        d = self.den.evaluate(point)
        if not d:
            raise ZeroDivisionError(f"denominator {self.den} vanishes at {tuple(point)}")
        return self.num.evaluate(point) / d

    def substitute(self, images: Sequence[Poly], ctx: VarContext | None = None) -> RatFn:
        num = self.num.substitute(images, ctx)
        if self.den.is_constant():
            return RatFn._reduced(num, num.ctx.one())
        return RatFn(num, self.den.substitute(images, ctx))

    def in_context(self, ctx: VarContext) -> RatFn:
        return RatFn._reduced(self.num.in_context(ctx), self.den.in_context(ctx))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            other = self._coerce(other)
        if not isinstance(other, RatFn):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __str__(self) -> str:
        if self.den.is_constant():
            return str(self.num)
        return f"({self.num})/({self.den})"

    def __repr__(self) -> str:
        return f"RatFn({str(self)!r})"


def as_ratfn(value, ctx: VarContext) -> RatFn:
    if isinstance(value, RatFn):
        if value.ctx != ctx:
            raise ContextMismatch("rational function lives in another context")
        return value
    if isinstance(value, Poly):
        if value.ctx != ctx:
            raise ContextMismatch("polynomial lives in another context")
        return RatFn.from_poly(value)
    if isinstance(value, (int, Fraction)):
        return RatFn.constant(ctx, value)
    if isinstance(value, str):
        return RatFn.from_poly(parse_poly(value, ctx))
    raise TypeError(f"cannot interpret {value!r} as a rational function")


def ratfn_normalize(num: Poly, den: Poly) -> RatFn:
    return RatFn(num, den)


# ---------------------------------------------------------------------------
# expression parser
#
#   expr   := ['+'|'-'] term (('+'|'-') term)*
#   term   := factor ('*' factor)*
#   factor := base ('^' uint)?
#   base   := var | rational | '(' expr ')'

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^()]))")


def _tokenize(text: str, line: int | None):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", text, start, line)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, ctx: VarContext, line: int | None):
        self.text = text
        self.ctx = ctx
        self.line = line
        self.tokens = _tokenize(text, line)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message: str, tok=None):
        tok = tok or self.peek()
        raise ParseError(message, self.text, tok[2], self.line)

    def parse(self) -> Poly:
        if self.peek()[0] == "end":
            self.fail("empty expression")
        p = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return p

    def expr(self) -> Poly:
        sign = 1
        if self.peek()[1] in "+-" and self.peek()[0] == "op":
            sign = -1 if self.take()[1] == "-" else 1
        total = self.term() * sign
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            t = self.term()
            total = total + t if op == "+" else total - t
        return total

    def term(self) -> Poly:
        p = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            p = p * self.factor()
        return p

    def factor(self) -> Poly:
        b = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            tok = self.take()
            if tok[0] != "num" or "/" in tok[1]:
                self.fail("exponent must be a non-negative integer", tok)
            b = b ** int(tok[1])
        return b

    def base(self) -> Poly:
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return self.ctx.const(Fraction(value))
        if kind == "name":
            if value not in self.ctx.names:
                self.fail(f"unknown variable {value!r}", tok)
            return self.ctx.var(value)
        if kind == "op" and value == "(":
            p = self.expr()
            if self.peek()[1] != ")":
                self.fail("expected ')'")
            self.take()
            return p
        if kind == "op" and value == "-":
            return -self.factor()
        self.fail("expected a variable, number or '('", tok)


def parse_poly(text: str, ctx: VarContext, line: int | None = None) -> Poly:
    """Parse an expression in the ``+ - * ^`` grammar over ``ctx``."""
    return _Parser(text, ctx, line).parse()


# ---------------------------------------------------------------------------
# convenience wrappers matching the operation names used elsewhere


def poly_add(a: Poly, b: Poly) -> Poly:
    return a + b


def poly_mul(a: Poly, b: Poly) -> Poly:
    return a * b


def poly_neg(a: Poly) -> Poly:
    return -a


def partial_derivative(p: Poly | RatFn, v: int | str):
    return p.diff(v)


def evaluate(p: Poly | RatFn, point: Sequence[Number]) -> Fraction:
    return p.evaluate(point)
