"""Vector fields, differential forms up to degree 3, and polynomial maps.

Everything is exact: components are :class:`RatFn` values, maps are tuples of
:class:`Poly`.  Coordinate changes go through a stored polynomial inverse;
there is no numerical fallback.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg
from .algebra import ContextMismatch, Poly, RatFn, VarContext, as_ratfn, parse_poly


class GeometryError(ValueError):
    pass


class InversionFailed(GeometryError):
    pass


class NotClosed(GeometryError):
    def __init__(self, message: str, residual: KForm | None = None):
        super().__init__(message)
        self.residual = residual


class NonPolynomial(GeometryError):
    pass


def _check_ctx(*objs):
    ctx = objs[0].ctx
    for o in objs[1:]:
        if o.ctx != ctx:
            raise ContextMismatch(f"contexts differ: {ctx.names} vs {o.ctx.names}")
    return ctx


# ---------------------------------------------------------------------------
# vector fields


@dataclass(frozen=True, eq=True)
class VecField:
    ctx: VarContext
    components: tuple[RatFn, ...]

    def __post_init__(self):
        comps = tuple(as_ratfn(c, self.ctx) for c in self.components)
        if len(comps) != self.ctx.n:
            raise ValueError(f"vector field needs {self.ctx.n} components, got {len(comps)}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def parse(cls, ctx: VarContext, exprs: Sequence[str]) -> VecField:
        return cls(ctx, tuple(RatFn.from_poly(parse_poly(e, ctx)) for e in exprs))

    @classmethod
    def zero(cls, ctx: VarContext) -> VecField:
        return cls(ctx, (RatFn.constant(ctx, 0),) * ctx.n)

    @classmethod
    def coordinate(cls, ctx: VarContext, i: int) -> VecField:
        """The constant field d/dx_i."""
        return cls(ctx, tuple(RatFn.constant(ctx, 1 if k == i else 0) for k in range(ctx.n)))

    def __getitem__(self, i: int) -> RatFn:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def is_polynomial(self) -> bool:
        return all(c.is_polynomial() for c in self.components)

    def __add__(self, other: VecField) -> VecField:
        _check_ctx(self, other)
        return VecField(self.ctx, tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: VecField) -> VecField:
        _check_ctx(self, other)
        return VecField(self.ctx, tuple(a - b for a, b in zip(self, other)))

    def __neg__(self) -> VecField:
        return VecField(self.ctx, tuple(-a for a in self))

    def scale(self, factor) -> VecField:
        factor = as_ratfn(factor, self.ctx)
        return VecField(self.ctx, tuple(factor * a for a in self))

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def over_common_denominator(self) -> tuple[list[Poly], Poly]:
        """Numerators A_i and a monic D with m_i = A_i / D."""
        den = self.ctx.one()
        for c in self.components:
            if not c.den.is_constant() and c.den != den:
                den = (den * c.den).divexact(den.gcd(c.den))
        if den.is_constant():
            return [c.num for c in self.components], den
        return [(c.num * den.divexact(c.den)) for c in self.components], den

    def apply(self, fn) -> RatFn:
        """Directional derivative m(fn) = sum_i m_i dfn/dx_i."""
        fn = as_ratfn(fn, self.ctx)
        nums, den = self.over_common_denominator()
        p, q = fn.num, fn.den
        total = self.ctx.zero()
        if q.is_constant():
            for i, a in enumerate(nums):
                if a:
                    total = total + a * p.diff(i)
            return RatFn(total, den * q)
        for i, a in enumerate(nums):
            if a:
                total = total + a * (p.diff(i) * q - p * q.diff(i))
        return RatFn(total, den * q * q)

    def substitute(self, images: Sequence[Poly], ctx: VarContext) -> VecField:
        return VecField(ctx, tuple(c.substitute(images, ctx) for c in self.components))

    def in_context(self, ctx: VarContext) -> VecField:
        return VecField(ctx, tuple(c.in_context(ctx) for c in self.components))

    def parallel_to(self, other: VecField) -> bool:
        """True when self = alpha * other for some rational function alpha."""
        _check_ctx(self, other)
        n = self.ctx.n
        for i in range(n):
            for j in range(i + 1, n):
                if self[i] * other[j] != self[j] * other[i]:
                    return False
        return True

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.components]

    def __str__(self) -> str:
        return "(" + ", ".join(self.to_strings()) + ")"


def lie_bracket(m1: VecField, m2: VecField) -> VecField:
    """[m1, m2] = (Dm2) m1 - (Dm1) m2."""
    ctx = _check_ctx(m1, m2)
    n = ctx.n
    a, da = m1.over_common_denominator()
    b, db = m2.over_common_denominator()
    # with m1 = a/da and m2 = b/db:
    # [m1,m2]_i = (da * sum_j a_j (db ∂_j b_i - b_i ∂_j db) - db * sum_j b_j (da ∂_j a_i - a_i ∂_j da)) / (da^2 db^2)
    dda = [da.diff(j) for j in range(n)]
    ddb = [db.diff(j) for j in range(n)]
    a_const, b_const = da.is_constant(), db.is_constant()
    out = []
    for i in range(n):
        first = ctx.zero()
        for j in range(n):
            if a[j] and b[i]:
                t = b[i].diff(j)
                if not b_const:
                    t = t * db - b[i] * ddb[j]
                if t:
                    first = first + a[j] * t
        second = ctx.zero()
        for j in range(n):
            if b[j] and a[i]:
                t = a[i].diff(j)
                if not a_const:
                    t = t * da - a[i] * dda[j]
                if t:
                    second = second + b[j] * t
        if a_const and b_const:
            out.append(RatFn(first * (1 / (da.constant_value() * db.constant_value()))
                             - second * (1 / (da.constant_value() * db.constant_value()))))
            continue
        # denominators: first carries da*db^2 (or da*db when db is constant), second db*da^2 likewise
        den_first = da * db * (db if not b_const else ctx.one())
        den_second = db * da * (da if not a_const else ctx.one())
        out.append(RatFn(first, den_first) - RatFn(second, den_second))
    return VecField(ctx, tuple(out))


# ---------------------------------------------------------------------------
# differential forms


def _sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


@dataclass(frozen=True)
class KForm:
    """k-form with coefficients on strictly increasing index tuples."""

    ctx: VarContext
    degree: int
    coeffs: dict = field(default_factory=dict, compare=False, hash=False)

    MAX_DEGREE = 3

    def __post_init__(self):
        if not 1 <= self.degree <= self.MAX_DEGREE:
            raise GeometryError(f"form degree {self.degree} not in 1..{self.MAX_DEGREE}")
        if self.degree > self.ctx.n:
            raise GeometryError(f"degree {self.degree} exceeds dimension {self.ctx.n}")
        clean: dict[tuple[int, ...], RatFn] = {}
        for idx, c in dict(self.coeffs).items():
            if len(idx) != self.degree or not all(0 <= i < self.ctx.n for i in idx):
                raise GeometryError(f"bad index tuple {idx} for a {self.degree}-form")
            sign, key = _sort_sign(idx)
            if not sign:
                continue
            c = as_ratfn(c, self.ctx) * sign
            clean[key] = clean[key] + c if key in clean else c
        object.__setattr__(self, "coeffs", {k: v for k, v in sorted(clean.items()) if v})

    @classmethod
    def one_form(cls, ctx: VarContext, components: Sequence) -> KForm:
        if len(components) != ctx.n:
            raise ValueError(f"1-form needs {ctx.n} coefficients, got {len(components)}")
        return cls(ctx, 1, {(i,): c for i, c in enumerate(components)})

    @classmethod
    def parse_one_form(cls, ctx: VarContext, exprs: Sequence[str]) -> KForm:
        return cls.one_form(ctx, [parse_poly(e, ctx) for e in exprs])

    @classmethod
    def basis(cls, ctx: VarContext, *idx: int) -> KForm:
        return cls(ctx, len(idx), {tuple(idx): RatFn.constant(ctx, 1)})

    def __eq__(self, other):
        if not isinstance(other, KForm):
            return NotImplemented
        return self.ctx == other.ctx and self.degree == other.degree and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.ctx, self.degree, tuple(self.coeffs.items())))

    def __getitem__(self, idx) -> RatFn:
        if isinstance(idx, int):
            idx = (idx,)
        sign, key = _sort_sign(idx)
        c = self.coeffs.get(key)
        if c is None or not sign:
            return RatFn.constant(self.ctx, 0)
        return c if sign > 0 else -c

    def components(self) -> list[RatFn]:
        """Coefficient list of a 1-form."""
        if self.degree != 1:
            raise GeometryError("components() is defined for 1-forms only")
        return [self[i] for i in range(self.ctx.n)]

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_polynomial(self) -> bool:
        return all(c.is_polynomial() for c in self.coeffs.values())

    def _combine(self, other: KForm, sign: int) -> KForm:
        _check_ctx(self, other)
        if self.degree != other.degree:
            raise GeometryError("cannot add forms of different degree")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out[k] + v * sign if k in out else v * sign
        return KForm(self.ctx, self.degree, out)

    def __add__(self, other: KForm) -> KForm:
        return self._combine(other, 1)

    def __sub__(self, other: KForm) -> KForm:
        return self._combine(other, -1)

    def __neg__(self) -> KForm:
        return KForm(self.ctx, self.degree, {k: -v for k, v in self.coeffs.items()})

    def scale(self, factor) -> KForm:
        factor = as_ratfn(factor, self.ctx)
        return KForm(self.ctx, self.degree, {k: factor * v for k, v in self.coeffs.items()})

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def substitute(self, images: Sequence[Poly], ctx: VarContext) -> KForm:
        """Substitute coefficients only (no Jacobian factor)."""
        return KForm(ctx, self.degree, {k: v.substitute(images, ctx) for k, v in self.coeffs.items()})

    def in_context(self, ctx: VarContext) -> KForm:
        return KForm(ctx, self.degree, {k: v.in_context(ctx) for k, v in self.coeffs.items()})

    def to_strings(self) -> list[str]:
        if self.degree == 1:
            return [str(c) for c in self.components()]
        return [f"{self._basis_name(k)}: {v}" for k, v in self.coeffs.items()]

    def _basis_name(self, key) -> str:
        return "∧".join(f"d{self.ctx.names[i]}" for i in key)

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k, v in self.coeffs.items():
            coef = str(v)
            if coef == "1":
                parts.append(self._basis_name(k))
            else:
                parts.append(f"({coef}) {self._basis_name(k)}")
        return " + ".join(parts)


def differential(p) -> KForm:
    """dp for a polynomial or rational function p."""
    r = p if isinstance(p, RatFn) else as_ratfn(p, p.ctx)
    return KForm.one_form(r.ctx, [r.diff(i) for i in range(r.ctx.n)])


def pair(omega: KForm, m: VecField) -> RatFn:
    """<omega, m> = sum_i omega_i m_i."""
    if omega.degree != 1:
        raise GeometryError(f"pairing needs a 1-form, got degree {omega.degree}")
    _check_ctx(omega, m)
    total = RatFn.constant(m.ctx, 0)
    for (i,), c in omega.coeffs.items():
        if m[i]:
            total = total + c * m[i]
    return total


def exterior_derivative(omega: KForm) -> KForm:
    ctx = omega.ctx
    k = omega.degree
    if k >= KForm.MAX_DEGREE:
        raise GeometryError(f"exterior derivative of a {k}-form exceeds the stored maximum degree")
    if k + 1 > ctx.n:
        raise GeometryError(f"a {k + 1}-form does not exist in dimension {ctx.n}")
    out: dict[tuple[int, ...], RatFn] = {}
    for idx, c in omega.coeffs.items():
        for j in range(ctx.n):
            if j in idx:
                continue
            d = c.diff(j)
            if d:
                sign, key = _sort_sign((j,) + idx)
                d = d if sign > 0 else -d
                out[key] = out[key] + d if key in out else d
    return KForm(ctx, k + 1, out)


def wedge_21(a: KForm, b: KForm) -> KForm:
    """a ∧ b for a 2-form a and a 1-form b."""
    if a.degree != 2 or b.degree != 1:
        raise GeometryError(f"wedge_21 needs degrees (2, 1), got ({a.degree}, {b.degree})")
    _check_ctx(a, b)
    ctx = a.ctx
    if ctx.n < 3:
        raise GeometryError("3-forms need dimension at least 3")
    out: dict[tuple[int, ...], RatFn] = {}
    for (i, j), c in a.coeffs.items():
        for (k,), d in b.coeffs.items():
            if k in (i, j):
                continue
            sign, key = _sort_sign((i, j, k))
            t = c * d if sign > 0 else -(c * d)
            out[key] = out[key] + t if key in out else t
    return KForm(ctx, 3, out)


def is_integrable(omega: KForm) -> bool:
    """dω ∧ ω = 0 identically (always true for n < 3)."""
    if omega.degree != 1:
        raise GeometryError("integrability is defined for 1-forms")
    if omega.ctx.n < 2:
        return True
    d = exterior_derivative(omega)
    if d.is_zero() or omega.ctx.n < 3:
        return True
    return wedge_21(d, omega).is_zero()


def is_closed(omega: KForm) -> bool:
    if omega.ctx.n < omega.degree + 1:
        return True
    return exterior_derivative(omega).is_zero()


def two_form_apply(eta: KForm, f1: VecField, f2: VecField) -> RatFn:
    """eta(f1, f2) = sum_{i<j} eta_ij (f1_i f2_j - f1_j f2_i)."""
    if eta.degree != 2:
        raise GeometryError("two_form_apply needs a 2-form")
    total = RatFn.constant(eta.ctx, 0)
    for (i, j), c in eta.coeffs.items():
        total = total + c * (f1[i] * f2[j] - f1[j] * f2[i])
    return total


def integrate_exact(nu: KForm) -> Poly:
    """Potential P with dP = nu and P(0) = 0 via the radial homotopy formula."""
    if nu.degree != 1:
        raise GeometryError("integrate_exact needs a 1-form")
    if not nu.is_polynomial():
        raise NonPolynomial(f"coefficients are not polynomial: {nu}")
    if not is_closed(nu):
        raise NotClosed("form is not closed", exterior_derivative(nu))
    ctx = nu.ctx
    terms: dict[tuple[int, ...], Fraction] = {}
    for (i,), c in nu.coeffs.items():
        for e, coef in c.as_poly().terms.items():
            shifted = e[:i] + (e[i] + 1,) + e[i + 1:]
            terms[shifted] = terms.get(shifted, Fraction(0)) + coef / (sum(e) + 1)
    return Poly(ctx, terms)


# ---------------------------------------------------------------------------
# polynomial maps


@dataclass(frozen=True, eq=False)
class PolyMap:
    """z = Phi(x): components are polynomials over ``ctx`` (the x side).

    ``target`` names the output coordinates; it defaults to ``ctx``.  An exact
    inverse, once known, is attached and reused.
    """

    ctx: VarContext
    components: tuple[Poly, ...]
    target: VarContext | None = None
    _inverse: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.ctx.n:
            raise ValueError(f"map needs {self.ctx.n} components, got {len(comps)}")
        for c in comps:
            if c.ctx != self.ctx:
                raise ContextMismatch("map components must live in the source context")
        object.__setattr__(self, "components", comps)
        if self.target is None:
            object.__setattr__(self, "target", self.ctx)
        elif self.target.n != self.ctx.n:
            raise ValueError("source and target dimensions differ")

    @classmethod
    def identity(cls, ctx: VarContext, target: VarContext | None = None) -> PolyMap:
        m = cls(ctx, ctx.gens(), target)
        m._inverse.append(cls((target or ctx), (target or ctx).gens(), ctx))
        return m

    @classmethod
    def parse(cls, ctx: VarContext, exprs: Sequence[str], target: VarContext | None = None) -> PolyMap:
        return cls(ctx, tuple(parse_poly(e, ctx) for e in exprs), target)

    @property
    def n(self) -> int:
        return self.ctx.n

    @property
    def inverse(self) -> PolyMap | None:
        return self._inverse[0] if self._inverse else None

    def with_inverse(self, inverse: PolyMap, verify: bool = True) -> PolyMap:
        """Attach a known inverse (checked both ways unless ``verify`` is False)."""
        if inverse.ctx.n != self.n:
            raise ValueError("inverse has the wrong dimension")
        inv = PolyMap(self.target, tuple(c.in_context(self.target) if c.ctx != self.target else c
                                         for c in inverse.components), self.ctx)
        if verify and not (compose(inv, self).is_identity() and compose(self, inv).is_identity()):
            raise InversionFailed("supplied inverse does not invert the map")
        if self._inverse:
            self._inverse[0] = inv
        else:
            self._inverse.append(inv)
        if not inv._inverse:
            inv._inverse.append(self)
        return self

    def require_inverse(self) -> PolyMap:
        if self.inverse is None:
            invert_triangular(self)
        return self.inverse

    def is_identity(self) -> bool:
        return all(c == g for c, g in zip(self.components, self.ctx.gens()))

    def jacobian(self) -> list[list[Poly]]:
        return [[c.diff(j) for j in range(self.n)] for c in self.components]

    def __call__(self, point: Sequence) -> tuple[Fraction, ...]:
        return tuple(c.evaluate(point) for c in self.components)

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.ctx == other.ctx and self.target == other.target and self.components == other.components

    def __hash__(self):
        return hash((self.ctx, self.target, self.components))

    def to_strings(self) -> list[str]:
        return [str(c) for c in self.components]

    def __str__(self) -> str:
        return "(" + ", ".join(self.to_strings()) + ")"


def compose(outer: PolyMap, inner: PolyMap) -> PolyMap:
    """(outer ∘ inner)(x) = outer(inner(x))."""
    if outer.n != inner.n:
        raise ValueError(f"dimension mismatch: {outer.n} vs {inner.n}")
    comps = tuple(c.substitute(inner.components, inner.ctx) for c in outer.components)
    return PolyMap(inner.ctx, comps, outer.target)


def determinant(matrix: Sequence[Sequence], zero, one=None):
    """Exact determinant by row expansion over column subsets (works in any ring)."""
    n = len(matrix)
    if n == 0:
        return one
    memo: dict[frozenset, object] = {frozenset(): one}

    def minor(row: int, cols: frozenset):
        if cols in memo:
            return memo[cols]
        total = zero
        ordered = sorted(cols)
        for pos, c in enumerate(ordered):
            entry = matrix[row][c]
            if not entry:
                continue
            sub = minor(row + 1, cols - {c})
            if not sub:
                continue
            term = entry * sub
            total = total + term if pos % 2 == 0 else total - term
        memo[cols] = total
        return total

    return minor(0, frozenset(range(n)))


def jacobian_determinant(phi: PolyMap) -> Poly:
    return determinant(phi.jacobian(), phi.ctx.zero(), phi.ctx.one())


def _ratfn_inverse_matrix(matrix: list[list[RatFn]]) -> list[list[RatFn]]:
    n = len(matrix)
    ctx = matrix[0][0].ctx
    zero, one = RatFn.constant(ctx, 0), RatFn.constant(ctx, 1)
    aug = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = min((i for i in range(col, n) if aug[i][col]),
                    key=lambda i: (not aug[i][col].is_constant(), aug[i][col].num.degree()), default=None)
        if pivot is None:
            raise GeometryError("Jacobian is singular as a rational matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = aug[col][col].inverse()
        aug[col] = [x * inv if x else x for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col]:
                factor = aug[i][col]
                aug[i] = [a - factor * b if b else a for a, b in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


def pushforward(phi: PolyMap, m: VecField) -> VecField:
    """Phi_* m = (dPhi/dx) m, re-expressed in the target coordinates."""
    if m.ctx != phi.ctx:
        raise ContextMismatch("vector field and map live in different contexts")
    inv = phi.require_inverse()
    jac = phi.jacobian()
    comps = []
    for row in jac:
        total = RatFn.constant(phi.ctx, 0)
        for entry, mi in zip(row, m.components):
            if entry and mi:
                total = total + mi * entry
        comps.append(total)
    return VecField(phi.ctx, tuple(comps)).substitute(inv.components, phi.target)


def pullback(phi: PolyMap, omega: KForm) -> KForm:
    """Phi^* omega = omega (dPhi/dx)^{-1}, re-expressed in the target coordinates."""
    if omega.degree != 1:
        raise GeometryError("pullback is implemented for 1-forms")
    if omega.ctx != phi.ctx:
        raise ContextMismatch("form and map live in different contexts")
    inv = phi.require_inverse()
    jac = [[RatFn.from_poly(e) for e in row] for row in phi.jacobian()]
    jinv = _ratfn_inverse_matrix(jac)
    w = omega.components()
    n = phi.n
    comps = []
    for j in range(n):
        total = RatFn.constant(phi.ctx, 0)
        for i in range(n):
            if w[i] and jinv[i][j]:
                total = total + w[i] * jinv[i][j]
        comps.append(total)
    return KForm.one_form(phi.ctx, comps).substitute(inv.components, phi.target)


# ---------------------------------------------------------------------------
# triangular inversion


def _combination_for(eqs: list[Poly], j: int) -> tuple[list[Fraction], Fraction] | None:
    """Rational weights c with sum c_k eqs_k = L x_j + (terms free of x_j), L != 0."""
    n_big = eqs[0].ctx.n
    pure = tuple(1 if i == j else 0 for i in range(n_big))
    rows: dict[tuple[int, ...], list[Fraction]] = {}
    lin = [Fraction(0)] * len(eqs)
    for k, e in enumerate(eqs):
        for exp, c in e.terms.items():
            if exp == pure:
                lin[k] = c
            elif exp[j]:
                rows.setdefault(exp, [Fraction(0)] * len(eqs))[k] = c
    if not any(lin):
        return None
    basis = linalg.nullspace(list(rows.values()), len(eqs))
    best = None
    for vec in basis:
        val = sum(c * l for c, l in zip(vec, lin))
        if val:
            key = (sum(1 for c in vec if c), vec)
            if best is None or key[0] < best[0]:
                best = (key[0], vec, val)
    if best is None:
        return None
    return best[1], best[2]


def _eliminate(eqs: list[Poly], remaining: list[int], exhaustive: bool):
    if not remaining:
        return [] if all(e.is_zero() for e in eqs) else None
    options = []
    for j in remaining:
        found = _combination_for(eqs, j)
        if found is not None:
            options.append((j, found))
    options.sort(key=lambda o: sum(1 for c in o[1][0] if c))
    for j, (weights, lead) in options:
        combo = eqs[0].ctx.zero()
        for c, e in zip(weights, eqs):
            if c:
                combo = combo + e * c
        xj = eqs[0].ctx.var(j)
        expr = -(combo - xj * lead) / lead
        drop = next(k for k, c in enumerate(weights) if c)
        images = list(eqs[0].ctx.gens())
        images[j] = expr
        rest_eqs = [e.substitute(images) for k, e in enumerate(eqs) if k != drop]
        rest = _eliminate(rest_eqs, [r for r in remaining if r != j], exhaustive)
        if rest is not None:
            return [(j, expr)] + rest
        if not exhaustive:
            return None
    return None


def invert_triangular(phi: PolyMap) -> PolyMap:
    """Exact polynomial inverse by successive linear elimination and back-substitution.

    At each step some rational combination of the remaining equations must
    read ``L*x_j + q`` with ``q`` free of ``x_j``; that variable is solved and
    substituted.  All variable orders are tried for n <= 6.
    """
    n = phi.n
    big = VarContext(tuple(f"_x{i}" for i in range(n)) + tuple(f"_z{i}" for i in range(n)))
    gens = big.gens()
    xs, zs = gens[:n], gens[n:]
    eqs = [c.substitute(xs, big) - zs[k] for k, c in enumerate(phi.components)]
    steps = _eliminate(eqs, list(range(n)), exhaustive=n <= 6)
    if steps is None:
        raise InversionFailed(f"no triangular elimination order inverts {phi}")
    solved: dict[int, Poly] = {}
    for j, expr in reversed(steps):
        images = list(gens)
        for k, val in solved.items():
            images[k] = val
        solved[j] = expr.substitute(images)
    tctx = phi.target
    back = list(tctx.zero() for _ in range(2 * n))
    for k in range(n):
        back[n + k] = tctx.var(k)
    comps = []
    for j in range(n):
        val = solved[j]
        if any(val.degree_in(i) > 0 for i in range(n)):
            raise InversionFailed("elimination left unsolved variables")
        comps.append(val.substitute(back, tctx))
    inverse = PolyMap(tctx, tuple(comps), phi.ctx)
    if not (compose(inverse, phi).is_identity() and compose(phi, inverse).is_identity()):
        raise InversionFailed(f"candidate inverse of {phi} failed the round trip")
    phi.with_inverse(inverse, verify=False)
    return inverse
