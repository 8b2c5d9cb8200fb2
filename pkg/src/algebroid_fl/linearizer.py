"""Linearizing outputs for single-input affine systems ẋ = f(x) + g(x)u.

Two routes are implemented:

* ``algorithm_II_phase1`` / ``algorithm_II_phase2`` iterate the 1-form anchor
  m - (ωm/ωg)g and then integrate a recombined 1-form.
* ``algorithm_I`` iterates straightening maps, keeps track of their inverses
  and reads the output off the composed forward map.

``classical_check`` runs the textbook rank and involutivity test first.
"""

from __future__ import annotations

import itertools
import os
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg
from .algebra import Poly, RatFn, VarContext, as_ratfn
from .algebroid import AlgebroidContext, anchor_I, anchor_II
from .geometry import (
    InversionFailed,
    KForm,
    NonPolynomial,
    PolyMap,
    VecField,
    compose,
    determinant,
    differential,
    exterior_derivative,
    integrate_exact,
    invert_triangular,
    is_closed,
    is_integrable,
    jacobian_determinant,
    lie_bracket,
    pair,
    pushforward,
)

SEED_ENV = "ALGEBROID_SEED"
STAGE_LETTERS = "xzwvuts"


class LinearizerError(ValueError):
    pass


class HeuristicExhausted(LinearizerError):
    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class DegenerateIteration(LinearizerError):
    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class NotExact(LinearizerError):
    def __init__(self, message: str, residual=None):
        super().__init__(message)
        self.residual = residual


class AmbiguousOutput(LinearizerError):
    pass


class ConditionsNotMet(LinearizerError):
    def __init__(self, message: str, diagnostics: Diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError as exc:
        raise LinearizerError(f"{SEED_ENV} must be an integer, got {raw!r}") from exc


def _rng(seed: int | random.Random | None) -> random.Random:
    if isinstance(seed, random.Random):
        return seed
    return random.Random(default_seed() if seed is None else seed)


def _random_point(rng: random.Random, n: int) -> list[Fraction]:
    return [Fraction(rng.randint(-97, 97), rng.randint(1, 13)) for _ in range(n)]


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class ControlSystem:
    ctx: VarContext
    f: VecField
    g: VecField

    def __post_init__(self):
        if self.f.ctx != self.ctx or self.g.ctx != self.ctx:
            raise LinearizerError("f and g must share the system context")
        if self.g.is_zero():
            raise LinearizerError("g is identically zero")

    @property
    def n(self) -> int:
        return self.ctx.n

    @classmethod
    def parse(cls, names: Sequence[str], f: Sequence[str], g: Sequence[str]) -> ControlSystem:
        ctx = VarContext(tuple(names))
        return cls(ctx, VecField.parse(ctx, f), VecField.parse(ctx, g))

    def lie_derivative(self, fn, field_name: str = "f") -> RatFn:
        return (self.f if field_name == "f" else self.g).apply(fn)


@dataclass(frozen=True)
class OmegaHints:
    """Candidate 1-forms per iteration; earlier candidates win."""

    per_iteration: tuple[tuple[KForm, ...], ...] = ()

    def __post_init__(self):
        cleaned = tuple(tuple(c) for c in self.per_iteration)
        for i, cands in enumerate(cleaned):
            for w in cands:
                if w.degree != 1:
                    raise LinearizerError(f"hint for iteration {i} is not a 1-form")
                if not is_integrable(w):
                    raise LinearizerError(f"hint for iteration {i} is not integrable: {w}")
        object.__setattr__(self, "per_iteration", cleaned)

    @classmethod
    def from_list(cls, forms: Sequence[KForm | None]) -> OmegaHints:
        return cls(tuple(() if w is None else (w,) for w in forms))

    def for_iteration(self, i: int) -> tuple[KForm, ...]:
        return self.per_iteration[i] if i < len(self.per_iteration) else ()


@dataclass(frozen=True)
class LocusWarning:
    """A warning tied to the variety where some expression vanishes."""

    message: str
    locus: object

    def __str__(self) -> str:
        return f"{self.message}: {self.locus} = 0"


@dataclass
class IterationRecord:
    i: int
    f: VecField
    g: VecField
    omega: KForm | None = None
    phi: PolyMap | None = None
    nu: KForm | None = None
    slot: int | None = None
    active: tuple[int, ...] = ()


@dataclass
class LinearizationTrace:
    method: str
    system: ControlSystem
    records: list[IterationRecord] = field(default_factory=list)
    y: Poly | None = None
    composed: PolyMap | None = None
    warnings: list[LocusWarning] = field(default_factory=list)

    def record(self, i: int) -> IterationRecord:
        return self.records[i]


@dataclass
class Diagnostics:
    rank: int
    n: int
    involutive: bool
    chain: list[VecField] = field(default_factory=list)
    non_involutive_pair: tuple[int, int] | None = None
    warnings: list[LocusWarning] = field(default_factory=list)
    timing: float = 0.0

    def __post_init__(self):
        if not 0 <= self.rank <= self.n:
            raise LinearizerError(f"rank {self.rank} outside [0, {self.n}]")

    @property
    def accessible(self) -> bool:
        return self.rank == self.n

    @property
    def linearizable(self) -> bool:
        return self.accessible and self.involutive


# ---------------------------------------------------------------------------
# classical conditions


def ad_chain(f: VecField, g: VecField, length: int) -> list[VecField]:
    """[g, ad_f g, ad_f^2 g, ...] with ad_f g = [f, g]."""
    chain = [g]
    for _ in range(length - 1):
        chain.append(lie_bracket(f, chain[-1]))
    return chain


def _lcm(a: Poly, b: Poly) -> Poly:
    return (a * b).divexact(a.gcd(b)).monic()


def _cleared_columns(fields: Sequence[VecField]) -> list[list[Poly]]:
    """Columns scaled by the lcm of their denominators (rank is unchanged)."""
    cols = []
    for v in fields:
        den = v.ctx.one()
        for c in v.components:
            if not c.den.is_constant():
                den = _lcm(den, c.den)
        cols.append([(c * den).as_poly() for c in v.components])
    return cols


def _numeric_rank(fields: Sequence[VecField], rng: random.Random, tries: int = 3) -> int:
    if not fields:
        return 0
    n = fields[0].ctx.n
    best = 0
    done = 0
    attempts = 0
    while done < tries and attempts < 50:
        attempts += 1
        point = _random_point(rng, n)
        try:
            rows = [[v[i].evaluate(point) for v in fields] for i in range(n)]
        except ZeroDivisionError:
            continue
        best = max(best, linalg.rank(rows, len(fields)))
        done += 1
    return best


def _minors_vanish(cols: list[list[Poly]], size: int, must_include: int | None = None) -> bool:
    n = len(cols[0])
    ctx = cols[0][0].ctx
    for cset in itertools.combinations(range(len(cols)), size):
        if must_include is not None and must_include not in cset:
            continue
        for rset in itertools.combinations(range(n), size):
            m = [[cols[c][r] for c in cset] for r in rset]
            if determinant(m, ctx.zero(), ctx.one()):
                return False
    return True


def classical_check(sys: ControlSystem, seed=None) -> Diagnostics:
    """Rank of (g, ad_f g, ..., ad_f^{n-1} g) and involutivity of its first n-1 members."""
    start = time.perf_counter()
    rng = _rng(seed)
    n = sys.n
    chain = ad_chain(sys.f, sys.g, n)
    rank = _numeric_rank(chain, rng)
    if rank == n:
        # exact confirmation: the determinant is a nonzero polynomial
        det = determinant([list(r) for r in zip(*_cleared_columns(chain))], sys.ctx.zero(), sys.ctx.one())
        if not det:
            raise LinearizerError("sampled full rank but the symbolic determinant vanishes")
    dist = chain[: n - 1]
    involutive = True
    bad = None
    if len(dist) >= 2:
        r = _numeric_rank(dist, rng)
        cols = _cleared_columns(dist)
        for i, j in itertools.combinations(range(len(dist)), 2):
            b = lie_bracket(dist[i], dist[j])
            if b.is_zero():
                continue
            if _numeric_rank(dist + [b], rng) > r:
                involutive, bad = False, (i, j)
                break
            if not _minors_vanish(cols + _cleared_columns([b]), r + 1):
                involutive, bad = False, (i, j)
                break
    return Diagnostics(rank, n, involutive, chain, bad, [], time.perf_counter() - start)


# ---------------------------------------------------------------------------
# choosing 1-forms


def _uncertified(omega: KForm, g: VecField, i: int) -> LocusWarning | None:
    og = pair(omega, g)
    if og.is_constant():
        return None
    return LocusWarning(f"iteration {i}: nonvanishing of ωg not certified", og)


def _exact_ansatz(g: VecField, max_degree: int) -> KForm | None:
    """dP with dP·g = 1 for a polynomial P of degree <= max_degree, if one exists."""
    if not g.is_polynomial():
        return None
    ctx = g.ctx
    comps = [c.as_poly() for c in g.components]
    for d in range(1, max_degree + 1):
        monos = _monomials(ctx.n, d)
        images = []
        for e in monos:
            p = Poly(ctx, {e: Fraction(1)})
            total = ctx.zero()
            for i, gi in enumerate(comps):
                if gi and e[i]:
                    total = total + p.diff(i) * gi
            images.append(total)
        keys = sorted({k for im in images for k in im.terms}, reverse=True)
        zero = tuple(0 for _ in range(ctx.n))
        if zero not in keys:
            keys.append(zero)
        rows = [[im.terms.get(k, Fraction(0)) for im in images] for k in keys]
        rhs = [Fraction(1) if k == zero else Fraction(0) for k in keys]
        sol = linalg.solve(rows, rhs, len(monos))
        if sol is not None:
            P = Poly(ctx, {e: c for e, c in zip(monos, sol) if c})
            return differential(P)
    return None


def choose_omega(g: VecField, hints: Sequence[KForm] = (), iteration: int = 0,
                 final: bool = False, max_degree: int = 4) -> KForm:
    """First admissible hint, else a coordinate form, else an exact ansatz.

    On the final iteration a coordinate form with nonconstant pairing is
    accepted as a last resort, since its pairing becomes the integrating factor.
    """
    if g.is_zero():
        raise LinearizerError("cannot choose ω for a zero field")
    for w in hints:
        if w.ctx == g.ctx and is_integrable(w) and pair(w, g):
            return w
    n = g.ctx.n
    const = [(j, g[j].constant_value()) for j in range(n) if g[j] and g[j].is_constant()]
    if const:
        const.sort(key=lambda jc: (abs(jc[1]) != 1, jc[0]))
        return KForm.basis(g.ctx, const[0][0])
    w = _exact_ansatz(g, max_degree)
    if w is not None:
        return w
    if final:
        j = next(j for j in range(n) if g[j])
        return KForm.basis(g.ctx, j)
    raise HeuristicExhausted(
        f"iteration {iteration}: no admissible 1-form found (tried hints, coordinate forms, "
        f"exact ansatz up to degree {max_degree}); supply a hint", iteration)


# ---------------------------------------------------------------------------
# Algorithm II


def algorithm_II_phase1(sys: ControlSystem, hints: OmegaHints | None = None,
                        max_degree: int = 4, require_conditions: bool = False,
                        seed=None) -> LinearizationTrace:
    hints = hints or OmegaHints()
    if require_conditions:
        diag = classical_check(sys, seed)
        if not diag.linearizable:
            raise ConditionsNotMet("classical linearizability conditions fail", diag)
    trace = LinearizationTrace("algebroid2", sys)
    n = sys.n
    f, g = sys.f, sys.g
    for i in range(n):
        final = i == n - 1
        for j, prev in enumerate(trace.records):
            if pair(prev.omega, f) or pair(prev.omega, g):
                raise LinearizerError(f"iteration {i}: ω_{j} no longer annihilates f_{i}, g_{i}")
        omega = choose_omega(g, hints.for_iteration(i), i, final, max_degree)
        ctx = AlgebroidContext(g, omega)
        warn = _uncertified(omega, g, i)
        if warn is not None:
            trace.warnings.append(warn)
        trace.records.append(IterationRecord(i, f, g, omega))
        if final:
            break
        f, g = anchor_II(f, ctx), anchor_II(lie_bracket(f, g), ctx)
        if g.is_zero():
            raise DegenerateIteration(
                f"iteration {i + 1}: g vanishes; the system is not linearizable or ω_{i} was a bad choice", i + 1)
    return trace


def algorithm_II_phase2(trace: LinearizationTrace) -> Poly:
    recs = trace.records
    if not recs or len(recs) != trace.system.n or any(r.omega is None for r in recs):
        raise LinearizerError("phase 2 needs a complete phase 1 trace")
    last = recs[-1]
    nu = last.omega
    last.nu = nu
    for k in range(len(recs) - 2, -1, -1):
        rec = recs[k]
        coef = pair(nu, rec.g) / pair(rec.omega, rec.g)
        if coef:
            nu = nu - rec.omega.scale(coef)
        rec.nu = nu
    factor = pair(last.omega, last.g)
    integrand = nu.scale(factor.inverse())
    if not is_closed(integrand):
        raise NotExact("ν_0/(ω g) is not closed", exterior_derivative(integrand))
    if not integrand.is_polynomial():
        raise NonPolynomial(f"integrand ν_0/(ω g) is not polynomial: {integrand}")
    y = integrate_exact(integrand)
    trace.y = y
    return y


def algorithm_II(sys: ControlSystem, hints: OmegaHints | None = None, max_degree: int = 4,
                 require_conditions: bool = False, seed=None) -> LinearizationTrace:
    trace = algorithm_II_phase1(sys, hints, max_degree, require_conditions, seed)
    algorithm_II_phase2(trace)
    return trace


# ---------------------------------------------------------------------------
# straightening maps


def _monomials(n: int, max_degree: int, min_degree: int = 1) -> list[tuple[int, ...]]:
    out = []
    for d in range(min_degree, max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            e = [0] * n
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    out.sort(key=lambda e: (sum(e), e), reverse=True)
    return out


def first_integral_basis(g: VecField, degree: int) -> list[Poly]:
    """Canonical basis of polynomial first integrals of g with degree <= ``degree``.

    Basis elements come from the reduced row echelon form with monomials
    ordered grlex-descending, so each one is monic in that order.
    """
    ctx = g.ctx
    gnum = _cleared_columns([g])[0]
    monos = _monomials(ctx.n, degree)
    images = []
    for e in monos:
        p = Poly(ctx, {e: Fraction(1)})
        total = ctx.zero()
        for i, gi in enumerate(gnum):
            if gi and e[i]:
                total = total + p.diff(i) * gi
        images.append(total)
    keys = sorted({k for im in images for k in im.terms})
    rows = [[im.terms.get(k, Fraction(0)) for im in images] for k in keys]
    null = linalg.nullspace(rows, len(monos))
    basis = linalg.row_space_basis(null, len(monos)) if null else []
    return [Poly(ctx, {e: c for e, c in zip(monos, vec) if c}) for vec in basis]


def _gradient_at(p: Poly, point) -> list[Fraction]:
    return [p.diff(i).evaluate(point) for i in range(p.ctx.n)]


def build_straightening_map(g: VecField, omega: KForm, consumed: Sequence[int] = (),
                            target: VarContext | None = None, max_degree: int = 4,
                            seed=None) -> PolyMap:
    """Map whose active components are first integrals of g followed by a potential of ω.

    Consumed slots are carried through unchanged.  The inverse is attached.
    """
    ctx = g.ctx
    n = ctx.n
    consumed = sorted(set(consumed))
    active = [i for i in range(n) if i not in consumed]
    if not pair(omega, g):
        raise LinearizerError("ωg vanishes identically")
    if not (is_closed(omega) and omega.is_polynomial()):
        raise HeuristicExhausted("ω is not a closed polynomial form; supply the straightening map")
    psi = integrate_exact(omega)
    rng = _rng(seed)
    point = _random_point(rng, n)
    fixed = [[Fraction(int(i == k)) for i in range(n)] for k in consumed]
    fixed.append(_gradient_at(psi, point))
    needed = len(active) - 1
    chosen: list[Poly] = []
    for d in range(1, max_degree + 1):
        if len(chosen) == needed:
            break
        candidates = sorted(first_integral_basis(g, d), key=lambda p: (p.degree(), len(p)))
        for cand in candidates:
            if len(chosen) == needed:
                break
            rows = fixed + [_gradient_at(p, point) for p in chosen]
            if linalg.rank(rows + [_gradient_at(cand, point)], n) > linalg.rank(rows, n):
                chosen.append(cand)
    if len(chosen) < needed:
        raise HeuristicExhausted(
            f"found {len(chosen)} of {needed} independent first integrals up to degree {max_degree}; "
            "supply the straightening map")
    comps = list(ctx.gens())
    for slot, p in zip(active, chosen + [psi]):
        comps[slot] = p
    phi = PolyMap(ctx, tuple(comps), target)
    if not jacobian_determinant(phi):
        raise InversionFailed(f"straightening candidate {phi} has vanishing Jacobian determinant")
    invert_triangular(phi)
    return phi


def stage_context(n: int, stage: int) -> VarContext:
    if stage < len(STAGE_LETTERS):
        return VarContext.indexed(STAGE_LETTERS[stage], n)
    return VarContext(tuple(f"s{stage}_{i + 1}" for i in range(n)))


def extend_map_hint(hint: Sequence[Poly], ctx: VarContext, consumed: Sequence[int],
                    target: VarContext | None = None) -> PolyMap:
    """Place components over the active slots, identity on consumed ones."""
    n = ctx.n
    active = [i for i in range(n) if i not in set(consumed)]
    hint = list(hint)
    if len(hint) == n:
        comps = hint
    elif len(hint) == len(active):
        comps = list(ctx.gens())
        for slot, p in zip(active, hint):
            comps[slot] = p
    else:
        raise LinearizerError(f"map hint has {len(hint)} components; expected {n} or {len(active)}")
    return PolyMap(ctx, tuple(comps), target)


# ---------------------------------------------------------------------------
# Algorithm I


def algorithm_I(sys: ControlSystem, map_hints: Sequence | None = None, max_degree: int = 4,
                require_conditions: bool = False, seed=None) -> LinearizationTrace:
    """Straighten g repeatedly, then read y off the composed forward map.

    ``map_hints[i]``, when given, is either a PolyMap over the stage context
    or a sequence of component polynomials (n of them, or one per active slot).
    """
    map_hints = list(map_hints or [])
    if require_conditions:
        diag = classical_check(sys, seed)
        if not diag.linearizable:
            raise ConditionsNotMet("classical linearizability conditions fail", diag)
    n = sys.n
    trace = LinearizationTrace("algebroid1", sys)
    f, g = sys.f, sys.g
    consumed: list[int] = []
    maps: list[PolyMap] = []
    for i in range(n - 1):
        ctx = f.ctx
        active = tuple(k for k in range(n) if k not in consumed)
        target = stage_context(n, i + 1)
        hint = map_hints[i] if i < len(map_hints) else None
        if hint is not None:
            comps = hint.components if isinstance(hint, PolyMap) else hint
            comps = [c if c.ctx == ctx else c.in_context(ctx) for c in comps]
            phi = extend_map_hint(comps, ctx, consumed, target)
            if phi.inverse is None:
                invert_triangular(phi)
        else:
            omega = choose_omega(g, (), i, i == n - 2, max_degree)
            warn = _uncertified(omega, g, i)
            if warn is not None:
                trace.warnings.append(warn)
            phi = build_straightening_map(g, omega, consumed, target, max_degree, seed)
        actx = AlgebroidContext.from_straightening(g, phi)
        if actx.slot in consumed:
            raise LinearizerError(f"stage {i}: map straightens g onto an already consumed slot")
        trace.records.append(IterationRecord(i, f, g, actx.omega, phi, None, actx.slot, active))
        f, g = anchor_I(f, actx), anchor_I(lie_bracket(f, g), actx)
        consumed.append(actx.slot)
        maps.append(phi)
        if g.is_zero() and i < n - 2:
            raise DegenerateIteration(f"stage {i + 1}: g vanishes after projection", i + 1)
    active = tuple(k for k in range(n) if k not in consumed)
    trace.records.append(IterationRecord(n - 1, f, g, None, None, None, None, active))
    total = PolyMap.identity(sys.ctx)
    for phi in maps:
        total = compose(phi, total)
    trace.composed = total
    remaining = active[0]
    order = [remaining] + [k for k in range(n) if k != remaining]
    for k in order:
        cand = total.components[k]
        if cand.is_constant():
            continue
        if verify_relative_degree(cand, sys) == n:
            trace.y = cand
            return trace
    raise AmbiguousOutput("no component of the composed map has full relative degree")


# ---------------------------------------------------------------------------
# output checks


def verify_relative_degree(y, sys: ControlSystem) -> int:
    """Smallest k with L_g L_f^{k-1} y != 0, or 0 if none up to n."""
    y = as_ratfn(y, sys.ctx)
    if y.is_constant():
        raise LinearizerError("relative degree of a constant output is undefined")
    current = y
    for k in range(1, sys.n + 1):
        if sys.g.apply(current):
            return k
        current = sys.f.apply(current)
    return 0


def lie_derivative_chain(y, sys: ControlSystem, length: int | None = None) -> list[RatFn]:
    """[y, L_f y, L_f^2 y, ...]."""
    length = sys.n if length is None else length
    out = [as_ratfn(y, sys.ctx)]
    for _ in range(length - 1):
        out.append(sys.f.apply(out[-1]))
    return out


def output_row_map(y, sys: ControlSystem) -> PolyMap | None:
    """(y, L_f y, ..., L_f^{n-1} y) as a polynomial map, when polynomial."""
    rows = lie_derivative_chain(y, sys)
    if not all(r.is_polynomial() for r in rows):
        return None
    return PolyMap(sys.ctx, tuple(r.as_poly() for r in rows))


def normalize_output(y: Poly) -> Poly:
    """Drop the constant term and make the grlex-leading coefficient positive."""
    if y.is_constant():
        return y.ctx.zero()
    y = y - y.constant_value() if y.constant_value() else y
    return -y if y.leading_coefficient() < 0 else y


@dataclass
class OutputAssessment:
    y: Poly
    y_normalized: Poly
    relative_degree: int
    row_map: PolyMap | None
    jacobian_det: Poly | None
    warnings: list[LocusWarning] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.relative_degree == len(self.y.ctx.names)


def assess_output(y: Poly, sys: ControlSystem) -> OutputAssessment:
    rd = verify_relative_degree(y, sys)
    row_map = output_row_map(y, sys)
    det = jacobian_determinant(row_map) if row_map is not None else None
    warnings = []
    if det is not None and not det.is_constant():
        warnings.append(LocusWarning("Jacobian determinant of the output row map is not constant", det))
    if det is not None and det.is_zero():
        warnings.append(LocusWarning("output row map is singular", det))
    return OutputAssessment(y, normalize_output(y), rd, row_map, det, warnings)


__all__ = [
    "AmbiguousOutput",
    "ConditionsNotMet",
    "ControlSystem",
    "DegenerateIteration",
    "Diagnostics",
    "HeuristicExhausted",
    "IterationRecord",
    "LinearizationTrace",
    "LinearizerError",
    "LocusWarning",
    "NotExact",
    "OmegaHints",
    "OutputAssessment",
    "ad_chain",
    "algorithm_I",
    "algorithm_II",
    "algorithm_II_phase1",
    "algorithm_II_phase2",
    "assess_output",
    "build_straightening_map",
    "choose_omega",
    "classical_check",
    "default_seed",
    "first_integral_basis",
    "normalize_output",
    "output_row_map",
    "verify_relative_degree",
]
