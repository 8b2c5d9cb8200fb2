"""Brackets and anchors on vector fields taken modulo a transversal field g.

Two anchors are provided.  ``anchor_II`` projects along g using an integrable
1-form: m - (ωm/ωg) g.  ``anchor_I`` pushes m through a straightening map and
drops the straightened coordinate.  The ``check_*`` functions evaluate the
algebroid axioms symbolically and return a :class:`CheckResult` carrying the
residual when they fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import RatFn, as_ratfn
from .geometry import (
    GeometryError,
    KForm,
    PolyMap,
    VecField,
    differential,
    is_integrable,
    lie_bracket,
    pair,
    pushforward,
)


class AlgebroidError(ValueError):
    pass


class PreconditionError(AlgebroidError):
    pass


@dataclass(frozen=True)
class SectionClass:
    """A vector field considered modulo span(g)."""

    representative: VecField

    @property
    def ctx(self):
        return self.representative.ctx

    def equivalent(self, other: SectionClass | VecField, g: VecField) -> bool:
        return equivalent_mod(self.representative, _field(other), g)


def _field(m) -> VecField:
    return m.representative if isinstance(m, SectionClass) else m


def equivalent_mod(a: VecField, b: VecField, g: VecField) -> bool:
    """True when a - b = alpha*g for some rational function alpha."""
    diff = a - b
    if diff.is_zero():
        return True
    if g.is_zero():
        return False
    return diff.parallel_to(g)


def _residual_mod(a: VecField, b: VecField, g: VecField) -> VecField | None:
    return None if equivalent_mod(a, b, g) else a - b


@dataclass(frozen=True)
class AlgebroidContext:
    """Transversal field g, integrable form ω with ωg ≢ 0, optional straightening map.

    ``slot`` is the coordinate that the straightening map aligns with g.  It
    is detected from the map when not given.
    """

    g: VecField
    omega: KForm
    straightening: PolyMap | None = None
    slot: int | None = None
    omega_g: RatFn = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.omega.ctx != self.g.ctx:
            raise AlgebroidError("ω and g live in different contexts")
        if not is_integrable(self.omega):
            raise AlgebroidError(f"ω is not integrable: {self.omega}")
        og = pair(self.omega, self.g)
        if og.is_zero():
            raise AlgebroidError("ωg vanishes identically")
        object.__setattr__(self, "omega_g", og)
        if self.straightening is not None:
            phi = self.straightening
            if phi.ctx != self.g.ctx:
                raise AlgebroidError("straightening map lives in a different context")
            pushed = pushforward(phi, self.g)
            nonzero = [i for i, c in enumerate(pushed) if c]
            if len(nonzero) != 1:
                raise AlgebroidError(f"straightening map does not align g with a coordinate: {pushed}")
            if self.slot is None:
                object.__setattr__(self, "slot", nonzero[0])
            elif self.slot != nonzero[0]:
                raise AlgebroidError(f"g is straightened onto slot {nonzero[0]}, not {self.slot}")
            # level sets of the straightened coordinate must be leaves of ω
            psi = differential(phi.components[self.slot])
            if not _proportional(psi, self.omega):
                raise AlgebroidError("straightened coordinate is not a potential of a multiple of ω")

    @property
    def ctx(self):
        return self.g.ctx

    @classmethod
    def from_straightening(cls, g: VecField, phi: PolyMap) -> AlgebroidContext:
        """Context whose ω is d(straightened coordinate) of ``phi``."""
        pushed = pushforward(phi, g)
        nonzero = [i for i, c in enumerate(pushed) if c]
        if len(nonzero) != 1:
            raise AlgebroidError(f"map does not straighten g: {pushed}")
        slot = nonzero[0]
        return cls(g, differential(phi.components[slot]), phi, slot)


def _proportional(a: KForm, b: KForm) -> bool:
    ca, cb = a.components(), b.components()
    n = len(ca)
    return all(ca[i] * cb[j] == ca[j] * cb[i] for i in range(n) for j in range(i + 1, n))


def algebroid_bracket(m1, m2, ctx: AlgebroidContext) -> SectionClass:
    """[m1,m2] + (ωm2/ωg)[g,m1] - (ωm1/ωg)[g,m2]."""
    a, b = _field(m1), _field(m2)
    g, og = ctx.g, ctx.omega_g
    out = lie_bracket(a, b)
    wb = pair(ctx.omega, b)
    if wb:
        out = out + lie_bracket(g, a).scale(wb / og)
    wa = pair(ctx.omega, a)
    if wa:
        out = out - lie_bracket(g, b).scale(wa / og)
    return SectionClass(out)


def anchor_II(m, ctx: AlgebroidContext) -> VecField:
    """m - (ωm/ωg) g; annihilated by ω."""
    a = _field(m)
    wa = pair(ctx.omega, a)
    if not wa:
        return a
    return a - ctx.g.scale(wa / ctx.omega_g)


def anchor_I(m, ctx: AlgebroidContext) -> VecField:
    """Push m through the straightening map and zero the straightened slot.

    The result lives in the target coordinates of the map.  It keeps all n
    components so that later stages can treat the dropped coordinate as a
    parameter; use :func:`reduced_components` for the n-1 active entries.
    """
    if ctx.straightening is None:
        raise PreconditionError("anchor_I needs a straightening map")
    pushed = pushforward(ctx.straightening, _field(m))
    comps = list(pushed.components)
    comps[ctx.slot] = RatFn.constant(pushed.ctx, 0)
    return VecField(pushed.ctx, tuple(comps))


def reduced_components(v: VecField, dropped) -> list[RatFn]:
    """Components of ``v`` with the indices in ``dropped`` removed."""
    dropped = {dropped} if isinstance(dropped, int) else set(dropped)
    return [c for i, c in enumerate(v.components) if i not in dropped]


def _target_g(ctx: AlgebroidContext) -> VecField:
    """The straightened direction in target coordinates."""
    return VecField.coordinate(ctx.straightening.target, ctx.slot)


# ---------------------------------------------------------------------------
# property checks


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    residual: object = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok

    @classmethod
    def from_residual(cls, residual, detail: str = "") -> CheckResult:
        return cls(residual is None, residual, detail)


def _anchor(which: str):
    if which in ("II", 2, "2"):
        return anchor_II
    if which in ("I", 1, "1"):
        return anchor_I
    raise ValueError(f"unknown anchor {which!r}")


def check_leibniz(ctx: AlgebroidContext, m1, m2, alpha, anchor: str = "II") -> CheckResult:
    """⟨m1, α m2⟩ ≡ α⟨m1, m2⟩ + (anchor(m1) α) m2 modulo span(g).

    For anchor I, α must be a first integral of g, and it is read in the
    straightened coordinates after composition with the inverse map.
    """
    a, b = _field(m1), _field(m2)
    alpha = as_ratfn(alpha, a.ctx)
    if anchor in ("I", 1, "1"):
        if ctx.straightening is None:
            raise PreconditionError("anchor I needs a straightening map")
        if ctx.g.apply(alpha):
            raise PreconditionError("anchor I Leibniz needs L_g α = 0")
        direction = anchor_I(a, ctx)
        alpha_z = alpha.substitute(ctx.straightening.require_inverse().components, ctx.straightening.target)
        lhs = anchor_I(algebroid_bracket(a, b.scale(alpha), ctx), ctx)
        rhs = (anchor_I(algebroid_bracket(a, b, ctx), ctx).scale(alpha_z)
               + anchor_I(b, ctx).scale(direction.apply(alpha_z)))
        return CheckResult.from_residual(_residual_mod(lhs, rhs, _target_g(ctx)), "Leibniz rule under anchor I")
    direction = anchor_II(a, ctx)
    lhs = algebroid_bracket(a, b.scale(alpha), ctx).representative
    rhs = algebroid_bracket(a, b, ctx).representative.scale(alpha) + b.scale(direction.apply(alpha))
    return CheckResult.from_residual(_residual_mod(lhs, rhs, ctx.g), "Leibniz rule under anchor II")


def check_homomorphism(ctx: AlgebroidContext, m1, m2, anchor: str = "II") -> CheckResult:
    """anchor(⟨m1,m2⟩) = [anchor(m1), anchor(m2)] exactly."""
    an = _anchor(anchor)
    lhs = an(algebroid_bracket(m1, m2, ctx), ctx)
    rhs = lie_bracket(an(m1, ctx), an(m2, ctx))
    residual = lhs - rhs
    return CheckResult(residual.is_zero(), None if residual.is_zero() else residual,
                       f"anchor {anchor} bracket homomorphism")


def check_jacobi(ctx: AlgebroidContext, m1, m2, m3) -> CheckResult:
    """Cyclic sum of ⟨mi,⟨mj,mk⟩⟩ vanishes modulo span(g)."""
    a, b, c = _field(m1), _field(m2), _field(m3)
    total = VecField.zero(ctx.ctx)
    for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
        total = total + algebroid_bracket(x, algebroid_bracket(y, z, ctx), ctx).representative
    zero = VecField.zero(ctx.ctx)
    return CheckResult.from_residual(_residual_mod(total, zero, ctx.g), "Jacobi cyclic sum")


def check_antisymmetry(ctx: AlgebroidContext, m1, m2) -> CheckResult:
    lhs = algebroid_bracket(m1, m2, ctx).representative
    rhs = -algebroid_bracket(m2, m1, ctx).representative
    return CheckResult.from_residual(_residual_mod(lhs, rhs, ctx.g), "antisymmetry")


def check_representative_independence(ctx: AlgebroidContext, m1, m2, alpha, beta) -> CheckResult:
    a, b = _field(m1), _field(m2)
    shifted = algebroid_bracket(a + ctx.g.scale(alpha), b + ctx.g.scale(beta), ctx).representative
    plain = algebroid_bracket(a, b, ctx).representative
    return CheckResult.from_residual(_residual_mod(shifted, plain, ctx.g), "representative independence")


def crosscheck_isomorphism(ctx: AlgebroidContext, m1, m2) -> CheckResult:
    """Compare both anchors through the straightening map.

    Checks anchor_I(⟨m1,m2⟩) = [anchor_I(m1), anchor_I(m2)], and that pushing
    anchor_II(m) through the map and dropping the straightened slot gives
    anchor_I(m) for m in {m1, m2, ⟨m1,m2⟩}.
    """
    if ctx.straightening is None:
        raise PreconditionError("isomorphism cross-check needs a straightening map")
    bracket = algebroid_bracket(m1, m2, ctx)
    hom = check_homomorphism(ctx, m1, m2, anchor="I")
    if not hom:
        return CheckResult(False, hom.residual, "anchor I is not a bracket homomorphism")
    for m in (m1, m2, bracket):
        via_ii = pushforward(ctx.straightening, anchor_II(m, ctx))
        comps = list(via_ii.components)
        comps[ctx.slot] = RatFn.constant(via_ii.ctx, 0)
        diff = VecField(via_ii.ctx, tuple(comps)) - anchor_I(m, ctx)
        if not diff.is_zero():
            return CheckResult(False, diff, "anchor I and projected anchor II disagree")
    return CheckResult(True, None, "isomorphism cross-check")


__all__ = [
    "AlgebroidContext",
    "AlgebroidError",
    "CheckResult",
    "GeometryError",
    "PreconditionError",
    "SectionClass",
    "algebroid_bracket",
    "anchor_I",
    "anchor_II",
    "check_antisymmetry",
    "check_homomorphism",
    "check_jacobi",
    "check_leibniz",
    "check_representative_independence",
    "crosscheck_isomorphism",
    "equivalent_mod",
    "reduced_components",
]
