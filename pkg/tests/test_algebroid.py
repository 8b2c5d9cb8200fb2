import random

import pytest
import sympy as sp

from algebroid_fl import example as ex
from algebroid_fl.algebra import RatFn
from algebroid_fl.algebroid import (
    AlgebroidContext,
    AlgebroidError,
    CheckResult,
    PreconditionError,
    SectionClass,
    algebroid_bracket,
    anchor_I,
    anchor_II,
    check_antisymmetry,
    check_homomorphism,
    check_jacobi,
    check_leibniz,
    check_representative_independence,
    crosscheck_isomorphism,
    equivalent_mod,
    reduced_components,
)
from algebroid_fl.geometry import KForm, PolyMap, VecField, differential, lie_bracket, pair

from instances import N_INSTANCES, context, random_algebroid, random_field, random_poly, random_straightened
import oracles

X, Z = ex.X, ex.Z
F0 = ex.system().f
G0 = VecField.parse(X, ex.G)
OMEGA0 = differential(X.parse(ex.PSI0))
PHI0 = PolyMap.parse(X, ex.PHI0, Z)
GOLDEN = AlgebroidContext(G0, OMEGA0, PHI0)


def flat_context(n):
    """g = ∂/∂x_n, ω = dx_n, Φ = identity."""
    ctx = context(n)
    return AlgebroidContext(VecField.coordinate(ctx, n - 1), KForm.basis(ctx, n - 1), PolyMap.identity(ctx), n - 1)


# -- context validation ------------------------------------------------------------


def test_context_rejects_degenerate_omega():
    with pytest.raises(AlgebroidError):
        AlgebroidContext(G0, KForm.basis(X, 0))  # ωg = 0
    with pytest.raises(AlgebroidError):
        AlgebroidContext(G0, KForm.parse_one_form(X, ["x2", "0", "1"]))  # not integrable


def test_context_detects_slot_and_checks_potential():
    assert GOLDEN.slot == 2
    with pytest.raises(AlgebroidError):
        AlgebroidContext(G0, KForm.basis(X, 2), PHI0)


def test_section_class_equivalence():
    m = random_field(random.Random(1), X)
    cls = SectionClass(m)
    assert cls.equivalent(m + G0.scale(X.parse("x1*x2 - 3")), G0)
    assert not cls.equivalent(m + VecField.coordinate(X, 0), G0)
    g = VecField.parse(X, ["0", "0", "1"])
    assert equivalent_mod(VecField.parse(X, ["1", "2", "x1"]), VecField.parse(X, ["1", "2", "0"]), g)
    assert not equivalent_mod(VecField.parse(X, ["1", "2", "x1"]), VecField.parse(X, ["0", "2", "0"]), g)


# -- bracket -------------------------------------------------------------------------


def test_bracket_with_g_is_zero():
    m = random_field(random.Random(2), X)
    assert algebroid_bracket(G0, m, GOLDEN).representative.is_zero()


def test_bracket_matches_sympy_oracle():
    rng = random.Random(5)
    xs = oracles.symbols(X.names)
    for _ in range(15):
        actx, _ = random_algebroid(rng, 3)
        a, b = random_field(rng, X), random_field(rng, X)
        ours = oracles.vec_to_sympy(algebroid_bracket(a, b, actx).representative, X.names)
        w = [oracles.to_sympy(c, X.names) for c in actx.omega.components()]
        sa, sb, sg = (oracles.vec_to_sympy(v, X.names) for v in (a, b, actx.g))
        ref = oracles.algebroid_bracket(sa, sb, sg, w, xs)
        assert all(sp.cancel(p - q) == 0 for p, q in zip(ours, ref))


def test_antisymmetry():
    rng = random.Random(7)
    for _ in range(N_INSTANCES):
        actx, _ = random_algebroid(rng)
        a, b = random_field(rng, actx.ctx), random_field(rng, actx.ctx)
        assert check_antisymmetry(actx, a, b)


def test_antisymmetry_against_oracle():
    rng = random.Random(8)
    xs = oracles.symbols(X.names)
    for _ in range(10):
        actx, _ = random_algebroid(rng, 3)
        a, b = random_field(rng, X), random_field(rng, X)
        w = [oracles.to_sympy(c, X.names) for c in actx.omega.components()]
        sa, sb, sg = (oracles.vec_to_sympy(v, X.names) for v in (a, b, actx.g))
        ab = oracles.algebroid_bracket(sa, sb, sg, w, xs)
        ba = oracles.algebroid_bracket(sb, sa, sg, w, xs)
        assert oracles.parallel([p + q for p, q in zip(ab, ba)], sg)


def test_representative_independence():
    rng = random.Random(11)
    for _ in range(N_INSTANCES):
        actx, _ = random_algebroid(rng)
        ctx = actx.ctx
        a, b = random_field(rng, ctx), random_field(rng, ctx)
        alpha, beta = random_poly(rng, ctx), random_poly(rng, ctx)
        assert check_representative_independence(actx, a, b, alpha, beta)


def test_bracket_is_bilinear_over_constants():
    rng = random.Random(12)
    actx, _ = random_algebroid(rng, 3)
    a, b, c = (random_field(rng, X) for _ in range(3))
    lhs = algebroid_bracket(a.scale(RatFn.constant(X, 3)) + b, c, actx).representative
    rhs = (algebroid_bracket(a, c, actx).representative.scale(RatFn.constant(X, 3))
           + algebroid_bracket(b, c, actx).representative)
    assert equivalent_mod(lhs, rhs, actx.g)


# -- anchor II ---------------------------------------------------------------------------


def test_anchor_II_of_g_is_zero():
    assert anchor_II(G0, GOLDEN).is_zero()


def test_anchor_II_golden_g1():
    assert anchor_II(lie_bracket(F0, G0), GOLDEN) == ex.vec(X, ex.G1)


def test_anchor_II_annihilated_by_omega_and_idempotent():
    rng = random.Random(13)
    for _ in range(N_INSTANCES):
        actx, _ = random_algebroid(rng)
        m = random_field(rng, actx.ctx)
        proj = anchor_II(m, actx)
        assert not pair(actx.omega, proj)
        assert anchor_II(proj, actx) == proj


def test_anchor_II_fixes_annihilated_fields():
    m = VecField.parse(X, ["x2", "0", "0"])
    assert anchor_II(m, GOLDEN) == m


# -- anchor I -----------------------------------------------------------------------------


def test_anchor_I_golden_examples():
    assert anchor_I(G0, GOLDEN).is_zero()
    assert reduced_components(anchor_I(F0, GOLDEN), 2) == reduced_components(ex.vec(Z, ex.F1_Z + ("0",)), 2)
    g1 = anchor_I(lie_bracket(F0, G0), GOLDEN)
    assert [str(c) for c in reduced_components(g1, 2)] == ["-1/2", "z1 - 1/2"]
    assert not g1.components[2]


def test_anchor_I_ignores_representative():
    rng = random.Random(14)
    m = random_field(rng, X)
    assert anchor_I(m, GOLDEN) == anchor_I(m + G0.scale(X.parse("x1 - x3^2")), GOLDEN)


def test_anchor_I_requires_map():
    with pytest.raises(PreconditionError):
        anchor_I(G0, AlgebroidContext(G0, OMEGA0))


# -- Leibniz rule ------------------------------------------------------------------------


def test_leibniz_trivial_multiplier():
    rng = random.Random(15)
    a, b = random_field(rng, X), random_field(rng, X)
    assert check_leibniz(GOLDEN, a, b, 1)
    assert check_leibniz(GOLDEN, a, b, 1, anchor="I")


def test_leibniz_anchor_II():
    rng = random.Random(17)
    for _ in range(N_INSTANCES):
        actx, _ = random_algebroid(rng)
        ctx = actx.ctx
        a, b = random_field(rng, ctx), random_field(rng, ctx)
        assert check_leibniz(actx, a, b, random_poly(rng, ctx))


def test_leibniz_anchor_I():
    rng = random.Random(19)
    for _ in range(N_INSTANCES):
        actx, h = random_straightened(rng)
        ctx = actx.ctx
        a, b = random_field(rng, ctx), random_field(rng, ctx)
        assert check_leibniz(actx, a, b, h, anchor="I")


def test_leibniz_anchor_I_guard():
    rng = random.Random(20)
    a, b = random_field(rng, X), random_field(rng, X)
    with pytest.raises(PreconditionError):
        check_leibniz(GOLDEN, a, b, X.parse(ex.PSI0), anchor="I")
    flat = flat_context(3)
    with pytest.raises(PreconditionError):
        check_leibniz(flat, a, b, X.parse("x3"), anchor="I")


def test_check_result_carries_residual():
    residual = VecField.coordinate(X, 0)
    failed = CheckResult.from_residual(residual, "example")
    assert not failed and failed.residual == residual and failed.detail == "example"
    assert CheckResult.from_residual(None)


def test_checks_hold_for_integrable_non_closed_omega():
    # ω = x1 dx2 is integrable but not closed
    actx = AlgebroidContext(VecField.parse(X, ["1", "1", "0"]), KForm.parse_one_form(X, ["0", "x1", "0"]))
    rng = random.Random(21)
    for _ in range(10):
        a, b, c = (random_field(rng, X) for _ in range(3))
        assert check_homomorphism(actx, a, b)
        assert check_leibniz(actx, a, b, X.parse("x1*x3"))
        assert check_jacobi(actx, a, b, c)


# -- bracket homomorphism -----------------------------------------------------------------


def test_homomorphism_trivial_and_golden():
    rng = random.Random(22)
    m = random_field(rng, X)
    assert check_homomorphism(GOLDEN, m, m)
    assert check_homomorphism(GOLDEN, F0, lie_bracket(F0, G0))
    assert check_homomorphism(GOLDEN, F0, lie_bracket(F0, G0), anchor="I")


def test_homomorphism_anchor_II():
    rng = random.Random(23)
    for _ in range(N_INSTANCES):
        actx, _ = random_algebroid(rng)
        a, b = random_field(rng, actx.ctx), random_field(rng, actx.ctx)
        assert check_homomorphism(actx, a, b)


def test_homomorphism_anchor_I():
    rng = random.Random(29)
    for _ in range(N_INSTANCES):
        actx, _ = random_straightened(rng)
        a, b = random_field(rng, actx.ctx), random_field(rng, actx.ctx)
        assert check_homomorphism(actx, a, b, anchor="I")


# -- Jacobi ----------------------------------------------------------------------------------


def test_jacobi_trivial_and_flat():
    rng = random.Random(31)
    a, b = random_field(rng, X), random_field(rng, X)
    assert check_jacobi(GOLDEN, a, a, b)
    flat = flat_context(3)
    coords = [VecField.coordinate(X, i) for i in range(3)]
    assert check_jacobi(flat, *coords)
    assert check_jacobi(flat, a, b, random_field(rng, X))


def test_jacobi_random():
    rng = random.Random(37)
    for _ in range(N_INSTANCES):
        actx, _ = random_algebroid(rng)
        ctx = actx.ctx
        assert check_jacobi(actx, random_field(rng, ctx), random_field(rng, ctx), random_field(rng, ctx))


# -- isomorphism cross-check ---------------------------------------------------------------------


def test_crosscheck_golden():
    assert crosscheck_isomorphism(GOLDEN, G0, F0)
    assert crosscheck_isomorphism(GOLDEN, F0, lie_bracket(F0, G0))


def test_crosscheck_flat_instances():
    rng = random.Random(41)
    for _ in range(N_INSTANCES):
        n = rng.choice([2, 3])
        actx = flat_context(n)
        a, b = random_field(rng, actx.ctx), random_field(rng, actx.ctx)
        assert crosscheck_isomorphism(actx, a, b)


def test_crosscheck_straightened_instances():
    rng = random.Random(43)
    for _ in range(N_INSTANCES // 2):
        actx, _ = random_straightened(rng)
        a, b = random_field(rng, actx.ctx), random_field(rng, actx.ctx)
        assert crosscheck_isomorphism(actx, a, b)


def test_crosscheck_requires_map():
    with pytest.raises(PreconditionError):
        crosscheck_isomorphism(AlgebroidContext(G0, OMEGA0), F0, G0)
