import random

import pytest
import sympy as sp

from algebroid_fl import example as ex
from algebroid_fl.algebra import RatFn, VarContext
from algebroid_fl.geometry import (
    KForm,
    PolyMap,
    VecField,
    differential,
    exterior_derivative,
    is_closed,
    jacobian_determinant,
    pair,
    pushforward,
)
from algebroid_fl.linearizer import (
    ConditionsNotMet,
    ControlSystem,
    DegenerateIteration,
    HeuristicExhausted,
    LinearizerError,
    NotExact,
    OmegaHints,
    algorithm_I,
    algorithm_II,
    algorithm_II_phase1,
    algorithm_II_phase2,
    assess_output,
    build_straightening_map,
    choose_omega,
    classical_check,
    default_seed,
    first_integral_basis,
    lie_derivative_chain,
    normalize_output,
    stage_context,
    verify_relative_degree,
)

from instances import random_linearizable
import oracles

X, Z = ex.X, ex.Z
SYSTEM = ex.system()
Y = X.parse(ex.Y)
PSI0 = X.parse(ex.PSI0)
OMEGA0 = differential(PSI0)

CHAIN2 = ControlSystem.parse(["x1", "x2"], ["x2", "0"], ["0", "1"])
CHAIN3 = ControlSystem.parse(["x1", "x2", "x3"], ["x2", "x3", "0"], ["0", "0", "1"])
# rank 3 but [g, ad_f g] leaves span{g, ad_f g}
NON_INVOLUTIVE = ControlSystem.parse(["x1", "x2", "x3"], ["2", "1", "-2*x3 - 1"], ["2*x3", "-2", "-2*x3 - 3"])


# -- classical conditions -------------------------------------------------------------


def test_classical_check_golden():
    diag = classical_check(SYSTEM)
    assert diag.rank == 3 and diag.involutive and diag.linearizable


def test_classical_check_zero_drift():
    sysf0 = ControlSystem.parse(["x1", "x2", "x3"], ["0", "0", "0"], ex.G)
    diag = classical_check(sysf0)
    assert diag.rank == 1 and not diag.accessible and not diag.linearizable


def test_classical_check_non_involutive():
    diag = classical_check(NON_INVOLUTIVE)
    assert diag.rank == 3 and not diag.involutive
    assert diag.non_involutive_pair == (0, 1)


def test_classical_check_matches_kalman_rank():
    rng = random.Random(3)
    names = ["x1", "x2", "x3"]
    for _ in range(25):
        A = [[rng.choice([-1, 0, 0, 1, 2]) for _ in range(3)] for _ in range(3)]
        B = [rng.choice([0, 0, 1, -1]) for _ in range(3)]
        if not any(B):
            B[rng.randrange(3)] = 1
        f = [" + ".join(f"({A[i][j]})*{names[j]}" for j in range(3)) for i in range(3)]
        system = ControlSystem.parse(names, f, [str(b) for b in B])
        expected = oracles.kalman_rank(A, [[b] for b in B])
        assert classical_check(system).rank == expected


def test_classical_check_is_seed_independent():
    assert classical_check(SYSTEM, seed=1).rank == classical_check(SYSTEM, seed=99).rank == 3


def test_seed_from_environment(monkeypatch):
    monkeypatch.delenv("ALGEBROID_SEED", raising=False)
    assert default_seed() == 0
    monkeypatch.setenv("ALGEBROID_SEED", "17")
    assert default_seed() == 17
    monkeypatch.setenv("ALGEBROID_SEED", "abc")
    with pytest.raises(LinearizerError):
        default_seed()


# -- choice of ω ----------------------------------------------------------------------


def test_choose_omega_prefers_hint():
    g0 = SYSTEM.g
    w = choose_omega(g0, [OMEGA0])
    assert w == OMEGA0 and pair(w, g0) == RatFn.constant(X, 1)


def test_choose_omega_coordinate_form():
    g1 = ex.vec(X, ex.G1)
    assert choose_omega(g1) == KForm.basis(X, 0)
    # ±1 wins over other constants, then the lowest index
    assert choose_omega(VecField.parse(X, ["2", "x1", "-1"])) == KForm.basis(X, 2)
    assert choose_omega(VecField.parse(X, ["3", "2", "x1"])) == KForm.basis(X, 0)


def test_choose_omega_skips_inadmissible_hint():
    g = CHAIN2.g
    assert choose_omega(g, [KForm.basis(CHAIN2.ctx, 0)]) == KForm.basis(CHAIN2.ctx, 1)


def test_choose_omega_exact_ansatz():
    ctx = VarContext.of("x1", "x2")
    g = VecField.parse(ctx, ["x2", "x2 + 1"])
    w = choose_omega(g)
    assert is_closed(w) and pair(w, g) == RatFn.constant(ctx, 1)


def test_choose_omega_exhausted_and_final_fallback():
    ctx = VarContext.of("x1", "x2")
    g = VecField.parse(ctx, ["x2", "x1"])
    with pytest.raises(HeuristicExhausted) as info:
        choose_omega(g, iteration=1)
    assert info.value.iteration == 1
    assert choose_omega(g, final=True) == KForm.basis(ctx, 0)


def test_choose_omega_zero_field():
    with pytest.raises(LinearizerError):
        choose_omega(VecField.zero(X))
    with pytest.raises(LinearizerError):
        ControlSystem.parse(["x1"], ["x1"], ["0"])


def test_omega_hints_must_be_integrable():
    with pytest.raises(LinearizerError):
        OmegaHints.from_list([KForm.parse_one_form(X, ["x2", "0", "1"])])


# -- Algorithm II ---------------------------------------------------------------------


def test_algorithm_II_golden():
    trace = algorithm_II(SYSTEM, ex.omega_hints())
    recs = trace.records
    assert recs[1].g == ex.vec(X, ex.G1)
    assert recs[2].g == ex.vec(X, ex.G2)
    assert recs[2].nu == KForm.parse_one_form(X, ex.NU2)
    assert recs[1].nu == KForm.parse_one_form(X, ex.NU1)
    assert recs[0].nu == KForm.parse_one_form(X, ex.NU0)
    assert trace.y == Y
    assert pair(recs[2].omega, recs[2].g) == RatFn.from_poly(X.parse(ex.INTEGRATING_FACTOR))


def test_algorithm_II_earlier_forms_annihilate_later_fields():
    trace = algorithm_II(SYSTEM, ex.omega_hints())
    for i, rec in enumerate(trace.records):
        for prev in trace.records[:i]:
            assert not pair(prev.omega, rec.f) and not pair(prev.omega, rec.g)


def test_algorithm_II_output_differential():
    trace = algorithm_II(SYSTEM, ex.omega_hints())
    last = trace.records[-1]
    factor = pair(last.omega, last.g)
    assert differential(trace.y).scale(factor) == trace.records[0].nu


def test_algorithm_II_without_hints():
    trace = algorithm_II(SYSTEM)
    assert [r.omega for r in trace.records] == [KForm.basis(X, 2), KForm.basis(X, 0), KForm.basis(X, 1)]
    assert normalize_output(trace.y) == normalize_output(Y)


def test_algorithm_II_two_dimensional_chain():
    # by hand: ω0 = dx2, g1 = -∂/∂x1, ω1 = dx1, ν0 = dx1, ωg = -1, y = -x1
    trace = algorithm_II_phase1(CHAIN2)
    assert len(trace.records) == 2
    assert trace.records[0].omega == KForm.basis(CHAIN2.ctx, 1)
    assert trace.records[1].g == VecField.parse(CHAIN2.ctx, ["-1", "0"])
    y = algorithm_II_phase2(trace)
    assert y == CHAIN2.ctx.parse("-x1")
    assert normalize_output(y) == CHAIN2.ctx.parse("x1")


def test_algorithm_II_one_dimensional():
    system = ControlSystem.parse(["x1"], ["x1^2"], ["2"])
    trace = algorithm_II(system)
    assert len(trace.records) == 1
    assert trace.y == system.ctx.parse("1/2*x1")
    system = ControlSystem.parse(["x1"], ["x1^3"], ["1"])
    assert algorithm_II(system).y == system.ctx.parse("x1")


def test_algorithm_II_degenerate_iteration():
    system = ControlSystem.parse(["x1", "x2"], ["0", "0"], ["0", "1"])
    with pytest.raises(DegenerateIteration) as info:
        algorithm_II(system)
    assert info.value.iteration == 1


def test_algorithm_II_not_exact_reports_residual():
    with pytest.raises(NotExact) as info:
        algorithm_II(NON_INVOLUTIVE)
    assert info.value.residual is not None and not info.value.residual.is_zero()


def test_algorithm_II_conditions_guard():
    with pytest.raises(ConditionsNotMet) as info:
        algorithm_II(NON_INVOLUTIVE, require_conditions=True)
    assert not info.value.diagnostics.involutive


def test_phase2_needs_complete_trace():
    trace = algorithm_II_phase1(SYSTEM, ex.omega_hints())
    trace.records.pop()
    with pytest.raises(LinearizerError):
        algorithm_II_phase2(trace)


# -- straightening maps -------------------------------------------------------------------


def test_first_integral_basis():
    basis = first_integral_basis(SYSTEM.g, 2)
    assert X.parse("x1") in basis and X.parse("x3^2 + x2") in basis
    for p in basis:
        assert not SYSTEM.g.apply(p)


def test_build_straightening_golden():
    phi = build_straightening_map(SYSTEM.g, OMEGA0, target=Z)
    assert phi == PolyMap.parse(X, ex.PHI0, Z)
    assert phi.inverse == PolyMap.parse(Z, ex.PHI0_INV, X)


def test_build_straightening_already_straight():
    phi = build_straightening_map(VecField.coordinate(X, 2), KForm.basis(X, 2))
    assert phi.is_identity()


def test_build_straightening_second_stage():
    g1 = ex.vec(Z, ex.G1_Z + ("0",))
    phi = build_straightening_map(g1, KForm.basis(Z, 0), consumed=[2], target=ex.W)
    assert [str(c) for c in phi.components] == ["z1^2 - z1 + z2", "z1", "z3"]
    assert pushforward(phi, g1) == VecField.parse(ex.W, ["0", "-1/2", "0"])
    # with ω = d(z1 + z1^2 + z2) the reference components appear, up to order and sign
    w = differential(Z.parse(ex.PHI1[0]))
    phi = build_straightening_map(g1, w, consumed=[2], target=ex.W)
    reference = {str(Z.parse(c)) for c in ex.PHI1}
    got = {str(c) for c in phi.components[:2]} | {str(-c) for c in phi.components[:2]}
    assert reference <= got


def test_build_straightening_rejects_non_closed_omega():
    ctx = VarContext.of("x1", "x2")
    with pytest.raises(HeuristicExhausted):
        build_straightening_map(VecField.parse(ctx, ["x2", "1"]), KForm.parse_one_form(ctx, ["0", "x1 + 1"]))


def test_stage_context_letters():
    assert stage_context(3, 0).names == ("x1", "x2", "x3")
    assert stage_context(2, 1).names == ("z1", "z2")
    assert stage_context(2, 9).names == ("s9_1", "s9_2")


# -- Algorithm I ---------------------------------------------------------------------------


def test_algorithm_I_golden():
    trace = algorithm_I(SYSTEM, ex.map_hints())
    stage1 = trace.records[1]
    assert stage1.active == (0, 1)
    assert list(stage1.f.components[:2]) == list(ex.vec(Z, ex.F1_Z + ("0",)).components[:2])
    assert [str(c) for c in stage1.g.components[:2]] == ["-1/2", "z1 - 1/2"]
    assert trace.records[0].phi.inverse == PolyMap.parse(Z, ex.PHI0_INV, X)
    assert trace.y == Y


def test_algorithm_I_without_hints():
    trace = algorithm_I(SYSTEM)
    assert normalize_output(trace.y) == normalize_output(Y)
    assert verify_relative_degree(trace.y, SYSTEM) == 3


def test_algorithm_I_straight_chain():
    ident = [PolyMap.identity(CHAIN3.ctx), list(stage_context(3, 1).gens())]
    trace = algorithm_I(CHAIN3, ident)
    assert trace.y == CHAIN3.ctx.parse("x1")
    assert algorithm_I(CHAIN2, [PolyMap.identity(CHAIN2.ctx)]).y == CHAIN2.ctx.parse("x1")


def test_algorithm_I_one_dimensional():
    system = ControlSystem.parse(["x1"], ["x1^2 + 1"], ["3"])
    trace = algorithm_I(system)
    assert trace.y == system.ctx.parse("x1")


def test_algorithms_agree_on_golden_example():
    y1 = algorithm_I(SYSTEM, ex.map_hints()).y
    y2 = algorithm_II(SYSTEM, ex.omega_hints()).y
    assert y1 == y2 == Y


def test_algorithms_on_random_linearizable_systems():
    """Both outputs have full relative degree and are affine images of the planted output."""
    rng = random.Random(71)
    for _ in range(50):
        system, phi = random_linearizable(rng)
        planted = normalize_output(phi.components[0])
        for y in (algorithm_II(system).y, algorithm_I(system).y):
            assert verify_relative_degree(y, system) == system.n
            ny = normalize_output(y)
            assert ny * planted.leading_coefficient() == planted * ny.leading_coefficient()


# -- output checks ---------------------------------------------------------------------------


def test_relative_degree_golden():
    assert verify_relative_degree(Y, SYSTEM) == 3
    chain = lie_derivative_chain(Y, SYSTEM)
    assert chain[2] == RatFn.from_poly(PSI0)
    assert SYSTEM.g.apply(chain[2]) == RatFn.constant(X, 1)
    xs = oracles.symbols(X.names)
    f = oracles.vec_to_sympy(SYSTEM.f, X.names)
    g = oracles.vec_to_sympy(SYSTEM.g, X.names)
    assert oracles.relative_degree(oracles.to_sympy(Y, X.names), f, g, xs) == 3


def test_relative_degree_other_outputs():
    assert verify_relative_degree(PSI0, SYSTEM) == 1
    with pytest.raises(LinearizerError):
        verify_relative_degree(X.parse("5"), SYSTEM)
    assert verify_relative_degree(X.parse("x1"), CHAIN3) == 3
    assert verify_relative_degree(X.parse("x2"), CHAIN3) == 2


def test_assess_output_golden():
    a = assess_output(Y, SYSTEM)
    assert a.ok and a.relative_degree == 3
    assert a.row_map == PolyMap.parse(X, ex.PHI_MAP)
    assert a.jacobian_det == X.parse("2") and not a.warnings
    xs = oracles.symbols(X.names)
    assert oracles.jacobian_det([oracles.to_sympy(c, X.names) for c in a.row_map.components], xs) == 2


def test_normalize_output():
    assert normalize_output(X.parse("x1 - x1^2 - x2 - x3^2 + 7")) == X.parse("x1^2 + x3^2 - x1 + x2")
    assert normalize_output(X.parse("3")).is_zero()


def test_reconstructed_drift_rows():
    xs = oracles.symbols(X.names)
    f = oracles.vec_to_sympy(SYSTEM.f, X.names)
    y = oracles.to_sympy(Y, X.names)
    row2 = oracles.lie_derivative(f, y, xs)
    assert sp.expand(row2 - oracles.to_sympy(X.parse(ex.PHI_MAP[1]), X.names)) == 0
    row3 = oracles.lie_derivative(f, row2, xs)
    assert sp.expand(row3 - oracles.to_sympy(PSI0, X.names)) == 0
    assert exterior_derivative(OMEGA0).is_zero()
    assert jacobian_determinant(PolyMap.parse(X, ex.PHI0)) == X.one()
