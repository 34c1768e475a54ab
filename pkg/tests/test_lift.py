import numpy as np
import pytest

from liftlab.errors import LiftEvaluationError
from liftlab.flowshape import (
    FlowProfile,
    FlowShapePair,
    poiseuille,
    reflect_flow,
    symmetric_grid,
)
from liftlab.geometry import BodyShape, Rect, TrapeziumParams, body_family
from liftlab.lift import LiftCurve, lift_boundary, lift_curve, lift_volume
from liftlab.mesh import generate_mesh, reflect_mesh
from liftlab.ns_solver import (
    BoundaryData,
    SolverConfig,
    SteadyNSSolver,
    dirichlet_energy,
    solve_steady_ns,
)

R = Rect(2.0, 1.0)
H = 1.0
TRAP = TrapeziumParams(l=0.6, h=0.15, gamma=0.3)


def asym_pair(amp=0.25):
    x = symmetric_grid(H, 129)
    v = FlowProfile(H, poiseuille(H).values + amp * np.sin(2 * np.pi * x))
    return FlowShapePair(v, v, 0)


@pytest.fixture(scope="module")
def trap_mesh():
    return generate_mesh(R, body_family(0.0, TRAP), h=1 / 6)


@pytest.fixture(scope="module")
def trap_field(trap_mesh):
    return solve_steady_ns(trap_mesh, BoundaryData(0.5, asym_pair()))


# ---------------------------------------------------------------- basics

def test_zero_field_zero_lift(trap_mesh):
    F = solve_steady_ns(trap_mesh, BoundaryData(0.0, asym_pair()))
    assert lift_volume(F) == 0.0
    assert lift_boundary(F) == 0.0


def test_empty_mesh_rejected():
    M = generate_mesh(R, None, h=0.25)
    from liftlab.flowshape import poiseuille_exact
    pair = FlowShapePair(poiseuille_exact(H), poiseuille_exact(H), 0)
    F = solve_steady_ns(M, BoundaryData(0.5, pair))
    with pytest.raises(LiftEvaluationError):
        lift_volume(F)
    with pytest.raises(LiftEvaluationError):
        lift_boundary(F)


def test_symmetric_configuration_zero_lift():
    B = BodyShape([(-0.675, -0.15), (0.675, -0.15), (0.675, 0.15), (-0.675, 0.15)])
    M = generate_mesh(R, B, h=1 / 5, symmetric=True)
    pair = FlowShapePair(poiseuille(H), poiseuille(H), 0)
    F = solve_steady_ns(M, BoundaryData(0.5, pair))
    scale = 0.5 * dirichlet_energy(F)
    assert abs(lift_volume(F)) <= 1e-8 * scale


def test_reflection_antisymmetry_volume(trap_mesh, trap_field):
    Fr = solve_steady_ns(reflect_mesh(trap_mesh),
                         BoundaryData(0.5, reflect_flow(asym_pair())))
    L = lift_volume(trap_field)
    Lr = lift_volume(Fr)
    assert abs(L + Lr) <= 1e-10 * abs(L)


def test_reflection_antisymmetry_boundary(trap_mesh, trap_field):
    Fr = solve_steady_ns(reflect_mesh(trap_mesh),
                         BoundaryData(0.5, reflect_flow(asym_pair())))
    L = lift_boundary(trap_field)
    Lr = lift_boundary(Fr)
    assert abs(L + Lr) <= 1e-12 * abs(L)


def test_interior_extension_independence(trap_field):
    rng = np.random.default_rng(3)
    base = lift_volume(trap_field)
    for _ in range(3):
        ext = rng.normal(size=trap_field.space.nv)
        assert abs(lift_volume(trap_field, interior_extension=ext) - base) \
            <= 10.0 * 1e-10 + 1e-12 * abs(base)


def test_evaluators_converge_under_refinement():
    gaps = []
    for h in (1 / 4, 1 / 8):
        M = generate_mesh(R, body_family(0.0, TRAP), h=h)
        F = solve_steady_ns(M, BoundaryData(0.5, asym_pair()))
        lv = lift_volume(F)
        gaps.append(abs(lift_boundary(F) - lv) / abs(lv))
    assert gaps[1] < gaps[0]


def test_linearity_with_frozen_convection(trap_field):
    sp = trap_field.space
    rng = np.random.default_rng(11)
    body = sp.boundary_vel_dofs("BodyBoundary")

    def stokes_lift(x):
        Rv = sp.assemble_residual(x, form="stokes")
        return -float(np.sum(Rv[sp.nv + body]))

    x1 = rng.normal(size=sp.ndof)
    x2 = rng.normal(size=sp.ndof)
    s = stokes_lift(x1) + stokes_lift(x2)
    scale = max(abs(s), 1.0)
    assert abs(stokes_lift(x1 + x2) - s) <= 1e-12 * scale


# ---------------------------------------------------------------- curves

def test_curve_zero_grid(trap_mesh):
    curve = lift_curve(trap_mesh, asym_pair(), [0.0])
    assert len(curve.lambdas) == 1
    assert curve.sup_norm() == 0.0


@pytest.fixture(scope="module")
def fine_curve(trap_mesh):
    return lift_curve(trap_mesh, asym_pair(), np.linspace(0.0, 0.6, 13))


def test_curve_lipschitz(fine_curve, trap_mesh):
    lam = fine_curve.lambdas
    lift = fine_curve.lifts
    K = 1.5 * np.max(np.abs(np.diff(lift) / np.diff(lam)))
    coarse = lift_curve(trap_mesh, asym_pair(), np.linspace(0.0, 0.6, 5))
    for i in range(len(coarse.lambdas) - 1):
        dl = abs(coarse.lifts[i + 1] - coarse.lifts[i])
        assert dl <= K * (coarse.lambdas[i + 1] - coarse.lambdas[i])


def test_curve_starts_at_zero(fine_curve):
    assert fine_curve.lambdas[0] == 0.0 and fine_curve.lifts[0] == 0.0


def test_curve_symmetric_baseline_small():
    B = BodyShape([(-0.675, -0.15), (0.675, -0.15), (0.675, 0.15), (-0.675, 0.15)])
    M = generate_mesh(R, B, h=1 / 5, symmetric=True)
    pair = FlowShapePair(poiseuille(H), poiseuille(H), 0)
    curve = lift_curve(M, pair, np.linspace(0.0, 0.5, 4))
    assert curve.sup_norm() <= 1e-8 * 0.5


def test_curve_truncates_on_failure(trap_mesh):
    cfg = SolverConfig(max_newton_iters=6, max_continuation_rounds=1)
    curve = lift_curve(trap_mesh, asym_pair(), [0.2, 500.0], cfg)
    assert curve.failures
    assert curve.lambdas[-1] == 0.2


def test_curve_csv_round_trip(fine_curve):
    back = LiftCurve.from_csv(fine_curve.to_csv())
    assert np.array_equal(back.lambdas, fine_curve.lambdas)
    assert np.array_equal(back.lifts, fine_curve.lifts)


def test_curve_validation():
    with pytest.raises(LiftEvaluationError):
        LiftCurve(np.array([0.1, 0.2]), np.array([0.0, 0.1]), np.zeros(2))
    with pytest.raises(LiftEvaluationError):
        LiftCurve(np.array([0.0, 0.2, 0.2]), np.zeros(3), np.zeros(3))
