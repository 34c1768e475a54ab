import numpy as np
import pytest

from liftlab.errors import FlowShapeError, NoSignChangeError, SearchError
from liftlab.flowshape import (
    FlowClassParams,
    FlowProfile,
    FlowShapePair,
    is_admissible_flow,
    poiseuille,
    symmetric_grid,
    w1inf_norm,
)
from liftlab.geometry import (
    BodyClass,
    BodyShape,
    Rect,
    TrapeziumParams,
    body_family,
    hausdorff_distance,
    is_admissible_body,
    reflect_body,
)
from liftlab.lift import lift_curve
from liftlab.mesh import generate_mesh, reflect_mesh
from liftlab.ns_solver import SolverConfig
from liftlab.stability import (
    FlowParameterization,
    GammaConfig,
    HomotopyPath,
    ProbeConfig,
    ShapeOptConfig,
    ZeroLiftConfig,
    _eps_for_hausdorff,
    continuity_probe,
    gamma_estimate,
    morph_mesh_to_body,
    optimize_body,
    project_to_class,
    zero_lift_search,
)

R = Rect(2.0, 1.0)
H = 1.0
TRAP = TrapeziumParams(l=0.6, h=0.15, gamma=0.3)


def asym_pair(amp=0.25):
    x = symmetric_grid(H, 129)
    v = FlowProfile(H, poiseuille(H).values + amp * np.sin(2 * np.pi * x))
    return FlowShapePair(v, v, 0)


def even_pair():
    return FlowShapePair(poiseuille(H), poiseuille(H), 0)


def flow_class(r=6.0):
    return FlowClassParams(r=r, U=0)


# ---------------------------------------------------------------- zero lift

def coarse_zl_cfg(**kw):
    defaults = dict(R=R, flow_class=flow_class(), h=1 / 5,
                    solver=SolverConfig(), max_solves=25)
    defaults.update(kw)
    return ZeroLiftConfig(**defaults)


def test_zero_lift_diagonal_path_finds_root():
    path = HomotopyPath.diagonal(TRAP, asym_pair(), lam=0.5)
    cfg = coarse_zl_cfg(lift_tol=2e-3)
    res = zero_lift_search(path, cfg)
    assert abs(res.lift) <= 2e-3
    assert 0.0 < res.t < 1.0
    assert res.solves <= 25
    assert abs(res.verification_lift) <= 2.0 * res.lift_tol
    # endpoint lifts have opposite signs by reflection antisymmetry
    assert np.sign(res.trace[0]["lift"]) != np.sign(res.trace[1]["lift"])


def test_zero_lift_body_only_path_even_flow():
    path = HomotopyPath.body_only(TRAP, even_pair(), lam=0.5)
    cfg = coarse_zl_cfg(lift_tol=2e-3)
    res = zero_lift_search(path, cfg)
    assert abs(res.lift) <= 2e-3
    assert res.delta == 0.0


def test_zero_lift_symmetric_even_reports_no_sign_change():
    Brect = BodyShape([(-0.675, -0.15), (0.675, -0.15), (0.675, 0.15),
                       (-0.675, 0.15)])
    path = HomotopyPath.flow_only(even_pair(), lam=0.5, fixed_body=Brect)
    with pytest.raises(NoSignChangeError, match="noise floor"):
        zero_lift_search(path, coarse_zl_cfg(symmetric_mesh=True))


def test_zero_lift_diagonal_even_flow_rejected_by_homotopy():
    path = HomotopyPath.diagonal(TRAP, even_pair(), lam=0.5)
    with pytest.raises(FlowShapeError, match="already even"):
        zero_lift_search(path, coarse_zl_cfg())


def test_zero_lift_requires_U0():
    from liftlab.flowshape import couette
    pair = FlowShapePair(couette(H), couette(H), 1)
    path = HomotopyPath.diagonal(TRAP, pair, lam=0.5)
    with pytest.raises(SearchError, match="U = 0"):
        zero_lift_search(path, coarse_zl_cfg())


def test_path_validation():
    with pytest.raises(SearchError):
        HomotopyPath(TRAP, asym_pair(), 0.5, eps_of_t=lambda t: 0.5 * t,
                     delta_of_t=lambda t: 0.5 * t)
    with pytest.raises(SearchError):
        HomotopyPath(None, asym_pair(), 0.5)


# ---------------------------------------------------------------- gamma

def tiny_gamma_cfg(**kw):
    defaults = dict(R=R, h=1 / 4, m_even=2, m_odd=1, lambda_coarse=3,
                    lambda_refine=0, refine_passes=0, nm_maxfev=0,
                    nm_restarts=0, probe_modes=0, seed=0)
    defaults.update(kw)
    return GammaConfig(**defaults)


def test_gamma_trivial_budget_equals_baseline_curve():
    B = body_family(0.0, TRAP)
    C = flow_class()
    cfg = tiny_gamma_cfg()
    est = gamma_estimate(B, C, 0.4, cfg)
    M = generate_mesh(R, B, h=1 / 4)
    curve = lift_curve(M, C.default_pair(), np.linspace(0.0, 0.4, 3))
    assert est.value == pytest.approx(curve.sup_norm(), rel=1e-12)
    assert len(est.trace) == 1


def test_gamma_probes_improve_on_even_baseline():
    B = body_family(0.0, TRAP)
    est = gamma_estimate(B, flow_class(), 0.4, tiny_gamma_cfg(probe_modes=1))
    assert est.value >= est.trace[0]["value"]
    assert est.reeval_value == pytest.approx(est.value, rel=1e-12)


def test_gamma_monotone_in_r_small_budget():
    R2 = Rect(4.0, 2.0)
    TRAP2 = TrapeziumParams(l=1.2, h=0.3, gamma=0.6)
    B2 = body_family(0.0, TRAP2)
    cfg = tiny_gamma_cfg(R=R2, h=0.45, probe_modes=1)
    g3 = gamma_estimate(B2, FlowClassParams(r=3.0, U=0, H=2.0), 0.4, cfg)
    g6 = gamma_estimate(B2, FlowClassParams(r=6.0, U=0, H=2.0), 0.4, cfg)
    assert g3.value <= g6.value + 1e-12


def test_gamma_reflection_invariant_with_mirrored_setup():
    B = body_family(0.0, TRAP)
    Bref = reflect_body(B)
    C = flow_class()
    cfg = tiny_gamma_cfg(probe_modes=1, nm_maxfev=6)
    M = generate_mesh(R, B, h=cfg.h)
    param = FlowParameterization(C, cfg.m_even, cfg.m_odd)
    param_ref = FlowParameterization(C, cfg.m_even, cfg.m_odd, odd_sign=-1.0)
    est = gamma_estimate(B, C, 0.4, cfg, parameterization=param, mesh=M)
    est_ref = gamma_estimate(Bref, C, 0.4, cfg, parameterization=param_ref,
                             mesh=reflect_mesh(M))
    assert est_ref.value == pytest.approx(est.value, rel=2e-12)


def test_gamma_invariant_under_mode_relabeling():
    B = body_family(0.0, TRAP)
    C = flow_class()
    cfg = tiny_gamma_cfg(m_odd=2, probe_modes=2, nm_maxfev=5)
    p12 = FlowParameterization(C, cfg.m_even, cfg.m_odd, odd_modes=(1, 2))
    p21 = FlowParameterization(C, cfg.m_even, cfg.m_odd, odd_modes=(2, 1))
    M = generate_mesh(R, B, h=cfg.h)
    e12 = gamma_estimate(B, C, 0.4, cfg, parameterization=p12, mesh=M)
    e21 = gamma_estimate(B, C, 0.4, cfg, parameterization=p21, mesh=M)
    assert e21.value == pytest.approx(e12.value, rel=1e-12)


def test_parameterization_builds_admissible_candidates():
    C = flow_class()
    param = FlowParameterization(C, 3, 3)
    rng = np.random.default_rng(5)
    for _ in range(10):
        theta = rng.normal(scale=0.5, size=param.dim)
        pair = param.build(theta)
        assert is_admissible_flow(pair, C).ok


def test_parameterization_norm_projection_saturates():
    C = flow_class(r=4.0)
    param = FlowParameterization(C, 2, 2)
    theta = np.zeros(param.dim)
    theta[param.m_even - 1] = 50.0  # huge odd coefficient
    pair = param.build(theta)
    total = w1inf_norm(pair.v_in) + w1inf_norm(pair.v_out)
    assert total <= 4.0 * (1 + 1e-10)


# ---------------------------------------------------------------- optimize

def test_optimizer_discrete_matches_exhaustive():
    C = flow_class()
    bc = BodyClass(D=Rect(1.0, 0.4), alpha=0.3)
    thin = BodyShape([(-0.75, -0.1), (0.75, -0.1), (0.75, 0.1), (-0.75, 0.1)])
    s = np.sqrt(0.3) / 2
    square = BodyShape([(-s, -s), (s, -s), (s, s), (-s, s)])
    gcfg = tiny_gamma_cfg(probe_modes=1)
    res = optimize_body(bc, C, 0.4, ShapeOptConfig(gamma=gcfg),
                        discrete_candidates=[thin, square])
    gammas = [t["gamma"] for t in res.trace]
    assert res.gamma_value == min(gammas)
    winner = thin if gammas[0] <= gammas[1] else square
    assert res.best_body.equals_point_set(winner)


def test_optimizer_budget_zero_returns_projected_initial():
    C = flow_class()
    bc = BodyClass(D=Rect(1.0, 0.4), alpha=0.3)
    res = optimize_body(bc, C, 0.4,
                        ShapeOptConfig(gamma=tiny_gamma_cfg(), generations=0))
    assert is_admissible_body(res.best_body, bc).ok
    assert len(res.trace) == 1


def test_optimizer_history_monotone():
    C = flow_class()
    bc = BodyClass(D=Rect(1.0, 0.4), alpha=0.3)
    cfg = ShapeOptConfig(gamma=tiny_gamma_cfg(), n_vertices=4,
                         population=2, generations=2, seed=1)
    res = optimize_body(bc, C, 0.4, cfg)
    best_vals = [v for _, v in res.history]
    assert all(b <= a for a, b in zip(best_vals, best_vals[1:]))
    assert is_admissible_body(res.best_body, bc).ok


def test_projection_produces_admissible_bodies():
    bc = BodyClass(D=Rect(1.0, 0.4), alpha=0.3)
    rng = np.random.default_rng(2)
    for _ in range(5):
        pts = rng.normal(scale=0.8, size=(7, 2))
        B = project_to_class(pts, bc)
        assert is_admissible_body(B, bc).ok


def test_projection_reports_infeasible_alpha():
    bc = BodyClass(D=Rect(1.0, 0.4), alpha=1.58)  # |D| = 1.6
    pts = np.array([(0.0, 0.0), (0.5, 0.1), (0.1, 0.3)])
    with pytest.raises(SearchError, match="feasibility"):
        project_to_class(pts, bc, max_iters=25)


# ---------------------------------------------------------------- probes

def probe_cfg(**kw):
    defaults = dict(R=R, flow_class=flow_class(r=8.0), trapezium=TRAP,
                    h=1 / 5, lam=0.5, tol=0.25)
    defaults.update(kw)
    return ProbeConfig(**defaults)


@pytest.fixture(scope="module")
def strong_pair():
    return asym_pair(amp=0.2)


def test_flow_probe_near_linear(strong_pair):
    table = continuity_probe("flow", probe_cfg(), [0.1, 0.05, 0.025],
                             pair=strong_pair)
    assert table.passed
    for a, b in zip(table.differences[:-1], table.differences[1:]):
        assert 0.3 <= b / a <= 0.7


def test_body_probe_decreasing(strong_pair):
    table = continuity_probe("body", probe_cfg(), [0.02, 0.01, 0.005],
                             pair=strong_pair)
    assert table.passed
    assert table.differences[0] > table.differences[1] > table.differences[2]


def test_probe_zero_size_zero_difference(strong_pair):
    # a zero perturbation reproduces the base configuration bit for bit
    table = continuity_probe("flow", probe_cfg(), [0.05, 0.0], pair=strong_pair)
    assert table.differences[-1] == 0.0


def test_probe_rejects_bad_sizes(strong_pair):
    with pytest.raises(SearchError):
        continuity_probe("flow", probe_cfg(), [0.01, 0.05], pair=strong_pair)
    with pytest.raises(SearchError):
        continuity_probe("nope", probe_cfg(), [0.1, 0.05], pair=strong_pair)


def test_eps_for_hausdorff_hits_target():
    for target in (0.02, 0.01):
        eps = _eps_for_hausdorff(TRAP, target, base_eps=0.25)
        d = hausdorff_distance(body_family(0.25, TRAP), body_family(eps, TRAP))
        assert d == pytest.approx(target, rel=1e-6)


def test_morph_moves_body_nodes_onto_target():
    base = body_family(0.25, TRAP)
    target = body_family(0.3, TRAP)
    M = generate_mesh(R, base, h=1 / 5)
    Mm = morph_mesh_to_body(M, base, target, collar=0.1, falloff=0.6)
    assert np.all(Mm.signed_areas() > 0.0)
    for nid in Mm.body_node_ids():
        assert target.boundary_distance_to_point(Mm.nodes[nid]) <= 1e-12
