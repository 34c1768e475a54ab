"""Zero-lift root search along body/flow homotopies, the instability measure
(sup of lift-curve sup-norms over admissible flow shapes), and derivative-free
shape optimization over confined convex bodies."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import FlowShapeError, MeshError, NewtonDivergenceError, \
    NoSignChangeError, SearchError, SolverError
from .flowshape import (
    FlowClassParams,
    FlowProfile,
    FlowShapePair,
    flow_homotopy,
    flux,
    is_admissible_flow,
    symmetric_grid,
    w1inf_norm,
)
from .geometry import (
    BodyClass,
    BodyShape,
    Rect,
    TrapeziumParams,
    body_family,
    convex_hull,
    hausdorff_distance,
    is_admissible_body,
    reflect_body,
)
from .lift import lift_curve, lift_volume
from .mesh import Mesh, generate_mesh
from .ns_solver import BoundaryData, SolverConfig, SteadyNSSolver, solve_steady_ns


# ------------------------------------------------------------------
# Bolzano zero-lift search
# ------------------------------------------------------------------

def _identity(t: float) -> float:
    return t


def _zero(t: float) -> float:
    return 0.0


@dataclass
class HomotopyPath:
    """Path t -> (eps(t), delta(t)) through body and flow deformations at a
    fixed flow magnitude. Components either traverse [0, 1] or stay frozen
    at 0 (the body-only / flow-only variants). A flow-only path may replace
    the trapezium family by an arbitrary fixed body."""

    trapezium: TrapeziumParams | None
    pair: FlowShapePair
    lam: float
    eps_of_t: callable = _identity
    delta_of_t: callable = _identity
    fixed_body: BodyShape | None = None

    def __post_init__(self):
        e0, d0 = self.eps_of_t(0.0), self.delta_of_t(0.0)
        e1, d1 = self.eps_of_t(1.0), self.delta_of_t(1.0)
        if e0 != 0.0 or d0 != 0.0:
            raise SearchError("homotopy path must start at (0, 0)")
        if e1 not in (0.0, 1.0) or d1 not in (0.0, 1.0) or (e1 == 0.0 and d1 == 0.0):
            raise SearchError("path endpoint must reflect the body, the flow, or both")
        if self.fixed_body is not None and e1 != 0.0:
            raise SearchError("a fixed body requires a frozen body component")
        if self.fixed_body is None and self.trapezium is None:
            raise SearchError("need either trapezium parameters or a fixed body")

    def body_at(self, eps: float) -> BodyShape:
        if self.fixed_body is not None:
            return self.fixed_body
        return body_family(eps, self.trapezium)

    @classmethod
    def diagonal(cls, trapezium, pair, lam):
        return cls(trapezium, pair, lam)

    @classmethod
    def body_only(cls, trapezium, pair, lam):
        return cls(trapezium, pair, lam, delta_of_t=_zero)

    @classmethod
    def flow_only(cls, pair, lam, trapezium=None, fixed_body=None):
        return cls(trapezium, pair, lam, eps_of_t=_zero, fixed_body=fixed_body)


@dataclass(frozen=True)
class ZeroLiftConfig:
    R: Rect
    flow_class: FlowClassParams
    h: float
    solver: SolverConfig = SolverConfig()
    lift_tol: float | None = None       # default max(1e-6 scale, 10 newton_tol)
    noise_floor: float | None = None    # default 100 newton_tol
    max_solves: int = 25
    min_angle: float = 20.0
    symmetric_mesh: bool = False        # for paths with a mirror-symmetric body


@dataclass
class ZeroLiftResult:
    eps: float
    delta: float
    lift: float
    t: float
    solves: int
    lift_tol: float
    verification_lift: float
    trace: list


def zero_lift_search(path: HomotopyPath, cfg: ZeroLiftConfig) -> ZeroLiftResult:
    """Bisection on the lift along the homotopy path.

    The endpoints must produce lifts of opposite sign above the noise floor;
    reflection antisymmetry guarantees this whenever the starting lift is
    nonzero and the path ends at the fully reflected configuration.
    """
    if path.pair.U != 0:
        raise SearchError("the zero-lift construction is set in the U = 0 class")
    trace = []

    def phi(t: float) -> float:
        eps = float(path.eps_of_t(t))
        delta = float(path.delta_of_t(t))
        B = path.body_at(eps)
        M = generate_mesh(cfg.R, B, cfg.h, min_angle=cfg.min_angle,
                          symmetric=cfg.symmetric_mesh)
        pair = flow_homotopy(path.pair, delta, cfg.flow_class)
        F = solve_steady_ns(M, BoundaryData(path.lam, pair), cfg.solver)
        val = lift_volume(F)
        trace.append({"t": t, "eps": eps, "delta": delta, "lift": val})
        return val

    noise = cfg.noise_floor if cfg.noise_floor is not None \
        else 100.0 * cfg.solver.newton_tol
    phi0 = phi(0.0)
    if abs(phi0) <= noise:
        raise NoSignChangeError(
            "no sign change: lift at endpoints below noise floor "
            f"(|phi(0)| = {abs(phi0):.3e} <= {noise:.3e})")
    phi1 = phi(1.0)
    if abs(phi1) <= noise:
        raise NoSignChangeError(
            "no sign change: lift at endpoints below noise floor "
            f"(|phi(1)| = {abs(phi1):.3e} <= {noise:.3e})")
    if np.sign(phi0) == np.sign(phi1):
        raise NoSignChangeError(
            f"no sign change: phi(0) = {phi0:.3e} and phi(1) = {phi1:.3e} "
            "have the same sign along this path")

    scale = max(abs(phi0), abs(phi1))
    lift_tol = cfg.lift_tol if cfg.lift_tol is not None \
        else max(1e-6 * scale, 10.0 * cfg.solver.newton_tol)

    lo, hi = 0.0, 1.0
    phi_lo = phi0
    solves = 2
    root_t = None
    root_val = None
    while solves < cfg.max_solves:
        mid = 0.5 * (lo + hi)
        val = phi(mid)
        solves += 1
        if abs(val) <= lift_tol:
            root_t, root_val = mid, val
            break
        if np.sign(val) == np.sign(phi_lo):
            lo = mid
            phi_lo = val
        else:
            hi = mid
    if root_t is None:
        raise SearchError(
            f"bisection used {solves} solves without reaching |lift| <= "
            f"{lift_tol:.3e}; best bracket [{lo}, {hi}]")

    verification = phi(root_t)
    return ZeroLiftResult(
        eps=float(path.eps_of_t(root_t)), delta=float(path.delta_of_t(root_t)),
        lift=root_val, t=root_t, solves=solves, lift_tol=lift_tol,
        verification_lift=verification, trace=trace)


# ------------------------------------------------------------------
# flow-shape parameterization for the outer supremum
# ------------------------------------------------------------------

class FlowParameterization:
    """Finite-dimensional admissible subset of the flow-shape class.

    Each profile is the class baseline plus even modes cos((2k-1) pi x / 2H)
    and odd modes sin(k pi x / H), all vanishing at the walls. Unit flux is
    restored by eliminating the first even coefficient; the norm budget is
    enforced by shrinking first the odd, then the even perturbation.
    """

    def __init__(self, C: FlowClassParams, m_even: int = 6, m_odd: int = 6,
                 odd_modes: tuple | None = None, odd_sign: float = 1.0):
        if m_even < 1:
            raise SearchError("need at least one even mode for flux elimination")
        self.C = C
        self.m_even = m_even
        self.m_odd = m_odd
        self.odd_modes = tuple(odd_modes) if odd_modes is not None \
            else tuple(range(1, m_odd + 1))
        if len(self.odd_modes) != m_odd:
            raise SearchError("odd_modes length must match m_odd")
        self.odd_sign = float(odd_sign)
        base = C.default_pair()
        self.base = base
        H = C.H
        x = symmetric_grid(H, base.v_in.num_nodes)
        self.even_basis = np.stack([
            np.cos((2 * k - 1) * np.pi * x / (2.0 * H))
            for k in range(1, m_even + 1)])
        self.odd_basis = np.stack([
            self.odd_sign * np.sin(k * np.pi * x / H) for k in self.odd_modes])
        self.even_flux = np.array([
            flux(FlowProfile(H, row)) for row in self.even_basis])
        if abs(self.even_flux[0]) < 1e-12:
            raise SearchError("first even mode must carry flux for elimination")

    @property
    def dim(self) -> int:
        return 2 * ((self.m_even - 1) + self.m_odd)

    def describe(self) -> dict:
        return {"m_even": self.m_even, "m_odd": self.m_odd,
                "odd_modes": list(self.odd_modes), "odd_sign": self.odd_sign,
                "r": self.C.r, "U": self.C.U, "H": self.C.H,
                "nodes": self.base.v_in.num_nodes}

    def _perturbations(self, theta: np.ndarray):
        ne, no = self.m_even - 1, self.m_odd
        out = []
        for block in (theta[: ne + no], theta[ne + no:]):
            a_free = block[:ne]
            b = block[ne:]
            a1 = -float(a_free @ self.even_flux[1:]) / self.even_flux[0] \
                if ne else 0.0
            even = a1 * self.even_basis[0]
            if ne:
                even = even + a_free @ self.even_basis[1:]
            odd = b @ self.odd_basis if no else np.zeros_like(self.even_basis[0])
            out.append((even, odd))
        return out

    def build(self, theta) -> FlowShapePair:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise SearchError(f"theta must have dimension {self.dim}")
        (e_in, o_in), (e_out, o_out) = self._perturbations(theta)
        r = self.C.r
        H = self.C.H
        base_in = self.base.v_in.values
        base_out = self.base.v_out.values

        def total(se, so):
            vi = FlowProfile(H, base_in + se * e_in + so * o_in)
            vo = FlowProfile(H, base_out + se * e_out + so * o_out)
            return w1inf_norm(vi) + w1inf_norm(vo)

        se, so = 1.0, 1.0
        slack = 1.0 + 1e-12
        if total(se, so) > r * slack:
            if total(1.0, 0.0) <= r * slack:
                lo, hi = 0.0, 1.0
                for _ in range(50):
                    mid = 0.5 * (lo + hi)
                    if total(1.0, mid) <= r * slack:
                        lo = mid
                    else:
                        hi = mid
                se, so = 1.0, lo
            else:
                lo, hi = 0.0, 1.0
                for _ in range(50):
                    mid = 0.5 * (lo + hi)
                    if total(mid, 0.0) <= r * slack:
                        lo = mid
                    else:
                        hi = mid
                se, so = lo, 0.0
        pair = FlowShapePair(FlowProfile(H, base_in + se * e_in + so * o_in),
                             FlowProfile(H, base_out + se * e_out + so * o_out),
                             self.C.U)
        report = is_admissible_flow(pair, self.C)
        if not report.ok:
            raise SearchError(f"projected candidate not admissible: {report.violations}")
        return pair

    def saturating_amplitude(self, direction: np.ndarray) -> float:
        """Largest a with build(a * direction) keeping the odd shrink at 1,
        i.e. the raw candidate already inside the budget."""
        direction = np.asarray(direction, dtype=float)
        lo, hi = 0.0, 1.0
        r = self.C.r

        def raw_total(a):
            (e_in, o_in), (e_out, o_out) = self._perturbations(a * direction)
            vi = FlowProfile(self.C.H, self.base.v_in.values + e_in + o_in)
            vo = FlowProfile(self.C.H, self.base.v_out.values + e_out + o_out)
            return w1inf_norm(vi) + w1inf_norm(vo)

        while raw_total(hi) <= r and hi < 1e6:
            hi *= 2.0
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if raw_total(mid) <= r:
                lo = mid
            else:
                hi = mid
        return lo


# ------------------------------------------------------------------
# instability measure
# ------------------------------------------------------------------

@dataclass(frozen=True)
class GammaConfig:
    R: Rect
    h: float
    solver: SolverConfig = SolverConfig()
    m_even: int = 6
    m_odd: int = 6
    lambda_coarse: int = 17
    lambda_refine: int = 8
    refine_passes: int = 2
    nm_maxfev: int = 40
    nm_restarts: int = 1
    probe_modes: int = 2
    seed: int = 0
    min_angle: float = 20.0


@dataclass
class GammaEstimate:
    """Lower bound of the instability measure restricted to the finite
    parameterization, with the maximizing flow pair and magnitude."""

    value: float
    argmax_pair: FlowShapePair
    argmax_lambda: float
    reeval_value: float
    trace: list
    fingerprints: dict


def _sup_over_lambda(mesh, solver, pair, lambda_max, cfg):
    grid = np.linspace(0.0, lambda_max, cfg.lambda_coarse)
    curve = lift_curve(mesh, pair, grid, cfg.solver, solver=solver)
    best = curve.sup_norm()
    best_lam = curve.argmax_lambda()
    if len(grid) > 1:
        window = grid[1] - grid[0]
        for _ in range(cfg.refine_passes):
            lo = max(0.0, best_lam - window)
            hi = min(lambda_max, best_lam + window)
            sub = np.linspace(lo, hi, cfg.lambda_refine)
            curve = lift_curve(mesh, pair, sub, cfg.solver, solver=solver)
            if curve.sup_norm() > best:
                best = curve.sup_norm()
                best_lam = curve.argmax_lambda()
            window /= 2.0
    return best, best_lam


def gamma_estimate(B: BodyShape, C: FlowClassParams, lambda_max: float,
                   cfg: GammaConfig,
                   parameterization: FlowParameterization | None = None,
                   mesh: Mesh | None = None) -> GammaEstimate:
    """Estimate the instability measure of B: maximize the lift-curve
    sup-norm over the parameterized admissible flow shapes.

    The reported value is a certified lower bound of the measure restricted
    to the parameterization: it is the best actually-evaluated admissible
    candidate, re-evaluated once for the certificate.
    """
    if mesh is None:
        mesh = generate_mesh(cfg.R, B, cfg.h, min_angle=cfg.min_angle)
    solver = SteadyNSSolver(mesh, cfg.solver)
    param = parameterization if parameterization is not None \
        else FlowParameterization(C, cfg.m_even, cfg.m_odd)
    rng = np.random.default_rng(cfg.seed)
    trace = []

    def objective(theta):
        pair = param.build(theta)
        value, lam = _sup_over_lambda(mesh, solver, pair, lambda_max, cfg)
        trace.append({"theta": np.asarray(theta, dtype=float).copy(),
                      "value": value, "lambda": lam})
        return -value

    # baseline first: the even base pair itself
    objective(np.zeros(param.dim))

    # deterministic budget-saturating probes along single odd modes
    ne, no = param.m_even - 1, param.m_odd
    for which in range(2):
        for k in range(min(cfg.probe_modes, no)):
            direction = np.zeros(param.dim)
            direction[which * (ne + no) + ne + k] = 1.0
            amp = param.saturating_amplitude(direction)
            if amp > 0.0:
                objective(amp * direction)

    best_idx = int(np.argmax([t["value"] for t in trace]))
    x_best = trace[best_idx]["theta"]
    if cfg.nm_maxfev > 0:
        starts = [x_best]
        for _ in range(max(0, cfg.nm_restarts - 1)):
            starts.append(x_best + 0.1 * rng.standard_normal(param.dim))
        for x0 in starts:
            optimize.minimize(objective, x0, method="Nelder-Mead",
                              options={"maxfev": cfg.nm_maxfev,
                                       "xatol": 1e-6, "fatol": 1e-10})

    best_idx = int(np.argmax([t["value"] for t in trace]))
    best = trace[best_idx]
    pair_best = param.build(best["theta"])
    reeval, relam = _sup_over_lambda(mesh, solver, pair_best, lambda_max, cfg)
    fingerprints = {
        "mesh": hashlib.sha256(mesh.to_json().encode()).hexdigest()[:16],
        "body": hashlib.sha256(B.to_json().encode()).hexdigest()[:16],
        "parameterization": param.describe(),
        "seed": cfg.seed,
        "budget": {"nm_maxfev": cfg.nm_maxfev, "restarts": cfg.nm_restarts,
                   "probes": cfg.probe_modes},
        "lambda_max": lambda_max,
    }
    return GammaEstimate(value=best["value"], argmax_pair=pair_best,
                         argmax_lambda=best["lambda"], reeval_value=reeval,
                         trace=trace, fingerprints=fingerprints)


# ------------------------------------------------------------------
# shape optimization
# ------------------------------------------------------------------

@dataclass(frozen=True)
class ShapeOptConfig:
    gamma: GammaConfig
    n_vertices: int = 5
    population: int = 4
    generations: int = 3
    sigma0: float = 0.15
    seed: int = 0
    max_projection_iters: int = 60


@dataclass
class ShapeOptResult:
    best_body: BodyShape
    gamma_value: float
    history: list          # (evaluation index, best so far)
    feasibility: dict
    trace: list


def project_to_class(points, bc: BodyClass, max_iters: int = 60) -> BodyShape:
    """Convex hull -> squeeze oversized extents -> rescale about the
    barycenter to area alpha -> translate into D, iterated to joint
    feasibility."""
    pts = np.asarray(points, dtype=float)
    for _ in range(max_iters):
        hull = _drop_flat_vertices(convex_hull(pts))
        B = BodyShape(hull)
        c = B.centroid()
        pts = B.vertices.copy()
        # anisotropic squeeze when an extent cannot fit in D
        for dim, half in ((0, bc.D.L), (1, bc.D.H)):
            ext = float(np.ptp(pts[:, dim]))
            if ext > 1.9 * half:
                pts[:, dim] = c[dim] + (pts[:, dim] - c[dim]) * (1.9 * half / ext)
        area = abs(BodyShape(pts).area)
        f = np.sqrt(bc.alpha / area)
        pts = c + f * (pts - c)
        shift = np.zeros(2)
        for dim, half in ((0, bc.D.L), (1, bc.D.H)):
            lo = float(np.min(pts[:, dim]))
            hi = float(np.max(pts[:, dim]))
            if hi - lo <= 2.0 * half:
                if hi > half:
                    shift[dim] = half - hi
                elif lo < -half:
                    shift[dim] = -half - lo
        pts = pts + shift
        B = BodyShape(pts)
        if is_admissible_body(B, bc).ok:
            return B
        pts = B.vertices
    raise SearchError("projection failed to reach joint feasibility "
                      "(alpha may be too large for D after convexification)")


def _drop_flat_vertices(hull: np.ndarray, rel_tol: float = 1e-6) -> np.ndarray:
    """Remove hull vertices that are nearly collinear with their neighbors;
    such slivers are admissible but defeat mesh generation."""
    span = max(float(np.ptp(hull[:, 0])), float(np.ptp(hull[:, 1])))
    tol = rel_tol * span * span
    keep = hull
    changed = True
    while changed and len(keep) > 3:
        changed = False
        n = len(keep)
        for i in range(n):
            a = keep[(i - 1) % n]
            b = keep[i]
            c = keep[(i + 1) % n]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if abs(cross) <= tol:
                keep = np.delete(keep, i, axis=0)
                changed = True
                break
    return keep


def _initial_body(bc: BodyClass, n_vertices: int) -> np.ndarray:
    # ellipse inscribed in D scaled to area alpha
    a, b = bc.D.L, bc.D.H
    s = np.sqrt(bc.alpha / (np.pi * a * b))
    ang = 2.0 * np.pi * np.arange(n_vertices) / n_vertices
    return np.stack([s * a * np.cos(ang), s * b * np.sin(ang)], axis=1)


def optimize_body(bc: BodyClass, C: FlowClassParams, lambda_max: float,
                  cfg: ShapeOptConfig,
                  initial: BodyShape | None = None,
                  discrete_candidates: list | None = None) -> ShapeOptResult:
    """Minimize the estimated instability measure over confined convex shapes
    of fixed area, by exhaustive evaluation of a discrete candidate list or a
    seeded elitist mutation search with feasibility projection."""
    history = []
    trace = []

    def evaluate(body: BodyShape) -> float:
        report = is_admissible_body(body, bc)
        if not report.ok:
            raise SearchError(f"optimizer produced inadmissible body: "
                              f"{report.violations}")
        est = gamma_estimate(body, C, lambda_max, cfg.gamma)
        trace.append({"body": json.loads(body.to_json()), "gamma": est.value})
        return est.value

    if discrete_candidates is not None:
        if not discrete_candidates:
            raise SearchError("empty candidate list")
        best_body = None
        best_val = np.inf
        for body in discrete_candidates:
            val = evaluate(body)
            if val < best_val:
                best_val = val
                best_body = body
            history.append((len(trace), best_val))
        return ShapeOptResult(best_body, best_val, history,
                              {"mode": "discrete", "candidates": len(trace)},
                              trace)

    rng = np.random.default_rng(cfg.seed)
    pts = initial.vertices if initial is not None \
        else _initial_body(bc, cfg.n_vertices)
    best_body = project_to_class(pts, bc, cfg.max_projection_iters)
    best_val = evaluate(best_body)
    history.append((len(trace), best_val))

    scale = np.array([bc.D.L, bc.D.H])
    for gen in range(cfg.generations):
        sigma = cfg.sigma0 * (0.7 ** gen)
        for _ in range(cfg.population):
            cand_pts = best_body.vertices + sigma * scale * \
                rng.standard_normal(best_body.vertices.shape)
            try:
                cand = project_to_class(cand_pts, bc, cfg.max_projection_iters)
                val = evaluate(cand)
            except (SearchError, SolverError, NewtonDivergenceError, MeshError):
                history.append((len(trace), best_val))
                continue
            if val < best_val:
                best_val = val
                best_body = cand
            history.append((len(trace), best_val))
    return ShapeOptResult(best_body, best_val, history,
                          {"mode": "population", "evaluations": len(trace)},
                          trace)


# ------------------------------------------------------------------
# continuity probes
# ------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeConfig:
    R: Rect
    flow_class: FlowClassParams
    trapezium: TrapeziumParams
    h: float
    lam: float
    solver: SolverConfig = SolverConfig()
    tol: float = 0.05
    min_angle: float = 20.0
    base_eps: float = 0.25   # body-probe base inside the constant-vertex range


def _project_to_polygon(p: np.ndarray, B: BodyShape):
    """Nearest boundary point of B to p as (edge index, fraction, distance)."""
    best = (0, 0.0, np.inf)
    v = B.vertices
    n = len(v)
    for k in range(n):
        a = v[k]
        b = v[(k + 1) % n]
        ab = b - a
        denom = float(ab @ ab)
        t = min(1.0, max(0.0, float((p - a) @ ab) / denom))
        d = float(np.hypot(*(p - (a + t * ab))))
        if d < best[2]:
            best = (k, t, d)
    return best


def morph_mesh_to_body(M: Mesh, B_from: BodyShape, B_to: BodyShape,
                       collar: float, falloff: float) -> Mesh:
    """Deform a mesh of R \\ B_from onto R \\ B_to by mapping body-boundary
    nodes through the edgewise arclength correspondence of the two polygons
    and dragging nearby nodes along (rigidly within the collar, linearly
    decaying up to the falloff radius).

    Sharing one triangulation across nearby shapes makes lift differences
    insensitive to remeshing noise. Requires equal vertex counts.
    """
    if B_from.num_vertices != B_to.num_vertices:
        raise SearchError("morphing requires matching polygon vertex counts")
    vf = B_from.vertices
    vt = B_to.vertices
    nodes = M.nodes.copy()
    for i, p in enumerate(M.nodes):
        k, t, d = _project_to_polygon(p, B_from)
        if d >= falloff:
            continue
        src = vf[k] + t * (vf[(k + 1) % len(vf)] - vf[k])
        dst = vt[k] + t * (vt[(k + 1) % len(vt)] - vt[k])
        delta = dst - src
        if d <= collar:
            w = 1.0
        else:
            w = (falloff - d) / (falloff - collar)
        nodes[i] = p + w * delta
    out = Mesh(nodes, M.triangles.copy(), M.boundary_edges.copy(),
               list(M.boundary_tags), M.h)
    if np.any(out.signed_areas() <= 0.0):
        raise SearchError("mesh morphing inverted a triangle; reduce the "
                          "perturbation or enlarge the falloff radius")
    return out


@dataclass
class ProbeTable:
    kind: str
    sizes: list
    differences: list
    annotations: list
    passed: bool
    tol: float


def _probe_direction(H: float, n: int) -> np.ndarray:
    x = symmetric_grid(H, n)
    return np.sin(2.0 * np.pi * x / H)


def continuity_probe(kind: str, cfg: ProbeConfig, sizes,
                     pair: FlowShapePair | None = None) -> ProbeTable:
    """Measure the lift change under perturbations of the flow shape
    (W^{1,inf} distance) or the body shape (Hausdorff distance)."""
    sizes = [float(s) for s in sizes]
    if any(s < 0 for s in sizes) or any(np.diff(sizes) >= 0):
        raise SearchError("perturbation sizes must be positive and decreasing")
    if pair is None:
        pair = cfg.flow_class.default_pair()
    B0 = body_family(0.0, cfg.trapezium)
    annotations = []
    diffs = []

    if kind == "flow":
        M = generate_mesh(cfg.R, B0, cfg.h, min_angle=cfg.min_angle)
        solver = SteadyNSSolver(M, cfg.solver)
        L0 = lift_volume(solver.solve(BoundaryData(cfg.lam, pair)))
        d = _probe_direction(pair.H, pair.v_in.num_nodes)
        d_hat = d / w1inf_norm(FlowProfile(pair.H, d))
        for s in sizes:
            vin = FlowProfile(pair.H, pair.v_in.values + s * d_hat)
            pert = FlowShapePair(vin, pair.v_out, pair.U)
            rep = is_admissible_flow(pert, cfg.flow_class)
            if not rep.ok:
                raise SearchError(f"perturbed pair not admissible: {rep.violations}")
            try:
                L = lift_volume(solver.solve(BoundaryData(cfg.lam, pert)))
                diffs.append(abs(L - L0))
                annotations.append("")
            except (SolverError, NewtonDivergenceError) as err:
                diffs.append(np.nan)
                annotations.append(str(err))
    elif kind == "body":
        base = body_family(cfg.base_eps, cfg.trapezium)
        M0 = generate_mesh(cfg.R, base, cfg.h, min_angle=cfg.min_angle)
        L0 = lift_volume(solve_steady_ns(M0, BoundaryData(cfg.lam, pair),
                                         cfg.solver))
        collar = 4.0 * max(sizes)
        falloff = max(10.0 * max(sizes), 3.0 * cfg.h)
        for s in sizes:
            eps = _eps_for_hausdorff(cfg.trapezium, s, base_eps=cfg.base_eps)
            Bs = body_family(eps, cfg.trapezium)
            try:
                Ms = morph_mesh_to_body(M0, base, Bs, collar, falloff)
                L = lift_volume(solve_steady_ns(Ms, BoundaryData(cfg.lam, pair),
                                                cfg.solver))
                diffs.append(abs(L - L0))
                annotations.append(f"eps={eps:.6g}")
            except (SolverError, NewtonDivergenceError, SearchError) as err:
                diffs.append(np.nan)
                annotations.append(str(err))
    else:
        raise SearchError(f"unknown probe kind {kind!r}")

    finite = [d for d in diffs if np.isfinite(d)]
    passed = (len(finite) == len(diffs)
              and all(b < a for a, b in zip(diffs[:-1], diffs[1:]))
              and diffs[-1] <= cfg.tol)
    return ProbeTable(kind, sizes, diffs, annotations, passed, cfg.tol)


def _eps_for_hausdorff(P: TrapeziumParams, target: float,
                       base_eps: float = 0.0, hi: float | None = None) -> float:
    """Body-family parameter whose Hausdorff distance from the base member
    matches the target (bisection on the initial monotone stretch)."""
    B0 = body_family(base_eps, P)
    if hi is None:
        hi = min(1.0, base_eps + 0.35)

    def dist(e):
        return hausdorff_distance(B0, body_family(e, P))

    while dist(hi) < target and hi < 1.0:
        hi = min(1.0, hi * 1.3)
    if dist(hi) < target:
        raise SearchError(f"requested Hausdorff perturbation {target} beyond "
                          "the family's range")
    lo = base_eps
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if dist(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
