"""Lift evaluation by two independent routes and lift-curve sampling.

The volume route evaluates the weak-form residual at a discrete test field
equal to e2 on the body boundary; it is the primary evaluator (well defined
for Lipschitz bodies). The boundary route integrates the full fluid stress
along the body edges and serves as the cross-check; the two converge to the
same functional under mesh refinement.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import LiftEvaluationError, NewtonDivergenceError, SolverError
from .fem import _p2_bary_grads
from .flowshape import FlowShapePair
from .mesh import Mesh, TAG_BODY
from .ns_solver import BoundaryData, FlowField, SolverConfig, SteadyNSSolver


def _body_edges(mesh: Mesh):
    edges = [(int(a), int(b)) for (a, b), t in
             zip(mesh.boundary_edges, mesh.boundary_tags) if t == TAG_BODY]
    if not edges:
        raise LiftEvaluationError("mesh has no body boundary")
    return edges


def lift_volume(F: FlowField, interior_extension: np.ndarray | None = None) -> float:
    """Lift from the residual functional: with phi the discrete vector test
    field equal to e2 at body velocity nodes and 0 on the channel walls,
    the lift is -R(u, p) . phi. Any interior extension changes the value only
    within solver tolerance."""
    sp = F.space
    body = sp.boundary_vel_dofs(TAG_BODY)
    if len(body) == 0:
        raise LiftEvaluationError("mesh has no body boundary")
    R = sp.assemble_residual(F.x, F.form)
    if interior_extension is None:
        return -float(np.sum(R[sp.nv + body]))
    phi = np.asarray(interior_extension, dtype=float).copy()
    if phi.shape != (sp.nv,):
        raise LiftEvaluationError("interior extension must have one value per "
                                  "scalar velocity dof")
    phi[sp.all_boundary_vel_dofs()] = 0.0
    phi[body] = 1.0
    return -float(R[sp.nv:2 * sp.nv] @ phi)


def lift_boundary(F: FlowField) -> float:
    """Lift from the stress integral over the body: -e2 . int_{dB} T(u,p) n
    with n the domain-outward normal (pointing into the body)."""
    sp = F.space
    mesh = F.mesh
    edges = _body_edges(mesh)

    # adjacency: directed edge -> element
    owner = {}
    for e, (a, b, c) in enumerate(sp.tri):
        owner[(a, b)] = e
        owner[(b, c)] = e
        owner[(c, a)] = e

    from .fem import EDGE_QP, EDGE_QW

    total = 0.0
    for a, b in edges:
        e = owner.get((a, b))
        if e is None:
            raise LiftEvaluationError(f"body edge ({a}, {b}) not domain-left oriented")
        tri = sp.tri[e]
        loc = {int(v): i for i, v in enumerate(tri)}
        ea = np.zeros(3)
        eb = np.zeros(3)
        ea[loc[a]] = 1.0
        eb[loc[b]] = 1.0
        pa = mesh.nodes[a]
        pb = mesh.nodes[b]
        tang = pb - pa
        length = float(np.hypot(*tang))
        normal = np.array([tang[1], -tang[0]]) / length

        lam_pts = np.array([(1.0 - t) * ea + t * eb for t in EDGE_QP])
        g = _p2_bary_grads(lam_pts)
        gr = g[:, :, 1] - g[:, :, 0]
        gs = g[:, :, 2] - g[:, :, 0]
        pts = mesh.nodes[tri]
        j00 = pts[1, 0] - pts[0, 0]
        j01 = pts[2, 0] - pts[0, 0]
        j10 = pts[1, 1] - pts[0, 1]
        j11 = pts[2, 1] - pts[0, 1]
        det = j00 * j11 - j01 * j10
        gx = (j11 * gr - j10 * gs) / det
        gy = (-j01 * gr + j00 * gs) / det

        cx = F.ux[sp.eldof_v[e]]
        cy = F.uy[sp.eldof_v[e]]
        cp = F.p[sp.eldof_p[e]]
        edge_val = 0.0
        for q in range(len(EDGE_QP)):
            dux_dx = float(gx[q] @ cx)
            dux_dy = float(gy[q] @ cx)
            duy_dx = float(gx[q] @ cy)
            duy_dy = float(gy[q] @ cy)
            p_q = float(lam_pts[q] @ cp)
            t_yx = duy_dx + dux_dy
            t_yy = 2.0 * duy_dy - p_q
            edge_val += EDGE_QW[q] * (t_yx * normal[0] + t_yy * normal[1])
        total += edge_val * length
    return -total


@dataclass
class LiftCurve:
    """Sampled lift over increasing flow magnitudes."""

    lambdas: np.ndarray
    lifts: np.ndarray
    residuals: np.ndarray
    failures: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.lifts = np.asarray(self.lifts, dtype=float)
        self.residuals = np.asarray(self.residuals, dtype=float)
        if len(self.lambdas) == 0 or self.lambdas[0] != 0.0 or self.lifts[0] != 0.0:
            raise LiftEvaluationError("lift curve must start at (0, 0)")
        if np.any(np.diff(self.lambdas) <= 0.0):
            raise LiftEvaluationError("lift curve samples must be strictly increasing")

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.lifts)))

    def argmax_lambda(self) -> float:
        return float(self.lambdas[int(np.argmax(np.abs(self.lifts)))])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("lambda,lift,residual\n")
        for lam, lift, res in zip(self.lambdas, self.lifts, self.residuals):
            buf.write(f"{float(lam)!r},{float(lift)!r},{float(res)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, meta: dict | None = None) -> "LiftCurve":
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        arr = np.array([[float(v) for v in row] for row in rows])
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], meta=meta or {})

    def to_json(self) -> str:
        return json.dumps({
            "lambdas": self.lambdas.tolist(),
            "lifts": self.lifts.tolist(),
            "residuals": self.residuals.tolist(),
            "failures": self.failures,
            "meta": self.meta,
        })


def lift_curve(M: Mesh, P: FlowShapePair, lambdas,
               cfg: SolverConfig = SolverConfig(),
               solver: SteadyNSSolver | None = None) -> LiftCurve:
    """Sequential warm-started solves over an increasing magnitude grid with
    the residual-functional lift at each sample. Solver failures annotate the
    curve and truncate it."""
    grid = np.unique(np.asarray(lambdas, dtype=float))
    if len(grid) == 0:
        grid = np.array([0.0])
    if grid[0] < 0.0:
        raise LiftEvaluationError("flow magnitudes must be nonnegative")
    if grid[0] != 0.0:
        grid = np.concatenate([[0.0], grid])
    if solver is None:
        solver = SteadyNSSolver(M, cfg)
    _body_edges(M)

    lams = [0.0]
    lifts = [0.0]
    residuals = [0.0]
    failures = []
    x_prev = None
    for lam in grid[1:]:
        try:
            F = solver.solve(BoundaryData(float(lam), P), initial=x_prev)
        except (SolverError, NewtonDivergenceError) as err:
            failures.append(f"lambda={lam!r}: {err}")
            break
        x_prev = F.x
        lams.append(float(lam))
        lifts.append(lift_volume(F))
        residuals.append(F.residual_norm)
    meta = {
        "mesh": hashlib.sha256(M.to_json().encode()).hexdigest()[:16],
        "flow": hashlib.sha256(P.to_json().encode()).hexdigest()[:16],
        "evaluator": "volume",
    }
    return LiftCurve(np.array(lams), np.array(lifts), np.array(residuals),
                     failures=failures, meta=meta)
