"""Steady incompressible Navier-Stokes solves on channel meshes: nodal
Dirichlet data from a flow-shape pair, Newton iteration with continuation in
the flow magnitude, and energy/uniqueness diagnostics."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu

from .errors import NewtonDivergenceError, SolverError
from .fem import FemSpace
from .flowshape import FlowShapePair
from .geometry import Rect
from .mesh import (
    Mesh,
    TAG_BODY,
    TAG_BOTTOM,
    TAG_LEFT,
    TAG_RIGHT,
    TAG_TOP,
    generate_mesh,
)


@dataclass
class BoundaryData:
    """Flow magnitude and shape driving the boundary conditions."""

    lam: float
    pair: FlowShapePair

    def __post_init__(self):
        if self.lam < 0.0:
            raise SolverError(f"flow magnitude must be nonnegative, got {self.lam}")

    @property
    def U(self) -> int:
        return self.pair.U


@dataclass(frozen=True)
class SolverConfig:
    newton_tol: float = 1e-10
    max_newton_iters: int = 30
    continuation_steps: int = 1
    max_continuation_rounds: int = 6
    convection: str = "standard"   # or "skew"
    pivot_tol: float = 1.0         # SuperLU diagonal pivot threshold

    def __post_init__(self):
        if self.newton_tol <= 0.0:
            raise SolverError("newton_tol must be positive")
        if self.convection not in ("standard", "skew"):
            raise SolverError(f"unknown convection form {self.convection!r}")


@dataclass
class FlowField:
    """Discrete solution coefficients on a mesh: quadratic velocity
    components, linear zero-mean pressure, and the solve log."""

    mesh: Mesh
    space: FemSpace
    ux: np.ndarray
    uy: np.ndarray
    p: np.ndarray
    lam: float
    form: str
    residual_norm: float
    log: list = field(default_factory=list)

    @property
    def x(self) -> np.ndarray:
        return self.space.join(self.ux, self.uy, self.p)

    def to_json(self) -> str:
        mesh_ref = hashlib.sha256(self.mesh.to_json().encode()).hexdigest()[:16]
        return json.dumps({
            "lambda": self.lam,
            "residual": self.residual_norm,
            "mesh_ref": mesh_ref,
            "velocity_x": self.ux.tolist(),
            "velocity_y": self.uy.tolist(),
            "pressure": self.p.tolist(),
        })


class SteadyNSSolver:
    """Reusable solver bound to one mesh (the FE space is built once)."""

    def __init__(self, mesh: Mesh, cfg: SolverConfig = SolverConfig(),
                 space: FemSpace | None = None):
        self.mesh = mesh
        self.cfg = cfg
        self.space = space if space is not None else FemSpace(mesh)
        sp = self.space
        bdofs = sp.all_boundary_vel_dofs()
        fixed = np.concatenate([bdofs, bdofs + sp.nv, [2 * sp.nv]])
        mask = np.zeros(sp.ndof, dtype=bool)
        mask[fixed] = True
        self._fixed_mask = mask
        self._free = np.flatnonzero(~mask)

    def _check_pair(self, pair: FlowShapePair):
        top = float(np.max(self.mesh.nodes[:, 1]))
        if abs(top - pair.H) > 1e-12 * max(1.0, pair.H):
            raise SolverError(
                f"flow pair half-height H = {pair.H} does not match the mesh "
                f"(top at {top})")

    def boundary_values(self, bd: BoundaryData) -> np.ndarray:
        """Vector of Dirichlet values on all constrained velocity dofs; zero
        elsewhere. x-velocity from the profiles, y-velocity always zero."""
        sp = self.space
        vals = np.zeros(sp.ndof)
        lam = bd.lam
        for tag in (TAG_BOTTOM, TAG_BODY, TAG_TOP, TAG_LEFT, TAG_RIGHT):
            dofs = sp.boundary_vel_dofs(tag)
            if len(dofs) == 0:
                continue
            if tag in (TAG_BOTTOM, TAG_BODY):
                continue  # zero
            if tag == TAG_TOP:
                vals[dofs] = lam * float(bd.U)
            elif tag == TAG_LEFT:
                vals[dofs] = lam * bd.pair.v_in(sp.vdof_coords[dofs, 1])
            elif tag == TAG_RIGHT:
                vals[dofs] = lam * bd.pair.v_out(sp.vdof_coords[dofs, 1])
        return vals

    def solve(self, bd: BoundaryData, initial: np.ndarray | None = None) -> FlowField:
        self._check_pair(bd.pair)
        sp = self.space
        cfg = self.cfg
        if bd.lam == 0.0:
            zero = np.zeros(sp.ndof)
            return self._field(zero, 0.0, 0.0, [])

        rounds = 0
        steps = max(1, cfg.continuation_steps)
        last_err = None
        while rounds < cfg.max_continuation_rounds:
            x = initial.copy() if initial is not None else np.zeros(sp.ndof)
            log = []
            try:
                for k in range(1, steps + 1):
                    lam_k = bd.lam * (k / steps)
                    bdk = BoundaryData(lam_k, bd.pair)
                    x = self._newton(x, bdk, log, step=k)
                res = self._final_residual(x, bd)
                return self._field(x, bd.lam, res, log)
            except NewtonDivergenceError as err:
                last_err = err
                rounds += 1
                steps *= 2
        raise NewtonDivergenceError(
            f"Newton failed at lambda = {bd.lam} after continuation with up to "
            f"{steps // 2} steps: {last_err}")

    # -- internals ----------------------------------------------------------

    def _apply_bc(self, x: np.ndarray, bd: BoundaryData) -> np.ndarray:
        vals = self.boundary_values(bd)
        x = x.copy()
        x[self._fixed_mask] = vals[self._fixed_mask]
        return x

    def _reduced_residual(self, x: np.ndarray) -> np.ndarray:
        R = self.space.assemble_residual(x, self.cfg.convection)
        return R[self._free]

    def _newton(self, x: np.ndarray, bd: BoundaryData, log: list, step: int):
        cfg = self.cfg
        x = self._apply_bc(x, bd)
        picard = False
        prev_norm = np.inf
        for it in range(cfg.max_newton_iters):
            Rf = self._reduced_residual(x)
            norm = float(np.linalg.norm(Rf))
            log.append({"step": step, "lambda": bd.lam, "iteration": it,
                        "residual": norm, "picard": picard})
            if norm <= cfg.newton_tol:
                return x
            if not np.isfinite(norm) or norm > 1e8 * max(1.0, bd.lam):
                raise NewtonDivergenceError(
                    f"residual blew up at lambda = {bd.lam}")
            if norm > prev_norm and not picard:
                picard = True   # stall: fall back to Picard linearization
            elif norm < 1e-4:
                picard = False  # close enough for plain Newton
            J = self.space.assemble_jacobian(x, cfg.convection, picard=picard)
            Jf = J[self._free][:, self._free].tocsc()
            try:
                lu = splu(Jf, permc_spec="COLAMD",
                          diag_pivot_thresh=self.cfg.pivot_tol)
            except RuntimeError as err:
                raise SolverError(f"singular linear system: {err}") from err
            delta = lu.solve(-Rf)
            x[self._free] += delta
            prev_norm = norm
        raise NewtonDivergenceError(
            f"no convergence in {cfg.max_newton_iters} iterations at "
            f"lambda = {bd.lam} (last residual {prev_norm:.3e})")

    def _final_residual(self, x: np.ndarray, bd: BoundaryData) -> float:
        return float(np.linalg.norm(self._reduced_residual(x)))

    def _field(self, x: np.ndarray, lam: float, res: float, log: list) -> FlowField:
        sp = self.space
        ux, uy, p = sp.split(x)
        p = p - sp.pressure_mean(p)
        return FlowField(mesh=self.mesh, space=sp, ux=ux.copy(), uy=uy.copy(),
                         p=p, lam=lam, form=self.cfg.convection,
                         residual_norm=res, log=log)


def solve_steady_ns(M: Mesh, bd: BoundaryData,
                    cfg: SolverConfig = SolverConfig()) -> FlowField:
    """One steady solve; deterministic for fixed inputs."""
    return SteadyNSSolver(M, cfg).solve(bd)


def dirichlet_energy(F: FlowField) -> float:
    """L2 norm of the velocity gradient over the domain."""
    return float(np.sqrt(F.space.gradient_norm_sq(F.ux, F.uy)))


# ------------------------------------------------------------------
# empirical solvable-range estimate
# ------------------------------------------------------------------

_S0_CACHE: dict = {}


def sobolev_embedding_proxy(R: Rect, h: float | None = None) -> float:
    """Estimate of the H^1_0 -> L^4 embedding constant of the empty channel,
    by inverse iteration on the Rayleigh quotient |grad u|^2 / |u|_4^2 over
    the discrete space. Heuristic diagnostic, cached per geometry."""
    if h is None:
        h = R.H / 3.0
    key = (R.L, R.H, round(h, 12))
    if key in _S0_CACHE:
        return _S0_CACHE[key]
    mesh = generate_mesh(R, None, h=h)
    sp = FemSpace(mesh)
    from scipy import sparse

    rows = np.repeat(sp.eldof_v, 6, axis=1).ravel()
    cols = np.tile(sp.eldof_v, (1, 6)).ravel()
    A = sparse.coo_matrix((sp.el_visc.ravel(), (rows, cols)),
                          shape=(sp.nv, sp.nv)).tocsr()
    bdofs = sp.all_boundary_vel_dofs()
    free = np.setdiff1d(np.arange(sp.nv), bdofs)
    Aff = A[free][:, free].tocsc()
    lu = splu(Aff)

    def l4_norm(c):
        vq = sp.field_at_qp(c)
        return sp.integrate(vq ** 4) ** 0.25

    def rhs_cubed(c):
        vq = sp.field_at_qp(c)
        b = np.zeros(sp.nv)
        from .fem import NQ, PHI, qsum
        terms = np.empty((NQ, len(sp.tri), 6))
        for q in range(NQ):
            terms[q] = sp.wdet[:, q, None] * PHI[q][None, :] * (vq[:, q] ** 3)[:, None]
        np.add.at(b, sp.eldof_v.ravel(), qsum(terms).ravel())
        return b

    c = np.zeros(sp.nv)
    c[free] = 1.0
    c /= l4_norm(c)
    for _ in range(25):
        b = rhs_cubed(c)
        c_new = np.zeros(sp.nv)
        c_new[free] = lu.solve(b[free])
        c = c_new / l4_norm(c_new)
    grad_sq = float(c @ (A @ c))
    value = grad_sq / l4_norm(c) ** 2  # == grad_sq since the norm is 1
    _S0_CACHE[key] = float(value)
    return float(value)


@dataclass(frozen=True)
class LambdaMaxEstimate:
    value: float
    flag: str          # "cap-limited", "contraction-limited", "newton-limited"
    probes: tuple      # (lambda, converged, grad_norm) triples


def estimate_lambda_max(M: Mesh, P: FlowShapePair,
                        cfg: SolverConfig = SolverConfig(),
                        lam_start: float = 0.25, cap: float = 64.0,
                        bisect_iters: int = 5) -> LambdaMaxEstimate:
    """Largest probed flow magnitude with a converging Newton solve and
    Dirichlet energy below the empty-channel embedding proxy (the empirical
    analogue of the small-data uniqueness threshold)."""
    L = float(np.max(M.nodes[:, 0]))
    H = float(np.max(M.nodes[:, 1]))
    S0 = sobolev_embedding_proxy(Rect(L, H))
    solver = SteadyNSSolver(M, cfg)
    probes = []

    def probe(lam: float):
        try:
            F = solver.solve(BoundaryData(lam, P))
        except (SolverError, NewtonDivergenceError):
            probes.append((lam, False, np.nan))
            return False, "newton"
        g = dirichlet_energy(F)
        probes.append((lam, True, g))
        return g < S0, "contraction"

    lam = lam_start
    last_good = 0.0
    flag = "cap-limited"
    while lam <= cap:
        ok, why = probe(lam)
        if not ok:
            flag = f"{why}-limited"
            break
        last_good = lam
        lam *= 2.0
    else:
        return LambdaMaxEstimate(last_good, "cap-limited", tuple(probes))

    lo, hi = last_good, lam
    for _ in range(bisect_iters):
        mid = 0.5 * (lo + hi)
        ok, _ = probe(mid)
        if ok:
            lo = mid
        else:
            hi = mid
    return LambdaMaxEstimate(lo, flag, tuple(probes))
