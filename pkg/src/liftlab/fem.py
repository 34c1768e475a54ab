"""Taylor-Hood (quadratic velocity / linear pressure) finite element core.

Assembly is organized so that solving on a mirrored mesh (`reflect_mesh`)
produces the exactly sign-flipped coefficient vector, bit for bit:

* element vertex tuples are rotated so the smallest node id comes first, so a
  mirrored element differs from the original exactly by swapping the last two
  local slots;
* the quadrature rule is stored in barycentric form with the swap-fixed points
  first and swap-partners adjacent, and every quadrature / local-dof sum is
  accumulated with the partner terms inside a single addition;
* geometric factors are evaluated through expressions whose floating-point
  values negate or swap exactly under the mirror substitution.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse

from .mesh import Mesh

_S15 = math.sqrt(15.0)
_B1 = (6.0 + _S15) / 21.0
_A1 = 1.0 - 2.0 * _B1
_B2 = (6.0 - _S15) / 21.0
_A2 = 1.0 - 2.0 * _B2
_W0 = 9.0 / 40.0
_W1 = (155.0 + _S15) / 1200.0
_W2 = (155.0 - _S15) / 1200.0

# order: [swap-fixed x3, swap pair, swap pair]
QP = np.array([
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [_A1, _B1, _B1],
    [_A2, _B2, _B2],
    [_B1, _A1, _B1],
    [_B1, _B1, _A1],
    [_B2, _A2, _B2],
    [_B2, _B2, _A2],
])
QW = np.array([_W0, _W1, _W2, _W1, _W1, _W2, _W2])
NQ = 7

# edge quadrature (2-point Gauss, exact to degree 3), orientation-pair layout
EDGE_QP = np.array([0.5 * (1.0 - 1.0 / math.sqrt(3.0)),
                    0.5 * (1.0 + 1.0 / math.sqrt(3.0))])
EDGE_QW = np.array([0.5, 0.5])


def _p2_values(lam):
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    return np.stack([
        l0 * (2.0 * l0 - 1.0),
        l1 * (2.0 * l1 - 1.0),
        l2 * (2.0 * l2 - 1.0),
        4.0 * l0 * l1,
        4.0 * l1 * l2,
        4.0 * l2 * l0,
    ], axis=1)


def _p2_bary_grads(lam):
    """d(phi_i)/d(lambda_j) at each point: shape (nq, 6, 3)."""
    nq = len(lam)
    g = np.zeros((nq, 6, 3))
    for q in range(nq):
        l0, l1, l2 = lam[q]
        g[q, 0, 0] = 4.0 * l0 - 1.0
        g[q, 1, 1] = 4.0 * l1 - 1.0
        g[q, 2, 2] = 4.0 * l2 - 1.0
        g[q, 3, 0] = 4.0 * l1
        g[q, 3, 1] = 4.0 * l0
        g[q, 4, 1] = 4.0 * l2
        g[q, 4, 2] = 4.0 * l1
        g[q, 5, 2] = 4.0 * l0
        g[q, 5, 0] = 4.0 * l2
    return g


PHI = _p2_values(QP)                      # (7, 6)
_G = _p2_bary_grads(QP)
GR = _G[:, :, 1] - _G[:, :, 0]            # d/dxi  (7, 6)
GS = _G[:, :, 2] - _G[:, :, 0]            # d/deta (7, 6)
PSI = QP.copy()                           # P1 values (7, 3)


def qsum(t):
    """Sum over the 7 quadrature points keeping swap partners paired."""
    return ((t[0] + t[1]) + t[2]) + (t[3] + t[4]) + (t[5] + t[6])


def locsum6(t):
    """Sum over the 6 local P2 dofs keeping swap partners (1,2), (3,5) paired."""
    return ((t[0] + (t[1] + t[2])) + (t[3] + t[5])) + t[4]


def locsum3(t):
    return t[0] + (t[1] + t[2])


class FemSpace:
    """Dof management, geometry tables, and assembly for one mesh.

    Scalar velocity dofs are [vertex nodes | edge midpoints]; the global
    unknown vector is [ux | uy | p].
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        tris = mesh.triangles
        shift = np.argmin(tris, axis=1)
        self.tri = np.stack([tris[np.arange(len(tris)), (shift + k) % 3]
                             for k in range(3)], axis=1)

        # deterministic edge numbering from sorted vertex pairs
        pairs = np.concatenate([self.tri[:, [0, 1]], self.tri[:, [1, 2]],
                                self.tri[:, [2, 0]]])
        pairs = np.sort(pairs, axis=1)
        keys = pairs[:, 0] * len(mesh.nodes) + pairs[:, 1]
        uniq, inverse = np.unique(keys, return_inverse=True)
        self.num_edges = len(uniq)
        ne = len(self.tri)
        self.el_edges = inverse.reshape(3, ne).T  # local edges (0,1),(1,2),(2,0)
        self._edge_key_sorted = uniq

        self.nn = len(mesh.nodes)
        self.nv = self.nn + self.num_edges
        self.ndof = 2 * self.nv + self.nn

        self.eldof_v = np.concatenate(
            [self.tri, self.nn + self.el_edges], axis=1)  # (ne, 6)
        self.eldof_p = self.tri                            # (ne, 3)

        # geometry
        pts = mesh.nodes[self.tri]                         # (ne, 3, 2)
        j00 = pts[:, 1, 0] - pts[:, 0, 0]
        j01 = pts[:, 2, 0] - pts[:, 0, 0]
        j10 = pts[:, 1, 1] - pts[:, 0, 1]
        j11 = pts[:, 2, 1] - pts[:, 0, 1]
        det = j00 * j11 - j01 * j10
        self.det = det
        # physical P2 gradients at quadrature points: (ne, 7, 6)
        self.gx = (j11[:, None, None] * GR[None, :, :]
                   - j10[:, None, None] * GS[None, :, :]) / det[:, None, None]
        self.gy = (-j01[:, None, None] * GR[None, :, :]
                   + j00[:, None, None] * GS[None, :, :]) / det[:, None, None]
        self.wdet = QW[None, :] * (det[:, None] / 2.0)     # (ne, 7)
        self.area = float(np.sum(det) / 2.0)

        # velocity dof coordinates (vertices then edge midpoints)
        ei = uniq // self.nn
        ej = uniq % self.nn
        mid = (mesh.nodes[ei] + mesh.nodes[ej]) / 2.0
        self.vdof_coords = np.vstack([mesh.nodes, mid])

        # pressure integration weights: int p = w . p for P1
        w = np.zeros(self.nn)
        contrib = det / 6.0
        for k in range(3):
            np.add.at(w, self.tri[:, k], contrib)
        self.p_weights = w

        self._build_pattern()
        self._assemble_constant_blocks()
        self._boundary_dofs = self._collect_boundary_dofs()

    # -- dof helpers -------------------------------------------------

    def edge_id(self, a: int, b: int) -> int:
        key = min(a, b) * self.nn + max(a, b)
        idx = np.searchsorted(self._edge_key_sorted, key)
        if idx >= self.num_edges or self._edge_key_sorted[idx] != key:
            raise KeyError(f"no edge ({a}, {b}) in mesh")
        return int(idx)

    def _collect_boundary_dofs(self):
        out = {}
        for (a, b), tag in zip(self.mesh.boundary_edges, self.mesh.boundary_tags):
            dofs = out.setdefault(tag, set())
            dofs.add(int(a))
            dofs.add(int(b))
            dofs.add(self.nn + self.edge_id(int(a), int(b)))
        return {tag: np.array(sorted(d), dtype=np.int64) for tag, d in out.items()}

    def boundary_vel_dofs(self, tag: str) -> np.ndarray:
        return self._boundary_dofs.get(tag, np.empty(0, dtype=np.int64))

    def all_boundary_vel_dofs(self) -> np.ndarray:
        if not self._boundary_dofs:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(list(self._boundary_dofs.values())))

    # -- sparsity pattern ---------------------------------------------

    def _build_pattern(self):
        ne = len(self.tri)
        nv = self.nv
        ux = self.eldof_v
        uy = self.eldof_v + nv
        pp = self.eldof_p + 2 * nv

        rows = []
        cols = []

        def block(r, c):
            rows.append(np.repeat(r, c.shape[1], axis=1))
            cols.append(np.tile(c, (1, r.shape[1])))

        # order fixed: uxux, uxuy, uyux, uyuy, uxp, uyp, pux, puy
        block(ux, ux)
        block(ux, uy)
        block(uy, ux)
        block(uy, uy)
        block(ux, pp)
        block(uy, pp)
        block(pp, ux)
        block(pp, uy)
        rows = np.concatenate([r.reshape(ne, -1) for r in rows], axis=1).ravel()
        cols = np.concatenate([c.reshape(ne, -1) for c in cols], axis=1).ravel()

        keys = rows.astype(np.int64) * self.ndof + cols.astype(np.int64)
        uniq, inverse = np.unique(keys, return_inverse=True)
        self._entry_pos = inverse
        self._nnz = len(uniq)
        self._csr_indptr = np.searchsorted(uniq, np.arange(self.ndof + 1) * self.ndof)
        self._csr_indices = (uniq % self.ndof).astype(np.int32)

    def _scatter(self, blocks) -> np.ndarray:
        """blocks: list of (ne, a, b) arrays in pattern order -> CSR data."""
        ne = len(self.tri)
        flat = np.concatenate([b.reshape(ne, -1) for b in blocks], axis=1).ravel()
        data = np.zeros(self._nnz)
        np.add.at(data, self._entry_pos, flat)
        return data

    def csr(self, data: np.ndarray) -> sparse.csr_matrix:
        return sparse.csr_matrix((data, self._csr_indices, self._csr_indptr),
                                 shape=(self.ndof, self.ndof))

    # -- constant blocks -----------------------------------------------

    def _assemble_constant_blocks(self):
        ne = len(self.tri)
        w = self.wdet
        # viscous (6,6): sum_q w (gx gx + gy gy)
        terms = np.empty((NQ, ne, 6, 6))
        for q in range(NQ):
            gxq = self.gx[:, q, :]
            gyq = self.gy[:, q, :]
            terms[q] = w[:, q, None, None] * (
                gxq[:, :, None] * gxq[:, None, :] + gyq[:, :, None] * gyq[:, None, :])
        self.el_visc = qsum(terms)

        # divergence blocks (3,6): sum_q w psi_i gx_j (and gy_j)
        tx = np.empty((NQ, ne, 3, 6))
        ty = np.empty((NQ, ne, 3, 6))
        for q in range(NQ):
            tx[q] = w[:, q, None, None] * PSI[q][None, :, None] * self.gx[:, q, None, :]
            ty[q] = w[:, q, None, None] * PSI[q][None, :, None] * self.gy[:, q, None, :]
        self.el_div_x = qsum(tx)
        self.el_div_y = qsum(ty)

        zero66 = np.zeros((ne, 6, 6))
        self._const_data = self._scatter([
            self.el_visc, zero66, zero66, self.el_visc,
            -np.transpose(self.el_div_x, (0, 2, 1)),
            -np.transpose(self.el_div_y, (0, 2, 1)),
            -self.el_div_x, -self.el_div_y,
        ])

    # -- field evaluation ------------------------------------------------

    def field_at_qp(self, coeffs: np.ndarray):
        """Values of a scalar P2 field at all quadrature points: (ne, 7)."""
        c = coeffs[self.eldof_v]                    # (ne, 6)
        terms = [c[:, i, None] * PHI[None, :, i] for i in range(6)]
        return locsum6(terms)

    def grad_at_qp(self, coeffs: np.ndarray):
        c = coeffs[self.eldof_v]
        tx = [c[:, i, None] * self.gx[:, :, i] for i in range(6)]
        ty = [c[:, i, None] * self.gy[:, :, i] for i in range(6)]
        return locsum6(tx), locsum6(ty)

    def pressure_at_qp(self, p: np.ndarray):
        c = p[self.eldof_p]
        terms = [c[:, i, None] * PSI[None, :, i] for i in range(3)]
        return locsum3(terms)

    # -- residual / jacobian ----------------------------------------------

    def split(self, x: np.ndarray):
        nv = self.nv
        return x[:nv], x[nv:2 * nv], x[2 * nv:]

    def join(self, ux, uy, p) -> np.ndarray:
        return np.concatenate([ux, uy, p])

    def _convection_at_qp(self, ux, uy):
        uxq = self.field_at_qp(ux)
        uyq = self.field_at_qp(uy)
        dux_dx, dux_dy = self.grad_at_qp(ux)
        duy_dx, duy_dy = self.grad_at_qp(uy)
        conv_x = uxq * dux_dx + uyq * dux_dy
        conv_y = uxq * duy_dx + uyq * duy_dy
        return uxq, uyq, (dux_dx, dux_dy, duy_dx, duy_dy), (conv_x, conv_y)

    def assemble_residual(self, x: np.ndarray, form: str = "standard") -> np.ndarray:
        """Raw weak residual of the steady momentum/continuity system at x,
        including rows of constrained dofs (no boundary treatment)."""
        ux, uy, p = self.split(x)
        ne = len(self.tri)
        w = self.wdet
        uxq, uyq, grads, (conv_x, conv_y) = self._convection_at_qp(ux, uy)
        dux_dx, dux_dy, duy_dx, duy_dy = grads
        pq = self.pressure_at_qp(p)
        div_q = dux_dx + duy_dy

        r_ux = np.empty((NQ, ne, 6))
        r_uy = np.empty((NQ, ne, 6))
        r_p = np.empty((NQ, ne, 3))
        for q in range(NQ):
            gxq = self.gx[:, q, :]
            gyq = self.gy[:, q, :]
            visc_x = gxq * dux_dx[:, q, None] + gyq * dux_dy[:, q, None]
            visc_y = gxq * duy_dx[:, q, None] + gyq * duy_dy[:, q, None]
            if form == "skew":
                adv = uxq[:, q, None] * gxq + uyq[:, q, None] * gyq
                conv_term_x = 0.5 * (PHI[q][None, :] * conv_x[:, q, None]
                                     - adv * uxq[:, q, None])
                conv_term_y = 0.5 * (PHI[q][None, :] * conv_y[:, q, None]
                                     - adv * uyq[:, q, None])
            elif form == "stokes":
                conv_term_x = 0.0
                conv_term_y = 0.0
            else:
                conv_term_x = PHI[q][None, :] * conv_x[:, q, None]
                conv_term_y = PHI[q][None, :] * conv_y[:, q, None]
            r_ux[q] = w[:, q, None] * (visc_x + conv_term_x - pq[:, q, None] * gxq)
            r_uy[q] = w[:, q, None] * (visc_y + conv_term_y - pq[:, q, None] * gyq)
            r_p[q] = -w[:, q, None] * PSI[q][None, :] * div_q[:, q, None]
        el_rux = qsum(r_ux)
        el_ruy = qsum(r_uy)
        el_rp = qsum(r_p)

        R = np.zeros(self.ndof)
        np.add.at(R, self.eldof_v.ravel(), el_rux.ravel())
        np.add.at(R, (self.eldof_v + self.nv).ravel(), el_ruy.ravel())
        np.add.at(R, (self.eldof_p + 2 * self.nv).ravel(), el_rp.ravel())
        return R

    def assemble_jacobian(self, x: np.ndarray, form: str = "standard",
                          picard: bool = False) -> sparse.csr_matrix:
        ux, uy, p = self.split(x)
        ne = len(self.tri)
        w = self.wdet
        uxq, uyq, grads, _ = self._convection_at_qp(ux, uy)
        dux_dx, dux_dy, duy_dx, duy_dy = grads

        cxx = np.empty((NQ, ne, 6, 6))
        cxy = np.empty((NQ, ne, 6, 6))
        cyx = np.empty((NQ, ne, 6, 6))
        cyy = np.empty((NQ, ne, 6, 6))
        for q in range(NQ):
            gxq = self.gx[:, q, :]
            gyq = self.gy[:, q, :]
            phi = PHI[q]
            wq = w[:, q, None, None]
            # transport: phi_i (u . grad phi_j), diagonal blocks
            adv_j = uxq[:, q, None] * gxq + uyq[:, q, None] * gyq     # (ne, 6)
            t2 = wq * phi[None, :, None] * adv_j[:, None, :]
            if picard:
                reac_xx = reac_xy = reac_yx = reac_yy = 0.0
            else:
                phiphi = phi[:, None] * phi[None, :]
                reac_xx = wq * phiphi[None, :, :] * dux_dx[:, q, None, None]
                reac_xy = wq * phiphi[None, :, :] * dux_dy[:, q, None, None]
                reac_yx = wq * phiphi[None, :, :] * duy_dx[:, q, None, None]
                reac_yy = wq * phiphi[None, :, :] * duy_dy[:, q, None, None]
            if form == "skew":
                adv_i = adv_j  # same expression, used with the test index
                e2 = wq * adv_i[:, :, None] * phi[None, None, :]
                if picard:
                    cxx[q] = 0.5 * (t2 - e2)
                    cyy[q] = 0.5 * (t2 - e2)
                    cxy[q] = 0.0
                    cyx[q] = 0.0
                else:
                    e1_xx = wq * phi[None, None, :] * gxq[:, :, None] \
                        * uxq[:, q, None, None]
                    e1_xy = wq * phi[None, None, :] * gyq[:, :, None] \
                        * uxq[:, q, None, None]
                    e1_yx = wq * phi[None, None, :] * gxq[:, :, None] \
                        * uyq[:, q, None, None]
                    e1_yy = wq * phi[None, None, :] * gyq[:, :, None] \
                        * uyq[:, q, None, None]
                    cxx[q] = 0.5 * (reac_xx + t2 - e1_xx - e2)
                    cxy[q] = 0.5 * (reac_xy - e1_xy)
                    cyx[q] = 0.5 * (reac_yx - e1_yx)
                    cyy[q] = 0.5 * (reac_yy + t2 - e1_yy - e2)
            else:
                if picard:
                    cxx[q] = t2
                    cyy[q] = t2
                    cxy[q] = 0.0
                    cyx[q] = 0.0
                else:
                    cxx[q] = reac_xx + t2
                    cxy[q] = reac_xy
                    cyx[q] = reac_yx
                    cyy[q] = reac_yy + t2
        zero36 = np.zeros((ne, 6, 3))
        zero63 = np.zeros((ne, 3, 6))
        conv_data = self._scatter([
            qsum(cxx), qsum(cxy), qsum(cyx), qsum(cyy),
            zero36, zero36, zero63, zero63,
        ])
        return self.csr(self._const_data + conv_data)

    # -- derived quantities -------------------------------------------------

    def integrate(self, density: np.ndarray) -> float:
        """Integrate a per-quadrature-point density of shape (ne, NQ)."""
        return float(np.sum(qsum(np.moveaxis(self.wdet * density, 1, 0))))

    def convection_form_value(self, a, g, h, form: str = "standard") -> float:
        """Trilinear convection form c(a; g, h) with the selected variant."""
        axq = self.field_at_qp(a[0])
        ayq = self.field_at_qp(a[1])
        hxq = self.field_at_qp(h[0])
        hyq = self.field_at_qp(h[1])
        dgx = self.grad_at_qp(g[0])
        dgy = self.grad_at_qp(g[1])
        adv_g_x = axq * dgx[0] + ayq * dgx[1]
        adv_g_y = axq * dgy[0] + ayq * dgy[1]
        val = self.integrate(adv_g_x * hxq + adv_g_y * hyq)
        if form == "standard":
            return val
        gxq = self.field_at_qp(g[0])
        gyq = self.field_at_qp(g[1])
        dhx = self.grad_at_qp(h[0])
        dhy = self.grad_at_qp(h[1])
        adv_h_x = axq * dhx[0] + ayq * dhx[1]
        adv_h_y = axq * dhy[0] + ayq * dhy[1]
        val2 = self.integrate(adv_h_x * gxq + adv_h_y * gyq)
        return 0.5 * (val - val2)

    def gradient_norm_sq(self, ux, uy) -> float:
        dux_dx, dux_dy = self.grad_at_qp(ux)
        duy_dx, duy_dy = self.grad_at_qp(uy)
        return self.integrate(dux_dx ** 2 + dux_dy ** 2 + duy_dx ** 2 + duy_dy ** 2)

    def divergence_residual(self, x: np.ndarray) -> float:
        """Max |int q div u| over pressure test functions, excluding the
        pinned dof (the constant mode carries the data-compatibility defect
        of nodally interpolated boundary data)."""
        R = self.assemble_residual(x)
        cont = R[2 * self.nv:]
        return float(np.max(np.abs(cont[1:]))) if len(cont) > 1 else 0.0

    def pressure_mean(self, p: np.ndarray) -> float:
        return float(self.p_weights @ p) / self.area
