"""Conforming triangulation of the channel with a convex obstacle removed.

The generator is an in-repo incremental Delaunay triangulation with
Ruppert-style refinement: encroached boundary subsegments are split until
every constrained segment is an edge of the triangulation, then circumcenters
of low-quality or oversized triangles are inserted, splitting segments instead
whenever a center would encroach one. Insertion order is fixed, so meshes are
reproducible bit for bit.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import MeshError
from .geometry import BodyShape, Rect, reflect_body

TAG_BOTTOM = "GammaBottom"
TAG_TOP = "GammaTop"
TAG_LEFT = "GammaLeft"
TAG_RIGHT = "GammaRight"
TAG_BODY = "BodyBoundary"
_TAG_INTERFACE = "_Interface"
TAGS = (TAG_BOTTOM, TAG_TOP, TAG_LEFT, TAG_RIGHT, TAG_BODY)

DEFAULT_MIN_ANGLE = 20.0


@dataclass
class Mesh:
    """Triangle mesh with tagged boundary edges.

    Boundary edges are oriented with the fluid domain on their left; on the
    body this makes the outward normal of the domain point into the body.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: list
    h: float

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.boundary_edges = np.asarray(self.boundary_edges, dtype=np.int64)
        self.boundary_tags = list(self.boundary_tags)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))

    def edge_set(self):
        """Undirected edge -> number of adjacent triangles."""
        count = {}
        for a, b, c in self.triangles:
            for u, v in ((a, b), (b, c), (c, a)):
                key = (min(u, v), max(u, v))
                count[key] = count.get(key, 0) + 1
        return count

    def boundary_length_by_tag(self) -> dict:
        out = {}
        for (a, b), tag in zip(self.boundary_edges, self.boundary_tags):
            out[tag] = out.get(tag, 0.0) + float(np.hypot(*(self.nodes[b] - self.nodes[a])))
        return out

    def body_node_ids(self) -> np.ndarray:
        ids = set()
        for (a, b), tag in zip(self.boundary_edges, self.boundary_tags):
            if tag == TAG_BODY:
                ids.add(int(a))
                ids.add(int(b))
        return np.array(sorted(ids), dtype=np.int64)

    def validate(self):
        """Check orientation, boundary adjacency, and tag consistency."""
        if np.any(self.signed_areas() <= 0.0):
            raise MeshError("mesh has non-positively-oriented triangles")
        count = self.edge_set()
        hull = {e for e, c in count.items() if c == 1}
        tagged = set()
        directed = set()
        for a, b, c in self.triangles:
            directed.update([(int(a), int(b)), (int(b), int(c)), (int(c), int(a))])
        for (a, b), tag in zip(self.boundary_edges, self.boundary_tags):
            if tag not in TAGS:
                raise MeshError(f"unknown boundary tag {tag!r}")
            key = (min(a, b), max(a, b))
            if count.get(key, 0) != 1:
                raise MeshError(f"boundary edge {key} not on the triangulation boundary")
            if (int(a), int(b)) not in directed:
                raise MeshError(f"boundary edge ({a}, {b}) not oriented domain-left")
            tagged.add(key)
        if tagged != hull:
            raise MeshError("tagged boundary edges do not cover the boundary exactly")

    def to_json(self) -> str:
        return json.dumps({
            "h": self.h,
            "nodes": self.nodes.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary": [{"edge": [int(a), int(b)], "tag": t}
                         for (a, b), t in zip(self.boundary_edges, self.boundary_tags)],
        })

    @classmethod
    def from_json(cls, text: str) -> "Mesh":
        d = json.loads(text)
        mesh = cls(
            nodes=np.array(d["nodes"], dtype=float),
            triangles=np.array(d["triangles"], dtype=np.int64),
            boundary_edges=np.array([e["edge"] for e in d["boundary"]], dtype=np.int64),
            boundary_tags=[e["tag"] for e in d["boundary"]],
            h=float(d["h"]),
        )
        mesh.validate()
        return mesh


@dataclass(frozen=True)
class QualityReport:
    min_angle_deg: float
    max_aspect: float
    h_min: float
    h_max: float
    num_nodes: int
    num_triangles: int
    num_boundary_edges: int


def mesh_quality(M: Mesh) -> QualityReport:
    p = M.nodes[M.triangles]
    e0 = p[:, 1] - p[:, 0]
    e1 = p[:, 2] - p[:, 1]
    e2 = p[:, 0] - p[:, 2]
    l0 = np.hypot(e0[:, 0], e0[:, 1])
    l1 = np.hypot(e1[:, 0], e1[:, 1])
    l2 = np.hypot(e2[:, 0], e2[:, 1])
    lengths = np.stack([l0, l1, l2], axis=1)

    def angle(u, v):
        dot = -(u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1])
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        return np.degrees(np.arctan2(np.abs(cross), dot))

    a0 = angle(e2, e0)
    a1 = angle(e0, e1)
    a2 = angle(e1, e2)
    angles = np.stack([a0, a1, a2], axis=1)
    return QualityReport(
        min_angle_deg=float(np.min(angles)),
        max_aspect=float(np.max(np.max(lengths, axis=1) / np.min(lengths, axis=1))),
        h_min=float(np.min(lengths)),
        h_max=float(np.max(lengths)),
        num_nodes=M.num_nodes,
        num_triangles=M.num_triangles,
        num_boundary_edges=len(M.boundary_edges),
    )


# ------------------------------------------------------------------
# incremental Delaunay with refinement
# ------------------------------------------------------------------

class _Refiner:
    def __init__(self, outer, outer_tags, holes, hole_tag, h, min_angle_deg,
                 max_points):
        self.h = h
        self.min_angle = min_angle_deg
        self.max_points = max_points
        self.outer_poly = np.asarray(outer, dtype=float)
        self.holes = [np.asarray(hp, dtype=float) for hp in holes]

        self.pts = []
        self.tri = []
        self.nbr = []
        self.alive = []
        self.segs = {}  # (min_id, max_id) -> (tag, oriented (a, b))
        self._last = 0

        all_pts = [self.outer_poly] + self.holes
        allv = np.vstack(all_pts)
        lo = allv.min(axis=0)
        hi = allv.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
        self.scale = span
        m = 10.0 * span
        box = [(lo[0] - m, lo[1] - m), (hi[0] + m, lo[1] - m),
               (hi[0] + m, hi[1] + m), (lo[0] - m, hi[1] + m)]
        for p in box:
            self.pts.append(np.array(p))
        self._add_tri(0, 1, 2, [-1, 1, -1])   # shares edge (2,0) with tri 1
        self._add_tri(0, 2, 3, [-1, -1, 0])   # shares edge (0,2) with tri 0
        self.n_super = 4

        # boundary feature points and subsegments
        self._insert_chain(self.outer_poly, outer_tags, close=True)
        for hp in self.holes:
            # hole boundary traversed clockwise keeps the domain on the left
            self._insert_chain(hp[::-1], [hole_tag] * len(hp), close=True)

    # -- triangulation primitives ----------------------------------

    def _add_tri(self, a, b, c, nbrs):
        self.tri.append([a, b, c])
        self.nbr.append(list(nbrs))
        self.alive.append(True)
        return len(self.tri) - 1

    def _orient(self, a, b, p):
        ax, ay = self.pts[a]
        bx, by = self.pts[b]
        return (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax)

    def _in_circum(self, t, p):
        i, j, k = self.tri[t]
        ax, ay = self.pts[i] - p
        bx, by = self.pts[j] - p
        cx, cy = self.pts[k] - p
        a2 = ax * ax + ay * ay
        b2 = bx * bx + by * by
        c2 = cx * cx + cy * cy
        det = (ax * (by * c2 - cy * b2)
               - ay * (bx * c2 - cx * b2)
               + a2 * (bx * cy - cx * by))
        m = max(a2, b2, c2)
        return det > 1e-11 * m * m

    def _locate(self, p):
        t = self._last
        if not self.alive[t]:
            t = next(i for i in range(len(self.tri)) if self.alive[i])
        seen = 0
        limit = 4 * len(self.tri) + 16
        while True:
            seen += 1
            if seen > limit:
                return self._locate_exhaustive(p)
            i, j, k = self.tri[t]
            best = None
            best_val = 0.0
            for loc, (u, v) in enumerate(((j, k), (k, i), (i, j))):
                val = self._orient(u, v, p)
                if val < best_val:
                    best_val = val
                    best = loc
            if best is None:
                self._last = t
                return t
            nt = self.nbr[t][best]
            if nt < 0:
                return self._locate_exhaustive(p)
            t = nt

    def _locate_exhaustive(self, p):
        tol = -1e-12 * self.scale * self.scale
        for t in range(len(self.tri)):
            if not self.alive[t]:
                continue
            i, j, k = self.tri[t]
            if (self._orient(i, j, p) >= tol and self._orient(j, k, p) >= tol
                    and self._orient(k, i, p) >= tol):
                return t
        raise MeshError("point location failed")

    def insert_point(self, p):
        """Bowyer-Watson insertion; returns the (possibly existing) vertex id
        and the list of created triangles."""
        p = np.asarray(p, dtype=float)
        t0 = self._locate(p)
        # snap to an existing vertex of the containing triangle
        for v in self.tri[t0]:
            if np.hypot(*(self.pts[v] - p)) <= 1e-12 * self.scale:
                return v, []
        if len(self.pts) >= self.max_points:
            raise MeshError(f"refinement exceeded {self.max_points} points; "
                            "target size h may be too small")

        cavity = {t0}
        stack = [t0]
        while stack:
            t = stack.pop()
            for nt in self.nbr[t]:
                if nt >= 0 and self.alive[nt] and nt not in cavity \
                        and self._in_circum(nt, p):
                    cavity.add(nt)
                    stack.append(nt)
        # cavity boundary: directed edges (u, v) with outside triangle
        border = []
        for t in cavity:
            i, j, k = self.tri[t]
            for loc, (u, v) in enumerate(((j, k), (k, i), (i, j))):
                nt = self.nbr[t][loc]
                if nt < 0 or nt not in cavity:
                    border.append((u, v, nt))
        for t in cavity:
            self.alive[t] = False

        pid = len(self.pts)
        self.pts.append(p)
        new_by_start = {}
        created = []
        for u, v, outer in border:
            # new triangle (pid, u, v): local edges are (u,v) opp 0,
            # (v,pid) opp 1, (pid,u) opp 2
            nt = self._add_tri(pid, u, v, [outer, -1, -1])
            created.append(nt)
            new_by_start[u] = nt
            if outer >= 0:
                oi, oj, ok = self.tri[outer]
                for loc, (a, b) in enumerate(((oj, ok), (ok, oi), (oi, oj))):
                    if (a, b) == (v, u):
                        self.nbr[outer][loc] = nt
                        break
        new_by_end = {v: new_by_start[u] for u, v, _ in border}
        for u, v, _ in border:
            nt = new_by_start[u]
            self.nbr[nt][1] = new_by_start[v]   # across edge (v, pid)
            self.nbr[nt][2] = new_by_end[u]     # across edge (pid, u)
        self._last = created[0]
        return pid, created

    # -- constrained segments --------------------------------------

    def _seg_key(self, a, b):
        return (a, b) if a < b else (b, a)

    def _insert_chain(self, pts, tags, close):
        ids = []
        for p in pts:
            pid, _ = self.insert_point(p)
            ids.append(pid)
        n = len(ids)
        last = n if close else n - 1
        for i in range(last):
            a = ids[i]
            b = ids[(i + 1) % n]
            length = float(np.hypot(*(self.pts[b] - self.pts[a])))
            nseg = max(1, math.ceil(length / self.h - 1e-12))
            sub_ids = [a]
            for k in range(1, nseg):
                q = self.pts[a] + (self.pts[b] - self.pts[a]) * (k / nseg)
                qid, _ = self.insert_point(q)
                sub_ids.append(qid)
            sub_ids.append(b)
            for u, v in zip(sub_ids[:-1], sub_ids[1:]):
                self.segs[self._seg_key(u, v)] = (tags[i], (u, v))

    def _alive_edges(self):
        edges = set()
        for t, ok in enumerate(self.alive):
            if not ok:
                continue
            i, j, k = self.tri[t]
            edges.add(self._seg_key(i, j))
            edges.add(self._seg_key(j, k))
            edges.add(self._seg_key(k, i))
        return edges

    def _encroached_by_vertex(self, key):
        a, b = key
        pa, pb = self.pts[a], self.pts[b]
        mid = 0.5 * (pa + pb)
        r2 = 0.25 * float((pb - pa) @ (pb - pa))
        arr = np.asarray(self.pts)
        d2 = np.sum((arr - mid) ** 2, axis=1)
        d2[a] = np.inf
        d2[b] = np.inf
        d2[: self.n_super] = np.inf
        return bool(np.any(d2 < r2 * (1.0 - 1e-12)))

    def point_encroaches(self, p, exclude=()) -> list:
        out = []
        for key in sorted(self.segs):
            if key in exclude:
                continue
            a, b = key
            pa, pb = self.pts[a], self.pts[b]
            mid = 0.5 * (pa + pb)
            r2 = 0.25 * float((pb - pa) @ (pb - pa))
            if float((p - mid) @ (p - mid)) < r2 * (1.0 - 1e-12):
                out.append(key)
        return out

    def split_segment(self, key):
        tag, (a, b) = self.segs.pop(key)
        mid = 0.5 * (self.pts[a] + self.pts[b])
        mid_id, created = self.insert_point(mid)
        self.segs[self._seg_key(a, mid_id)] = (tag, (a, mid_id))
        self.segs[self._seg_key(mid_id, b)] = (tag, (mid_id, b))
        return created

    def enforce_segments(self):
        for _ in range(200):
            edges = self._alive_edges()
            to_split = [k for k in sorted(self.segs)
                        if k not in edges or self._encroached_by_vertex(k)]
            if not to_split:
                return
            for key in to_split:
                if key in self.segs:
                    self.split_segment(key)
        raise MeshError("segment enforcement did not converge")

    # -- quality refinement -----------------------------------------

    def _tri_metrics(self, t):
        i, j, k = self.tri[t]
        pa, pb, pc = self.pts[i], self.pts[j], self.pts[k]
        la = float(np.hypot(*(pc - pb)))
        lb = float(np.hypot(*(pa - pc)))
        lc = float(np.hypot(*(pb - pa)))
        area = 0.5 * abs((pb[0] - pa[0]) * (pc[1] - pa[1])
                         - (pb[1] - pa[1]) * (pc[0] - pa[0]))
        if area <= 0.0:
            return 0.0, max(la, lb, lc)
        # min angle from R/shortest-edge: sin(theta_min) = shortest / (2R)
        circum_r = la * lb * lc / (4.0 * area)
        s = min(la, lb, lc) / (2.0 * circum_r)
        min_angle = math.degrees(math.asin(min(1.0, s)))
        return min_angle, max(la, lb, lc)

    def _centroid(self, t):
        i, j, k = self.tri[t]
        return (self.pts[i] + self.pts[j] + self.pts[k]) / 3.0

    def _in_domain(self, p) -> bool:
        if not _point_in_polygon(p, self.outer_poly):
            return False
        for hp in self.holes:
            if _point_in_convex(p, hp):
                return False
        return True

    def _is_bad(self, t):
        if any(v < self.n_super for v in self.tri[t]):
            return False
        if not self._in_domain(self._centroid(t)):
            return False
        ang, longest = self._tri_metrics(t)
        return ang < self.min_angle - 1e-9 or longest > self.h * (1.0 + 1e-9)

    def _circumcenter(self, t):
        i, j, k = self.tri[t]
        a, b, c = self.pts[i], self.pts[j], self.pts[k]
        d = 2.0 * ((a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0]))
        a2 = (a[0] - c[0]) ** 2 + (a[1] - c[1]) ** 2
        b2 = (b[0] - c[0]) ** 2 + (b[1] - c[1]) ** 2
        ux = c[0] + ((b[1] - c[1]) * a2 - (a[1] - c[1]) * b2) / d
        uy = c[1] + ((a[0] - c[0]) * b2 - (b[0] - c[0]) * a2) / d
        return np.array([ux, uy])

    def refine(self):
        self.enforce_segments()
        queue = deque(t for t in range(len(self.tri))
                      if self.alive[t] and self._is_bad(t))
        guard = 0
        while queue:
            guard += 1
            if guard > 40 * self.max_points:
                raise MeshError("quality refinement did not converge")
            t = queue.popleft()
            if not self.alive[t] or not self._is_bad(t):
                continue
            c = self._circumcenter(t)
            enc = self.point_encroaches(c)
            if enc:
                created = []
                for key in enc:
                    if key in self.segs:
                        created += self.split_segment(key)
            else:
                _, created = self.insert_point(c)
                if not created:
                    continue  # snapped to an existing vertex
            for nt in created:
                if self.alive[nt] and self._is_bad(nt):
                    queue.append(nt)
            # segment splits can spoil neighbors of new triangles as well
            for nt in created:
                if not self.alive[nt]:
                    continue
                for nn in self.nbr[nt]:
                    if nn >= 0 and self.alive[nn] and self._is_bad(nn):
                        queue.append(nn)

    # -- extraction --------------------------------------------------

    def extract(self):
        keep = []
        for t in range(len(self.tri)):
            if not self.alive[t]:
                continue
            if any(v < self.n_super for v in self.tri[t]):
                continue
            if self._in_domain(self._centroid(t)):
                keep.append(t)
        used = sorted({v for t in keep for v in self.tri[t]})
        remap = {v: i for i, v in enumerate(used)}
        nodes = np.array([self.pts[v] for v in used])
        tris = np.array([[remap[v] for v in self.tri[t]] for t in keep],
                        dtype=np.int64)

        directed = set()
        count = {}
        for a, b, c in tris:
            for u, v in ((a, b), (b, c), (c, a)):
                directed.add((int(u), int(v)))
                key = (min(u, v), max(u, v))
                count[key] = count.get(key, 0) + 1
        hull = {e for e, c in count.items() if c == 1}

        b_edges = []
        b_tags = []
        for key in sorted(self.segs):
            tag, (a, b) = self.segs[key]
            if a not in remap or b not in remap:
                raise MeshError("constrained segment lost during extraction")
            u, v = remap[a], remap[b]
            k2 = (min(u, v), max(u, v))
            if k2 not in hull:
                raise MeshError("constrained segment not on the extracted boundary")
            if (u, v) in directed:
                b_edges.append((u, v))
            else:
                b_edges.append((v, u))
            b_tags.append(tag)
        if {(min(e), max(e)) for e in b_edges} != hull:
            raise MeshError("triangulation boundary not fully covered by segments")
        return nodes, tris, np.array(b_edges, dtype=np.int64), b_tags


def _point_in_polygon(p, poly) -> bool:
    """Ray-cast membership test for a simple polygon."""
    x, y = float(p[0]), float(p[1])
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    return inside


def _point_in_convex(p, poly) -> bool:
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) < 0.0:
            return False
    return True


def _body_diameter(B: BodyShape) -> float:
    v = B.vertices
    return float(max(np.ptp(v[:, 0]), np.ptp(v[:, 1])))


def _body_clearance(B: BodyShape, R: Rect) -> float:
    v = B.vertices
    return float(np.min(np.minimum(R.L - np.abs(v[:, 0]), R.H - np.abs(v[:, 1]))))


def _rect_chain(R: Rect):
    pts = [(-R.L, -R.H), (R.L, -R.H), (R.L, R.H), (-R.L, R.H)]
    tags = [TAG_BOTTOM, TAG_RIGHT, TAG_TOP, TAG_LEFT]
    return pts, tags


def generate_mesh(R: Rect, B: BodyShape | None, h: float,
                  min_angle: float = DEFAULT_MIN_ANGLE,
                  symmetric: bool = False,
                  max_points: int = 200_000) -> Mesh:
    """Triangulate R (minus the body, when present) at target edge size h.

    Body polygon vertices become mesh nodes and every body side is resolved
    by at least three boundary edges. With ``symmetric=True`` the upper half
    is meshed and mirrored so the node set is exactly symmetric under
    x2 -> -x2 (requires a symmetric body).
    """
    if h <= 0.0:
        raise MeshError(f"target size h must be positive, got {h}")
    if B is not None:
        if not B.is_convex():
            raise MeshError("body must be convex")
        clearance = _body_clearance(B, R)
        if clearance <= 0.0:
            raise MeshError("body touches or crosses the channel boundary")
        if clearance < 2.0 * h:
            raise MeshError(
                f"body clearance {clearance:.4g} below 2h = {2 * h:.4g}; "
                "refine h or shrink the body")
        if h >= _body_diameter(B):
            raise MeshError(
                f"h = {h:g} too coarse to resolve the body of diameter "
                f"{_body_diameter(B):.4g}; every side needs at least 3 edges")
    if symmetric:
        return _generate_symmetric(R, B, h, min_angle, max_points)

    outer, outer_tags = _rect_chain(R)
    # at least 3 subdivisions per body side
    holes = []
    if B is not None:
        holes.append(_resolve_polygon(B.vertices, h))
    ref = _Refiner(outer, outer_tags, holes, TAG_BODY, h, min_angle, max_points)
    ref.refine()
    nodes, tris, b_edges, b_tags = ref.extract()
    mesh = Mesh(nodes, tris, b_edges, b_tags, h)
    mesh.validate()
    return mesh


def _resolve_polygon(vertices: np.ndarray, h: float) -> np.ndarray:
    """Insert enough points on each polygon side for at least 3 edges per
    side at size <= h."""
    out = []
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        b = vertices[(i + 1) % n]
        length = float(np.hypot(*(b - a)))
        nseg = max(3, math.ceil(length / h - 1e-12))
        for k in range(nseg):
            out.append(a + (b - a) * (k / nseg))
    return np.array(out)


def _upper_arc(B: BodyShape):
    """Points of the body boundary with x2 >= 0, ordered left crossing ->
    top -> right crossing (the domain-left orientation for the half domain)."""
    v = B.vertices
    n = len(v)
    tol = 1e-14 * B.span
    # walk the CCW cycle, recording the arc from the upward crossing (right
    # side) to the downward crossing (left side), then reverse it
    pts = []
    state = "search"
    for i in range(2 * n):
        a = v[i % n]
        b = v[(i + 1) % n]
        if state == "search":
            if a[1] < -tol and b[1] > tol:
                x = a[0] + (b[0] - a[0]) * (0.0 - a[1]) / (b[1] - a[1])
                pts.append(np.array([x, 0.0]))
                state = "collect"
            elif abs(a[1]) <= tol and b[1] > tol:
                pts.append(np.array([a[0], 0.0]))
                state = "collect"
        elif state == "collect":
            if a[1] > tol and b[1] < -tol:
                x = a[0] + (b[0] - a[0]) * (0.0 - a[1]) / (b[1] - a[1])
                pts.append(np.array([a[0], a[1]]))
                pts.append(np.array([x, 0.0]))
                break
            if a[1] > tol and abs(b[1]) <= tol:
                pts.append(np.array([a[0], a[1]]))
                pts.append(np.array([b[0], 0.0]))
                break
            pts.append(np.array([a[0], a[1]]))
    else:
        raise MeshError("failed to trace the upper body arc")
    return pts[::-1]


def _generate_symmetric(R: Rect, B: BodyShape | None, h, min_angle, max_points):
    if B is not None and not reflect_body(B).equals_point_set(B, tol=1e-12):
        raise MeshError("symmetric meshing requires a mirror-symmetric body")
    L, H = R.L, R.H
    # tags[i] labels the segment from outer[i] to outer[i+1] (cyclically)
    if B is None:
        outer = [np.array([-L, 0.0]), np.array([L, 0.0]),
                 np.array([L, H]), np.array([-L, H])]
        tags = [_TAG_INTERFACE, TAG_RIGHT, TAG_TOP, TAG_LEFT]
    else:
        arc = _upper_arc(B)
        outer = [np.array([-L, 0.0])]
        tags = [_TAG_INTERFACE]
        for i in range(len(arc) - 1):
            a, b = arc[i], arc[i + 1]
            length = float(np.hypot(*(b - a)))
            # half sides cut by the axis need 2 edges here (3+ after mirroring)
            min_seg = 2 if i in (0, len(arc) - 2) else 3
            nseg = max(min_seg, math.ceil(length / h - 1e-12))
            for k in range(nseg):
                outer.append(a + (b - a) * (k / nseg))
                tags.append(TAG_BODY)
        outer.append(arc[-1])
        tags.append(_TAG_INTERFACE)   # right crossing -> (L, 0)
        outer.append(np.array([L, 0.0]))
        tags.append(TAG_RIGHT)
        outer.append(np.array([L, H]))
        tags.append(TAG_TOP)
        outer.append(np.array([-L, H]))
        tags.append(TAG_LEFT)
    ref = _Refiner(outer, tags, [], TAG_BODY, h, min_angle, max_points)
    ref.refine()
    nodes, tris, b_edges, b_tags = ref.extract()

    iface = [i for i in range(len(nodes)) if nodes[i, 1] == 0.0]
    upper = [i for i in range(len(nodes)) if nodes[i, 1] != 0.0]
    if any(nodes[i, 1] < 0 for i in upper):
        raise MeshError("half-domain mesh has nodes below the axis")
    ni, nu = len(iface), len(upper)
    perm = {}
    for new, old in enumerate(iface):
        perm[old] = new
    for k, old in enumerate(upper):
        perm[old] = ni + k

    def tau(i):
        return i if i < ni else i + nu if i < ni + nu else i - nu

    full_nodes = np.empty((ni + 2 * nu, 2))
    for old, new in perm.items():
        full_nodes[new] = nodes[old]
    for k, old in enumerate(upper):
        full_nodes[ni + nu + k] = nodes[old] * np.array([1.0, -1.0])

    up_tris = np.array([[perm[v] for v in t] for t in tris], dtype=np.int64)
    lo_tris = np.array([[tau(t[0]), tau(t[2]), tau(t[1])] for t in up_tris],
                       dtype=np.int64)
    full_tris = np.vstack([up_tris, lo_tris])

    mirror_tag = {TAG_TOP: TAG_BOTTOM, TAG_BOTTOM: TAG_TOP, TAG_LEFT: TAG_LEFT,
                  TAG_RIGHT: TAG_RIGHT, TAG_BODY: TAG_BODY}
    full_edges = []
    full_tags = []
    for (a, b), tag in zip(b_edges, b_tags):
        if tag == _TAG_INTERFACE:
            continue
        u, v = perm[int(a)], perm[int(b)]
        full_edges.append((u, v))
        full_tags.append(tag)
        full_edges.append((tau(v), tau(u)))
        full_tags.append(mirror_tag[tag])
    mesh = Mesh(full_nodes, full_tris, np.array(full_edges, dtype=np.int64),
                full_tags, h)
    mesh.validate()
    return mesh


def reflect_mesh(M: Mesh) -> Mesh:
    """Mirror the mesh across the x1-axis keeping node ids; triangle vertex
    order is swapped to restore positive orientation and the top/bottom tags
    exchange roles."""
    nodes = M.nodes * np.array([1.0, -1.0])
    tris = M.triangles[:, [0, 2, 1]].copy()
    swap = {TAG_TOP: TAG_BOTTOM, TAG_BOTTOM: TAG_TOP}
    tags = [swap.get(t, t) for t in M.boundary_tags]
    edges = M.boundary_edges[:, [1, 0]].copy()
    mesh = Mesh(nodes, tris, edges, tags, M.h)
    mesh.validate()
    return mesh
