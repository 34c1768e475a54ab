"""Convex body shapes, the confined admissible class, Hausdorff distance,
reflection, and the explicit area-preserving body homotopy family."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

# Relative tolerance for collinearity/duplicate removal, scaled by extent^2.
COLLINEAR_TOL = 1e-12


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (-L, L) x (-H, H) centered at the origin."""

    L: float
    H: float

    def __post_init__(self):
        if not (self.L > self.H > 0.0):
            raise GeometryError(f"rectangle requires L > H > 0, got L={self.L}, H={self.H}")

    @property
    def area(self) -> float:
        return 4.0 * self.L * self.H

    def corners(self) -> np.ndarray:
        L, H = self.L, self.H
        return np.array([[-L, -H], [L, -H], [L, H], [-L, H]])

    def contains_point(self, p, margin: float = 0.0) -> bool:
        return (abs(p[0]) <= self.L - margin) and (abs(p[1]) <= self.H - margin)

    def strictly_inside(self, other: "Rect") -> bool:
        """True when self sits inside `other` with positive clearance."""
        return self.L < other.L and self.H < other.H


def shoelace_area(vertices: np.ndarray) -> float:
    """Signed area of a closed polygon given as an (n, 2) vertex array."""
    x = vertices[:, 0]
    y = vertices[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _canonicalize(vertices: np.ndarray) -> np.ndarray:
    """Orient counterclockwise, drop duplicate and collinear vertices, and
    rotate so the lexicographically smallest vertex comes first."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
        raise GeometryError("a body shape needs at least 3 two-dimensional vertices")
    if not np.all(np.isfinite(v)):
        raise GeometryError("vertices must be finite")
    if shoelace_area(v) < 0:
        v = v[::-1]

    span = max(float(np.ptp(v[:, 0])), float(np.ptp(v[:, 1])))
    if span == 0.0:
        raise GeometryError("degenerate polygon: zero extent")
    tol_len = COLLINEAR_TOL * span
    tol_area = COLLINEAR_TOL * span * span

    changed = True
    while changed and len(v) > 3:
        changed = False
        keep = np.ones(len(v), dtype=bool)
        n = len(v)
        for i in range(n):
            a = v[(i - 1) % n]
            b = v[i]
            c = v[(i + 1) % n]
            if np.hypot(*(c - b)) <= tol_len:
                keep[i] = False  # duplicate of successor
                changed = True
                break
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if abs(cross) <= tol_area:
                keep[i] = False  # collinear interior point
                changed = True
                break
        v = v[keep]

    if len(v) < 3 or abs(shoelace_area(v)) <= tol_area:
        raise GeometryError("degenerate polygon after canonicalization")
    start = np.lexsort((v[:, 1], v[:, 0]))[0]
    return np.roll(v, -start, axis=0)


class BodyShape:
    """Polygonal obstacle given by an ordered counterclockwise vertex list.

    Construction canonicalizes the boundary (orientation, duplicate and
    collinear removal). Convexity is not forced here so that admissibility
    checks can report convexity violations on arbitrary polygons.
    """

    def __init__(self, vertices):
        self.vertices = _canonicalize(np.asarray(vertices, dtype=float))
        self.vertices.setflags(write=False)

    def __repr__(self):
        return f"BodyShape({self.vertices.tolist()})"

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return shoelace_area(self.vertices)

    @property
    def span(self) -> float:
        return max(float(np.ptp(self.vertices[:, 0])), float(np.ptp(self.vertices[:, 1])))

    def centroid(self) -> np.ndarray:
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        w = v[:, 0] * nxt[:, 1] - nxt[:, 0] * v[:, 1]
        a = 0.5 * np.sum(w)
        cx = np.sum((v[:, 0] + nxt[:, 0]) * w) / (6.0 * a)
        cy = np.sum((v[:, 1] + nxt[:, 1]) * w) / (6.0 * a)
        return np.array([cx, cy])

    def edges(self) -> np.ndarray:
        """(n, 2, 2) array of boundary segments in counterclockwise order."""
        return np.stack([self.vertices, np.roll(self.vertices, -1, axis=0)], axis=1)

    def is_convex(self) -> bool:
        v = self.vertices
        a = v - np.roll(v, 1, axis=0)
        b = np.roll(v, -1, axis=0) - v
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        return bool(np.all(cross > -COLLINEAR_TOL * self.span ** 2))

    def contains_point(self, p, tol: float = 0.0) -> bool:
        """Point membership for convex bodies (boundary counts as inside)."""
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        cross = (nxt[:, 0] - v[:, 0]) * (p[1] - v[:, 1]) - (nxt[:, 1] - v[:, 1]) * (p[0] - v[:, 0])
        return bool(np.all(cross >= -tol * self.span))

    def distance_to_point(self, p) -> float:
        """Distance from p to the body (0 if inside); convex bodies only."""
        if self.contains_point(p):
            return 0.0
        return self.boundary_distance_to_point(p)

    def boundary_distance_to_point(self, p) -> float:
        p = np.asarray(p, dtype=float)
        best = np.inf
        for a, b in self.edges():
            best = min(best, _point_segment_distance(p, a, b))
        return float(best)

    def equals_point_set(self, other: "BodyShape", tol: float = 1e-12) -> bool:
        """Equality of the canonical vertex lists up to absolute tolerance
        scaled by extent."""
        if self.num_vertices != other.num_vertices:
            return False
        return bool(np.allclose(self.vertices, other.vertices,
                                rtol=0.0, atol=tol * max(self.span, other.span)))

    def to_json(self) -> str:
        return json.dumps([[float(x), float(y)] for x, y in self.vertices])

    @classmethod
    def from_json(cls, text: str) -> "BodyShape":
        return cls(json.loads(text))


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.hypot(*(p - a)))
    t = float((p - a) @ ab) / denom
    t = min(1.0, max(0.0, t))
    proj = a + t * ab
    return float(np.hypot(*(p - proj)))


@dataclass(frozen=True)
class BodyClass:
    """Admissible body class: convex bodies of area alpha confined to D."""

    D: Rect
    alpha: float
    area_tol: float = 1e-9

    def __post_init__(self):
        if not (0.0 < self.alpha < self.D.area):
            raise GeometryError(
                f"alpha must lie in (0, |D|) = (0, {self.D.area}), got {self.alpha}")


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    violations: tuple

    def __bool__(self) -> bool:
        return self.ok


def polygon_area(B: BodyShape) -> float:
    """Area of the body polygon (exact shoelace value)."""
    return B.area


def is_admissible_body(B: BodyShape, C: BodyClass) -> AdmissibilityReport:
    """Check convexity, confinement to D, and the area constraint."""
    violations = []
    if not B.is_convex():
        violations.append("convexity: polygon is not convex")
    for p in B.vertices:
        if not C.D.contains_point(p):
            violations.append(
                f"containment: vertex ({p[0]:.6g}, {p[1]:.6g}) outside D")
            break
    if abs(B.area - C.alpha) > C.area_tol * C.alpha:
        violations.append(
            f"area: |B| = {B.area:.12g} differs from alpha = {C.alpha:.12g} "
            f"beyond tolerance {C.area_tol:g}")
    return AdmissibilityReport(ok=not violations, violations=tuple(violations))


def hausdorff_distance(A: BodyShape, B: BodyShape) -> float:
    """Hausdorff distance between two convex bodies.

    For compact convex sets the directed distance sup_{a in A} d(a, B) is
    attained at a vertex of A, so maximizing vertex-to-body distance in both
    directions is exact.
    """
    d_ab = max(B.distance_to_point(p) for p in A.vertices)
    d_ba = max(A.distance_to_point(p) for p in B.vertices)
    return max(d_ab, d_ba)


def reflect_body(B: BodyShape) -> BodyShape:
    """Mirror the body across the x1-axis."""
    return BodyShape(B.vertices * np.array([1.0, -1.0]))


def convex_hull(points) -> np.ndarray:
    """Monotone-chain convex hull, counterclockwise, collinear points dropped."""
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=float)})
    if len(pts) < 3:
        raise GeometryError("need at least 3 distinct points for a hull")

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                o, a = out[-2], out[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise GeometryError("points are collinear: no two-dimensional hull")
    return np.array(hull)


@dataclass(frozen=True)
class TrapeziumParams:
    """Parameters of the right-trapezium body: rectangle [-l,l] x [-h,h]
    plus a right tail of width gamma."""

    l: float
    h: float
    gamma: float

    def __post_init__(self):
        if not (0.0 < self.h < self.l):
            raise GeometryError(f"need 0 < h < l, got h={self.h}, l={self.l}")
        if not (0.0 < self.gamma < self.l):
            raise GeometryError(f"need 0 < gamma < l, got gamma={self.gamma}")

    @property
    def family_area(self) -> float:
        """Common area of every member of the homotopy family."""
        return 4.0 * self.l * self.h + self.h * self.gamma

    def bounding_box_halfwidths(self) -> tuple:
        """Half-extents (max |x1|, max |x2|) over the whole family."""
        return self.l + self.gamma, self.h

    def fits(self, D: Rect) -> bool:
        bx, by = self.bounding_box_halfwidths()
        return bx <= D.L and by <= D.H

    def to_dict(self) -> dict:
        return {"l": self.l, "h": self.h, "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d: dict) -> "TrapeziumParams":
        return cls(l=float(d["l"]), h=float(d["h"]), gamma=float(d["gamma"]))


def body_family(eps: float, P: TrapeziumParams) -> BodyShape:
    """Area-preserving homotopy of bodies from the right trapezium (eps = 0)
    to its mirror image (eps = 1), asymmetric at every interior eps.

    The tail quadrilateral keeps area h*gamma throughout; the full body keeps
    area 4*l*h + h*gamma.
    """
    if not (0.0 <= eps <= 1.0):
        raise GeometryError(f"eps must lie in [0, 1], got {eps}")
    if eps == 1.0:
        return reflect_body(body_family(0.0, P))
    l, h, g = P.l, P.h, P.gamma
    if eps <= 2.0 / 3.0:
        x = l + g / (1.0 + eps)
        tail_top = np.array([x, h])
        tail_low = np.array([x, (1.0 - 2.0 * eps) * h])
    else:
        den = 15.0 * eps - 9.0 * eps * eps - 1.0
        tail_top = np.array([l + 9.0 * g * (1.0 - eps) / den, h])
        tail_low = np.array([l + g * (6.0 * eps - 1.0) / den, (1.0 - 2.0 * eps) * h])
    vertices = np.array([
        [-l, -h],
        [l, -h],
        tail_low,
        tail_top,
        [-l, h],
    ])
    return BodyShape(vertices)
