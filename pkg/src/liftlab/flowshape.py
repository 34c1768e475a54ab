"""Inflow/outflow profile pairs, the norm/flux/endpoint admissibility class,
even-odd calculus, and the odd-part homotopies between a flow shape and its
mirror image."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import FlowShapeError
from .geometry import AdmissibilityReport

DEFAULT_NODES = 129
MIN_NODES = 33


def symmetric_grid(H: float, n: int) -> np.ndarray:
    """Uniform grid on [-H, H] built so that grid[k] == -grid[n-1-k] exactly
    and the endpoints are exactly +-H."""
    if n < MIN_NODES:
        raise FlowShapeError(f"profile needs at least {MIN_NODES} nodes, got {n}")
    if H <= 0.0:
        raise FlowShapeError(f"half-height H must be positive, got {H}")
    if n % 2 == 1:
        m = (n - 1) // 2
        xs = H * np.arange(1, m + 1) / m
        return np.concatenate([-xs[::-1], [0.0], xs])
    m = n // 2
    xs = H * (2.0 * np.arange(m) + 1.0) / (n - 1)
    return np.concatenate([-xs[::-1], xs])


class FlowProfile:
    """Piecewise-linear velocity profile on a uniform symmetric grid of
    [-H, H]. The derivative is piecewise constant."""

    def __init__(self, H: float, values):
        self.H = float(H)
        self.values = np.asarray(values, dtype=float).copy()
        if self.values.ndim != 1:
            raise FlowShapeError("profile values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise FlowShapeError("profile values must be finite")
        self.grid = symmetric_grid(self.H, len(self.values))
        self.values.setflags(write=False)
        self.grid.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return len(self.values)

    def __call__(self, x):
        """Evaluate the interpolant. The barycentric two-endpoint form keeps
        evaluation exactly mirror-symmetric in floating point."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.grid, x, side="right") - 1,
                      0, self.num_nodes - 2)
        x_lo = self.grid[idx]
        x_hi = self.grid[idx + 1]
        v_lo = self.values[idx]
        v_hi = self.values[idx + 1]
        return ((x_hi - x) * v_lo + (x - x_lo) * v_hi) / (x_hi - x_lo)

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.grid)

    def with_values(self, values) -> "FlowProfile":
        return FlowProfile(self.H, values)

    def reversed(self) -> "FlowProfile":
        return FlowProfile(self.H, self.values[::-1])

    def to_json(self) -> str:
        return json.dumps({"H": self.H, "nodes": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "FlowProfile":
        d = json.loads(text)
        return cls(d["H"], d["nodes"])


def w1inf_norm(V: FlowProfile) -> float:
    """W^{1,inf} norm with the sum convention: sup |value| + sup |slope|."""
    return float(np.max(np.abs(V.values)) + np.max(np.abs(V.slopes())))


def flux(V: FlowProfile) -> float:
    """Integral of the piecewise-linear interpolant over [-H, H].

    The trapezoid weights are accumulated in mirror pairs so that exactly
    antisymmetric node values integrate to exactly zero in floating point.
    """
    d = np.diff(V.grid)
    w = np.empty(V.num_nodes)
    w[0] = d[0] / 2.0
    w[-1] = d[-1] / 2.0
    w[1:-1] = (d[:-1] + d[1:]) / 2.0
    t = w * V.values
    m = V.num_nodes // 2
    paired = t[:m] + t[::-1][:m]
    total = float(np.sum(paired))
    if V.num_nodes % 2 == 1:
        total += float(t[m])
    return total


@dataclass
class FlowShapePair:
    """An inflow/outflow profile pair with its top-wall value U."""

    v_in: FlowProfile
    v_out: FlowProfile
    U: int

    def __post_init__(self):
        if self.U not in (0, 1):
            raise FlowShapeError(f"U must be 0 or 1, got {self.U}")
        if self.v_in.H != self.v_out.H:
            raise FlowShapeError("v_in and v_out must share the same half-height H")

    @property
    def H(self) -> float:
        return self.v_in.H

    def to_json(self) -> str:
        return json.dumps({
            "H": self.H,
            "U": self.U,
            "v_in": self.v_in.values.tolist(),
            "v_out": self.v_out.values.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "FlowShapePair":
        d = json.loads(text)
        return cls(FlowProfile(d["H"], d["v_in"]), FlowProfile(d["H"], d["v_out"]),
                   int(d["U"]))


@dataclass(frozen=True)
class FlowClassParams:
    """Parameters of the admissible flow-shape class: norm budget r, top-wall
    value U, and the relative flux tolerance.

    Construction verifies that r admits at least one unit-flux profile pair
    (the minimal-norm plateau profile for U = 0, the shear profile for U = 1).
    """

    r: float
    U: int
    flux_tol: float = 1e-9
    H: float = 1.0
    num_nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if self.r <= 0.0:
            raise FlowShapeError(f"norm budget r must be positive, got {self.r}")
        if self.U not in (0, 1):
            raise FlowShapeError(f"U must be 0 or 1, got {self.U}")
        base = self.baseline_pair()
        total = w1inf_norm(base.v_in) + w1inf_norm(base.v_out)
        if total > self.r:
            raise FlowShapeError(
                f"r = {self.r} too small to admit the unit-flux baseline "
                f"(needs {total:.6g})")

    def baseline_pair(self) -> FlowShapePair:
        prof = couette(self.H, self.num_nodes) if self.U == 1 \
            else minimal_norm_profile(self.H, self.num_nodes)
        return FlowShapePair(prof, prof, self.U)

    def default_pair(self) -> FlowShapePair:
        """Smooth working pair: Poiseuille/Couette when the budget allows it,
        the feasibility baseline otherwise."""
        prof = couette(self.H, self.num_nodes) if self.U == 1 \
            else poiseuille(self.H, self.num_nodes)
        pair = FlowShapePair(prof, prof, self.U)
        if w1inf_norm(pair.v_in) + w1inf_norm(pair.v_out) <= self.r:
            return pair
        return self.baseline_pair()


ENDPOINT_TOL = 1e-10
NORM_SLACK = 1e-12


def is_admissible_flow(P: FlowShapePair, C: FlowClassParams) -> AdmissibilityReport:
    """Check the norm budget, the endpoint values, and the unit-flux condition."""
    violations = []
    total = w1inf_norm(P.v_in) + w1inf_norm(P.v_out)
    if total > C.r * (1.0 + NORM_SLACK):
        violations.append(f"norm: |v_in| + |v_out| = {total:.9g} exceeds r = {C.r:g}")
    scale = max(1.0, float(np.max(np.abs(P.v_in.values))),
                float(np.max(np.abs(P.v_out.values))))
    for name, prof in (("v_in", P.v_in), ("v_out", P.v_out)):
        if abs(prof.values[0]) > ENDPOINT_TOL * scale:
            violations.append(f"endpoint: {name}(-H) = {prof.values[0]:.3g}, expected 0")
        if abs(prof.values[-1] - P.U) > ENDPOINT_TOL * scale:
            violations.append(
                f"endpoint: {name}(H) = {prof.values[-1]:.3g}, expected U = {P.U}")
        f = flux(prof)
        if abs(f - 1.0) > C.flux_tol:
            violations.append(f"flux: integral of {name} = {f:.12g}, expected 1")
    return AdmissibilityReport(ok=not violations, violations=tuple(violations))


def even_odd_split(V: FlowProfile) -> tuple:
    """Split into even and odd parts. The node values reproduce V exactly and
    the odd part is exactly antisymmetric in floating point."""
    v = V.values
    rev = v[::-1]
    v_e = (v + rev) / 2.0
    v_o = (v - rev) / 2.0
    return V.with_values(v_e), V.with_values(v_o)


ODD_ATOL = 1e-12


def _check_odd(V: FlowProfile) -> float:
    scale = float(np.max(np.abs(V.values)))
    asym = float(np.max(np.abs(V.values + V.values[::-1])))
    if asym > ODD_ATOL * max(scale, 1.0):
        raise FlowShapeError("profile is not antisymmetric")
    return scale


def find_odd_zeros(V_o: FlowProfile, zero_tol: float = 1e-9) -> list:
    """Zeros of an odd interpolant in the open interval (-H, H).

    Raises when the profile is identically zero; the homotopy is undefined
    in that case and the caller must decide what to do.
    """
    scale = _check_odd(V_o)
    if scale == 0.0 or scale <= ODD_ATOL:
        raise FlowShapeError("odd part is identically zero")
    v = V_o.values
    x = V_o.grid
    ztol = zero_tol * scale
    zeros = []
    n = len(v)
    for i in range(1, n - 1):
        if abs(v[i]) <= ztol:
            zeros.append(float(x[i]))
    for i in range(n - 1):
        if abs(v[i]) > ztol and abs(v[i + 1]) > ztol and v[i] * v[i + 1] < 0.0:
            t = v[i] / (v[i] - v[i + 1])
            zeros.append(float(x[i] + t * (x[i + 1] - x[i])))
    zeros = sorted(set(zeros))
    interior = [z for z in zeros if -V_o.H < z < V_o.H]
    return interior


def reflect_flow(P: FlowShapePair) -> FlowShapePair:
    """Mirror both profiles across x2 = 0; only defined for U = 0 since the
    reflection of a U = 1 pair violates the top/bottom endpoint condition."""
    if P.U != 0:
        raise FlowShapeError("reflection of a U = 1 pair breaks the endpoint condition")
    return FlowShapePair(P.v_in.reversed(), P.v_out.reversed(), P.U)


def _branch_factors(delta: float) -> tuple:
    """Outer/inner multipliers of the two-branch odd-part formula."""
    if delta <= 0.5:
        return 1.0 - 4.0 * delta, 1.0
    return -1.0, 3.0 - 4.0 * delta


def _apply_branch(v_o: np.ndarray, x: np.ndarray, x_star: float, delta: float) -> np.ndarray:
    f_out, f_in = _branch_factors(delta)
    outer = np.abs(x) >= x_star
    out = np.where(outer, f_out * v_o, f_in * v_o)
    return out


def _pinched(v_o: np.ndarray, x: np.ndarray, x_star: float) -> np.ndarray:
    """Multiply by the even factor (x^2 - x_star^2) and rescale back to the
    original max amplitude; creates zeros at +-x_star while keeping oddness."""
    w = x * x - x_star * x_star
    raw = v_o * w
    peak = float(np.max(np.abs(raw)))
    if peak == 0.0:
        raise FlowShapeError("pinch factor annihilated the odd part")
    return raw * (float(np.max(np.abs(v_o))) / peak)


def _homotopy_values(V: FlowProfile, delta: float, zero_tol: float) -> np.ndarray:
    """Odd-part transformation of a single profile at homotopy parameter delta."""
    v_e = (V.values + V.values[::-1]) / 2.0
    v_o = (V.values - V.values[::-1]) / 2.0
    scale = float(np.max(np.abs(V.values)))
    if float(np.max(np.abs(v_o))) <= ODD_ATOL * max(scale, 1.0):
        return None  # even profile: its reflection is itself
    x = V.grid
    zeros = find_odd_zeros(V.with_values(v_o), zero_tol)
    positive = [z for z in zeros if z > zero_tol * V.H]
    if positive:
        x_star = max(positive)
        inner = np.abs(x) < x_star
        peak = float(np.max(np.abs(v_o)))
        if float(np.max(np.abs(v_o[inner]))) <= ODD_ATOL * peak or \
           float(np.max(np.abs(v_o[~inner]))) <= ODD_ATOL * peak:
            raise FlowShapeError(
                "odd part vanishes on one side of its outer zero; the branch "
                "homotopy would pass through an even state")
        v_o_new = _apply_branch(v_o, x, x_star, delta)
    else:
        # Single interior zero at 0: create a symmetric zero pair at +-H/2,
        # morph into the pinched profile, run the branch formula on it, then
        # morph into the reflected odd part.
        x_star = V.H / 2.0
        pinched = _pinched(v_o, x, x_star)
        if delta <= 0.25:
            t = 4.0 * delta
            v_o_new = (1.0 - t) * v_o + t * pinched
        elif delta <= 0.75:
            v_o_new = _apply_branch(pinched, x, x_star, 2.0 * (delta - 0.25))
        else:
            t = 4.0 * (delta - 0.75)
            v_o_new = -((1.0 - t) * pinched + t * v_o)
    return v_e + v_o_new


def _shrink_to_budget(V: FlowProfile, v_e: np.ndarray, v_o_new: np.ndarray,
                      budget: float) -> np.ndarray:
    """Largest s in (0, 1] with |v_e + s v_o| within the norm budget.

    s -> norm is convex with value <= budget at s = 0, so bisection on the
    upper boundary of the feasible interval is well defined.
    """
    def norm_at(s):
        return w1inf_norm(V.with_values(v_e + s * v_o_new))

    if norm_at(1.0) <= budget * (1.0 + NORM_SLACK):
        return v_e + v_o_new
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if norm_at(mid) <= budget * (1.0 + NORM_SLACK):
            lo = mid
        else:
            hi = mid
    return v_e + lo * v_o_new


def flow_homotopy(P: FlowShapePair, delta: float, C: FlowClassParams,
                  zero_tol: float = 1e-9) -> FlowShapePair:
    """Deform the pair toward its mirror image by transforming only the odd
    parts; the flux and the endpoint values are preserved exactly.

    delta = 0 returns the pair unchanged and delta = 1 returns the reflected
    pair, both bitwise. Each profile keeps its own W^{1,inf} norm budget by
    shrinking only the transformed odd part when needed.
    """
    if not (0.0 <= delta <= 1.0):
        raise FlowShapeError(f"delta must lie in [0, 1], got {delta}")
    if P.U != 0:
        raise FlowShapeError("the flow homotopy is defined for U = 0 pairs only")
    if delta == 0.0:
        return P
    if delta == 1.0:
        return reflect_flow(P)

    profiles = []
    n_even = 0
    for prof in (P.v_in, P.v_out):
        vals = _homotopy_values(prof, delta, zero_tol)
        if vals is None:
            n_even += 1
            profiles.append(prof)
            continue
        v_e = (prof.values + prof.values[::-1]) / 2.0
        v_o_new = vals - v_e
        budget = w1inf_norm(prof)
        profiles.append(prof.with_values(_shrink_to_budget(prof, v_e, v_o_new, budget)))
    if n_even == 2:
        raise FlowShapeError("both odd parts are identically zero: the pair is "
                             "already even and the homotopy is undefined")
    return FlowShapePair(profiles[0], profiles[1], P.U)


def poiseuille(H: float, n: int = DEFAULT_NODES) -> FlowProfile:
    """Parabolic profile 3(H^2 - x^2)/(4H^3), rescaled multiplicatively so the
    discrete flux of the interpolant is 1."""
    x = symmetric_grid(H, n)
    vals = 3.0 * (H * H - x * x) / (4.0 * H ** 3)
    prof = FlowProfile(H, vals)
    return FlowProfile(H, vals / flux(prof))


def couette(H: float, n: int = DEFAULT_NODES) -> FlowProfile:
    """Linear shear (x + H)/(2H) with top value exactly 1. For H != 1 a
    quadratic correction c (H^2 - x^2) restores unit discrete flux without
    touching the endpoints."""
    x = symmetric_grid(H, n)
    linear = (x + H) / (2.0 * H)
    bump = H * H - x * x
    base_flux = flux(FlowProfile(H, linear))
    bump_flux = flux(FlowProfile(H, bump))
    c = (1.0 - base_flux) / bump_flux
    return FlowProfile(H, linear + c * bump)


class AnalyticProfile(FlowProfile):
    """Profile evaluated from a closed-form formula; the node values are
    samples of it, so the norm/flux functionals see the interpolant while
    boundary evaluation is pointwise exact."""

    def __init__(self, H: float, fn, n: int = DEFAULT_NODES):
        x = symmetric_grid(H, n)
        super().__init__(H, fn(x))
        self._fn = fn

    def __call__(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def reversed(self) -> "AnalyticProfile":
        fn = self._fn
        return AnalyticProfile(self.H, lambda x: fn(-np.asarray(x)), self.num_nodes)


def poiseuille_exact(H: float, n: int = DEFAULT_NODES) -> AnalyticProfile:
    """Exact parabola 3(H^2 - x^2)/(4H^3); analytic flux is exactly 1."""
    return AnalyticProfile(H, lambda x: 3.0 * (H * H - x * x) / (4.0 * H ** 3), n)


def couette_exact(H: float, n: int = DEFAULT_NODES) -> AnalyticProfile:
    """Exact shear (x + H)/(2H) plus the flux correction c (H^2 - x^2) with
    c = 3(1 - H)/(4 H^3); analytic flux is exactly 1 and the endpoints are
    0 and 1."""
    c = 3.0 * (1.0 - H) / (4.0 * H ** 3)
    return AnalyticProfile(
        H, lambda x: (x + H) / (2.0 * H) + c * (H * H - x * x), n)


def minimal_norm_profile(H: float, n: int = DEFAULT_NODES) -> FlowProfile:
    """Plateau profile with symmetric ramps minimizing sup|V| + sup|V'| among
    unit-flux profiles vanishing at both endpoints.

    The optimal ramp width solves w^2 + 2w - 2H = 0; the discrete flux is
    restored multiplicatively.
    """
    w = np.sqrt(1.0 + 2.0 * H) - 1.0
    x = symmetric_grid(H, n)
    m = 1.0 / (2.0 * H - w)
    vals = m * np.clip((H - np.abs(x)) / w, 0.0, 1.0)
    prof = FlowProfile(H, vals)
    return FlowProfile(H, vals / flux(prof))


def named_profile(name: str, H: float, n: int = DEFAULT_NODES) -> FlowProfile:
    if name == "poiseuille":
        return poiseuille(H, n)
    if name == "couette":
        return couette(H, n)
    if name == "plateau":
        return minimal_norm_profile(H, n)
    raise FlowShapeError(f"unknown profile name {name!r}")
