import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liftlab.errors import GeometryError
from liftlab.geometry import (
    BodyClass,
    BodyShape,
    Rect,
    TrapeziumParams,
    body_family,
    hausdorff_distance,
    is_admissible_body,
    polygon_area,
    reflect_body,
)

P_DEFAULT = TrapeziumParams(l=1.0, h=0.25, gamma=0.5)


# ---------------------------------------------------------------- oracles

def fan_area(vertices):
    """Independent area oracle: triangle-fan decomposition from vertex 0."""
    v = np.asarray(vertices, dtype=float)
    total = 0.0
    for i in range(1, len(v) - 1):
        a = v[i] - v[0]
        b = v[i + 1] - v[0]
        total += 0.5 * (a[0] * b[1] - a[1] * b[0])
    return abs(total)


def sample_boundary(body, n):
    """n points distributed along the polygon boundary by arclength."""
    v = body.vertices
    segs = np.roll(v, -1, axis=0) - v
    lens = np.hypot(segs[:, 0], segs[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    s = np.linspace(0.0, cum[-1], n, endpoint=False)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(v) - 1)
    t = (s - cum[idx]) / lens[idx]
    return v[idx] + t[:, None] * segs[idx]


def hausdorff_oracle(A, B, n=10_000):
    """Dense boundary-sampling oracle for the Hausdorff distance of convex
    bodies: the directed sup is attained on the boundary."""
    pa = sample_boundary(A, n)
    pb = sample_boundary(B, n)
    d_ab = max(B.distance_to_point(p) for p in pa)
    d_ba = max(A.distance_to_point(p) for p in pb)
    return max(d_ab, d_ba)


def convex_hull(points):
    """Monotone-chain hull, used only to build random convex test polygons."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) < 3:
        return None

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
    return hull if len(hull) >= 3 else None


# ---------------------------------------------------------------- area

def test_area_unit_square():
    B = BodyShape([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert polygon_area(B) == pytest.approx(1.0, abs=1e-15)


def test_area_tail_triangle_matches_h_gamma():
    l, h, g = 1.0, 0.25, 0.5
    B = BodyShape([(l, -h), (l, h), (l + g, h)])
    assert polygon_area(B) == pytest.approx(h * g, rel=1e-15)


@pytest.mark.parametrize("eps", [0.1, 0.5, 0.9])
def test_area_family_matches_fan_oracle(eps):
    B = body_family(eps, P_DEFAULT)
    expected = 4 * P_DEFAULT.l * P_DEFAULT.h + P_DEFAULT.h * P_DEFAULT.gamma
    assert polygon_area(B) == pytest.approx(expected, rel=1e-13)
    assert polygon_area(B) == pytest.approx(fan_area(B.vertices), rel=1e-13)


def test_too_few_vertices_rejected():
    with pytest.raises(GeometryError):
        BodyShape([(0, 0), (1, 0)])


# ---------------------------------------------------------------- admissibility

def make_class():
    return BodyClass(D=Rect(2.0, 0.5), alpha=0.405)


def test_admissible_centered_rectangle():
    C = make_class()
    B = BodyShape([(-0.675, -0.15), (0.675, -0.15), (0.675, 0.15), (-0.675, 0.15)])
    assert polygon_area(B) == pytest.approx(C.alpha, rel=1e-12)
    assert is_admissible_body(B, C).ok


def test_rectangle_overlapping_D_boundary_rejected():
    C = make_class()
    B = BodyShape([(1.5, -0.15), (2.85, -0.15), (2.85, 0.15), (1.5, 0.15)])
    report = is_admissible_body(B, C)
    assert not report.ok
    assert any("containment" in v for v in report.violations)


def test_nonconvex_L_shape_rejected():
    C = make_class()
    # L-shaped hexagon of area 0.405 inside D
    a = 0.45
    B = BodyShape([(0, 0), (2 * a, 0), (2 * a, a / 2), (a, a / 2), (a, a), (0, a)])
    assert polygon_area(B) == pytest.approx(2 * a * a / 2 + a * a / 2, rel=1e-12)
    report = is_admissible_body(B, C)
    assert not report.ok
    assert any("convexity" in v for v in report.violations)


# ---------------------------------------------------------------- hausdorff

def test_hausdorff_identity():
    B = body_family(0.3, P_DEFAULT)
    assert hausdorff_distance(B, B) == 0.0


@pytest.mark.parametrize("t", [0.05, 0.3, 1.7])
def test_hausdorff_translate(t):
    A = body_family(0.2, P_DEFAULT)
    B = BodyShape(A.vertices + np.array([t, 0.0]))
    assert hausdorff_distance(A, B) == pytest.approx(t, rel=1e-12)


def test_hausdorff_nested_squares_sqrt2():
    A = BodyShape([(0, 0), (1, 0), (1, 1), (0, 1)])
    B = BodyShape([(0, 0), (2, 0), (2, 2), (0, 2)])
    exact = hausdorff_distance(A, B)
    assert exact == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert exact == pytest.approx(hausdorff_oracle(A, B), abs=2e-3)


def test_hausdorff_family_against_oracle():
    A = body_family(0.15, P_DEFAULT)
    B = body_family(0.85, P_DEFAULT)
    assert hausdorff_distance(A, B) == pytest.approx(hausdorff_oracle(A, B), abs=2e-3)


@st.composite
def convex_bodies(draw):
    n = draw(st.integers(min_value=4, max_value=10))
    pts = [(draw(st.floats(-3, 3)), draw(st.floats(-3, 3))) for _ in range(n)]
    hull = convex_hull(pts)
    if hull is None or fan_area(np.array(hull)) < 1e-2:
        # reject degenerate draws
        return draw(convex_bodies())
    return BodyShape(hull)


@settings(max_examples=40, deadline=None)
@given(convex_bodies(), convex_bodies(), convex_bodies())
def test_hausdorff_triangle_inequality(A, B, C):
    ab = hausdorff_distance(A, B)
    bc = hausdorff_distance(B, C)
    ac = hausdorff_distance(A, C)
    assert ac <= ab + bc + 1e-9


# ---------------------------------------------------------------- reflection

def test_reflect_symmetric_rectangle_is_identity():
    B = BodyShape([(-1, -0.3), (1, -0.3), (1, 0.3), (-1, 0.3)])
    assert reflect_body(B).equals_point_set(B)


def test_reflect_is_involution():
    B = body_family(0.37, P_DEFAULT)
    assert reflect_body(reflect_body(B)).equals_point_set(B)


def test_reflect_trapezium_vertex_set():
    l, h, g = 1.0, 0.25, 0.5
    B = BodyShape([(-l, -h), (-l, h), (l + g, h), (l, -h)])
    R = reflect_body(B)
    expected = BodyShape([(-l, h), (-l, -h), (l + g, -h), (l, h)])
    assert R.equals_point_set(expected)


# ---------------------------------------------------------------- body family

def test_family_eps0_is_trapezium():
    l, h, g = P_DEFAULT.l, P_DEFAULT.h, P_DEFAULT.gamma
    B = body_family(0.0, P_DEFAULT)
    expected = BodyShape([(-l, -h), (l, -h), (l + g, h), (-l, h)])
    assert B.equals_point_set(expected)


def test_family_eps_two_thirds_matches_vertex_list():
    l, h, g = P_DEFAULT.l, P_DEFAULT.h, P_DEFAULT.gamma
    B = body_family(2.0 / 3.0, P_DEFAULT)
    expected = BodyShape([
        (-l, -h), (-l, h), (l + 3 * g / 5, h), (l + 3 * g / 5, -h / 3), (l, -h),
    ])
    assert B.num_vertices == 5
    assert B.equals_point_set(expected, tol=1e-14)


def test_family_eps1_is_reflected_trapezium():
    B1 = body_family(1.0, P_DEFAULT)
    assert B1.equals_point_set(reflect_body(body_family(0.0, P_DEFAULT)), tol=1e-14)


def test_family_area_conserved_on_grid():
    expected = P_DEFAULT.family_area
    for eps in np.linspace(0.0, 1.0, 11):
        B = body_family(float(eps), P_DEFAULT)
        assert abs(polygon_area(B) - expected) <= 1e-12 * expected


def test_family_convex_everywhere():
    for eps in np.linspace(0.0, 1.0, 41):
        assert body_family(float(eps), P_DEFAULT).is_convex()


def test_family_hausdorff_continuity_constant():
    # K computed once from the steepest observed increment and then fixed.
    step = 1e-3
    K = 5.0 * max(
        hausdorff_distance(body_family(e, P_DEFAULT), body_family(e + step, P_DEFAULT))
        for e in np.linspace(0.0, 1.0 - step, 21)
    ) / step
    for e in np.linspace(0.0, 1.0 - step, 57):
        d = hausdorff_distance(body_family(float(e), P_DEFAULT),
                               body_family(float(e) + step, P_DEFAULT))
        assert d <= K * step


def test_family_asymmetric_in_interior():
    for eps in [0.1, 0.25, 0.4, 0.6, 0.75, 0.9]:
        B = body_family(eps, P_DEFAULT)
        assert hausdorff_distance(B, reflect_body(B)) > 1e-9


def test_family_denominator_positive_on_upper_branch():
    for eps in np.linspace(2.0 / 3.0, 1.0, 101):
        assert 15 * eps - 9 * eps ** 2 - 1 > 0


def test_family_eps_out_of_range():
    with pytest.raises(GeometryError):
        body_family(-0.01, P_DEFAULT)
    with pytest.raises(GeometryError):
        body_family(1.01, P_DEFAULT)


# ---------------------------------------------------------------- serialization

def test_body_json_round_trip():
    B = body_family(0.42, P_DEFAULT)
    assert BodyShape.from_json(B.to_json()).equals_point_set(B, tol=0.0)


def test_trapezium_params_round_trip():
    assert TrapeziumParams.from_dict(P_DEFAULT.to_dict()) == P_DEFAULT
