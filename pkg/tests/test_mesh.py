import json

import numpy as np
import pytest

from liftlab.errors import MeshError
from liftlab.geometry import BodyShape, Rect, TrapeziumParams, body_family
from liftlab.mesh import (
    TAG_BODY,
    TAG_BOTTOM,
    TAGS,
    Mesh,
    generate_mesh,
    mesh_quality,
    reflect_mesh,
)

R = Rect(2.0, 1.0)
TRAP = TrapeziumParams(l=0.6, h=0.15, gamma=0.3)


def body_edge_count(M):
    return sum(1 for t in M.boundary_tags if t == TAG_BODY)


@pytest.fixture(scope="module")
def trap_mesh():
    return generate_mesh(R, body_family(0.0, TRAP), h=1 / 6)


# ---------------------------------------------------------------- generation

def test_empty_mesh_euler_relation():
    M = generate_mesh(R, None, h=0.25)
    edges = len(M.edge_set())
    assert M.num_nodes - edges + M.num_triangles == 1
    M.validate()


def test_hole_mesh_euler_relation(trap_mesh):
    edges = len(trap_mesh.edge_set())
    assert trap_mesh.num_nodes - edges + trap_mesh.num_triangles == 0


def test_body_vertices_are_mesh_nodes():
    B = BodyShape([(-0.4, -0.2), (0.4, -0.2), (0.4, 0.2), (-0.4, 0.2)])
    M = generate_mesh(R, B, h=0.1)
    for v in B.vertices:
        d = np.min(np.hypot(M.nodes[:, 0] - v[0], M.nodes[:, 1] - v[1]))
        assert d == 0.0


def test_refinement_doubles_body_boundary_edges():
    B = BodyShape([(-0.5, -0.25), (0.5, -0.25), (0.5, 0.25), (-0.5, 0.25)])
    M1 = generate_mesh(R, B, h=0.2)
    M2 = generate_mesh(R, B, h=0.1)
    ratio = body_edge_count(M2) / body_edge_count(M1)
    assert 1.5 <= ratio <= 3.0


def test_min_angle_contract(trap_mesh):
    assert mesh_quality(trap_mesh).min_angle_deg >= 20.0


def test_max_edge_bounded_by_h(trap_mesh):
    assert mesh_quality(trap_mesh).h_max <= 1 / 6 * (1 + 1e-9)


def test_orientation_positive(trap_mesh):
    assert np.all(trap_mesh.signed_areas() > 0.0)


def test_tag_completeness(trap_mesh):
    B = body_family(0.0, TRAP)
    lengths = trap_mesh.boundary_length_by_tag()
    segs = np.roll(B.vertices, -1, axis=0) - B.vertices
    per_body = float(np.sum(np.hypot(segs[:, 0], segs[:, 1])))
    per_rect = 2 * (4.0 + 2.0)
    total = sum(lengths.values())
    assert total == pytest.approx(per_rect + per_body, rel=1e-10)
    assert set(lengths) == set(TAGS)


def test_deterministic_generation(trap_mesh):
    M2 = generate_mesh(R, body_family(0.0, TRAP), h=1 / 6)
    assert np.array_equal(trap_mesh.nodes, M2.nodes)
    assert np.array_equal(trap_mesh.triangles, M2.triangles)
    assert np.array_equal(trap_mesh.boundary_edges, M2.boundary_edges)
    assert trap_mesh.boundary_tags == M2.boundary_tags


# ---------------------------------------------------------------- errors

def test_body_touching_wall_rejected():
    B = BodyShape([(-0.5, -1.0), (0.5, -1.0), (0.5, 0.0), (-0.5, 0.0)])
    with pytest.raises(MeshError):
        generate_mesh(R, B, h=0.1)


def test_clearance_below_2h_rejected():
    B = BodyShape([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])
    with pytest.raises(MeshError, match="clearance"):
        generate_mesh(R, B, h=0.3)


def test_h_too_coarse_rejected():
    B = BodyShape([(-0.1, -0.05), (0.1, -0.05), (0.1, 0.05), (-0.1, 0.05)])
    with pytest.raises(MeshError, match="too coarse"):
        generate_mesh(R, B, h=0.25)


def test_tiny_body_side_still_meshable():
    # near-degenerate family members carry very short sides by construction
    B = body_family(0.08, TRAP)
    M = generate_mesh(R, B, h=1 / 6)
    assert mesh_quality(M).min_angle_deg >= 20.0


def test_nonconvex_body_rejected():
    a = 0.45
    B = BodyShape([(0, 0), (2 * a, 0), (2 * a, a / 2), (a, a / 2), (a, a), (0, a)])
    with pytest.raises(MeshError, match="convex"):
        generate_mesh(Rect(4.0, 2.0), B, h=0.1)


# ---------------------------------------------------------------- symmetric

def node_multiset_sorted(nodes):
    return nodes[np.lexsort((nodes[:, 1], nodes[:, 0]))]


def test_symmetric_mesh_node_set_exactly_mirrored():
    B = BodyShape([(-0.675, -0.15), (0.675, -0.15), (0.675, 0.15), (-0.675, 0.15)])
    M = generate_mesh(R, B, h=1 / 6, symmetric=True)
    mirrored = M.nodes * np.array([1.0, -1.0])
    assert np.array_equal(node_multiset_sorted(M.nodes), node_multiset_sorted(mirrored))
    M.validate()


def test_symmetric_requires_symmetric_body():
    with pytest.raises(MeshError, match="symmetric"):
        generate_mesh(R, body_family(0.0, TRAP), h=1 / 6, symmetric=True)


# ---------------------------------------------------------------- reflection

def test_reflect_symmetric_mesh_same_node_multiset():
    M = generate_mesh(R, None, h=0.25, symmetric=True)
    Mr = reflect_mesh(M)
    assert np.array_equal(node_multiset_sorted(M.nodes), node_multiset_sorted(Mr.nodes))


def test_reflect_involution(trap_mesh):
    Mrr = reflect_mesh(reflect_mesh(trap_mesh))
    assert np.array_equal(Mrr.nodes, trap_mesh.nodes)
    assert np.array_equal(Mrr.triangles, trap_mesh.triangles)
    assert Mrr.boundary_tags == trap_mesh.boundary_tags


def test_reflect_preserves_areas_exactly(trap_mesh):
    Mr = reflect_mesh(trap_mesh)
    assert np.array_equal(Mr.signed_areas(), trap_mesh.signed_areas())


def test_reflect_swaps_top_bottom(trap_mesh):
    Mr = reflect_mesh(trap_mesh)
    orig = trap_mesh.boundary_length_by_tag()
    refl = Mr.boundary_length_by_tag()
    assert refl["GammaTop"] == pytest.approx(orig["GammaBottom"], rel=1e-14)
    assert refl["GammaBottom"] == pytest.approx(orig["GammaTop"], rel=1e-14)


# ---------------------------------------------------------------- quality

def test_quality_equilateral_triangle():
    M = Mesh(nodes=np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]]),
             triangles=np.array([[0, 1, 2]]),
             boundary_edges=np.array([[0, 1], [1, 2], [2, 0]]),
             boundary_tags=[TAG_BOTTOM] * 3, h=1.0)
    assert mesh_quality(M).min_angle_deg == pytest.approx(60.0, abs=1e-10)


def test_quality_right_triangle():
    M = Mesh(nodes=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
             triangles=np.array([[0, 1, 2]]),
             boundary_edges=np.array([[0, 1], [1, 2], [2, 0]]),
             boundary_tags=[TAG_BOTTOM] * 3, h=1.0)
    assert mesh_quality(M).min_angle_deg == pytest.approx(45.0, abs=1e-10)


# ---------------------------------------------------------------- round trip

def test_json_round_trip(trap_mesh):
    M2 = Mesh.from_json(trap_mesh.to_json())
    assert np.array_equal(M2.nodes, trap_mesh.nodes)
    assert np.array_equal(M2.triangles, trap_mesh.triangles)
    assert M2.boundary_tags == trap_mesh.boundary_tags


def test_json_import_validates(trap_mesh):
    d = json.loads(trap_mesh.to_json())
    d["boundary"][0]["tag"] = "NotATag"
    with pytest.raises(MeshError):
        Mesh.from_json(json.dumps(d))


def test_json_import_rejects_bad_orientation(trap_mesh):
    d = json.loads(trap_mesh.to_json())
    d["triangles"][0] = d["triangles"][0][::-1]
    with pytest.raises(MeshError):
        Mesh.from_json(json.dumps(d))
