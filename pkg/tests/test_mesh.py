"""Mesh construction, topology, file round-trips, refinement."""

import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eddyopt.mesh import (
    MeshError, build_mesh, generate_cube, generate_cylinder, mesh_size,
    mesh_to_json, parse_msh, refine_uniform, write_msh,
)


def test_unit_cube_counts():
    m = generate_cube(1)
    assert m.n_vertices == 8
    assert m.n_tets == 6
    # 12 cube edges + 6 face diagonals + 1 body diagonal
    assert m.n_edges == 19
    assert m.boundary_faces.shape[0] == 12
    assert m.faces.shape[0] == 18
    # solid ball: V - E + F - T = 1
    assert m.n_vertices - m.n_edges + m.faces.shape[0] - m.n_tets == 1
    assert m.euler_characteristic() == 2
    assert m.tet_volumes().sum() == pytest.approx(1.0, abs=1e-15)
    assert mesh_size(m) == pytest.approx(np.sqrt(3.0))


@settings(max_examples=8, deadline=None)
@given(st.integers(1, 3))
def test_cube_family_invariants(n):
    m = generate_cube(n)
    assert m.n_vertices == (n + 1) ** 3
    assert m.n_tets == 6 * n**3
    assert m.boundary_faces.shape[0] == 12 * n**2
    assert m.euler_characteristic() == 2
    assert np.all(m.tet_volumes() > 0)
    assert m.tet_volumes().sum() == pytest.approx(1.0, abs=1e-14)


def test_cube_boundary_faces_counterclockwise_outward():
    m = generate_cube(2)
    v = m.vertices[m.boundary_faces]
    normals = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    centers = v.mean(axis=1) - 0.5  # domain center at the origin
    assert np.all(np.einsum("fc,fc->f", normals, centers) > 0)
    # closed surface: area-weighted normals sum to zero
    assert np.abs(normals.sum(axis=0)).max() < 1e-12


def test_cylinder_volume_is_inscribed_prism():
    for n_r, n_t, n_z in [(1, 6, 2), (2, 12, 4), (3, 7, 1)]:
        m = generate_cylinder(0.5, 1.0, n_r, n_t, n_z)
        exact = 1.0 * n_t * 0.5**2 / 2 * np.sin(2 * np.pi / n_t)
        assert m.tet_volumes().sum() == pytest.approx(exact, rel=1e-12)
        assert m.n_vertices == (1 + n_r * n_t) * (n_z + 1)
        disk = n_t * (2 * n_r - 1)
        lateral = 2 * n_t * n_z
        assert m.boundary_faces.shape[0] == 2 * disk + lateral
        assert m.n_boundary_edges == (2 * disk + lateral) * 3 // 2
        assert m.euler_characteristic() == 2
        assert np.all(m.tet_volumes() > 0)


def test_boundary_edge_frames():
    m = generate_cylinder(0.5, 1.0, 1, 6, 2)
    for be in m.boundary_edges[::7]:
        fr = m.edge_frame(be)
        a, b = m.edges[be]
        t = m.vertices[b] - m.vertices[a]
        t /= np.linalg.norm(t)
        assert fr.t == pytest.approx(t)
        assert abs(fr.t @ fr.n_plus) < 1e-13
        assert abs(fr.t @ fr.n_minus) < 1e-13
        assert np.linalg.norm(fr.nu_plus) == pytest.approx(1.0)
        # nu = t x n points out of the plus face
        mid = 0.5 * (m.vertices[a] + m.vertices[b])
        cen = m.vertices[m.boundary_faces[fr.face_plus]].mean(axis=0)
        assert fr.nu_plus @ (cen - mid) < 0
        cen_m = m.vertices[m.boundary_faces[fr.face_minus]].mean(axis=0)
        assert fr.nu_minus @ (cen_m - mid) > 0


def test_msh_round_trip():
    m = generate_cylinder(0.5, 1.0, 1, 5, 1)
    text = write_msh(m)
    m2 = parse_msh(io.StringIO(text))
    assert np.array_equal(m.vertices, m2.vertices)
    assert np.array_equal(m.tets, m2.tets)
    assert np.array_equal(m.boundary_faces, m2.boundary_faces)


def test_msh_parser_errors():
    good = write_msh(generate_cube(1))
    with pytest.raises(MeshError):
        parse_msh(io.StringIO(good.replace("2.2 0 8", "4.1 0 8")))
    with pytest.raises(MeshError):
        parse_msh(io.StringIO(good.replace("2.2 0 8", "2.2 1 8")))  # binary
    # dangling node reference
    bad = good.replace("$Elements", "$Elements", 1)
    lines = bad.splitlines()
    for i, ln in enumerate(lines):
        parts = ln.split()
        if len(parts) >= 5 and parts[1] == "4":
            parts[-1] = "999"
            lines[i] = " ".join(parts)
            break
    with pytest.raises(MeshError):
        parse_msh(io.StringIO("\n".join(lines)))
    # no tets at all
    no_tets = []
    skip = False
    for ln in good.splitlines():
        parts = ln.split()
        if len(parts) >= 2 and parts[0].isdigit() and parts[1] == "4":
            continue
        no_tets.append(ln)
    with pytest.raises(MeshError):
        parse_msh(io.StringIO("\n".join(no_tets)))


def test_mesh_to_json_round_trips_counts():
    import json
    m = generate_cube(1)
    payload = json.loads(mesh_to_json(m))
    assert len(payload["vertices"]) == m.n_vertices
    assert len(payload["tets"]) == m.n_tets


def test_build_mesh_rejects_nonmanifold_boundary():
    verts = np.array([
        [0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, -1],
        [1, 1, 1],
    ])
    # three tets sharing the face (0,1,2)
    tets = np.array([[0, 1, 2, 3], [0, 1, 2, 4], [0, 1, 2, 5]])
    with pytest.raises(MeshError):
        build_mesh(verts, tets)


def test_build_mesh_fixes_inverted_tets():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    m = build_mesh(verts, np.array([[1, 0, 2, 3]]))  # negative orientation
    assert m.tet_volumes()[0] > 0


def test_refine_uniform_nested_family():
    m = generate_cylinder(0.5, 1.0, 1, 6, 2)
    r = refine_uniform(m)
    assert r.n_tets == 8 * m.n_tets
    assert r.boundary_faces.shape[0] == 4 * m.boundary_faces.shape[0]
    assert r.tet_volumes().sum() == pytest.approx(m.tet_volumes().sum(),
                                                  rel=1e-13)
    assert np.all(r.tet_volumes() > 0)
    assert mesh_size(r) < mesh_size(m)
    assert r.euler_characteristic() == 2
    # original vertices are preserved verbatim
    assert np.array_equal(r.vertices[:m.n_vertices], m.vertices)


def test_generate_cylinder_rejects_bad_params():
    with pytest.raises((MeshError, ValueError)):
        generate_cylinder(0.5, 1.0, 0, 6, 2)
    with pytest.raises((MeshError, ValueError)):
        generate_cylinder(0.5, 1.0, 1, 2, 2)
