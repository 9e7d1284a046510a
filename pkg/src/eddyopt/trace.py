"""Control space on the boundary surface: edge basis, closed-form surface
curl/mass matrices, lifting into the volume space, and the tangential trace.

A control is one complex coefficient per boundary edge, z = sum_e z_e
phi_e, where phi_e is the lowest-order surface edge function: on each of
the two faces sharing e it equals |e| (lambda_l grad_G lambda_m -
lambda_m grad_G lambda_l) with (l, m) the edge endpoints in ascending id
order. phi_e has unit tangential component along e, vanishing tangential
component along every other edge, and its rotation phi_e x n is the
divergence-conforming function psi_e supported on the same face pair.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import MeshError


# ControlVector: complex ndarray with one entry per boundary edge, ordered
# by ascending global edge id (mesh.boundary_edges).
ControlVector = np.ndarray


def zeros_control(mesh):
    return np.zeros(mesh.n_boundary_edges, dtype=complex)


def face_lambda_gradients(verts):
    """In-plane barycentric gradients for triangles verts (..., 3, 3).

    Orientation independent: grad lambda_a is the in-plane vector
    perpendicular to the opposite edge with grad lambda_a . (x_a - x_b) = 1.
    """
    verts = np.asarray(verts, dtype=float)
    out = np.empty_like(verts)
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        opp = verts[..., c, :] - verts[..., b, :]
        d = verts[..., a, :] - verts[..., b, :]
        d = d - opp * (np.einsum("...d,...d->...", opp, d)
                       / np.einsum("...d,...d->...", opp, opp))[..., None]
        out[..., a, :] = d / np.einsum("...d,...d->...", d, d)[..., None]
    return out


def _face_point_lambdas(verts, x):
    """Barycentric coordinates of x (3,) on the triangle verts (3, 3)."""
    g = face_lambda_gradients(verts)
    lam = np.array([1.0 / 3.0 + g[a] @ (x - verts.mean(axis=0))
                    for a in range(3)])
    return lam


def _on_face(mesh, f, x, tol):
    verts = mesh.vertices[mesh.boundary_faces[f]]
    n = mesh.boundary_normals[f]
    if abs(n @ (x - verts[0])) > tol:
        return None
    lam = _face_point_lambdas(verts, x)
    if lam.min() < -tol:
        return None
    return verts, lam


def eval_psi(mesh, e, x, tol=1e-10):
    """Divergence-conforming edge function at x; zero off its face pair.

    On the plus/minus face: +/- |e| / (2 |F|) (x - v), v the vertex
    opposite e. Its normal component across e is 1 and its facewise
    surface divergence is +/- |e| / |F|.
    """
    b = mesh.boundary_edge_index(e)
    x = np.asarray(x, dtype=float)
    le = mesh.edge_lengths[e]
    for f, sign in ((mesh.edge_plus_face[b], 1.0),
                    (mesh.edge_minus_face[b], -1.0)):
        hit = _on_face(mesh, int(f), x, tol)
        if hit is None:
            continue
        verts, _ = hit
        fverts = mesh.boundary_faces[int(f)]
        opp = [v for v in fverts if v not in mesh.edges[e]]
        v = mesh.vertices[opp[0]]
        return sign * le / (2.0 * mesh.boundary_areas[int(f)]) * (x - v)
    return np.zeros(3)


def eval_phi(mesh, e, x, tol=1e-10):
    """Tangentially continuous edge function at x: phi_e = n x psi_e."""
    b = mesh.boundary_edge_index(e)
    x = np.asarray(x, dtype=float)
    for f in (mesh.edge_plus_face[b], mesh.edge_minus_face[b]):
        if _on_face(mesh, int(f), x, tol) is not None:
            return np.cross(mesh.boundary_normals[int(f)],
                            eval_psi(mesh, e, x, tol))
    return np.zeros(3)


def _face_edge_tables(mesh):
    """Per boundary face: boundary-edge index, endpoint local slots, length.

    Local slots (a, b) index into the face's vertex triple so that the
    global edge runs from slot a to slot b (ascending vertex id); asc marks
    edges whose global direction agrees with the counterclockwise cycle.
    """
    bf = mesh.boundary_faces
    cyc = bf[:, [(0, 1), (1, 2), (2, 0)]]
    srt = np.sort(cyc, axis=2)
    nv = mesh.n_vertices
    ekey = mesh.edges[:, 0].astype(np.int64) * nv + mesh.edges[:, 1]
    gids = np.searchsorted(ekey, srt[..., 0].astype(np.int64) * nv + srt[..., 1])
    bidx = np.searchsorted(mesh.boundary_edges, gids)
    asc = cyc[..., 0] < cyc[..., 1]
    loc = np.array([(0, 1), (1, 2), (2, 0)])
    a = np.where(asc, loc[None, :, 0], loc[None, :, 1])
    b = np.where(asc, loc[None, :, 1], loc[None, :, 0])
    lengths = mesh.edge_lengths[gids]
    return bidx, a, b, lengths, asc


def surface_curl_matrix(mesh):
    """Gram matrix of facewise surface curls, assembled from closed forms.

    Entry (i, j) = sum over shared faces of s_i s_j |e_i| |e_j| / |F|,
    s = +1 where the edge runs counterclockwise in the face.
    """
    bidx, a, b, lengths, asc = _face_edge_tables(mesh)
    sgn = np.where(asc, 1.0, -1.0)
    val = sgn * lengths
    contrib = np.einsum("fi,fj->fij", val, val) / mesh.boundary_areas[:, None, None]
    rows = np.repeat(bidx, 3, axis=1).ravel()
    cols = np.tile(bidx, (1, 3)).ravel()
    n = mesh.n_boundary_edges
    K = sp.coo_matrix((contrib.ravel(), (rows, cols)), (n, n)).tocsr()
    return ((K + K.T) * 0.5).tocsr()


def surface_mass_matrix(mesh):
    """Gram matrix of the phi_e basis, assembled from closed forms.

    Uses int_F lambda_a lambda_b = |F| (1 + delta_ab) / 12 and the
    in-plane barycentric gradients; no quadrature.
    """
    bidx, a, b, lengths, _ = _face_edge_tables(mesh)
    verts = mesh.vertices[mesh.boundary_faces]
    g = face_lambda_gradients(verts)
    gg = np.einsum("fad,fbd->fab", g, g)
    A = mesh.boundary_areas
    lam = (np.ones((3, 3)) + np.eye(3)) / 12.0

    contrib = np.empty((len(verts), 3, 3))
    for i in range(3):
        for j in range(3):
            ai, bi = a[:, i], b[:, i]
            aj, bj = a[:, j], b[:, j]
            f = np.arange(len(verts))
            term = (gg[f, bi, bj] * lam[ai, aj] - gg[f, bi, aj] * lam[ai, bj]
                    - gg[f, ai, bj] * lam[bi, aj] + gg[f, ai, aj] * lam[bi, bj])
            contrib[:, i, j] = lengths[:, i] * lengths[:, j] * A * term
    rows = np.repeat(bidx, 3, axis=1).ravel()
    cols = np.tile(bidx, (1, 3)).ravel()
    n = mesh.n_boundary_edges
    M = sp.coo_matrix((contrib.ravel(), (rows, cols)), (n, n)).tocsr()
    # duplicate-summation order differs between (i, j) and (j, i); averaging
    # with the transpose restores bitwise symmetry at unchanged values
    return ((M + M.T) * 0.5).tocsr()


@dataclass(frozen=True)
class SurfaceOperators:
    """Bundled surface matrices with per-face reference data.

    K is the surface-curl Gram matrix, M the mass matrix; B_F caches the
    2x2 metric inverse (B^T B)^(-1) of each boundary face built from its
    squared edge lengths, and areas the face areas.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    B_F: np.ndarray
    areas: np.ndarray

    @classmethod
    def build(cls, mesh):
        verts = mesh.vertices[mesh.boundary_faces]
        e1 = verts[:, 1] - verts[:, 0]
        e2 = verts[:, 2] - verts[:, 0]
        l1 = np.einsum("fd,fd->f", e1, e1)
        l2 = np.einsum("fd,fd->f", e2, e2)
        dot = np.einsum("fd,fd->f", e1, e2)
        A = mesh.boundary_areas
        B = np.empty((len(verts), 2, 2))
        B[:, 0, 0] = l2
        B[:, 1, 1] = l1
        B[:, 0, 1] = B[:, 1, 0] = -dot
        B /= (4.0 * A * A)[:, None, None]
        return cls(K=surface_curl_matrix(mesh), M=surface_mass_matrix(mesh),
                   B_F=B, areas=A.copy())


def eval_control_on_faces(mesh, z, face_idx, ref_pts):
    """Evaluate z = sum z_e phi_e at reference points of boundary faces.

    ref_pts (m, 2) are reference-triangle coordinates; returns physical
    points (F, m, 3) and values (F, m, 3).
    """
    bidx, a, b, lengths, _ = _face_edge_tables(mesh)
    face_idx = np.asarray(face_idx, dtype=np.int64)
    verts = mesh.vertices[mesh.boundary_faces[face_idx]]
    g = face_lambda_gradients(verts)
    p0 = verts[:, 0]
    pts = (p0[:, None, :]
           + ref_pts[None, :, 0, None] * (verts[:, 1] - p0)[:, None, :]
           + ref_pts[None, :, 1, None] * (verts[:, 2] - p0)[:, None, :])
    lam = np.stack([1.0 - ref_pts[:, 0] - ref_pts[:, 1],
                    ref_pts[:, 0], ref_pts[:, 1]], axis=1)
    vals = np.zeros(pts.shape, dtype=complex)
    f = np.arange(len(face_idx))
    for i in range(3):
        ai = a[face_idx, i]
        bi = b[face_idx, i]
        co = z[bidx[face_idx, i]] * lengths[face_idx, i]
        # the edge function on this face: lambda_a grad lambda_b - lambda_b grad lambda_a
        w = (lam[:, ai].T[:, :, None] * g[f, bi][:, None, :]
             - lam[:, bi].T[:, :, None] * g[f, ai][:, None, :])
        vals += co[:, None, None] * w
    return pts, vals


def lift(space, z):
    """Extend a control into the volume space by matching boundary moments.

    Boundary-edge mean moments take the control coefficients, the odd edge
    moments of z vanish, and for k = 1 the boundary-face moments of the
    piecewise-linear surface field are filled in closed form; every
    interior moment is zero, so the tangential trace of the result is
    exactly z.
    """
    mesh = space.mesh
    z = np.asarray(z, dtype=complex)
    if z.shape != (mesh.n_boundary_edges,):
        raise MeshError("control vector does not match the boundary")
    out = np.zeros(space.n_dofs, dtype=complex)
    k = space.k
    out[(k + 1) * mesh.boundary_edges] = z
    if k == 0:
        return out

    bidx, a, b, lengths, _ = _face_edge_tables(mesh)
    bverts = mesh.vertices[mesh.boundary_faces]
    g = face_lambda_gradients(bverts)
    gids = mesh.boundary_face_ids
    sorted_verts = mesh.vertices[mesh.faces[gids]]
    # face moment directions of the volume space use the ascending-id triple
    q = np.stack([sorted_verts[:, 1] - sorted_verts[:, 0],
                  sorted_verts[:, 2] - sorted_verts[:, 0]], axis=1)
    f = np.arange(len(gids))
    for d in range(2):
        mom = np.zeros(len(gids), dtype=complex)
        for i in range(3):
            grad_diff = g[f, b[:, i]] - g[f, a[:, i]]
            mom += (z[bidx[:, i]] * lengths[:, i] / 3.0
                    * np.einsum("fd,fd->f", q[:, d], grad_diff))
        out[space.n_edge_dofs + 2 * gids + d] = mom
    return out


def tangential_trace(space, u):
    """Mean tangential moments on boundary edges (the j = 0 trace)."""
    mesh = space.mesh
    return np.asarray(u, dtype=complex)[(space.k + 1) * mesh.boundary_edges]
