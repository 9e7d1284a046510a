"""Tetrahedral meshes with oriented boundary surface.

A `Mesh` carries global edge/face numbering, tet incidence, and the closed
boundary surface: boundary faces stored counterclockwise as seen from
outside, and for every boundary edge its two adjacent boundary faces
(plus/minus, by the orientation of the edge inside the face). Global edges
always run from the lower to the higher vertex id, which makes every
orientation-dependent quantity a pure function of the vertex numbering.

Supported I/O: MSH v2.2 ASCII (read and write) and a JSON debug dump.
Built-in generators: unit cube (Kuhn subdivision) and a structured
cylinder (extruded triangulated disk).
"""

from dataclasses import dataclass, field

import json
import numpy as np

# local edge k of a tet connects LOCAL_EDGES[k]; local face k is opposite vertex k
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh:
    """Immutable tetrahedral mesh with boundary structure.

    vertices            (V, 3) coordinates
    tets                (T, 4) vertex ids, positive signed volume
    edges               (E, 2) vertex id pairs, lo < hi, lexicographically sorted
    faces               (F, 3) vertex id triples, ascending
    tet_edges           (T, 6) global edge ids, local order LOCAL_EDGES
    tet_faces           (T, 4) global face ids, local order LOCAL_FACES
    boundary_faces      (Fb, 3) vertex ids, counterclockwise seen from outside
    boundary_face_ids   (Fb,) global face id of each boundary face
    boundary_edges      (Eb,) global edge ids on the boundary, ascending
    edge_plus_face      (Eb,) boundary-face index where the edge runs counterclockwise
    edge_minus_face     (Eb,) boundary-face index where it runs clockwise
    boundary_normals    (Fb, 3) outward unit normals
    boundary_areas      (Fb,) face areas
    edge_lengths        (E,) lengths of all edges
    orientation_fixes   number of tets that had to be reordered on construction
    """

    vertices: np.ndarray
    tets: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    tet_edges: np.ndarray
    tet_faces: np.ndarray
    boundary_faces: np.ndarray
    boundary_face_ids: np.ndarray
    boundary_edges: np.ndarray
    edge_plus_face: np.ndarray
    edge_minus_face: np.ndarray
    boundary_normals: np.ndarray
    boundary_areas: np.ndarray
    edge_lengths: np.ndarray
    orientation_fixes: int = 0

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_tets(self):
        return self.tets.shape[0]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def n_boundary_edges(self):
        return self.boundary_edges.shape[0]

    def tet_volumes(self):
        v = self.vertices[self.tets]
        return np.einsum(
            "ti,ti->t", v[:, 1] - v[:, 0],
            np.cross(v[:, 2] - v[:, 0], v[:, 3] - v[:, 0])) / 6.0

    def boundary_vertices(self):
        return np.unique(self.boundary_faces)

    def euler_characteristic(self):
        """V - E + F of the boundary surface (2 for a sphere-like boundary)."""
        return (self.boundary_vertices().size - self.boundary_edges.size
                + self.boundary_faces.shape[0])

    def boundary_edge_index(self, e):
        """Position of global edge id e in the boundary-edge ordering."""
        i = int(np.searchsorted(self.boundary_edges, e))
        if i >= self.boundary_edges.size or self.boundary_edges[i] != e:
            raise MeshError(f"edge {e} is not a boundary edge")
        return i

    def edge_frame(self, e):
        return boundary_edge_frame(self, e)


@dataclass(frozen=True)
class BoundaryEdgeFrame:
    """Orthonormal data attached to one boundary edge.

    t points from the lower to the higher vertex id. On each adjacent face,
    nu = t x n lies in the face plane; it points out of the plus face and
    into the minus face.
    """

    edge: int
    t: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    nu_plus: np.ndarray
    nu_minus: np.ndarray
    face_plus: int
    face_minus: int


def boundary_edge_frame(mesh, e):
    b = mesh.boundary_edge_index(e)
    lo, hi = mesh.edges[e]
    t = mesh.vertices[hi] - mesh.vertices[lo]
    t = t / np.linalg.norm(t)
    fp = int(mesh.edge_plus_face[b])
    fm = int(mesh.edge_minus_face[b])
    np_, nm = mesh.boundary_normals[fp], mesh.boundary_normals[fm]
    return BoundaryEdgeFrame(
        edge=int(e), t=t, n_plus=np_, n_minus=nm,
        nu_plus=np.cross(t, np_), nu_minus=np.cross(t, nm),
        face_plus=fp, face_minus=fm)


def _signed_volumes(vertices, tets):
    v = vertices[tets]
    return np.einsum(
        "ti,ti->t", v[:, 1] - v[:, 0],
        np.cross(v[:, 2] - v[:, 0], v[:, 3] - v[:, 0])) / 6.0


def _edge_key(pairs, n):
    return pairs[..., 0].astype(np.int64) * n + pairs[..., 1]


def build_mesh(vertices, tets):
    """Construct a full Mesh from vertex coordinates and tet connectivity."""
    vertices = np.ascontiguousarray(vertices, dtype=float)
    tets = np.ascontiguousarray(tets, dtype=np.int64)
    if tets.size == 0:
        raise MeshError("empty mesh")
    if tets.min() < 0 or tets.max() >= len(vertices):
        raise MeshError("tet references a vertex id out of range")

    vol = _signed_volumes(vertices, tets)
    if np.any(vol == 0.0):
        raise MeshError("degenerate tet with zero volume")
    flip = vol < 0.0
    fixes = int(np.count_nonzero(flip))
    if fixes:
        tets = tets.copy()
        tets[flip, 2], tets[flip, 3] = tets[flip, 3], tets[flip, 2].copy()

    nv = len(vertices)

    pairs = np.sort(tets[:, LOCAL_EDGES], axis=2).reshape(-1, 2)
    edges, edge_inv = np.unique(_edge_key(pairs, nv), return_inverse=True)
    edges = np.stack([edges // nv, edges % nv], axis=1)
    tet_edges = edge_inv.reshape(-1, 6)

    tris = np.sort(tets[:, LOCAL_FACES], axis=2).reshape(-1, 3)
    fkey = (tris[:, 0] * nv + tris[:, 1]) * nv + tris[:, 2]
    fkeys, face_inv, fcount = np.unique(
        fkey, return_inverse=True, return_counts=True)
    faces = np.stack(
        [fkeys // (nv * nv), (fkeys // nv) % nv, fkeys % nv], axis=1)
    tet_faces = face_inv.reshape(-1, 4)

    # boundary = faces owned by exactly one tet
    bnd_ids = np.flatnonzero(fcount == 1)
    owner = np.empty(len(faces), dtype=np.int64)
    owner[face_inv] = np.arange(face_inv.size)
    own = owner[bnd_ids]
    own_tet, own_loc = own // 4, own % 4

    bfaces = faces[bnd_ids].copy()
    opp = tets[own_tet, own_loc]
    a, b, c = (vertices[bfaces[:, k]] for k in range(3))
    nrm = np.cross(b - a, c - a)
    inward = np.einsum("fi,fi->f", nrm, vertices[opp] - a) > 0.0
    bfaces[inward, 1], bfaces[inward, 2] = \
        bfaces[inward, 2], bfaces[inward, 1].copy()

    a, b, c = (vertices[bfaces[:, k]] for k in range(3))
    nrm = np.cross(b - a, c - a)
    areas2 = np.linalg.norm(nrm, axis=1)
    if np.any(areas2 <= 0.0):
        raise MeshError("degenerate boundary face")
    normals = nrm / areas2[:, None]
    areas = 0.5 * areas2

    # plus/minus faces per boundary edge from the counterclockwise cycles
    ekeys = _edge_key(edges, nv)
    cyc = bfaces[:, [(0, 1), (1, 2), (2, 0)]].reshape(-1, 2)
    ascending = cyc[:, 0] < cyc[:, 1]
    srt = np.sort(cyc, axis=1)
    eids = np.searchsorted(ekeys, _edge_key(srt, nv))
    bedges, slot = np.unique(eids, return_inverse=True)

    n_be = bedges.size
    plus = np.full(n_be, -1, dtype=np.int64)
    minus = np.full(n_be, -1, dtype=np.int64)
    fidx = np.repeat(np.arange(len(bfaces)), 3)
    pc = np.zeros(n_be, dtype=np.int64)
    mc = np.zeros(n_be, dtype=np.int64)
    np.add.at(pc, slot[ascending], 1)
    np.add.at(mc, slot[~ascending], 1)
    if np.any(pc != 1) or np.any(mc != 1):
        raise MeshError("non-manifold or non-orientable boundary edge")
    plus[slot[ascending]] = fidx[ascending]
    minus[slot[~ascending]] = fidx[~ascending]

    return Mesh(
        vertices=vertices, tets=tets, edges=edges, faces=faces,
        tet_edges=tet_edges, tet_faces=tet_faces,
        boundary_faces=bfaces, boundary_face_ids=bnd_ids,
        boundary_edges=bedges, edge_plus_face=plus, edge_minus_face=minus,
        boundary_normals=normals, boundary_areas=areas,
        edge_lengths=np.linalg.norm(
            vertices[edges[:, 1]] - vertices[edges[:, 0]], axis=1),
        orientation_fixes=fixes)


# ---------------------------------------------------------------------------
# MSH v2.2 ASCII I/O


def parse_msh(src):
    """Parse an MSH v2.2 ASCII stream (str, bytes, or file-like) into a Mesh.

    Tetrahedra are element type 4. Triangles (type 2), if present, are
    cross-checked against the derived boundary; other element types are
    ignored. Tets with negative signed volume are reordered and counted.
    """
    if hasattr(src, "read"):
        src = src.read()
    if isinstance(src, bytes):
        src = src.decode("utf-8")
    lines = [ln.strip() for ln in src.splitlines()]
    lines = [ln for ln in lines if ln]

    sections = {}
    i = 0
    while i < len(lines):
        if lines[i].startswith("$") and not lines[i].startswith("$End"):
            name = lines[i][1:]
            j = i + 1
            while j < len(lines) and lines[j] != f"$End{name}":
                j += 1
            if j == len(lines):
                raise MeshError(f"unterminated section ${name}")
            sections[name] = lines[i + 1:j]
            i = j + 1
        else:
            i += 1

    if "MeshFormat" not in sections:
        raise MeshError("missing $MeshFormat header")
    fmt = sections["MeshFormat"][0].split()
    if fmt[0] != "2.2":
        raise MeshError(f"unsupported MSH version {fmt[0]}, need 2.2")
    if fmt[1] != "0":
        raise MeshError("binary MSH files are not supported")

    if "Nodes" not in sections or "Elements" not in sections:
        raise MeshError("missing $Nodes or $Elements section")

    node_lines = sections["Nodes"]
    n_nodes = int(node_lines[0])
    if len(node_lines) - 1 != n_nodes:
        raise MeshError("node count does not match $Nodes body")
    ids = np.empty(n_nodes, dtype=np.int64)
    xyz = np.empty((n_nodes, 3), dtype=float)
    for k, ln in enumerate(node_lines[1:]):
        parts = ln.split()
        ids[k] = int(parts[0])
        xyz[k] = [float(parts[1]), float(parts[2]), float(parts[3])]
    id2idx = {int(v): k for k, v in enumerate(ids)}

    elem_lines = sections["Elements"]
    n_elem = int(elem_lines[0])
    if len(elem_lines) - 1 != n_elem:
        raise MeshError("element count does not match $Elements body")
    tets, tris = [], []
    for ln in elem_lines[1:]:
        parts = [int(p) for p in ln.split()]
        etype, ntags = parts[1], parts[2]
        nodes = parts[3 + ntags:]
        try:
            nodes = [id2idx[v] for v in nodes]
        except KeyError as err:
            raise MeshError(f"element references unknown node {err}") from None
        if etype == 4:
            if len(nodes) != 4:
                raise MeshError("tetrahedron element without 4 nodes")
            tets.append(nodes)
        elif etype == 2:
            tris.append(nodes)

    if not tets:
        raise MeshError("file contains no tetrahedra")
    mesh = build_mesh(xyz, np.array(tets, dtype=np.int64))

    if tris:
        bset = {tuple(sorted(f)) for f in mesh.boundary_faces.tolist()}
        for f in tris:
            if tuple(sorted(f)) not in bset:
                raise MeshError(
                    "surface triangle in file is not a boundary face")
    return mesh


def write_msh(mesh, path=None):
    """Serialize a Mesh as MSH v2.2 ASCII; returns the text (and writes path)."""
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes",
           str(mesh.n_vertices)]
    for k, (x, y, z) in enumerate(mesh.vertices, start=1):
        out.append(f"{k} {float(x)!r} {float(y)!r} {float(z)!r}")
    out.append("$EndNodes")
    out.append("$Elements")
    out.append(str(mesh.n_tets + len(mesh.boundary_faces)))
    eid = 1
    for f in mesh.boundary_faces:
        out.append(f"{eid} 2 2 0 1 {f[0] + 1} {f[1] + 1} {f[2] + 1}")
        eid += 1
    for t in mesh.tets:
        out.append(
            f"{eid} 4 2 0 1 {t[0] + 1} {t[1] + 1} {t[2] + 1} {t[3] + 1}")
        eid += 1
    out.append("$EndElements")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def mesh_to_json(mesh, path=None):
    """Debug dump: vertices, tets, boundary ids as JSON text."""
    doc = {
        "vertices": mesh.vertices.tolist(),
        "tets": mesh.tets.tolist(),
        "boundary_faces": mesh.boundary_faces.tolist(),
        "boundary_edges": mesh.boundary_edges.tolist(),
        "orientation_fixes": mesh.orientation_fixes,
    }
    text = json.dumps(doc, indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# Generators


def generate_cube(n):
    """Unit cube [0,1]^3 split into 6 n^3 tets (Kuhn subdivision)."""
    n = int(n)
    if n < 1:
        raise MeshError("need at least one subdivision per axis")
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def vid(i, j, k):
        return (i * (n + 1) + j) * (n + 1) + k

    paths = ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
    tets = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                base = np.array([i, j, k])
                for p in paths:
                    corners = [base.copy()]
                    for ax in p:
                        nxt = corners[-1].copy()
                        nxt[ax] += 1
                        corners.append(nxt)
                    tets.append([vid(*c) for c in corners])
    return build_mesh(verts, np.array(tets, dtype=np.int64))


def _split_prism(bot, top, volumes=None):
    # Dompierre min-id rule: rotate the prism so the smallest global id sits
    # at position 0, then cut the remaining quad face along the diagonal
    # through the smaller of its candidate ids.
    prism = (bot[0], bot[1], bot[2], top[0], top[1], top[2])
    relabelings = (
        (0, 1, 2, 3, 4, 5),
        (1, 2, 0, 4, 5, 3),
        (2, 0, 1, 5, 3, 4),
        (3, 5, 4, 0, 2, 1),
        (4, 3, 5, 1, 0, 2),
        (5, 4, 3, 2, 1, 0),
    )
    best = min(relabelings, key=lambda r: prism[r[0]])
    v = [prism[i] for i in best]
    if min(v[1], v[5]) < min(v[2], v[4]):
        tets = [(v[0], v[1], v[2], v[5]),
                (v[0], v[1], v[5], v[4]),
                (v[0], v[4], v[5], v[3])]
    else:
        tets = [(v[0], v[1], v[2], v[4]),
                (v[0], v[4], v[2], v[5]),
                (v[0], v[4], v[5], v[3])]
    return tets


def generate_cylinder(R, L, n_r, n_theta, n_z):
    """Structured mesh of the cylinder {x^2 + y^2 < R^2, 0 < z < L}.

    A triangulated disk (center fan plus n_r - 1 annuli, n_theta sectors)
    is extruded into n_z layers of prisms, each split into 3 tets with a
    vertex-id rule that keeps neighboring prisms face-compatible. The rim
    vertices lie exactly on radius R, so the mesh is the inscribed
    polyhedron: its volume is L * (n_theta R^2 / 2) sin(2 pi / n_theta).
    """
    if not (R > 0 and L > 0):
        raise MeshError("need positive radius and height")
    n_r, n_theta, n_z = int(n_r), int(n_theta), int(n_z)
    if n_r < 1 or n_theta < 3 or n_z < 1:
        raise MeshError("need n_r >= 1, n_theta >= 3, n_z >= 1")

    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    disk = [(0.0, 0.0)]
    ring_start = [None]  # ring i >= 1 starts at ring_start[i]
    for i in range(1, n_r + 1):
        r = R * (i / n_r)
        ring_start.append(len(disk))
        disk.extend(zip(r * np.cos(theta), r * np.sin(theta)))
    disk = np.array(disk)
    n_disk = len(disk)

    tris = []
    for j in range(n_theta):
        jn = (j + 1) % n_theta
        tris.append((0, ring_start[1] + j, ring_start[1] + jn))
    for i in range(1, n_r):
        inn, out = ring_start[i], ring_start[i + 1]
        for j in range(n_theta):
            jn = (j + 1) % n_theta
            tris.append((inn + j, out + j, out + jn))
            tris.append((inn + j, out + jn, inn + jn))

    zs = L * np.arange(n_z + 1) / n_z
    verts = np.concatenate(
        [np.column_stack([disk, np.full(n_disk, z)]) for z in zs])

    tets = []
    tri_area = []
    for (a, b, c) in tris:
        u, v = disk[b] - disk[a], disk[c] - disk[a]
        tri_area.append(0.5 * abs(u[0] * v[1] - u[1] * v[0]))
    dz = L / n_z
    for layer in range(n_z):
        off0, off1 = layer * n_disk, (layer + 1) * n_disk
        for (a, b, c), area in zip(tris, tri_area):
            bot = (off0 + a, off0 + b, off0 + c)
            top = (off1 + a, off1 + b, off1 + c)
            cut = _split_prism(bot, top)
            vol = sum(
                abs(_signed_volumes(verts, np.array([t], dtype=np.int64))[0])
                for t in cut)
            if not np.isclose(vol, area * dz, rtol=1e-10, atol=0.0):
                raise MeshError("prism split does not tile the prism")
            tets.extend(cut)
    return build_mesh(verts, np.array(tets, dtype=np.int64))


def refine_uniform(mesh):
    """Red refinement: split every tet into eight via edge midpoints.

    The four corner tets keep their corners; the inner octahedron is cut
    along the diagonal between the midpoints of local edges (0,2) and (1,3).
    The domain (a fixed polyhedron) is preserved exactly and every edge
    length halves, so repeated calls produce a nested family.
    """
    nv = mesh.n_vertices
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    verts = np.vstack([mesh.vertices, mids])

    # local edge order: (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
    v = mesh.tets
    m01, m02, m03, m12, m13, m23 = (nv + mesh.tet_edges[:, i] for i in range(6))
    v0, v1, v2, v3 = v[:, 0], v[:, 1], v[:, 2], v[:, 3]
    children = np.stack([
        np.column_stack([v0, m01, m02, m03]),
        np.column_stack([m01, v1, m12, m13]),
        np.column_stack([m02, m12, v2, m23]),
        np.column_stack([m03, m13, m23, v3]),
        np.column_stack([m01, m02, m03, m13]),
        np.column_stack([m01, m02, m12, m13]),
        np.column_stack([m02, m03, m13, m23]),
        np.column_stack([m02, m12, m13, m23]),
    ], axis=1).reshape(-1, 4)
    return build_mesh(verts, children)


def mesh_size(mesh):
    """Largest tet diameter (the longest edge of any tet)."""
    if mesh.n_tets == 0:
        raise MeshError("empty mesh")
    return float(mesh.edge_lengths[mesh.tet_edges].max())
