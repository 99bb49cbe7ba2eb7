"""Conforming triangulations: structured unit-square meshes, edge tables, text I/O.

The mesh file format is plain text. The first data line holds the vertex and
triangle counts ``V T``, followed by ``V`` lines ``x y`` (full-precision
decimal) and ``T`` lines ``i j k`` of 0-based counterclockwise vertex indices.
Lines may carry ``#`` comments.
"""

from __future__ import annotations

import numpy as np

from .errors import MeshParseError, NonConformingMeshError


def build_edge_table(vertices, triangles):
    """Build the undirected edge table of a conforming triangulation.

    Parameters
    ----------
        vertices : (V, 2) array
        triangles : (T, 3) array of vertex indices

    Returns
    -------
        edges : (E, 2) array
            Sorted endpoint pairs, ordered lexicographically.
        edge_tris : (E, 2) array
            Adjacent triangle indices in ascending order; second entry is -1
            for boundary edges.
        tri_edges : (T, 3) array
            Global edge index opposite each local vertex.
    """
    triangles = np.asarray(triangles, dtype=np.int64)
    n_tri = triangles.shape[0]
    # local edge i sits opposite local vertex i
    pairs = triangles[:, [[1, 2], [2, 0], [0, 1]]].reshape(-1, 2)
    pairs = np.sort(pairs, axis=1)
    edges, inverse = np.unique(pairs, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse, minlength=len(edges))
    if counts.max(initial=0) > 2:
        bad = int(np.argmax(counts))
        raise NonConformingMeshError(
            f"edge {tuple(edges[bad])} is shared by {counts[bad]} triangles"
        )
    order = np.argsort(inverse, kind="stable")
    tri_of = order // 3
    starts = np.concatenate([[0], np.cumsum(counts)])
    edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
    edge_tris[:, 0] = tri_of[starts[:-1]]
    interior = counts == 2
    edge_tris[interior, 1] = tri_of[starts[:-1][interior] + 1]
    tri_edges = inverse.reshape(n_tri, 3)
    return edges, edge_tris, tri_edges


class Mesh:
    """Immutable 2D triangulation with a precomputed edge table.

    Triangles are stored counterclockwise. Edges appear once per undirected
    vertex pair, ordered lexicographically by sorted endpoints; an edge is a
    boundary edge iff it has exactly one adjacent triangle. All arrays are
    write-protected after construction, so a mesh may be shared freely across
    workers.
    """

    def __init__(self, vertices, triangles):
        vertices = np.array(vertices, dtype=np.float64)
        triangles = np.array(triangles, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise ValueError(f"vertices must be (V, 2), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise ValueError(f"triangles must be (T, 3), got {triangles.shape}")
        if not np.isfinite(vertices).all():
            raise ValueError("vertex coordinates must be finite")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError("triangle vertex index out of range")
        for k in range(3):
            if (triangles[:, k] == triangles[:, (k + 1) % 3]).any():
                raise ValueError("triangle with repeated vertex index")

        self.vertices = vertices
        self.triangles = triangles
        areas = _signed_areas(vertices, triangles)
        if triangles.size and areas.min() <= 0.0:
            bad = int(np.argmin(areas))
            raise ValueError(
                f"triangle {bad} is not counterclockwise (signed area {areas[bad]:.3e})"
            )
        self.areas = areas
        self.edges, self.edge_tris, self.tri_edges = build_edge_table(vertices, triangles)
        self.boundary_edge_mask = self.edge_tris[:, 1] < 0
        self.edge_midpoints = 0.5 * (vertices[self.edges[:, 0]] + vertices[self.edges[:, 1]])
        self.centroids = vertices[triangles].mean(axis=1)
        lengths = np.linalg.norm(
            vertices[self.edges[:, 1]] - vertices[self.edges[:, 0]], axis=1
        )
        self.edge_lengths = lengths
        self.h = float(lengths.max()) if len(lengths) else 0.0
        for arr in (
            self.vertices,
            self.triangles,
            self.areas,
            self.edges,
            self.edge_tris,
            self.tri_edges,
            self.boundary_edge_mask,
            self.edge_midpoints,
            self.centroids,
            self.edge_lengths,
        ):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def boundary_edges(self):
        return np.nonzero(self.boundary_edge_mask)[0]

    @property
    def boundary_vertices(self):
        """Sorted indices of vertices lying on boundary edges."""
        return np.unique(self.edges[self.boundary_edge_mask])

    @property
    def total_area(self):
        return float(self.areas.sum())

    def __repr__(self):
        return (
            f"Mesh(V={self.n_vertices}, T={self.n_triangles}, "
            f"E={self.n_edges}, h={self.h:.4g})"
        )


def _signed_areas(vertices, triangles):
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def build_structured_mesh(n):
    """Triangulate the unit square into ``2 n^2`` congruent triangles.

    Each of the n-by-n cells is cut by its lower-left to upper-right
    diagonal. The resulting mesh has (n+1)^2 vertices and h = sqrt(2)/n.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    side = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(side, side)
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    triangles = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10 = v00 + 1
            v01 = v00 + (n + 1)
            v11 = v01 + 1
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))
    return Mesh(vertices, np.asarray(triangles, dtype=np.int64))


def write_mesh(mesh, path):
    """Write a mesh in the text format; coordinates round-trip bitwise."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}\n"]
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r}\n")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}\n")
    with open(path, "w", encoding="ascii") as fh:
        fh.writelines(lines)


def read_mesh(path):
    """Read a mesh from the text format.

    Raises MeshParseError (with the 1-based line number) on malformed
    content; I/O failures propagate as OSError.
    """
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.readlines()

    data = []  # (line_number, tokens)
    for lineno, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            data.append((lineno, body.split()))

    if not data:
        raise MeshParseError("empty mesh file", line=len(raw) or 1)

    lineno, header = data[0]
    if len(header) != 2:
        raise MeshParseError("header must be 'V T'", line=lineno)
    try:
        n_vert, n_tri = int(header[0]), int(header[1])
    except ValueError:
        raise MeshParseError("header counts must be integers", line=lineno) from None
    if n_vert < 0 or n_tri < 0:
        raise MeshParseError("counts must be nonnegative", line=lineno)
    if len(data) != 1 + n_vert + n_tri:
        raise MeshParseError(
            f"expected {1 + n_vert + n_tri} data lines, found {len(data)}",
            line=data[-1][0],
        )

    vertices = np.empty((n_vert, 2), dtype=np.float64)
    for row, (lineno, tokens) in enumerate(data[1 : 1 + n_vert]):
        if len(tokens) != 2:
            raise MeshParseError("vertex line must be 'x y'", line=lineno)
        try:
            vertices[row] = [float(tokens[0]), float(tokens[1])]
        except ValueError:
            raise MeshParseError("vertex coordinates must be numbers", line=lineno) from None

    triangles = np.empty((n_tri, 3), dtype=np.int64)
    for row, (lineno, tokens) in enumerate(data[1 + n_vert :]):
        if len(tokens) != 3:
            raise MeshParseError("triangle line must be 'i j k'", line=lineno)
        try:
            triangles[row] = [int(t) for t in tokens]
        except ValueError:
            raise MeshParseError("triangle indices must be integers", line=lineno) from None
        if triangles[row].min() < 0 or triangles[row].max() >= n_vert:
            raise MeshParseError(
                f"triangle vertex index out of range [0, {n_vert})", line=lineno
            )
    return Mesh(vertices, triangles)
