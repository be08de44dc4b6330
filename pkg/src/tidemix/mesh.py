"""Structured right-triangle meshes of the unit square.

Each grid square is split along its lower-left to upper-right diagonal,
giving 2*n^2 congruent triangles.  Edges carry a global orientation
(low vertex index -> high vertex index) so that facet degrees of freedom
get reproducible signs.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Mesh:
    """Triangulation of the unit square with oriented edge connectivity.

    Attributes
    ----------
    vertices : (V, 2) float array
    cells : (C, 3) int array
        Vertex indices, counterclockwise.
    edges : (E, 2) int array
        Vertex pairs, oriented low index -> high index.
    cell_edges : (C, 3) int array
        Global edge index of local edge j (opposite local vertex j).
    cell_edge_signs : (C, 3) int array
        +1 where the global edge orientation induces the cell's outward
        normal, -1 otherwise.
    boundary_edges : int array
        Sorted indices of edges on the boundary of the square.
    h : float
        Characteristic mesh size 1/n.
    """

    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    cell_edges: np.ndarray
    cell_edge_signs: np.ndarray
    boundary_edges: np.ndarray
    h: float
    n: int
    _edge_cell_count: np.ndarray = field(repr=False, default=None)

    @property
    def num_vertices(self):
        return self.vertices.shape[0]

    @property
    def num_cells(self):
        return self.cells.shape[0]

    @property
    def num_edges(self):
        return self.edges.shape[0]

    def cell_vertices(self, cell):
        """Coordinates of the three vertices of a cell, shape (3, 2)."""
        return self.vertices[self.cells[cell]]

    def dump(self, stream):
        """Write vertex and cell lists as plain text (debugging aid)."""
        stream.write(f"# vertices {self.num_vertices}\n")
        for x, y in self.vertices:
            stream.write(f"{x!r} {y!r}\n")
        stream.write(f"# cells {self.num_cells}\n")
        for a, b, c in self.cells:
            stream.write(f"{a} {b} {c}\n")


def build_unit_square(n):
    """Uniform right-triangle mesh of [0,1]^2 with n x n grid squares.

    Returns a :class:`Mesh` with (n+1)^2 vertices, 2*n^2 cells and
    3*n^2 + 2*n edges.  Raises ``ValueError`` for n < 1.
    """
    if n < 1:
        raise ValueError(f"mesh subdivision must be a positive integer, got {n}")
    n = int(n)

    xs = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        # vertex at (x_i, y_j); x fastest
        return j * (n + 1) + i

    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    c = 0
    for j in range(n):
        for i in range(n):
            v00 = vid(i, j)
            v10 = vid(i + 1, j)
            v01 = vid(i, j + 1)
            v11 = vid(i + 1, j + 1)
            # split along v00 -> v11, both triangles counterclockwise
            cells[c] = (v00, v10, v11)
            cells[c + 1] = (v00, v11, v01)
            c += 2

    edge_index = {}
    edges = []
    cell_edges = np.empty((len(cells), 3), dtype=np.int64)
    cell_edge_signs = np.empty((len(cells), 3), dtype=np.int64)
    for ci, tri in enumerate(cells):
        for j in range(3):
            # local edge j runs opposite local vertex j, traversed CCW
            a = tri[(j + 1) % 3]
            b = tri[(j + 2) % 3]
            key = (min(a, b), max(a, b))
            e = edge_index.get(key)
            if e is None:
                e = len(edges)
                edge_index[key] = e
                edges.append(key)
            cell_edges[ci, j] = e
            # +1 when the CCW traversal a->b agrees with low->high
            cell_edge_signs[ci, j] = 1 if a < b else -1
    edges = np.asarray(edges, dtype=np.int64)

    counts = np.zeros(len(edges), dtype=np.int64)
    np.add.at(counts, cell_edges.ravel(), 1)
    boundary = np.flatnonzero(counts == 1)

    mesh = Mesh(
        vertices=vertices,
        cells=cells,
        edges=edges,
        cell_edges=cell_edges,
        cell_edge_signs=cell_edge_signs,
        boundary_edges=boundary,
        h=1.0 / n,
        n=n,
        _edge_cell_count=counts,
    )
    _check_connectivity(mesh)
    return mesh


def _check_connectivity(mesh):
    counts = mesh._edge_cell_count
    if not np.all((counts == 1) | (counts == 2)):
        raise AssertionError("edge referenced by more than two cells")
    if mesh.num_vertices - mesh.num_edges + mesh.num_cells != 1:
        raise AssertionError("Euler relation V - E + C = 1 violated")
    # interior edges must be seen with opposite signs from their two cells
    sign_sum = np.zeros(mesh.num_edges, dtype=np.int64)
    np.add.at(sign_sum, mesh.cell_edges.ravel(), mesh.cell_edge_signs.ravel())
    interior = counts == 2
    if not np.all(sign_sum[interior] == 0):
        raise AssertionError("interior edge with non-opposing orientations")
    areas = cell_areas(mesh)
    if not np.all(areas > 0):
        raise AssertionError("cell with non-positive area (ordering not CCW)")


def cell_areas(mesh):
    """Areas of all cells, shape (C,)."""
    p = mesh.vertices[mesh.cells]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def cell_geometry(mesh, cell):
    """Area, edge lengths and outward unit normals of one cell.

    Lengths and normals follow the local edge order (edge j opposite
    vertex j).  Raises ``IndexError`` for an out-of-range cell index.
    """
    if not 0 <= cell < mesh.num_cells:
        raise IndexError(f"cell index {cell} out of range [0, {mesh.num_cells})")
    p = mesh.cell_vertices(cell)
    d1 = p[1] - p[0]
    d2 = p[2] - p[0]
    area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
    lengths = np.empty(3)
    normals = np.empty((3, 2))
    for j in range(3):
        a = p[(j + 1) % 3]
        b = p[(j + 2) % 3]
        t = b - a
        lengths[j] = np.hypot(t[0], t[1])
        # CCW traversal rotated by -90 degrees points outward
        normals[j] = np.array([t[1], -t[0]]) / lengths[j]
    return area, lengths, normals
