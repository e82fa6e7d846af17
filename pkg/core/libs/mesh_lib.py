"""
Structured triangulation of the unit square (0,1) x (0,1).

Nodes are stored row-major (index = j*nx + i, x1 = i*h1, x2 = j*h2). Every grid
cell is split along the (i,j) -> (i+1,j+1) diagonal (Friedrichs-Keller), which
keeps the triangulation invariant under the swap (x1, x2) -> (x2, x1) when nx == ny.
"""

from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType, require

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray       # (N, 2) coordinates
    triangles: np.ndarray   # (T, 3) node indices, counterclockwise
    nx: int
    ny: int

    @property
    def h1(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def h2(self) -> float:
        return 1.0 / (self.ny - 1)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def node_index(self, i: int, j: int) -> int:
        return j * self.nx + i

    def grid(self, values: np.ndarray) -> np.ndarray:
        """Nodal vector as a (ny, nx) array indexed [j, i]."""
        return np.asarray(values).reshape(self.ny, self.nx)

    def swap_permutation(self) -> np.ndarray:
        """perm[a] = index of the node at the swapped position of node a (nx == ny only)."""
        require(self.nx == self.ny, "swap permutation needs nx == ny", key="nx")
        jj, ii = np.divmod(np.arange(self.n_nodes), self.nx)
        return ii * self.nx + jj


@dataclass(frozen=True)
class BoundaryClass:
    on_x1_boundary: bool
    on_x2_boundary: bool


def build_structured_mesh(nx: int, ny: int) -> Mesh:
    if int(nx) != nx or int(ny) != ny:
        raise ED_SOLVER_EXCEPTION(f"Mesh sizes must be integers, got ({nx}, {ny})", ErrorType.VALIDATION, key="nx")
    require(nx >= 2, f"nx must be >= 2, got {nx}", key="nx")
    require(ny >= 2, f"ny must be >= 2, got {ny}", key="ny")
    nx, ny = int(nx), int(ny)

    # linspace hits 0 and 1 exactly, boundary classification relies on it
    x1 = np.linspace(0.0, 1.0, nx)
    x2 = np.linspace(0.0, 1.0, ny)
    X1, X2 = np.meshgrid(x1, x2)
    nodes = np.column_stack([X1.ravel(), X2.ravel()])

    ci, cj = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1))
    a = (cj * nx + ci).ravel()
    b = a + 1
    c = a + nx + 1
    d = a + nx
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    triangles = np.empty((2 * len(a), 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    nodes.setflags(write=False)
    triangles.setflags(write=False)
    logger.debug(f"Built {nx}x{ny} mesh: {nx * ny} nodes, {len(triangles)} triangles")
    return Mesh(nodes=nodes, triangles=triangles, nx=nx, ny=ny)


def classify_node(mesh: Mesh, node: int) -> BoundaryClass:
    if not 0 <= node < mesh.n_nodes:
        raise ED_SOLVER_EXCEPTION(
            f"Node index {node} out of range [0, {mesh.n_nodes})", ErrorType.VALIDATION)
    x1, x2 = mesh.nodes[node]
    return BoundaryClass(on_x1_boundary=bool(x1 == 0.0 or x1 == 1.0),
                         on_x2_boundary=bool(x2 == 0.0 or x2 == 1.0))


def boundary_masks(mesh: Mesh) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized classify_node: (on_x1_boundary, on_x2_boundary) boolean masks."""
    x1 = mesh.nodes[:, 0]
    x2 = mesh.nodes[:, 1]
    return (x1 == 0.0) | (x1 == 1.0), (x2 == 0.0) | (x2 == 1.0)
