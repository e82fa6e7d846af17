"""
P1 assembly on the structured mesh: lumped mass (the discrete semi-inner product),
the anisotropic stiffness for the diagonal tensor diag(d1, d2), and Dirichlet
elimination.
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Iterable, Tuple

import numpy as np
from scipy import sparse as sp

from .mesh_lib import Mesh
from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType, require

logger = logging.getLogger(__name__)

# reference gradients of the barycentric basis on the unit triangle
_REF_GRAD = np.array([[-1.0, 1.0, 0.0],
                      [-1.0, 0.0, 1.0]])


@dataclass
class SymSparseMatrix:
    matrix: sp.csr_matrix
    symmetric: bool = field(init=False)

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix, dtype=float)
        self.matrix.sum_duplicates()
        self.matrix.sort_indices()
        self.symmetric = self.asymmetry() <= 1e-14 * max(self.max_abs(), 1e-300)

    @classmethod
    def from_dense(cls, dense) -> "SymSparseMatrix":
        return cls(sp.csr_matrix(np.asarray(dense, dtype=float)))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def max_abs(self) -> float:
        return float(np.abs(self.matrix.data).max()) if self.matrix.nnz else 0.0

    def asymmetry(self) -> float:
        diff = self.matrix - self.matrix.T
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass
class LumpedMass:
    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values.sum())


@dataclass(frozen=True)
class DirichletMap:
    """Recovery map of a symmetric elimination: free node indices in a vector of length n."""
    free: np.ndarray
    n: int

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return full[self.free]

    def recover(self, reduced: np.ndarray) -> np.ndarray:
        full = np.zeros(self.n)
        full[self.free] = reduced
        return full


def _triangle_geometry(vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    For a stack of triangles (T, 3, 2) return signed areas (T,) and
    the constant P1 gradients (T, 2, 3): grads[k, axis, local_node].
    """
    e1 = vertices[:, 1, :] - vertices[:, 0, :]
    e2 = vertices[:, 2, :] - vertices[:, 0, :]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(np.abs(det) <= 1e-300):
        raise ED_SOLVER_EXCEPTION("Degenerate (zero-area) triangle", ErrorType.VALIDATION)
    # inverse transpose of the Jacobian [e1 e2]
    inv_t = np.empty((len(det), 2, 2))
    inv_t[:, 0, 0] = e2[:, 1] / det
    inv_t[:, 0, 1] = -e1[:, 1] / det
    inv_t[:, 1, 0] = -e2[:, 0] / det
    inv_t[:, 1, 1] = e1[:, 0] / det
    grads = inv_t @ _REF_GRAD
    return 0.5 * det, grads


def _check_diffusivities(d1: float, d2: float) -> None:
    require(d1 >= 0.0, f"Diffusivity d1 must be >= 0, got {d1}", key="d1")
    require(d2 >= 0.0, f"Diffusivity d2 must be >= 0, got {d2}", key="d2")


def _local_stiffness_stack(areas, grads, d1: float, d2: float) -> np.ndarray:
    gx = grads[:, 0, :]
    gy = grads[:, 1, :]
    kx = gx[:, :, None] * gx[:, None, :]
    ky = gy[:, :, None] * gy[:, None, :]
    return np.abs(areas)[:, None, None] * (d1 * kx + d2 * ky)


def local_stiffness(vertices, d1: float, d2: float) -> np.ndarray:
    _check_diffusivities(d1, d2)
    verts = np.asarray(vertices, dtype=float).reshape(1, 3, 2)
    areas, grads = _triangle_geometry(verts)
    return _local_stiffness_stack(areas, grads, d1, d2)[0]


def triangle_areas(mesh: Mesh) -> np.ndarray:
    areas, _ = _triangle_geometry(mesh.nodes[mesh.triangles])
    return areas


def assemble_lumped_mass(mesh: Mesh) -> LumpedMass:
    areas = np.abs(triangle_areas(mesh))
    values = np.bincount(mesh.triangles.ravel(),
                         weights=np.repeat(areas / 3.0, 3),
                         minlength=mesh.n_nodes)
    return LumpedMass(values=values)


def assemble_stiffness(mesh: Mesh, d1: float, d2: float) -> SymSparseMatrix:
    _check_diffusivities(d1, d2)
    areas, grads = _triangle_geometry(mesh.nodes[mesh.triangles])
    local = _local_stiffness_stack(areas, grads, d1, d2)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    matrix = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(mesh.n_nodes, mesh.n_nodes))
    stiffness = SymSparseMatrix(matrix.tocsr())
    logger.debug(f"Assembled stiffness d=({d1}, {d2}): n={stiffness.n}, nnz={stiffness.matrix.nnz}")
    return stiffness


def apply_dirichlet(
    A: SymSparseMatrix,
    rhs: np.ndarray,
    constrained: Iterable[int],
) -> Tuple[SymSparseMatrix, np.ndarray, DirichletMap]:
    """
    Symmetric elimination with zero boundary values: constrained rows and
    columns are dropped, the right-hand side is restricted to the free nodes.
    """
    n = A.n
    mask = np.ones(n, dtype=bool)
    constrained = np.asarray(list(constrained), dtype=np.int64)
    if constrained.size and (constrained.min() < 0 or constrained.max() >= n):
        raise ED_SOLVER_EXCEPTION("Constrained node index out of range", ErrorType.VALIDATION)
    mask[constrained] = False
    free = np.flatnonzero(mask)
    if free.size == 0:
        raise ED_SOLVER_EXCEPTION("Cannot constrain every node", ErrorType.VALIDATION)

    dmap = DirichletMap(free=free, n=n)
    reduced = SymSparseMatrix(A.matrix[free][:, free])
    return reduced, dmap.restrict(np.asarray(rhs, dtype=float)), dmap
