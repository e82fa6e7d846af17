import numpy as np
from django.test import SimpleTestCase
from scipy import sparse as sp

from core.libs.assembly_lib import (SymSparseMatrix, apply_dirichlet, assemble_lumped_mass,
                                    assemble_stiffness, local_stiffness)
from core.libs.mesh_lib import boundary_masks, build_structured_mesh
from core.libs.solver_errors import ED_SOLVER_EXCEPTION, ErrorType
from core.libs.stepper_lib import BCMode, constrained_nodes


class LumpedMassTests(SimpleTestCase):

    def test_total_is_domain_area(self):
        mass = assemble_lumped_mass(build_structured_mesh(30, 30))
        self.assertTrue(np.all(mass.values > 0))
        self.assertAlmostEqual(mass.total, 1.0, places=12)

    def test_interior_node_weight(self):
        mesh = build_structured_mesh(6, 5)
        mass = assemble_lumped_mass(mesh)
        self.assertAlmostEqual(mass.values[mesh.node_index(2, 2)], mesh.h1 * mesh.h2, places=15)
        self.assertAlmostEqual(mass.values[mesh.node_index(2, 0)], mesh.h1 * mesh.h2 / 2, places=15)


class StiffnessTests(SimpleTestCase):

    def test_local_isotropic_reference_triangle(self):
        K = local_stiffness([[0, 0], [1, 0], [0, 1]], 1.0, 1.0)
        np.testing.assert_allclose(K, [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]], atol=1e-15)

    def test_local_x1_only(self):
        K = local_stiffness([[0, 0], [1, 0], [0, 1]], 1.0, 0.0)
        np.testing.assert_allclose(K, [[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 0.0]], atol=1e-15)

    def test_degenerate_triangle(self):
        with self.assertRaises(ED_SOLVER_EXCEPTION):
            local_stiffness([[0, 0], [1, 1], [2, 2]], 1.0, 1.0)

    def test_negative_diffusivity(self):
        mesh = build_structured_mesh(3, 3)
        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            assemble_stiffness(mesh, -0.1, 0.0)
        self.assertEqual(ctx.exception.key, 'd1')

    def test_symmetric_with_constants_in_kernel(self):
        mesh = build_structured_mesh(8, 6)
        A = assemble_stiffness(mesh, 0.1, 0.02)
        self.assertTrue(A.symmetric)
        np.testing.assert_allclose(A @ np.ones(mesh.n_nodes), 0.0, atol=1e-13)

    def test_energy_of_linear_functions(self):
        mesh = build_structured_mesh(9, 7)
        d1, d2 = 0.3, 0.05
        A = assemble_stiffness(mesh, d1, d2)
        x1, x2 = mesh.nodes[:, 0], mesh.nodes[:, 1]
        self.assertAlmostEqual(x1 @ (A @ x1), d1, places=12)
        self.assertAlmostEqual(x2 @ (A @ x2), d2, places=12)
        self.assertAlmostEqual(x1 @ (A @ x2), 0.0, places=12)

    def test_degenerate_direction_has_no_x2_coupling(self):
        mesh = build_structured_mesh(5, 5)
        A = assemble_stiffness(mesh, 1.0, 0.0).matrix.tocoo()
        rows_j = A.row // mesh.nx
        cols_j = A.col // mesh.nx
        coupled = (A.row != A.col) & (np.abs(A.data) > 0)
        np.testing.assert_array_equal(rows_j[coupled], cols_j[coupled])

    def test_swap_commutes_with_equal_diffusivities(self):
        mesh = build_structured_mesh(10, 10)
        perm = mesh.swap_permutation()
        A = assemble_stiffness(mesh, 0.1, 0.1).matrix
        self.assertLessEqual(abs(A[perm][:, perm] - A).max(), 1e-15)
        # unequal diffusivities trade places under the swap
        B = assemble_stiffness(mesh, 0.1, 0.01).matrix
        swapped = assemble_stiffness(mesh, 0.01, 0.1).matrix
        self.assertLessEqual(abs(B[perm][:, perm] - swapped).max(), 1e-15)


class DirichletTests(SimpleTestCase):

    def test_reduced_system_is_spd(self):
        mesh = build_structured_mesh(6, 6)
        mass = assemble_lumped_mass(mesh).values
        A = assemble_stiffness(mesh, 0.1, 0.0)
        S = SymSparseMatrix(A.matrix + sp.diags(mass / 0.01))
        on_x1, _ = boundary_masks(mesh)
        reduced, rhs, dmap = apply_dirichlet(S, np.ones(mesh.n_nodes), np.flatnonzero(on_x1))
        self.assertTrue(reduced.symmetric)
        self.assertEqual(reduced.n, mesh.n_nodes - on_x1.sum())
        self.assertGreater(np.linalg.eigvalsh(reduced.to_dense()).min(), 0.0)
        np.testing.assert_array_equal(dmap.recover(rhs)[on_x1], 0.0)

    def test_constraining_everything_fails(self):
        S = SymSparseMatrix.from_dense(np.eye(3))
        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            apply_dirichlet(S, np.zeros(3), [0, 1, 2])
        self.assertEqual(ctx.exception.err_type, ErrorType.VALIDATION)

    def test_index_out_of_range(self):
        S = SymSparseMatrix.from_dense(np.eye(3))
        with self.assertRaises(ED_SOLVER_EXCEPTION):
            apply_dirichlet(S, np.zeros(3), [3])

    def test_reduced_sizes_on_the_base_mesh(self):
        mesh = build_structured_mesh(30, 30)
        S = SymSparseMatrix(assemble_stiffness(mesh, 0.1, 0.0).matrix + sp.identity(mesh.n_nodes))
        for bc_mode, constrained, free in ((BCMode.DIRICHLET, 116, 784), (BCMode.MIXED, 60, 840)):
            nodes = constrained_nodes(mesh, bc_mode, 1)
            self.assertEqual(len(nodes), constrained, bc_mode)
            reduced, rhs, _ = apply_dirichlet(S, np.zeros(mesh.n_nodes), nodes)
            self.assertEqual(reduced.n, free, bc_mode)
            self.assertEqual(rhs.size, free, bc_mode)
        self.assertEqual(len(constrained_nodes(mesh, BCMode.MIXED, 2)), 60)
