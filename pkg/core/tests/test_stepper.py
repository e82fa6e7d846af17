import math

import numpy as np
from django.test import SimpleTestCase

from core.libs.experiment_processor import mirror_defect
from core.libs.mesh_lib import build_structured_mesh
from core.libs.model_lib import ModelParams, monotone_shift, reaction_field
from core.libs.solver_errors import ED_SOLVER_EXCEPTION, ErrorType
from core.libs.stepper_lib import (BCMode, FieldPair, RunMode, SolverConfig, assemble_systems, constrained_nodes,
                                   l2_norm, project_onto_constraints, relative_change, run, time_step)


def horizon_config(**kwargs) -> SolverConfig:
    kwargs.setdefault('run_mode', RunMode.HORIZON)
    return SolverConfig(**kwargs)


def start(mesh, systems, u10=0.5, u20=0.5) -> FieldPair:
    return project_onto_constraints(FieldPair.constant(mesh.n_nodes, u10, u20), systems)


def no_reaction(t, u1, u2):
    return np.zeros_like(u1), np.zeros_like(u2)


def bumpy(mesh, systems) -> FieldPair:
    x1, x2 = mesh.nodes[:, 0], mesh.nodes[:, 1]
    u1 = 0.5 + 0.4 * np.cos(3.0 * np.pi * x2) * np.sin(np.pi * x1)
    u2 = 0.5 + 0.3 * np.cos(2.0 * np.pi * x1)
    return project_onto_constraints(FieldPair(u1, u2), systems)


class SolverConfigTests(SimpleTestCase):

    def test_defaults(self):
        config = SolverConfig()
        self.assertEqual(config.tau, 1e-3)
        self.assertEqual(config.tol, 1e-3)
        self.assertEqual(config.tol_s, 1e-5)
        self.assertIs(config.bc_mode, BCMode.DIRICHLET)

    def test_rejects_bad_values(self):
        for key, value in (('tau', -1.0), ('tol', 1.5), ('tol_s', 0.0), ('max_picard', 0)):
            with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
                SolverConfig(**{key: value})
            self.assertEqual(ctx.exception.key, key)

    def test_horizon_needs_end_time(self):
        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            SolverConfig(run_mode=RunMode.HORIZON)
        self.assertEqual(ctx.exception.key, 't_end')


class ConstraintTests(SimpleTestCase):

    def test_constrained_node_sets(self):
        mesh = build_structured_mesh(5, 4)
        self.assertEqual(len(constrained_nodes(mesh, BCMode.DIRICHLET, 1)), 2 * 5 + 2 * 4 - 4)
        mixed1 = constrained_nodes(mesh, BCMode.MIXED, 1)
        mixed2 = constrained_nodes(mesh, BCMode.MIXED, 2)
        self.assertEqual(len(mixed1), 2 * 4)
        self.assertEqual(len(mixed2), 2 * 5)
        self.assertTrue(np.all(np.isin(mesh.nodes[mixed1, 0], [0.0, 1.0])))
        self.assertTrue(np.all(np.isin(mesh.nodes[mixed2, 1], [0.0, 1.0])))

    def test_relative_change(self):
        a = FieldPair(np.ones(4), np.ones(4))
        zero = FieldPair(np.zeros(4), np.zeros(4))
        mass = np.full(4, 0.25)
        self.assertEqual(relative_change(a, a, mass), 0.0)
        self.assertEqual(relative_change(a, zero, mass), math.inf)


class RunTests(SimpleTestCase):

    def test_zero_state_is_stationary(self):
        mesh = build_structured_mesh(6, 6)
        config = SolverConfig(tau=0.01)
        result = run(FieldPair.constant(mesh.n_nodes, 0.0, 0.0), ModelParams(), config, mesh=mesh)
        self.assertEqual(result.steps, 1)
        self.assertEqual(result.reports[0].picard_iterations, 1)
        np.testing.assert_array_equal(result.final.u1, 0.0)
        np.testing.assert_array_equal(result.final.u2, 0.0)

    def test_horizon_stops_at_end_time(self):
        mesh = build_structured_mesh(6, 6)
        config = horizon_config(tau=0.01, t_end=0.05)
        systems = assemble_systems(mesh, ModelParams(), config)
        result = run(start(mesh, systems), ModelParams(), config, systems=systems)
        self.assertEqual(result.steps, 5)
        self.assertAlmostEqual(result.final.t, 0.05)

    def test_constrained_initial_values_rejected(self):
        mesh = build_structured_mesh(5, 5)
        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            run(FieldPair.constant(mesh.n_nodes, 0.5, 0.5), ModelParams(), SolverConfig(), mesh=mesh)
        self.assertEqual(ctx.exception.err_type, ErrorType.VALIDATION)
        self.assertEqual(ctx.exception.key, 'u10')

    def test_systems_for_other_tau_rejected(self):
        mesh = build_structured_mesh(5, 5)
        systems = assemble_systems(mesh, ModelParams(), SolverConfig(tau=0.01))
        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            run(start(mesh, systems), ModelParams(), SolverConfig(tau=0.02), systems=systems)
        self.assertEqual(ctx.exception.key, 'tau')

    def test_max_steps_exceeded(self):
        mesh = build_structured_mesh(6, 6)
        config = SolverConfig(tau=0.01, max_steps=2)
        systems = assemble_systems(mesh, ModelParams(), config)
        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            run(start(mesh, systems), ModelParams(), config, systems=systems)
        self.assertEqual(ctx.exception.err_type, ErrorType.NOT_STATIONARY)
        self.assertTrue(math.isfinite(ctx.exception.metric))
        self.assertGreater(ctx.exception.metric, config.tol_s)

    def test_picard_failure_names_step(self):
        mesh = build_structured_mesh(6, 6)
        config = SolverConfig(tau=0.01, tol=1e-12, max_picard=1)
        systems = assemble_systems(mesh, ModelParams(), config)
        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            run(start(mesh, systems), ModelParams(), config, systems=systems)
        self.assertEqual(ctx.exception.err_type, ErrorType.CONVERGENCE)
        self.assertIn('step 1', ctx.exception.message)

    def test_custom_reaction(self):
        mesh = build_structured_mesh(7, 7)
        config = horizon_config(tau=0.01, t_end=0.1)
        source = lambda t, u1, u2: (-np.ones_like(u1), np.zeros_like(u2))
        result = run(FieldPair.constant(mesh.n_nodes, 0.0, 0.0), ModelParams(), config, mesh=mesh,
                     reaction=source)
        self.assertGreater(result.final.u1.max(), 0.0)
        np.testing.assert_array_equal(result.final.u2, 0.0)

    def test_safety_under_table_parameters(self):
        mesh = build_structured_mesh(10, 10)
        params = ModelParams()
        config = horizon_config(tau=1e-3, t_end=0.02)
        systems = assemble_systems(mesh, params, config)
        result = run(start(mesh, systems), params, config, systems=systems)
        self.assertEqual(result.negativity_violations, 0)
        for report in result.reports:
            self.assertLessEqual(report.picard_iterations, 10)
            self.assertGreaterEqual(report.min_value, -1e-12)
        self.assertLessEqual(max(result.final.u1.max(), result.final.u2.max()), 2.0)


class SymmetryTests(SimpleTestCase):

    def test_mirror_symmetry_for_symmetric_parameters(self):
        params = ModelParams(c1=0.1, c2=0.1, eps=0.0, alpha=(5.0, 5.0), beta=((3.0, 2.0), (2.0, 3.0)))
        mesh = build_structured_mesh(8, 8)
        for bc_mode in BCMode:
            config = horizon_config(tau=0.01, tol=1e-6, t_end=0.2, lin_tol=1e-13, bc_mode=bc_mode)
            systems = assemble_systems(mesh, params, config)
            result = run(start(mesh, systems), params, config, systems=systems)
            self.assertLessEqual(mirror_defect(result.final, mesh), 1e-10, bc_mode)


class MonotoneShiftRunTests(SimpleTestCase):

    def shift_gap(self, tau: float, lam: float) -> float:
        params = ModelParams()
        mesh = build_structured_mesh(6, 6)
        config = horizon_config(tau=tau, tol=1e-10, t_end=0.05, lin_tol=1e-13, max_picard=100)
        systems = assemble_systems(mesh, params, config)
        initial = start(mesh, systems)
        direct = run(initial, params, config, systems=systems)
        shifted = run(initial, params, config, systems=systems, shift_lambda=lam)
        self.assertAlmostEqual(shifted.final.t, direct.final.t)
        return float(max(np.abs(shifted.final.u1 - direct.final.u1).max(),
                         np.abs(shifted.final.u2 - direct.final.u2).max()))

    def test_shifted_solve_agrees_to_first_order(self):
        lam = monotone_shift(ModelParams(), 2.0).lam
        coarse = self.shift_gap(2e-3, lam)
        fine = self.shift_gap(1e-3, lam)
        self.assertGreater(fine, 1e-10)
        ratio = coarse / fine
        self.assertGreaterEqual(ratio, 1.7)
        self.assertLessEqual(ratio, 2.3)


class TimeStepTests(SimpleTestCase):

    def test_diffusion_only_is_l2_stable(self):
        mesh = build_structured_mesh(8, 8)
        params = ModelParams(eps=0.05)
        for bc_mode in BCMode:
            config = SolverConfig(tau=0.5, lin_tol=1e-12, bc_mode=bc_mode)
            systems = assemble_systems(mesh, params, config)
            state = bumpy(mesh, systems)
            for n in range(1, 11):
                new_state, _ = time_step(state, params, config, systems, reaction=no_reaction, step_index=n)
                for new, old in ((new_state.u1, state.u1), (new_state.u2, state.u2)):
                    self.assertLessEqual(l2_norm(new, systems.mass),
                                         l2_norm(old, systems.mass) * (1.0 + 1e-9), (bc_mode, n))
                state = new_state

    def test_single_picard_iteration_is_the_semi_implicit_update(self):
        mesh = build_structured_mesh(6, 6)
        params = ModelParams()
        config = SolverConfig(tau=1e-3, tol=0.999, max_picard=1, lin_tol=1e-13)
        systems = assemble_systems(mesh, params, config)
        state = bumpy(mesh, systems)
        new_state, report = time_step(state, params, config, systems)
        self.assertEqual(report.picard_iterations, 1)
        f1, f2 = reaction_field(state.u1, state.u2, params)
        for eq, u_prev, f, u_new in zip(systems.equations, (state.u1, state.u2), (f1, f2),
                                        (new_state.u1, new_state.u2)):
            rhs = systems.mass * (u_prev / config.tau - f)
            expected = eq.dmap.recover(np.linalg.solve(eq.matrix.to_dense(), eq.dmap.restrict(rhs)))
            np.testing.assert_allclose(u_new, expected, rtol=1e-10, atol=1e-12)

    def test_single_free_node(self):
        mesh = build_structured_mesh(3, 3)
        params = ModelParams(c1=0.1, c2=0.1)
        config = SolverConfig(tau=0.1, lin_tol=1e-12)
        systems = assemble_systems(mesh, params, config)
        centre = mesh.node_index(1, 1)
        self.assertAlmostEqual(systems.mass[centre], 0.25, places=15)
        for eq in systems.equations:
            np.testing.assert_array_equal(eq.dmap.free, [centre])
            # m / tau + 2 c on the unit square with h = 1/2
            self.assertAlmostEqual(eq.matrix.to_dense()[0, 0], 2.7, places=13)
        state = start(mesh, systems)
        new_state, _ = time_step(state, params, config, systems, reaction=no_reaction)
        self.assertAlmostEqual(new_state.u1[centre], 1.25 / 2.7, places=12)
        self.assertAlmostEqual(new_state.u2[centre], 1.25 / 2.7, places=12)

        tight = SolverConfig(tau=0.1, tol=1e-12, max_picard=200, lin_tol=1e-12)
        new_state, _ = time_step(state, params, tight, systems)
        u, v = new_state.u1[centre], new_state.u2[centre]
        f1, f2 = reaction_field(np.array([u]), np.array([v]), params)
        self.assertLessEqual(abs(2.7 * u - 0.25 * (0.5 / 0.1 - f1[0])), 1e-9)
        self.assertLessEqual(abs(2.7 * v - 0.25 * (0.5 / 0.1 - f2[0])), 1e-9)

    def test_column_mass_conserved_under_mixed_bc(self):
        mesh = build_structured_mesh(9, 9)
        params = ModelParams(c1=1e-12, c2=0.1, eps=0.05)
        totals = {}
        for bc_mode in BCMode:
            config = horizon_config(tau=0.01, t_end=0.2, lin_tol=1e-13, bc_mode=bc_mode)
            systems = assemble_systems(mesh, params, config)
            initial = bumpy(mesh, systems)
            result = run(initial, params, config, systems=systems, reaction=no_reaction)
            before = mesh.grid(systems.mass * initial.u1).sum(axis=0)[1:-1]
            after = mesh.grid(systems.mass * result.final.u1).sum(axis=0)[1:-1]
            totals[bc_mode] = (before.sum(), after.sum())
            if bc_mode is BCMode.MIXED:
                np.testing.assert_allclose(after, before, rtol=1e-8)
        before, after = totals[BCMode.DIRICHLET]
        self.assertLess(after, 0.97 * before)

    def test_non_finite_reaction_stops_the_run(self):
        mesh = build_structured_mesh(6, 6)
        config = SolverConfig(tau=0.01)
        systems = assemble_systems(mesh, ModelParams(), config)

        def blows_up(t, u1, u2):
            f1 = np.full_like(u1, np.nan) if t > 0.025 else np.zeros_like(u1)
            return f1, np.zeros_like(u2)

        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            run(start(mesh, systems), ModelParams(), config, systems=systems, reaction=blows_up)
        self.assertEqual(ctx.exception.err_type, ErrorType.CONVERGENCE)
        self.assertFalse(ctx.exception.is_user_error)
        self.assertIn('step 3', ctx.exception.message)

    def test_overflowing_right_hand_side_stops_the_run(self):
        mesh = build_structured_mesh(6, 6)
        config = SolverConfig(tau=0.01)
        systems = assemble_systems(mesh, ModelParams(), config)
        huge = lambda t, u1, u2: (np.full_like(u1, -1e308), np.zeros_like(u2))
        with self.assertRaises(ED_SOLVER_EXCEPTION) as ctx:
            run(start(mesh, systems), ModelParams(), config, systems=systems, reaction=huge)
        self.assertEqual(ctx.exception.err_type, ErrorType.CONVERGENCE)


class TimeAccuracyTests(SimpleTestCase):

    def final_state(self, tau: float) -> FieldPair:
        mesh = build_structured_mesh(8, 8)
        params = ModelParams()
        config = horizon_config(tau=tau, t_end=0.2, tol=1e-10, lin_tol=1e-12, max_picard=100)
        systems = assemble_systems(mesh, params, config)
        return run(start(mesh, systems), params, config, systems=systems, keep_reports=False).final

    def test_first_order_in_tau(self):
        reference = self.final_state(0.0025)
        errors = []
        for tau in (0.02, 0.01):
            state = self.final_state(tau)
            errors.append(max(np.abs(state.u1 - reference.u1).max(), np.abs(state.u2 - reference.u2).max()))
        self.assertGreater(errors[1], 1e-8)
        ratio = errors[0] / errors[1]
        self.assertGreaterEqual(ratio, 1.8)
        self.assertLessEqual(ratio, 2.8)
