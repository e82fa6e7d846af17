"""
Backward-Euler time stepping with Picard resolution of the reaction.

Per time step and Picard iterate k, each equation i solves

    (diag(m)/tau + A_i) u_i^k = diag(m) (u_{i,n-1}/tau - F_i(u_1^{k-1}, u_2^{k-1}))

on its free nodes; iterates stop on the mass-weighted L2 relative change (tol),
runs stop at a horizon or on the same measure between time steps (tol_s).
"""

from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import sparse as sp

from .assembly_lib import (DirichletMap, SymSparseMatrix, apply_dirichlet,
                           assemble_lumped_mass, assemble_stiffness)
from .linsolve_lib import DEFAULT_REL_TOL, solve_spd
from .mesh_lib import Mesh, boundary_masks
from .model_lib import NEGATIVITY_TOLERANCE, ModelParams, reaction_field, shifted_reaction_field
from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType, require

logger = logging.getLogger(__name__)

ReactionFn = Callable[[float, np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]


class BCMode(str, Enum):
    DIRICHLET = "dirichlet"
    MIXED = "mixed"


class RunMode(str, Enum):
    STATIONARY = "stationary"
    HORIZON = "horizon"


@dataclass
class SolverConfig:
    tau: float = 1e-3
    tol: float = 1e-3
    tol_s: float = 1e-5
    max_picard: int = 50
    max_steps: int = 10 ** 6
    bc_mode: BCMode = BCMode.DIRICHLET
    run_mode: RunMode = RunMode.STATIONARY
    t_end: Optional[float] = None
    lin_tol: float = DEFAULT_REL_TOL

    def __post_init__(self):
        self.bc_mode = BCMode(self.bc_mode)
        self.run_mode = RunMode(self.run_mode)
        require(self.tau > 0.0, f"tau must be > 0, got {self.tau}", key="tau")
        require(0.0 < self.tol < 1.0, f"tol must lie in (0, 1), got {self.tol}", key="tol")
        require(0.0 < self.tol_s < 1.0, f"tol_s must lie in (0, 1), got {self.tol_s}", key="tol_s")
        require(self.max_picard >= 1, f"max_picard must be >= 1, got {self.max_picard}", key="max_picard")
        require(self.max_steps >= 1, f"max_steps must be >= 1, got {self.max_steps}", key="max_steps")
        require(0.0 < self.lin_tol < 1.0, f"lin_tol must lie in (0, 1), got {self.lin_tol}", key="lin_tol")
        if self.run_mode is RunMode.HORIZON:
            require(self.t_end is not None and self.t_end > 0.0,
                    f"horizon runs need t_end > 0, got {self.t_end}", key="t_end")


@dataclass
class FieldPair:
    u1: np.ndarray
    u2: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.u1 = np.asarray(self.u1, dtype=float)
        self.u2 = np.asarray(self.u2, dtype=float)
        if self.u1.shape != self.u2.shape:
            raise ED_SOLVER_EXCEPTION(f"Field length mismatch {self.u1.shape} vs {self.u2.shape}",
                                      ErrorType.VALIDATION)

    def copy(self) -> "FieldPair":
        return FieldPair(self.u1.copy(), self.u2.copy(), self.t)

    def min_value(self) -> float:
        return float(min(self.u1.min(), self.u2.min()))

    @classmethod
    def constant(cls, n: int, u10: float, u20: float, t: float = 0.0) -> "FieldPair":
        return cls(np.full(n, float(u10)), np.full(n, float(u20)), t)


@dataclass
class StepReport:
    step: int
    picard_iterations: int
    last_relative_change: float
    stationary_metric: float
    linear_iterations: int = 0
    min_value: float = 0.0


@dataclass
class EquationSystem:
    index: int
    matrix: SymSparseMatrix      # reduced diag(m)/tau + A_i
    dmap: DirichletMap


@dataclass
class StepperSystems:
    mesh: Mesh
    mass: np.ndarray
    tau: float
    bc_mode: BCMode
    equations: Tuple[EquationSystem, EquationSystem]


@dataclass
class RunResult:
    final: FieldPair
    reports: List[StepReport] = field(default_factory=list)
    steps: int = 0
    total_picard: int = 0
    stationary_metric: float = math.inf
    negativity_violations: int = 0


def constrained_nodes(mesh: Mesh, bc_mode: BCMode, i: int) -> np.ndarray:
    on_x1, on_x2 = boundary_masks(mesh)
    bc_mode = BCMode(bc_mode)
    if bc_mode is BCMode.DIRICHLET:
        return np.flatnonzero(on_x1 | on_x2)
    if i == 1:
        return np.flatnonzero(on_x1)
    if i == 2:
        return np.flatnonzero(on_x2)
    raise ED_SOLVER_EXCEPTION(f"Unknown equation index {i}", ErrorType.VALIDATION)


def _change_terms(a: FieldPair, b: FieldPair, mass: np.ndarray) -> Tuple[float, float]:
    num = mass @ (a.u1 - b.u1) ** 2 + mass @ (a.u2 - b.u2) ** 2
    den = mass @ b.u1 ** 2 + mass @ b.u2 ** 2
    return math.sqrt(num), math.sqrt(den)


def relative_change(a: FieldPair, b: FieldPair, mass: np.ndarray) -> float:
    """Mass-weighted L2 relative change of a against b; +inf when b vanishes."""
    if a.u1.shape != b.u1.shape:
        raise ED_SOLVER_EXCEPTION("Field length mismatch in relative_change", ErrorType.VALIDATION)
    num, den = _change_terms(a, b, mass)
    if den == 0.0:
        return math.inf
    return num / den


def _stopping_change(a: FieldPair, b: FieldPair, mass: np.ndarray) -> float:
    # zero change against a zero state counts as converged
    num, den = _change_terms(a, b, mass)
    if num == 0.0:
        return 0.0
    return math.inf if den == 0.0 else num / den


def l2_norm(v: np.ndarray, mass: np.ndarray) -> float:
    return math.sqrt(float(mass @ (np.asarray(v) ** 2)))


def assemble_systems(mesh: Mesh, params: ModelParams, config: SolverConfig) -> StepperSystems:
    mass = assemble_lumped_mass(mesh).values
    equations = []
    for i in (1, 2):
        d1, d2 = params.diffusivities(i)
        stiffness = assemble_stiffness(mesh, d1, d2)
        system = SymSparseMatrix(stiffness.matrix + sp.diags(mass / config.tau, format="csr"))
        reduced, _, dmap = apply_dirichlet(system, np.zeros(mesh.n_nodes),
                                           constrained_nodes(mesh, config.bc_mode, i))
        equations.append(EquationSystem(index=i, matrix=reduced, dmap=dmap))
    logger.debug(f"Assembled systems: tau={config.tau}, bc={config.bc_mode.value}, "
                 f"free nodes {[e.dmap.free.size for e in equations]}")
    return StepperSystems(mesh=mesh, mass=mass, tau=config.tau, bc_mode=config.bc_mode,
                          equations=tuple(equations))


def project_onto_constraints(state: FieldPair, systems: StepperSystems) -> FieldPair:
    projected = state.copy()
    for eq, u in zip(systems.equations, (projected.u1, projected.u2)):
        keep = np.zeros(u.size, dtype=bool)
        keep[eq.dmap.free] = True
        u[~keep] = 0.0
    return projected


def model_reaction(params: ModelParams) -> ReactionFn:
    return lambda t, u1, u2: reaction_field(u1, u2, params)


def shifted_model_reaction(params: ModelParams, lam: float) -> ReactionFn:
    return lambda t, w1, w2: shifted_reaction_field(lam, t, w1, w2, params)


def _require_finite(fields, what: str, step_index: int, k: int) -> None:
    if all(np.all(np.isfinite(f)) for f in fields):
        return
    logger.error(f"Non-finite {what} at step {step_index}, Picard iteration {k}")
    raise ED_SOLVER_EXCEPTION(f"Non-finite {what} at step {step_index} (Picard iteration {k}); the run diverged",
                              ErrorType.CONVERGENCE, metric=math.inf)


def time_step(
    state: FieldPair,
    params: ModelParams,
    config: SolverConfig,
    systems: StepperSystems,
    reaction: Optional[ReactionFn] = None,
    step_index: int = 1,
    t_new: Optional[float] = None,
) -> Tuple[FieldPair, StepReport]:
    if reaction is None:
        reaction = model_reaction(params)
    tau = systems.tau
    mass = systems.mass
    t_new = state.t + tau if t_new is None else t_new

    previous = (state.u1, state.u2)
    iterate = FieldPair(state.u1.copy(), state.u2.copy(), t_new)
    linear_iterations = 0
    change = math.inf

    for k in range(1, config.max_picard + 1):
        f1, f2 = reaction(t_new, iterate.u1, iterate.u2)
        _require_finite((f1, f2), "reaction", step_index, k)
        solved = []
        for eq, u_prev, f, u_guess in zip(systems.equations, previous, (f1, f2), (iterate.u1, iterate.u2)):
            rhs = mass * (u_prev / tau - f)
            x, report = solve_spd(eq.matrix, eq.dmap.restrict(rhs), config.lin_tol,
                                  x0=eq.dmap.restrict(u_guess))
            linear_iterations += report.iterations
            solved.append(eq.dmap.recover(x))
        new_iterate = FieldPair(solved[0], solved[1], t_new)
        _require_finite((new_iterate.u1, new_iterate.u2), "iterate", step_index, k)
        change = _stopping_change(new_iterate, iterate, mass)
        logger.debug(f"step {step_index} picard {k}: relative change {change:.3e}")
        iterate = new_iterate
        if change < config.tol:
            return iterate, StepReport(step=step_index, picard_iterations=k, last_relative_change=change,
                                       stationary_metric=math.nan, linear_iterations=linear_iterations,
                                       min_value=iterate.min_value())

    logger.error(f"Picard iteration failed at step {step_index} (last change {change:.3e})")
    raise ED_SOLVER_EXCEPTION(
        f"Picard iteration did not converge at step {step_index} within {config.max_picard} "
        f"iterations (last relative change {change:.3e}, tol {config.tol:.1e})",
        ErrorType.CONVERGENCE, metric=change)


def run(
    initial: FieldPair,
    params: ModelParams,
    config: SolverConfig,
    mesh: Optional[Mesh] = None,
    systems: Optional[StepperSystems] = None,
    reaction: Optional[ReactionFn] = None,
    shift_lambda: float = 0.0,
    keep_reports: bool = True,
) -> RunResult:
    """
    Integrate from `initial` until the horizon or the stationary criterion.
    With shift_lambda > 0 the shifted system is integrated and the returned
    fields are multiplied back by exp(lambda t).
    """
    if systems is None:
        require(mesh is not None, "run needs a mesh or precomputed systems", key="nx")
        systems = assemble_systems(mesh, params, config)
    require(abs(systems.tau - config.tau) <= 1e-15 * config.tau,
            "precomputed systems were assembled for another tau", key="tau")
    require(initial.u1.size == systems.mass.size, "initial data does not match the mesh", key="nx")
    for eq, u in zip(systems.equations, (initial.u1, initial.u2)):
        free = np.zeros(u.size, dtype=bool)
        free[eq.dmap.free] = True
        require(not np.any(u[~free]), f"initial u{eq.index} is nonzero on constrained nodes", key=f"u{eq.index}0")

    if shift_lambda:
        require(shift_lambda > 0.0, f"shift lambda must be > 0, got {shift_lambda}", key="lambda")
        require(reaction is None, "a custom reaction cannot be combined with the shift", key="lambda")
        reaction = shifted_model_reaction(params, shift_lambda)
    elif reaction is None:
        reaction = model_reaction(params)

    mass = systems.mass
    t0 = initial.t
    state = initial.copy()
    if shift_lambda:
        # shifted unknown w = exp(-lambda t) u
        shrink = math.exp(-shift_lambda * t0)
        state = FieldPair(state.u1 * shrink, state.u2 * shrink, t0)
    result = RunResult(final=state)
    horizon = config.t_end if config.run_mode is RunMode.HORIZON else None

    for n in range(1, config.max_steps + 1):
        t_new = t0 + n * config.tau
        new_state, report = time_step(state, params, config, systems, reaction=reaction,
                                      step_index=n, t_new=t_new)
        metric = _stopping_change(new_state, state, mass)
        report.stationary_metric = metric
        result.steps = n
        result.total_picard += report.picard_iterations
        result.stationary_metric = metric
        if report.min_value < -NEGATIVITY_TOLERANCE:
            result.negativity_violations += 1
            logger.warning(f"Negative density {report.min_value:.3e} at step {n} (t={t_new:.6g})")
        if keep_reports:
            result.reports.append(report)
        state = new_state

        if horizon is not None:
            if t_new >= horizon * (1.0 - 1e-12):
                break
        elif metric < config.tol_s:
            logger.info(f"Stationary after {n} steps (t={t_new:.6g}, metric {metric:.3e})")
            break
    else:
        logger.error(f"max_steps={config.max_steps} exceeded (last stationary metric {result.stationary_metric:.3e})")
        raise ED_SOLVER_EXCEPTION(
            f"max_steps={config.max_steps} exceeded before the run finished "
            f"(last stationary metric {result.stationary_metric:.3e})",
            ErrorType.NOT_STATIONARY, metric=result.stationary_metric)

    if shift_lambda:
        grow = math.exp(shift_lambda * state.t)
        state = FieldPair(state.u1 * grow, state.u2 * grow, state.t)
    result.final = state
    return result
