"""
Orchestration of experiment runs: build the mesh and systems, integrate,
summarize, and compare the eps-regularized runs with the unperturbed reference.
"""

from __future__ import annotations
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..models import RunSummary
from .experiment_config import ExperimentConfig, SweepTemplate
from .io_lib import dump_config
from .mesh_lib import Mesh, build_structured_mesh
from .model_lib import NEGATIVITY_TOLERANCE, check_lipschitz, check_monotonicity, default_box_bound
from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType, require
from .stepper_lib import (BCMode, FieldPair, RunResult, StepperSystems, assemble_systems,
                          project_onto_constraints, run)

logger = logging.getLogger(__name__)

# nodes closer than this many cells to the faces where DBC and MBC differ form the band
INTERIOR_CELLS = 2
LAYER_THETA = 0.05


@dataclass
class ExperimentOutcome:
    config: ExperimentConfig
    mesh: Mesh
    systems: StepperSystems
    result: RunResult
    summary: RunSummary
    checks: Dict[str, object] = field(default_factory=dict)

    @property
    def final(self) -> FieldPair:
        return self.result.final


@dataclass
class SweepEntry:
    eps: float
    bc_mode: BCMode
    state: FieldPair
    steps: int
    global_linf: float
    interior_linf: float
    band_linf: float
    width_u1: float
    width_u2: float
    summary: Optional[RunSummary] = None


@dataclass
class SweepResult:
    mesh: Mesh
    reference: FieldPair
    entries: List[SweepEntry] = field(default_factory=list)

    def entry(self, eps: float, bc_mode) -> SweepEntry:
        bc_mode = BCMode(bc_mode)
        for e in self.entries:
            if e.eps == eps and e.bc_mode is bc_mode:
                return e
        raise ED_SOLVER_EXCEPTION(f"No sweep entry for eps={eps}, bc={bc_mode.value}", ErrorType.VALIDATION)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            "eps": e.eps,
            "bc": e.bc_mode.value,
            "steps": e.steps,
            "global_linf": e.global_linf,
            "interior_linf": e.interior_linf,
            "band_linf": e.band_linf,
            "width_u1": e.width_u1,
            "width_u2": e.width_u2,
        } for e in self.entries])


def initial_state(config: ExperimentConfig, systems: StepperSystems) -> FieldPair:
    state = FieldPair.constant(systems.mesh.n_nodes, config.u10, config.u20)
    return project_onto_constraints(state, systems)


def build_run_summary(config: ExperimentConfig, mesh: Mesh, systems: StepperSystems,
                      result: RunResult, wall_time: float) -> RunSummary:
    final = result.final
    metric = result.stationary_metric
    return RunSummary(
        experiment_id=config.experiment_id,
        parameters=dump_config(config),
        steps=result.steps,
        picard_iterations=result.total_picard,
        wall_time=wall_time,
        stationary_metric=metric if math.isfinite(metric) else None,
        negativity_violations=result.negativity_violations,
        u1_min=float(final.u1.min()), u1_max=float(final.u1.max()),
        u1_mass=float(systems.mass @ final.u1),
        u2_min=float(final.u2.min()), u2_max=float(final.u2.max()),
        u2_mass=float(systems.mass @ final.u2),
    )


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    logger.info(f"Starting run {config.experiment_id}: {config.nx}x{config.ny} nodes, "
                f"c=({config.params.c1}, {config.params.c2}), eps={config.params.eps}, "
                f"bc={config.solver.bc_mode.value}, tau={config.solver.tau}")
    mesh = build_structured_mesh(config.nx, config.ny)
    systems = assemble_systems(mesh, config.params, config.solver)
    started = time.perf_counter()
    result = run(initial_state(config, systems), config.params, config.solver,
                 systems=systems, keep_reports=False)
    wall_time = time.perf_counter() - started

    summary = build_run_summary(config, mesh, systems, result, wall_time)
    checks: Dict[str, object] = experiment_one_checks(result.final, mesh)
    if mesh.nx == mesh.ny:
        checks["mirror_defect"] = mirror_defect(result.final, mesh)
    checks.update(reaction_checks(config))
    if result.negativity_violations:
        logger.warning(f"Run {config.experiment_id}: {result.negativity_violations} steps with negative densities")
    logger.info(f"✅ Run {config.experiment_id} finished: {result.steps} steps, "
                f"{result.total_picard} Picard iterations, {wall_time:.2f}s")
    return ExperimentOutcome(config=config, mesh=mesh, systems=systems, result=result,
                             summary=summary, checks=checks)


def reaction_checks(config: ExperimentConfig) -> Dict[str, float]:
    """Sampled slacks of the monotone shift and of the Lipschitz bound on the default box, seeded by config.seed."""
    box = default_box_bound(config.params, max(config.u10, config.u20))
    slacks = {
        "shift_monotonicity_slack": check_monotonicity(config.params, box, seed=config.seed),
        "lipschitz_slack": check_lipschitz(config.params, box, seed=config.seed),
    }
    for name, value in slacks.items():
        if value < -NEGATIVITY_TOLERANCE:
            logger.warning(f"Run {config.experiment_id}: {name} = {value:.3e} on [0, {box}]^2 (seed {config.seed})")
    return slacks


def _linf(values: np.ndarray) -> float:
    return float(np.abs(values).max()) if values.size else 0.0


def interior_masks(mesh: Mesh, cells: int = INTERIOR_CELLS):
    """Per-equation masks of nodes at least `cells` cells away from the conjugate-axis faces."""
    jj, ii = np.divmod(np.arange(mesh.n_nodes), mesh.nx)
    mask1 = (jj >= cells) & (jj <= mesh.ny - 1 - cells)
    mask2 = (ii >= cells) & (ii <= mesh.nx - 1 - cells)
    return mask1, mask2


def difference_metrics(state: FieldPair, reference: FieldPair, mesh: Mesh) -> Dict[str, float]:
    d1 = state.u1 - reference.u1
    d2 = state.u2 - reference.u2
    mask1, mask2 = interior_masks(mesh)
    return {
        "global_linf": max(_linf(d1), _linf(d2)),
        "interior_linf": max(_linf(d1[mask1]), _linf(d2[mask2])),
        "band_linf": max(_linf(d1[~mask1]), _linf(d2[~mask2])),
    }


def _safe_width(values, mesh, axis) -> float:
    try:
        return boundary_layer_width(values, mesh, axis, LAYER_THETA)
    except ED_SOLVER_EXCEPTION as e:
        logger.warning(f"Layer width along x{axis} undefined: {e.message}")
        return math.nan


def eps_sweep(
    template: Union[SweepTemplate, ExperimentConfig],
    eps_list: Optional[Sequence[float]] = None,
    bc_list: Optional[Sequence] = None,
) -> SweepResult:
    base = template.base if isinstance(template, SweepTemplate) else template
    if eps_list is None and isinstance(template, SweepTemplate):
        eps_list = template.eps_list
    if bc_list is None and isinstance(template, SweepTemplate):
        bc_list = template.bc_list
    require(bool(eps_list), "eps list must not be empty", key="eps")
    require(bool(bc_list), "bc list must not be empty", key="bc")
    for eps in eps_list:
        require(eps >= 0.0, f"eps values must be >= 0, got {eps}", key="eps")
    bc_list = [BCMode(bc) for bc in bc_list]

    def _run(eps: float, bc: BCMode) -> ExperimentOutcome:
        config = base.with_params(eps=eps).with_solver(bc_mode=bc).replace(
            experiment_id=f"{base.experiment_id}:eps={eps}:{bc.value}")
        try:
            return run_experiment(config)
        except ED_SOLVER_EXCEPTION as e:
            raise ED_SOLVER_EXCEPTION(f"sweep run (eps={eps}, bc={bc.value}) failed: {e.message}",
                                      e.err_type, key=e.key, metric=e.metric) from e

    logger.info(f"eps sweep: eps={list(eps_list)}, bc={[bc.value for bc in bc_list]}")
    reference_run = _run(0.0, BCMode.MIXED)
    mesh = reference_run.mesh
    reference = reference_run.final
    sweep = SweepResult(mesh=mesh, reference=reference)

    for eps in eps_list:
        for bc in bc_list:
            outcome = reference_run if (eps == 0.0 and bc is BCMode.MIXED) else _run(eps, bc)
            metrics = difference_metrics(outcome.final, reference, mesh)
            entry = SweepEntry(
                eps=eps, bc_mode=bc, state=outcome.final, steps=outcome.result.steps,
                summary=outcome.summary,
                width_u1=_safe_width(outcome.final.u1, mesh, axis=2),
                width_u2=_safe_width(outcome.final.u2, mesh, axis=1),
                **metrics,
            )
            logger.info(f"eps={eps:g} bc={bc.value}: global {entry.global_linf:.3e}, "
                        f"interior {entry.interior_linf:.3e}, band {entry.band_linf:.3e}")
            sweep.entries.append(entry)
    return sweep


def _middle(n: int) -> List[int]:
    return [n // 2] if n % 2 else [n // 2 - 1, n // 2]


def _center_profile(values: np.ndarray, mesh: Mesh, axis: int) -> np.ndarray:
    U = mesh.grid(values)
    if axis == 1:
        return U[_middle(mesh.ny), :].mean(axis=0)
    return U[:, _middle(mesh.nx)].mean(axis=1)


def _distance_to_target(profile: np.ndarray, target: float, h: float) -> float:
    reached = np.flatnonzero(profile >= target)
    k = int(reached[0])
    if k == 0:
        return 0.0
    s = (target - profile[k - 1]) / (profile[k] - profile[k - 1])
    return (k - 1 + s) * h


def boundary_layer_width(values: np.ndarray, mesh: Mesh, axis: int, theta: float = LAYER_THETA) -> float:
    """
    Distance from each face along `axis` at which the center-slice profile first
    reaches (1 - theta) of its center value; the larger of the two faces.
    """
    require(axis in (1, 2), f"axis must be 1 or 2, got {axis}", key="axis")
    require(0.0 < theta < 1.0, f"theta must lie in (0, 1), got {theta}", key="theta")
    values = np.asarray(values, dtype=float)
    require(values.size == mesh.n_nodes, "field does not match the mesh", key="nx")

    profile = _center_profile(values, mesh, axis)
    plateau = float(profile[_middle(profile.size)].mean())
    if plateau <= 0.0:
        raise ED_SOLVER_EXCEPTION(f"Layer width undefined for plateau value {plateau:.3e}", ErrorType.VALIDATION)
    target = (1.0 - theta) * plateau
    h = mesh.h1 if axis == 1 else mesh.h2
    return max(_distance_to_target(profile, target, h),
               _distance_to_target(profile[::-1], target, h))


def mirror_defect(state: FieldPair, mesh: Mesh) -> float:
    """max |u2(x1, x2) - u1(x2, x1)|."""
    require(mesh.nx == mesh.ny, "mirror comparison needs nx == ny", key="nx")
    return float(np.abs(mesh.grid(state.u2) - mesh.grid(state.u1).T).max())


def experiment_one_checks(state: FieldPair, mesh: Mesh, band: float = 0.1) -> Dict[str, bool]:
    """
    The two readings of the unequal-diffusion outcome, kept as separate checks:
    u1 denser near its own-trait boundaries than at the center (mid-x2 slice),
    and u1 (faster diffuser) reaching higher density than u2 inside the boundary band.
    """
    x1 = mesh.grid(mesh.nodes[:, 0])[0]
    mid_u1 = _center_profile(state.u1, mesh, axis=1)
    left, center, right = np.interp([0.1, 0.5, 0.9], x1, mid_u1)

    x = mesh.nodes
    distance = np.minimum.reduce([x[:, 0], 1.0 - x[:, 0], x[:, 1], 1.0 - x[:, 1]])
    in_band = distance <= band + 1e-12
    return {
        "u1_boundary_heavy": bool(left > center and right > center),
        "fast_diffuser_denser_near_boundary": bool(state.u1[in_band].max() > state.u2[in_band].max()),
    }
