"""
Verification harness: manufactured solutions with their convergence table, and an
independent 1D solver for the degenerate eps = 0 problem, whose x_j-slices the
2D solver has to reproduce.
"""

from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.linalg import solve_banded

from .mesh_lib import Mesh, build_structured_mesh
from .model_lib import ModelParams, reaction_field
from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType, require
from .stepper_lib import (BCMode, FieldPair, ReactionFn, RunMode, SolverConfig, assemble_systems,
                          project_onto_constraints, run, time_step)

logger = logging.getLogger(__name__)

# value, d/dt, d2/dx1^2, d2/dx2^2 of one exact field at (t, x1, x2)
FieldTerms = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
ExactFn = Callable[[float, np.ndarray, np.ndarray], Tuple[FieldTerms, FieldTerms]]

ZERO_REACTION = dict(alpha=(0.0, 0.0), beta=((0.0, 0.0), (0.0, 0.0)))


@dataclass
class MmsCase:
    name: str
    bc_mode: BCMode
    terms: ExactFn
    params: ModelParams = field(default_factory=lambda: ModelParams(c1=1.0, c2=0.5, **ZERO_REACTION))

    def exact(self, t: float, x1: np.ndarray, x2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        (u1, *_), (u2, *_) = self.terms(t, np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        return u1, u2


def _sine_mixed_terms(t, x1, x2):
    decay = math.exp(-t) / 3.0
    pi2 = math.pi ** 2

    def one(xi, xj):
        s, c = np.sin(math.pi * xi), np.cos(math.pi * xj)
        u = decay * s * (2.0 + c)
        return u, -u, -pi2 * u, decay * s * (-pi2 * c)

    u1, dt1, d11, d12 = one(x1, x2)
    u2, dt2, d22, d21 = one(x2, x1)
    return (u1, dt1, d11, d12), (u2, dt2, d21, d22)


def _sine_dirichlet_terms(t, x1, x2):
    u = math.exp(-t) * np.sin(math.pi * x1) * np.sin(math.pi * x2)
    lap = -math.pi ** 2 * u
    return (u, -u, lap, lap), (u.copy(), -u, lap, lap)


def _polynomial_terms(t, x1, x2):
    # quadratic along the own axis, linear along the other: exact for lumped P1 / backward Euler at eps = 0
    zeros = np.zeros_like(x1)

    def one(xi, xj):
        shape = xi * (1.0 - xi) * (1.0 + xj)
        return t * shape, shape, -2.0 * t * (1.0 + xj)

    u1, dt1, d11 = one(x1, x2)
    u2, dt2, d22 = one(x2, x1)
    return (u1, dt1, d11, zeros), (u2, dt2, zeros, d22)


MMS_CASES: Dict[str, MmsCase] = {
    "sine-mixed": MmsCase("sine-mixed", BCMode.MIXED, _sine_mixed_terms),
    "sine-dirichlet": MmsCase("sine-dirichlet", BCMode.DIRICHLET, _sine_dirichlet_terms),
    "polynomial": MmsCase("polynomial", BCMode.MIXED, _polynomial_terms),
}
DEFAULT_MMS_CASE = "sine-mixed"


def get_mms_case(name: str) -> MmsCase:
    try:
        return MMS_CASES[name]
    except KeyError:
        raise ED_SOLVER_EXCEPTION(f"Unknown MMS case {name!r} (expected one of {sorted(MMS_CASES)})",
                                  ErrorType.VALIDATION, key="case")


def mms_source(case: MmsCase, params: Optional[ModelParams] = None):
    """
    g_i = d_t u_i - d_i1 d2u_i/dx1^2 - d_i2 d2u_i/dx2^2 + F_i(u_1, u_2) of the exact
    fields, with (d_i1, d_i2) the diffusivities of equation i. Returns g(t, x1, x2) -> (g1, g2).
    """
    params = params or case.params

    def source(t: float, x1, x2) -> Tuple[np.ndarray, np.ndarray]:
        fields = case.terms(t, np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
        if params.is_zero_reaction():
            reactions = (0.0, 0.0)
        else:
            reactions = reaction_field(fields[0][0], fields[1][0], params)
        g = []
        for i, ((_, dt, dxx1, dxx2), f) in enumerate(zip(fields, reactions), start=1):
            d1, d2 = params.diffusivities(i)
            g.append(dt - d1 * dxx1 - d2 * dxx2 + f)
        return g[0], g[1]

    return source


def mms_reaction(case: MmsCase, params: ModelParams, mesh: Mesh) -> ReactionFn:
    """Stepper reaction F_i - g_i at the mesh nodes, making the exact fields the solution."""
    source = mms_source(case, params)
    x1, x2 = mesh.nodes[:, 0], mesh.nodes[:, 1]

    def reaction(t, u1, u2):
        g1, g2 = source(t, x1, x2)
        if params.is_zero_reaction():
            return -g1, -g2
        f1, f2 = reaction_field(u1, u2, params)
        return f1 - g1, f2 - g2

    return reaction


@dataclass
class MmsLevel:
    nx: int
    h: float
    tau: float
    error: float
    steps: int


def mms_solve(case: MmsCase, nx: int, tau: float, t_end: float,
              params: Optional[ModelParams] = None, lin_tol: float = 1e-12) -> MmsLevel:
    params = params or case.params
    mesh = build_structured_mesh(nx, nx)
    config = SolverConfig(tau=tau, tol=1e-8, bc_mode=case.bc_mode, run_mode=RunMode.HORIZON,
                          t_end=t_end, lin_tol=lin_tol)
    systems = assemble_systems(mesh, params, config)
    x1, x2 = mesh.nodes[:, 0], mesh.nodes[:, 1]
    initial = project_onto_constraints(FieldPair(*case.exact(0.0, x1, x2), 0.0), systems)
    result = run(initial, params, config, systems=systems,
                 reaction=mms_reaction(case, params, mesh), keep_reports=False)

    e1, e2 = (u - v for u, v in zip((result.final.u1, result.final.u2), case.exact(result.final.t, x1, x2)))
    error = math.sqrt(float(systems.mass @ (e1 ** 2 + e2 ** 2)))
    logger.debug(f"MMS {case.name} nx={nx}: error {error:.3e} after {result.steps} steps")
    return MmsLevel(nx=nx, h=mesh.h1, tau=tau, error=error, steps=result.steps)


def mms_convergence(
    case: MmsCase,
    levels: int,
    params: Optional[ModelParams] = None,
    coarsest_cells: int = 4,
    tau_factor: float = 0.4,
    t_end: float = 0.1,
    lin_tol: float = 1e-12,
) -> pd.DataFrame:
    """
    Refine h -> h/2 with tau = tau_factor * h^2, starting from `coarsest_cells`
    cells per side. Columns: nx, h, tau, error (lumped L2 at t_end), rate.
    """
    if int(levels) != levels or levels < 2:
        raise ED_SOLVER_EXCEPTION(f"MMS needs at least 2 levels, got {levels}", ErrorType.VALIDATION, key="levels")
    require(coarsest_cells >= 2, f"coarsest_cells must be >= 2, got {coarsest_cells}", key="levels")
    require(tau_factor > 0.0 and t_end > 0.0, "tau_factor and t_end must be > 0", key="tau")

    rows = []
    for k in range(int(levels)):
        cells = coarsest_cells * 2 ** k
        h = 1.0 / cells
        level = mms_solve(case, cells + 1, tau_factor * h * h, t_end, params=params, lin_tol=lin_tol)
        rows.append({"nx": level.nx, "h": level.h, "tau": level.tau, "error": level.error})

    table = pd.DataFrame(rows)
    errors = table["error"].to_numpy()
    with np.errstate(divide="ignore", invalid="ignore"):
        rates = np.log2(errors[:-1] / errors[1:])
    table["rate"] = np.concatenate([[np.nan], rates])
    logger.info(f"MMS {case.name}: {levels} levels, last rate {table['rate'].iloc[-1]:.3f}")
    return table


def format_rate_table(table: pd.DataFrame) -> str:
    return table.to_string(index=False, float_format=lambda v: f"{v:.4e}", na_rep="-")


@dataclass
class SliceSolution:
    x: np.ndarray
    u1: np.ndarray     # u1(t, x1)
    u2: np.ndarray     # u2(t, x2)
    t: float
    steps: int
    picard_iterations: int


def _check_slice_preconditions(params: ModelParams):
    require(params.eps == 0.0, f"slice oracle needs eps = 0, got {params.eps}", key="eps")
    require(params.beta[0][1] == 0.0, "slice oracle needs beta12 = 0", key="beta12")
    require(params.beta[1][0] == 0.0, "slice oracle needs beta21 = 0", key="beta21")


def slice_oracle(
    params: ModelParams,
    nx: int,
    tau: float,
    horizon: float,
    u10: float = 0.5,
    u20: float = 0.5,
    tol: float = 1e-3,
    max_picard: int = 50,
) -> SliceSolution:
    """
    1D lumped-P1 / backward-Euler / Picard solver for u_i(t, x_i) on [0, 1] with
    zero Dirichlet values at both ends. Same nodal spacing and stopping rules as
    the 2D stepper; own tridiagonal assembly and banded direct solves.
    """
    _check_slice_preconditions(params)
    require(nx >= 3, f"slice oracle needs nx >= 3, got {nx}", key="nx")
    require(tau > 0.0, f"tau must be > 0, got {tau}", key="tau")
    require(horizon > 0.0, f"horizon must be > 0, got {horizon}", key="t_end")

    x = np.linspace(0.0, 1.0, nx)
    h = 1.0 / (nx - 1)
    m = np.full(nx, h)
    m[[0, -1]] = 0.5 * h

    def banded(c: float) -> np.ndarray:
        k = c / h
        ab = np.zeros((3, nx - 2))
        ab[0, 1:] = -k
        ab[1, :] = m[1:-1] / tau + 2.0 * k
        ab[2, :-1] = -k
        return ab

    systems = (banded(params.c1), banded(params.c2))

    def change(a, b) -> float:
        num = math.sqrt(sum(float(m @ (p - q) ** 2) for p, q in zip(a, b)))
        if num == 0.0:
            return 0.0
        den = math.sqrt(sum(float(m @ q ** 2) for q in b))
        return math.inf if den == 0.0 else num / den

    u = [np.full(nx, float(u10)), np.full(nx, float(u20))]
    for v in u:
        v[[0, -1]] = 0.0

    steps = int(round(horizon / tau))
    require(steps >= 1, "horizon shorter than one time step", key="t_end")
    picard_total = 0
    for n in range(1, steps + 1):
        previous = [v.copy() for v in u]
        iterate = [v.copy() for v in u]
        for k in range(1, max_picard + 1):
            # beta12 = beta21 = 0: each reaction only sees its own density
            f1, f2 = reaction_field(iterate[0], iterate[1], params)
            new = []
            for ab, prev, f in zip(systems, previous, (f1, f2)):
                rhs = (m * (prev / tau - f))[1:-1]
                v = np.zeros(nx)
                v[1:-1] = solve_banded((1, 1), ab, rhs)
                new.append(v)
            delta = change(new, iterate)
            iterate = new
            if delta < tol:
                picard_total += k
                break
        else:
            raise ED_SOLVER_EXCEPTION(f"1D Picard iteration did not converge at step {n}", ErrorType.CONVERGENCE,
                                      metric=delta)
        u = iterate

    return SliceSolution(x=x, u1=u[0], u2=u[1], t=steps * tau, steps=steps, picard_iterations=picard_total)


def slice_spread(values: np.ndarray, mesh: Mesh, axis: int) -> float:
    """Largest variation along x_axis of a nodal field, taken over all lines parallel to that axis."""
    U = mesh.grid(values)
    along = 0 if axis == 2 else 1
    return float((U.max(axis=along) - U.min(axis=along)).max())


@dataclass
class SliceComparison:
    steps: int
    max_spread: float       # worst conjugate-axis variation over all steps
    max_slice_error: float  # worst nodal gap to the 1D solution at the horizon
    oracle: SliceSolution


def compare_with_slice_oracle(
    params: ModelParams,
    nx: int,
    tau: float,
    horizon: float,
    u10: float = 0.5,
    u20: float = 0.5,
    tol: float = 1e-3,
    lin_tol: float = 1e-12,
) -> SliceComparison:
    """Run the 2D mixed-BC solver step by step next to the 1D oracle on an nx x nx mesh."""
    _check_slice_preconditions(params)
    oracle = slice_oracle(params, nx, tau, horizon, u10=u10, u20=u20, tol=tol)

    mesh = build_structured_mesh(nx, nx)
    config = SolverConfig(tau=tau, tol=tol, bc_mode=BCMode.MIXED, run_mode=RunMode.HORIZON,
                          t_end=horizon, lin_tol=lin_tol)
    systems = assemble_systems(mesh, params, config)
    state = project_onto_constraints(FieldPair.constant(mesh.n_nodes, u10, u20), systems)

    spread = 0.0
    for n in range(1, oracle.steps + 1):
        state, _ = time_step(state, params, config, systems, step_index=n, t_new=n * tau)
        spread = max(spread, slice_spread(state.u1, mesh, axis=2), slice_spread(state.u2, mesh, axis=1))

    U1, U2 = mesh.grid(state.u1), mesh.grid(state.u2)
    gap1 = np.abs(U1 - oracle.u1[None, :]).max()
    gap2 = np.abs(U2 - oracle.u2[:, None]).max()
    comparison = SliceComparison(steps=oracle.steps, max_spread=spread,
                                 max_slice_error=float(max(gap1, gap2)), oracle=oracle)
    logger.info(f"Slice oracle: {comparison.steps} steps, spread {spread:.3e}, "
                f"slice error {comparison.max_slice_error:.3e}")
    return comparison
