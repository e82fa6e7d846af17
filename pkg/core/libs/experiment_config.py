"""
Experiment configuration and the three presets of the competition study.
Defaults are the base parameter table: 30x30 nodes (N = 900), tau = 1e-3,
initial densities (0.5, 0.5), tol = 1e-3, tol_s = 1e-5, alpha = (5, 4),
beta = [[3, 2], [2, 2]], with the equal-diffusion case c1 = c2 = 0.1.
"""

from __future__ import annotations
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

from .model_lib import ModelParams, validate_hypotheses
from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType, require
from .stepper_lib import BCMode, RunMode, SolverConfig


@dataclass
class ExperimentConfig:
    params: ModelParams = field(default_factory=ModelParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    nx: int = 30
    ny: int = 30
    u10: float = 0.5
    u20: float = 0.5
    seed: int = 0
    experiment_id: str = field(default="config", compare=False)
    output_dir: Optional[Path] = field(default=None, compare=False)

    def __post_init__(self):
        # with two nodes per axis every node lies on a constrained face
        require(self.nx >= 3, f"nx must be >= 3, got {self.nx}", key="nx")
        require(self.ny >= 3, f"ny must be >= 3, got {self.ny}", key="ny")
        require(self.seed >= 0, f"seed must be >= 0, got {self.seed}", key="seed")
        validate_hypotheses(self.params, self.u10, self.u20)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def with_solver(self, **changes) -> "ExperimentConfig":
        return self.replace(solver=dataclasses.replace(self.solver, **changes))

    def with_params(self, **changes) -> "ExperimentConfig":
        return self.replace(params=dataclasses.replace(self.params, **changes))


@dataclass
class SweepTemplate:
    base: ExperimentConfig
    eps_list: List[float]
    bc_list: List[BCMode]


EXPERIMENT_3_EPS = [0.1, 0.01, 1e-10]
EXPERIMENT_3_BC = [BCMode.DIRICHLET, BCMode.MIXED]


def experiment_preset(n: int) -> Union[ExperimentConfig, SweepTemplate]:
    base = ExperimentConfig(solver=SolverConfig(run_mode=RunMode.STATIONARY))
    if n == 1:
        return base.with_params(c1=0.1, c2=0.01, eps=0.0).replace(experiment_id="1")
    if n == 2:
        return base.with_params(c1=0.1, c2=0.1, eps=0.0).replace(experiment_id="2")
    if n == 3:
        sweep_base = base.with_params(c1=0.1, c2=0.1).replace(experiment_id="3")
        return SweepTemplate(base=sweep_base, eps_list=list(EXPERIMENT_3_EPS), bc_list=list(EXPERIMENT_3_BC))
    raise ED_SOLVER_EXCEPTION(f"Unknown experiment id {n!r} (expected 1, 2 or 3)", ErrorType.VALIDATION,
                              key="experiment")
