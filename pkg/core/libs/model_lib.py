"""
Competition reaction terms F_i, parameters, and the Lipschitz / monotone-shift
devices used to make the reaction monotone on a bounded box.
"""

from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np

from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType, require

logger = logging.getLogger(__name__)


class Convention(str, Enum):
    # F_i = -s_i (alpha_i - beta_i1 s1 - beta_i2 s2): self-limiting growth
    LOGISTIC = "logistic"
    # F_i = -(alpha_i s_i + s_i (beta_i1 s1 + beta_i2 s2)): sign as printed in the parameter table
    LITERAL = "literal"


@dataclass
class ModelParams:
    c1: float = 0.1
    c2: float = 0.1
    eps: float = 0.0
    alpha: Tuple[float, float] = (5.0, 4.0)
    beta: Tuple[Tuple[float, float], Tuple[float, float]] = ((3.0, 2.0), (2.0, 2.0))
    convention: Convention = Convention.LOGISTIC

    def __post_init__(self):
        self.alpha = tuple(float(a) for a in self.alpha)
        self.beta = tuple(tuple(float(b) for b in row) for row in self.beta)
        self.convention = Convention(self.convention)
        require(len(self.alpha) == 2, "alpha needs two entries", key="alpha1")
        require(len(self.beta) == 2 and all(len(r) == 2 for r in self.beta),
                "beta must be 2x2", key="beta11")
        require(self.c1 > 0.0, f"c1 must be > 0, got {self.c1}", key="c1")
        require(self.c2 > 0.0, f"c2 must be > 0, got {self.c2}", key="c2")
        require(self.eps >= 0.0, f"eps must be >= 0, got {self.eps}", key="eps")
        for i, a in enumerate(self.alpha, start=1):
            require(a >= 0.0, f"alpha{i} must be >= 0, got {a}", key=f"alpha{i}")
        for i, row in enumerate(self.beta, start=1):
            for j, b in enumerate(row, start=1):
                require(b >= 0.0, f"beta{i}{j} must be >= 0, got {b}", key=f"beta{i}{j}")

    def diffusivities(self, equation: int) -> Tuple[float, float]:
        """(d1, d2) of the diagonal diffusion tensor of equation 1 or 2."""
        if equation == 1:
            return self.c1, self.eps
        if equation == 2:
            return self.eps, self.c2
        raise ED_SOLVER_EXCEPTION(f"Unknown equation index {equation}", ErrorType.VALIDATION)

    def is_zero_reaction(self) -> bool:
        return not any(self.alpha) and not any(any(row) for row in self.beta)


@dataclass
class ShiftParams:
    lipschitz_bound: float
    box_bound: float
    lam: float = field(default=None)

    def __post_init__(self):
        if self.lam is None:
            self.lam = 2.0 * self.lipschitz_bound
        require(self.lipschitz_bound >= 0.0, "Lipschitz bound must be >= 0", key="lipschitz_bound")
        require(self.lam >= 2.0 * self.lipschitz_bound, "lambda must be >= 2L", key="lambda")


def _reaction_arrays(s1, s2, params: ModelParams):
    (b11, b12), (b21, b22) = params.beta
    a1, a2 = params.alpha
    if params.convention is Convention.LOGISTIC:
        f1 = -s1 * (a1 - b11 * s1 - b12 * s2)
        f2 = -s2 * (a2 - b21 * s1 - b22 * s2)
    else:
        f1 = -(a1 * s1 + s1 * (b11 * s1 + b12 * s2))
        f2 = -(a2 * s2 + s2 * (b21 * s1 + b22 * s2))
    return f1, f2


def reaction(s1: float, s2: float, params: ModelParams) -> Tuple[float, float]:
    if s1 < 0.0 or s2 < 0.0:
        raise ED_SOLVER_EXCEPTION(f"Negative density ({s1}, {s2})", ErrorType.VALIDATION)
    f1, f2 = _reaction_arrays(float(s1), float(s2), params)
    return float(f1), float(f2)


# nodal values down to this are treated as round-off, not as negative densities
NEGATIVITY_TOLERANCE = 1e-12


def reaction_field(u1: np.ndarray, u2: np.ndarray, params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodal evaluation of F. Negative nodal values are evaluated as they are;
    the stepper monitors them against NEGATIVITY_TOLERANCE.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape != u2.shape:
        raise ED_SOLVER_EXCEPTION(f"Field length mismatch {u1.shape} vs {u2.shape}", ErrorType.VALIDATION)
    return _reaction_arrays(u1, u2, params)


def mutation_to_diffusion(mu: float, eps_m: float) -> float:
    """c = mu * eps_m^2 / 2: diffusion constant from mutation probability and second-moment scale."""
    require(0.0 <= mu <= 1.0, f"Mutation probability must lie in [0, 1], got {mu}", key="mu")
    require(eps_m >= 0.0, f"Mutation scale must be >= 0, got {eps_m}", key="eps_m")
    return 0.5 * mu * eps_m ** 2


def lipschitz_bound(params: ModelParams, M: float) -> float:
    require(M > 0.0, f"Box bound M must be > 0, got {M}", key="M")
    (b11, b12), (b21, b22) = params.beta
    a1, a2 = params.alpha
    # bounds every partial derivative of F_i on [0, M]^2, for both conventions
    return max(a1 + 2.0 * b11 * M + b12 * M,
               a2 + 2.0 * b22 * M + b21 * M)


def monotone_shift(params: ModelParams, M: float) -> ShiftParams:
    L = lipschitz_bound(params, M)
    shift = ShiftParams(lipschitz_bound=L, box_bound=M)
    logger.debug(f"Monotone shift on [0, {M}]^2: L={L}, lambda={shift.lam}")
    return shift


def default_box_bound(params: ModelParams, initial_max: float = 0.0) -> float:
    diag = [b for b in (params.beta[0][0], params.beta[1][1]) if b > 0.0]
    bound = max(params.alpha) / min(diag) if diag else 0.0
    bound = max(bound, initial_max)
    return bound if bound > 0.0 else 1.0


def shifted_reaction(lam: float, t: float, s1: float, s2: float, params: ModelParams) -> Tuple[float, float]:
    if s1 < 0.0 or s2 < 0.0:
        raise ED_SOLVER_EXCEPTION(f"Negative density ({s1}, {s2})", ErrorType.VALIDATION)
    require(t >= 0.0, f"Time must be >= 0, got {t}", key="t")
    if lam == 0.0:
        return reaction(s1, s2, params)
    grow = math.exp(lam * t)
    f1, f2 = reaction(grow * s1, grow * s2, params)
    return lam * s1 + f1 / grow, lam * s2 + f2 / grow


def shifted_reaction_field(lam: float, t: float, u1: np.ndarray, u2: np.ndarray, params: ModelParams):
    if lam == 0.0:
        return reaction_field(u1, u2, params)
    grow = math.exp(lam * t)
    f1, f2 = reaction_field(grow * np.asarray(u1), grow * np.asarray(u2), params)
    return lam * np.asarray(u1) + f1 / grow, lam * np.asarray(u2) + f2 / grow


def _sample_pairs(M: float, samples: int, seed: int):
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, M, size=(2, samples))
    sigma = rng.uniform(0.0, M, size=(2, samples))
    return s, sigma


def check_monotonicity(params: ModelParams, M: float, samples: int = 10_000, seed: int = 0,
                       lam: float = None, t: float = 0.0) -> float:
    """
    Minimum over random pairs (s, sigma) in [0, M]^4 of
    sum_i (Fhat_i(s) - Fhat_i(sigma)) (s_i - sigma_i). Nonnegative when the shift works.
    """
    if lam is None:
        lam = monotone_shift(params, M).lam
    s, sigma = _sample_pairs(M, samples, seed)
    f1s, f2s = shifted_reaction_field(lam, t, s[0], s[1], params)
    f1r, f2r = shifted_reaction_field(lam, t, sigma[0], sigma[1], params)
    slack = (f1s - f1r) * (s[0] - sigma[0]) + (f2s - f2r) * (s[1] - sigma[1])
    return float(slack.min())


def check_lipschitz(params: ModelParams, M: float, samples: int = 10_000, seed: int = 0) -> float:
    """Minimum of L (|ds1| + |ds2|) - |F_i(s) - F_i(sigma)| over sampled pairs and both i."""
    L = lipschitz_bound(params, M)
    s, sigma = _sample_pairs(M, samples, seed)
    f1s, f2s = reaction_field(s[0], s[1], params)
    f1r, f2r = reaction_field(sigma[0], sigma[1], params)
    budget = L * (np.abs(s[0] - sigma[0]) + np.abs(s[1] - sigma[1]))
    return float(min((budget - np.abs(f1s - f1r)).min(), (budget - np.abs(f2s - f2r)).min()))


def validate_hypotheses(params: ModelParams, u10: float, u20: float) -> None:
    """Runtime form of the structural hypotheses on coefficients, data and reaction."""
    require(params.c1 > 0.0 and params.c2 > 0.0, "Diffusion constants must be positive", key="c1")
    require(params.eps >= 0.0, "eps must be >= 0", key="eps")
    for key, value in (("u10", u10), ("u20", u20)):
        require(math.isfinite(value) and value >= 0.0,
                f"Initial density {key} must be finite and >= 0, got {value}", key=key)
    grid = np.linspace(0.0, max(1.0, u10, u20), 11)
    f1, _ = reaction_field(np.zeros_like(grid), grid, params)
    _, f2 = reaction_field(grid, np.zeros_like(grid), params)
    if np.any(f1 != 0.0) or np.any(f2 != 0.0):
        raise ED_SOLVER_EXCEPTION("Reaction must vanish on the zero set of its own density",
                                  ErrorType.VALIDATION, key="convention")
