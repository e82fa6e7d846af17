"""
Text formats of the solver:

- config: flat `key = value` lines, `#` starts a comment, missing keys keep
  their defaults, unknown keys are rejected.
- snapshot: CSV with header `x1,x2,u1,u2`, one node per line in row-major
  node order, 9 significant digits.
- summary: flat `key = value` lines of the RunSummary fields followed by the
  diagnostics as `check.<name> = value` and the config echo as
  `config.<key> = value`.
"""

from __future__ import annotations
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from .experiment_config import ExperimentConfig
from .mesh_lib import Mesh
from .model_lib import Convention, ModelParams
from .solver_errors import ED_SOLVER_EXCEPTION, ErrorType
from .stepper_lib import BCMode, FieldPair, RunMode, SolverConfig

logger = logging.getLogger(__name__)

INT_KEYS = {"nx", "ny", "max_picard", "max_steps", "seed"}
ENUM_KEYS = {"bc": BCMode, "convention": Convention, "run_mode": RunMode}
CONFIG_KEYS = [
    "nx", "ny", "tau", "tol", "tol_s", "eps", "c1", "c2",
    "alpha1", "alpha2", "beta11", "beta12", "beta21", "beta22",
    "bc", "convention", "u10", "u20", "run_mode", "t_end",
    "max_picard", "max_steps", "seed", "lin_tol",
]
SNAPSHOT_COLUMNS = ["x1", "x2", "u1", "u2"]
SUMMARY_CONFIG_PREFIX = "config."
SUMMARY_CHECK_PREFIX = "check."


def _parse_lines(text: str) -> Iterable[Tuple[int, str, str]]:
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ED_SOLVER_EXCEPTION(f"line {line_no}: expected 'key = value', got {raw.strip()!r}",
                                      ErrorType.CONFIG_PARSE, line=line_no)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ED_SOLVER_EXCEPTION(f"line {line_no}: empty key or value in {raw.strip()!r}",
                                      ErrorType.CONFIG_PARSE, line=line_no)
        yield line_no, key, value


def _convert(key: str, value: str, line_no: Optional[int]):
    try:
        if key in INT_KEYS:
            return int(value)
        if key in ENUM_KEYS:
            return ENUM_KEYS[key](value.lower())
        number = float(value)
    except ValueError:
        raise ED_SOLVER_EXCEPTION(
            f"line {line_no}: invalid value {value!r} for {key}" if line_no else f"invalid value {value!r} for {key}",
            ErrorType.CONFIG_PARSE, key=key, line=line_no)
    if not math.isfinite(number):
        raise ED_SOLVER_EXCEPTION(f"{key} must be finite, got {value!r}", ErrorType.VALIDATION, key=key, line=line_no)
    return number


def parse_overrides(text: str) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for line_no, key, value in _parse_lines(text):
        if key not in CONFIG_KEYS:
            raise ED_SOLVER_EXCEPTION(f"line {line_no}: unknown config key {key!r}",
                                      ErrorType.VALIDATION, key=key, line=line_no)
        if key in values:
            raise ED_SOLVER_EXCEPTION(f"line {line_no}: duplicate config key {key!r}",
                                      ErrorType.CONFIG_PARSE, key=key, line=line_no)
        values[key] = _convert(key, value, line_no)
    return values


def config_to_values(config: ExperimentConfig) -> Dict[str, object]:
    p, s = config.params, config.solver
    values = {
        "nx": config.nx, "ny": config.ny,
        "tau": s.tau, "tol": s.tol, "tol_s": s.tol_s,
        "eps": p.eps, "c1": p.c1, "c2": p.c2,
        "alpha1": p.alpha[0], "alpha2": p.alpha[1],
        "beta11": p.beta[0][0], "beta12": p.beta[0][1],
        "beta21": p.beta[1][0], "beta22": p.beta[1][1],
        "bc": s.bc_mode, "convention": p.convention,
        "u10": config.u10, "u20": config.u20,
        "run_mode": s.run_mode, "t_end": s.t_end,
        "max_picard": s.max_picard, "max_steps": s.max_steps,
        "seed": config.seed, "lin_tol": s.lin_tol,
    }
    return values


def apply_overrides(base: ExperimentConfig, overrides: Dict[str, object]) -> ExperimentConfig:
    values = config_to_values(base)
    values.update(overrides)
    params = ModelParams(
        c1=values["c1"], c2=values["c2"], eps=values["eps"],
        alpha=(values["alpha1"], values["alpha2"]),
        beta=((values["beta11"], values["beta12"]), (values["beta21"], values["beta22"])),
        convention=values["convention"],
    )
    solver = SolverConfig(
        tau=values["tau"], tol=values["tol"], tol_s=values["tol_s"],
        max_picard=values["max_picard"], max_steps=values["max_steps"],
        bc_mode=values["bc"], run_mode=values["run_mode"], t_end=values["t_end"],
        lin_tol=values["lin_tol"],
    )
    return ExperimentConfig(params=params, solver=solver, nx=values["nx"], ny=values["ny"],
                            u10=values["u10"], u20=values["u20"], seed=values["seed"],
                            experiment_id=base.experiment_id, output_dir=base.output_dir)


def load_config(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    overrides = parse_overrides(text)
    config = apply_overrides(base or ExperimentConfig(), overrides)
    logger.debug(f"Loaded config with {len(overrides)} overrides: {sorted(overrides)}")
    return config


def load_config_file(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ED_SOLVER_EXCEPTION(f"Cannot read config {path}: {e}", ErrorType.CONFIG_PARSE) from e
    return load_config(text)


def _format_value(value) -> str:
    if hasattr(value, "value"):
        return str(value.value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    lines = []
    for key, value in config_to_values(config).items():
        if value is None:
            continue
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def write_snapshot(state: FieldPair, mesh: Mesh, path) -> Path:
    if state.u1.size != mesh.n_nodes:
        raise ED_SOLVER_EXCEPTION("Snapshot fields do not match the mesh", ErrorType.VALIDATION)
    path = Path(path)
    frame = pd.DataFrame({
        "x1": mesh.nodes[:, 0],
        "x2": mesh.nodes[:, 1],
        "u1": state.u1,
        "u2": state.u2,
    }, columns=SNAPSHOT_COLUMNS)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.9g")
    except OSError as e:
        logger.error(f"Writing snapshot {path} failed: {e}", exc_info=True)
        raise ED_SOLVER_EXCEPTION(f"Cannot write snapshot {path}: {e}", ErrorType.IO) from e
    logger.debug(f"Snapshot written: {path} ({mesh.n_nodes} nodes)")
    return path


def read_snapshot(path, t: float = 0.0) -> Tuple[np.ndarray, FieldPair]:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise ED_SOLVER_EXCEPTION(f"Cannot read snapshot {path}: {e}", ErrorType.IO) from e
    if list(frame.columns) != SNAPSHOT_COLUMNS:
        raise ED_SOLVER_EXCEPTION(f"Unexpected snapshot columns {list(frame.columns)}", ErrorType.IO)
    coords = frame[["x1", "x2"]].to_numpy(dtype=float)
    return coords, FieldPair(frame["u1"].to_numpy(dtype=float), frame["u2"].to_numpy(dtype=float), t)


def summary_to_text(summary, config: ExperimentConfig, checks: Optional[Dict[str, object]] = None) -> str:
    lines = []
    for name in summary.SUMMARY_FIELDS:
        value = getattr(summary, name)
        lines.append(f"{name} = {'inf' if value is None else _format_value(value)}")
    for name, value in (checks or {}).items():
        lines.append(f"{SUMMARY_CHECK_PREFIX}{name} = {_format_value(value)}")
    for line in dump_config(config).splitlines():
        lines.append(SUMMARY_CONFIG_PREFIX + line)
    return "\n".join(lines) + "\n"


def write_summary(summary, config: ExperimentConfig, path, checks: Optional[Dict[str, object]] = None) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(summary_to_text(summary, config, checks))
    except OSError as e:
        raise ED_SOLVER_EXCEPTION(f"Cannot write summary {path}: {e}", ErrorType.IO) from e
    return path


def read_summary_text(text: str) -> Dict[str, str]:
    return {key: value for _, key, value in _parse_lines(text)}


def config_from_summary(text: str) -> ExperimentConfig:
    config_lines: List[str] = [
        f"{key[len(SUMMARY_CONFIG_PREFIX):]} = {value}"
        for key, value in read_summary_text(text).items()
        if key.startswith(SUMMARY_CONFIG_PREFIX)
    ]
    return load_config("\n".join(config_lines))


def write_table(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.9g")
    except OSError as e:
        raise ED_SOLVER_EXCEPTION(f"Cannot write table {path}: {e}", ErrorType.IO) from e
    return path
