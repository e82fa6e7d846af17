from __future__ import annotations
from enum import Enum
from typing import Optional


class ErrorType(Enum):
    VALIDATION = "VALIDATION"
    CONFIG_PARSE = "CONFIG_PARSE"
    CONVERGENCE = "CONVERGENCE"
    NOT_STATIONARY = "NOT_STATIONARY"
    IO = "IO"


class ED_SOLVER_EXCEPTION(Exception):
    """
    Single error family of the solver libs.
    `key` names the offending config key, `line` the 1-based config line,
    `metric` the last stationary metric of an aborted run.
    """
    def __init__(
        self,
        message: str,
        err_type: ErrorType = ErrorType.VALIDATION,
        key: Optional[str] = None,
        line: Optional[int] = None,
        metric: Optional[float] = None,
    ):
        super().__init__(message)
        self.message = message
        self.err_type = err_type
        self.key = key
        self.line = line
        self.metric = metric

    @property
    def is_user_error(self) -> bool:
        return self.err_type in (ErrorType.VALIDATION, ErrorType.CONFIG_PARSE)

    def __str__(self):
        return f"ED_SOLVER_EXCEPTION(Type: {self.err_type.value}, Message: {self.message})"


def require(condition: bool, message: str, key: Optional[str] = None) -> None:
    if not condition:
        raise ED_SOLVER_EXCEPTION(message, ErrorType.VALIDATION, key=key)
