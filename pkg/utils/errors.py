"""Error taxonomy for the split sampling library and benchmark harness."""

from enum import Enum
from typing import Any, Dict, Optional


class ErrorType(str, Enum):
    """Error categories."""
    DOMAIN_ERROR = "domain_error"
    CONTRACT_ERROR = "contract_error"
    RANGE_ERROR = "range_error"
    CONSTRUCTION_ERROR = "construction_error"
    ESTIMATION_ERROR = "estimation_error"
    CONFIG_ERROR = "config_error"
    IO_ERROR = "io_error"


class ErrorCode(str, Enum):
    """Specific error codes."""
    # Input errors
    NON_FINITE_INPUT = "non_finite_input"
    NONPOSITIVE_INPUT = "nonpositive_input"
    OUTSIDE_SUPPORT = "outside_support"
    INVALID_PARAMETER = "invalid_parameter"

    # Kernel contract
    CONSTRAINT_VIOLATED = "constraint_violated"

    # Weight function
    OUT_OF_RANGE = "out_of_range"
    DUPLICATE_KNOTS = "duplicate_knots"
    NONPOSITIVE_ESTIMATE = "nonpositive_estimate"

    # Estimation
    EMPTY_BATCH = "empty_batch"
    LEVEL_BUDGET_EXHAUSTED = "level_budget_exhausted"
    DEGENERATE_QUANTILE = "degenerate_quantile"
    STAGE_FAILURE = "stage_failure"

    # Harness
    INFEASIBLE_BUDGET = "infeasible_budget"
    INCOMPATIBLE_ESTIMATOR = "incompatible_estimator"
    INVALID_CONFIG = "invalid_config"
    UNWRITABLE_PATH = "unwritable_path"


class SplitSamplingError(Exception):
    """Base class carrying a typed, serialisable error detail."""

    def __init__(
        self,
        message: str,
        error_type: ErrorType,
        error_code: ErrorCode,
        param: Optional[str] = None,
    ):
        super().__init__(message)
        self.message = message
        self.error_type = error_type
        self.error_code = error_code
        self.param = param

    def to_dict(self) -> Dict[str, Any]:
        detail: Dict[str, Any] = {
            "message": self.message,
            "type": self.error_type.value,
            "code": self.error_code.value,
        }
        if self.param:
            detail["param"] = self.param
        return {"error": detail}


class DomainError(SplitSamplingError, ValueError):
    """Input outside the model's domain."""


class ContractError(SplitSamplingError, ValueError):
    """Kernel called on a state violating its constraint."""


class RangeError(SplitSamplingError, ValueError):
    """Argument outside an invertible range."""


class ConstructionError(SplitSamplingError, ValueError):
    """Malformed level grid or weight knots."""


class EstimationError(SplitSamplingError, RuntimeError):
    """Estimator could not produce a value."""


class LevelConstructionError(EstimationError):
    """Level construction ran out of budget; keeps the grid built so far."""

    def __init__(self, message: str, partial_grid: Any = None, param: Optional[str] = None):
        super().__init__(
            message,
            ErrorType.CONSTRUCTION_ERROR,
            ErrorCode.LEVEL_BUDGET_EXHAUSTED,
            param,
        )
        self.partial_grid = partial_grid


class StageFailureError(EstimationError):
    """A multilevel stage produced no usable samples."""


class ConfigError(SplitSamplingError, ValueError):
    """Invalid or infeasible experiment configuration."""


class ReportIOError(SplitSamplingError, OSError):
    """Report or trace could not be written."""


def domain_error(message: str, param: Optional[str] = None,
                 code: ErrorCode = ErrorCode.OUTSIDE_SUPPORT) -> DomainError:
    """Create a domain error."""
    return DomainError(message, ErrorType.DOMAIN_ERROR, code, param)


def contract_error(message: str, param: Optional[str] = None) -> ContractError:
    """Create a kernel contract error."""
    return ContractError(message, ErrorType.CONTRACT_ERROR, ErrorCode.CONSTRAINT_VIOLATED, param)


def range_error(message: str, param: Optional[str] = None) -> RangeError:
    """Create a range error."""
    return RangeError(message, ErrorType.RANGE_ERROR, ErrorCode.OUT_OF_RANGE, param)


def construction_error(message: str, param: Optional[str] = None,
                       code: ErrorCode = ErrorCode.DUPLICATE_KNOTS) -> ConstructionError:
    """Create a grid construction error."""
    return ConstructionError(message, ErrorType.CONSTRUCTION_ERROR, code, param)


def empty_batch_error(message: str = "Sample batch is empty") -> EstimationError:
    """Create an empty batch error."""
    return EstimationError(message, ErrorType.ESTIMATION_ERROR, ErrorCode.EMPTY_BATCH)


def level_budget_error(message: str, partial_grid: Any = None) -> LevelConstructionError:
    """Create a level construction budget error."""
    return LevelConstructionError(message, partial_grid=partial_grid)


def stage_failure_error(message: str, param: Optional[str] = None,
                        code: ErrorCode = ErrorCode.STAGE_FAILURE) -> StageFailureError:
    """Create a stage failure error."""
    return StageFailureError(message, ErrorType.ESTIMATION_ERROR, code, param)


def config_error(message: str, param: Optional[str] = None,
                 code: ErrorCode = ErrorCode.INVALID_CONFIG) -> ConfigError:
    """Create a configuration error."""
    return ConfigError(message, ErrorType.CONFIG_ERROR, code, param)


def report_io_error(message: str, param: Optional[str] = None) -> ReportIOError:
    """Create a report I/O error."""
    return ReportIOError(message, ErrorType.IO_ERROR, ErrorCode.UNWRITABLE_PATH, param)
