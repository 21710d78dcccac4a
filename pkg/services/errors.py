"""Exceptions raised by the numerical services.

Each exception maps onto an ``ErrorResponse`` so the CLI and the HTTP layer
report solver failures with the same schema as validation failures.
"""

from schemas.error_schemas import ErrorCode, ErrorResponse, ErrorResponseBuilder


class SimulationError(Exception):
    """Base class for simulator errors."""

    code = ErrorCode.INTERNAL_SERVER_ERROR

    def to_response(self) -> ErrorResponse:
        return ErrorResponseBuilder.numerical_error(self.code, str(self))


class ConfigurationError(SimulationError):
    """A configuration bound is violated (e.g. density budget infeasible)."""

    def __init__(self, message, field_errors=None):
        super().__init__(message)
        self.field_errors = field_errors or []

    def to_response(self) -> ErrorResponse:
        if self.field_errors:
            return ErrorResponseBuilder.from_field_errors(self.field_errors)
        return ErrorResponseBuilder.numerical_error(ErrorCode.BUDGET_INFEASIBLE, str(self))


class GridMismatchError(SimulationError):
    """Fields defined on different grids were combined."""

    code = ErrorCode.GRID_MISMATCH


class ContractViolationError(SimulationError):
    """An input violates a documented precondition (e.g. non-unit beamformer)."""

    code = ErrorCode.CONTRACT_VIOLATION


class SingularChannelError(SimulationError):
    """The effective channel is too ill-conditioned for zero-forcing."""

    code = ErrorCode.SINGULAR_CHANNEL


class DomainError(SimulationError):
    """A scalar argument lies outside the function's domain."""

    code = ErrorCode.DOMAIN_ERROR


class StepRejectedError(SimulationError):
    """A retraction step collapsed an entry to zero; the caller halves the step."""

    code = ErrorCode.STEP_REJECTED
