from pydantic import BaseModel
from typing import Optional, List, Any
from enum import Enum


class ErrorCode(str, Enum):
    """Standardized error codes shared by the CLI, the API and the solvers."""

    # Validation errors
    VALIDATION_ERROR = "VALIDATION_ERROR"
    MISSING_REQUIRED_FIELD = "MISSING_REQUIRED_FIELD"
    INVALID_DATA_TYPE = "INVALID_DATA_TYPE"
    VALUE_OUT_OF_RANGE = "VALUE_OUT_OF_RANGE"
    BUDGET_INFEASIBLE = "BUDGET_INFEASIBLE"
    ZF_INFEASIBLE = "ZF_INFEASIBLE"

    # Numerical contract errors
    SINGULAR_CHANNEL = "SINGULAR_CHANNEL"
    GRID_MISMATCH = "GRID_MISMATCH"
    CONTRACT_VIOLATION = "CONTRACT_VIOLATION"
    DOMAIN_ERROR = "DOMAIN_ERROR"
    STEP_REJECTED = "STEP_REJECTED"

    # Resource errors
    RESOURCE_NOT_FOUND = "RESOURCE_NOT_FOUND"

    # Database errors
    DATABASE_ERROR = "DATABASE_ERROR"

    # Request / input errors
    INVALID_JSON = "INVALID_JSON"
    UNREADABLE_CONFIG = "UNREADABLE_CONFIG"

    # Internal errors
    INTERNAL_SERVER_ERROR = "INTERNAL_SERVER_ERROR"


class FieldError(BaseModel):
    """Schema for field-specific error details."""

    field: str
    message: str
    code: ErrorCode
    value: Optional[Any] = None


class ErrorResponse(BaseModel):
    """Standardized error response schema."""

    error: str
    code: ErrorCode
    message: str
    details: Optional[List[FieldError]] = None


class ErrorResponseBuilder:
    """Builder class for creating standardized error responses."""

    @staticmethod
    def validation_error(message: str, field_errors: List[FieldError] = None) -> ErrorResponse:
        """Create a validation error response."""
        return ErrorResponse(
            error="Validation Error",
            code=ErrorCode.VALIDATION_ERROR,
            message=message,
            details=field_errors or []
        )

    @staticmethod
    def not_found(resource_type: str, resource_id: Any = None) -> ErrorResponse:
        """Create a not found error response."""
        message = f"{resource_type} not found"
        if resource_id is not None:
            message += f" with id: {resource_id}"

        return ErrorResponse(
            error="Resource Not Found",
            code=ErrorCode.RESOURCE_NOT_FOUND,
            message=message
        )

    @staticmethod
    def numerical_error(code: ErrorCode, message: str) -> ErrorResponse:
        """Create a response for a violated numerical contract."""
        return ErrorResponse(
            error="Numerical Error",
            code=code,
            message=message
        )

    @staticmethod
    def unreadable_config(path: str, reason: str) -> ErrorResponse:
        """Create a response for a configuration file that cannot be parsed."""
        return ErrorResponse(
            error="Unreadable Configuration",
            code=ErrorCode.UNREADABLE_CONFIG,
            message=f"Cannot read configuration {path}: {reason}"
        )

    @staticmethod
    def database_error(message: str = "Database operation failed") -> ErrorResponse:
        """Create a database error response."""
        return ErrorResponse(
            error="Database Error",
            code=ErrorCode.DATABASE_ERROR,
            message=message
        )

    @staticmethod
    def invalid_json(message: str = "Invalid JSON in request body") -> ErrorResponse:
        """Create an invalid JSON error response."""
        return ErrorResponse(
            error="Invalid JSON",
            code=ErrorCode.INVALID_JSON,
            message=message
        )

    @staticmethod
    def internal_server_error(message: str = "An internal server error occurred") -> ErrorResponse:
        """Create an internal server error response."""
        return ErrorResponse(
            error="Internal Server Error",
            code=ErrorCode.INTERNAL_SERVER_ERROR,
            message=message
        )

    @staticmethod
    def pydantic_validation_error(validation_error, prefix: str = "") -> List[FieldError]:
        """Convert a pydantic ValidationError into field errors.

        Returns the list (not a response) so callers can merge it with
        cross-field checks before building one validation response.
        """
        field_errors = []
        for error in validation_error.errors():
            field_path = '.'.join(str(loc) for loc in error['loc'])
            if prefix:
                field_path = f"{prefix}.{field_path}" if field_path else prefix
            error_type = error['type']

            if error_type == 'missing':
                code = ErrorCode.MISSING_REQUIRED_FIELD
            elif error_type in ('greater_than', 'greater_than_equal', 'less_than', 'less_than_equal'):
                code = ErrorCode.VALUE_OUT_OF_RANGE
            elif error_type.endswith('_parsing') or error_type.endswith('_type'):
                code = ErrorCode.INVALID_DATA_TYPE
            else:
                code = ErrorCode.VALIDATION_ERROR

            value = error.get('input')
            if not isinstance(value, (int, float, str, bool, type(None))):
                value = repr(value)
            field_errors.append(FieldError(
                field=field_path,
                message=error['msg'],
                code=code,
                value=value
            ))
        return field_errors

    @staticmethod
    def from_field_errors(field_errors: List[FieldError]) -> ErrorResponse:
        """Combine field errors into one validation response."""
        messages = [f"{fe.field}: {fe.message}" if fe.field else fe.message for fe in field_errors]
        return ErrorResponse(
            error="Validation Error",
            code=ErrorCode.VALIDATION_ERROR,
            message="; ".join(messages) if messages else "Configuration validation failed",
            details=field_errors
        )
