from flask import Blueprint, jsonify, request
from pydantic import ValidationError

from logging_config import get_logger
from schemas.config_schemas import resolve_config
from schemas.error_schemas import ErrorCode, ErrorResponseBuilder
from schemas.report_schemas import (IterationSchema, RunCreateSchema, RunListResponseSchema,
                                    RunSummarySchema, TraceResponseSchema)
from services.driver import run_scheme
from services.errors import SimulationError
from services.run_service import RunService

runs_bp = Blueprint('runs', __name__, url_prefix='/api/runs')
logger = get_logger(__name__)

# ---------------------------------------------------------------------------
# Helper utilities shared by multiple routes
# ---------------------------------------------------------------------------

def _parse_json_body(schema_cls):
    """Parse request JSON and validate against *schema_cls*.

    Returns a tuple *(validated_model, error_response, status_code)*; on
    success the last two elements are ``None``.
    """
    if not request.is_json:
        return None, ErrorResponseBuilder.invalid_json("Request must have JSON content type"), 400

    try:
        json_data = request.get_json()
    except Exception:
        return None, ErrorResponseBuilder.invalid_json("Request body must be valid JSON"), 400

    if not isinstance(json_data, dict):
        return None, ErrorResponseBuilder.invalid_json("Request body must be a JSON object"), 400

    try:
        return schema_cls(**json_data), None, None
    except ValidationError as exc:
        field_errors = ErrorResponseBuilder.pydantic_validation_error(exc)
        return None, ErrorResponseBuilder.from_field_errors(field_errors), 400


def _error_status(err):
    """Map our ErrorCode enum to an HTTP status code."""
    mapping = {
        ErrorCode.RESOURCE_NOT_FOUND: 404,
        ErrorCode.VALIDATION_ERROR: 400,
        ErrorCode.INVALID_JSON: 400,
        ErrorCode.UNREADABLE_CONFIG: 400,
        ErrorCode.BUDGET_INFEASIBLE: 422,
        ErrorCode.ZF_INFEASIBLE: 422,
        ErrorCode.SINGULAR_CHANNEL: 422,
        ErrorCode.DATABASE_ERROR: 500,
    }
    return mapping.get(err.code, 500)


@runs_bp.route('', methods=['GET'])
def get_all_runs():
    """List stored runs, oldest first."""
    runs = RunService.list_runs()
    response = RunListResponseSchema(runs=[RunSummarySchema.model_validate(run) for run in runs])
    return jsonify(response.model_dump(mode='json'))


@runs_bp.route('/scheme/<scheme>', methods=['GET'])
def get_runs_by_scheme(scheme):
    runs = RunService.list_by_scheme(scheme=scheme)
    response = RunListResponseSchema(runs=[RunSummarySchema.model_validate(run) for run in runs])
    return jsonify(response.model_dump(mode='json'))


@runs_bp.route('/<int:id>', methods=['GET'])
def get_run(id):
    """Get one stored run.

    Status Codes:
        200: Run found and returned successfully.
        404: Run not found.
    """
    run = RunService.get_run(id=id)
    if not run:
        error_response = ErrorResponseBuilder.not_found("Run", id)
        return jsonify(error_response.model_dump()), 404
    return jsonify(RunSummarySchema.model_validate(run).model_dump(mode='json'))


@runs_bp.route('/<int:id>/trace', methods=['GET'])
def get_run_trace(id):
    run = RunService.get_run(id=id)
    if not run:
        error_response = ErrorResponseBuilder.not_found("Run", id)
        return jsonify(error_response.model_dump()), 404
    response = TraceResponseSchema(run_id=run.id,
                                   trace=[IterationSchema.model_validate(row) for row in run.trace])
    return jsonify(response.model_dump())


@runs_bp.route('/<int:id>', methods=['DELETE'])
def delete_run(id):
    """Delete a stored run and its trace.

    Status Codes:
        204: Run deleted successfully.
        404: Run not found.
        500: Internal server error.
    """
    success, error_response = RunService.delete_run(id=id)
    if not success:
        return jsonify(error_response.model_dump()), _error_status(error_response)
    return '', 204


@runs_bp.route('', methods=['POST'])
def create_run():
    """Validate a configuration, run one scheme synchronously and store the result.

    Expects JSON body with optional scheme, seed and overrides fields.

    Status Codes:
        201: Run completed and stored.
        400: Invalid request body or configuration.
        422: Configuration is valid but numerically infeasible.
        500: Internal server error.
    """
    run_request, err, status = _parse_json_body(RunCreateSchema)
    if err:
        return jsonify(err.model_dump()), status

    config, err = resolve_config(overrides=run_request.overrides, seed=run_request.seed)
    if err:
        return jsonify(err.model_dump()), _error_status(err)

    try:
        report = run_scheme(run_request.scheme, config)
    except SimulationError as exc:
        error_response = exc.to_response()
        logger.warning("Run failed", scheme=run_request.scheme, code=error_response.code.value,
                       message=error_response.message)
        return jsonify(error_response.model_dump()), _error_status(error_response)
    except Exception:
        logger.exception("Unexpected error while running", scheme=run_request.scheme)
        error_response = ErrorResponseBuilder.internal_server_error()
        return jsonify(error_response.model_dump()), 500

    record, err = RunService.record_run(report)
    if err:
        return jsonify(err.model_dump()), _error_status(err)
    logger.info("Run stored via API", run_id=record.id, scheme=record.scheme)
    return jsonify(RunSummarySchema.model_validate(record).model_dump(mode='json')), 201
