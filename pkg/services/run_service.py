import json
from functools import wraps
from typing import Optional, Tuple

from sqlalchemy.exc import DatabaseError, IntegrityError

from logging_config import get_logger
from models import db
from models.run import IterationRecord, RunRecord
from schemas.error_schemas import ErrorResponse, ErrorResponseBuilder

logger = get_logger(__name__)


def handle_database_errors(operation_name: str):
    """Decorator to handle common database errors in service methods.

    Args:
        operation_name (str): Name of the operation for error messages.

    Returns:
        Decorator function that rolls back the session and returns ``(None, ErrorResponse)``.
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except IntegrityError as e:
                db.session.rollback()
                logger.warning("Constraint violated", operation=operation_name, error=str(e.orig))
                return None, ErrorResponseBuilder.database_error(
                    f"Failed to {operation_name}: a database constraint was violated"
                )
            except DatabaseError:
                db.session.rollback()
                return None, ErrorResponseBuilder.database_error(
                    f"Failed to {operation_name} due to database error"
                )
            except Exception:
                db.session.rollback()
                logger.exception("Unexpected error", operation=operation_name)
                return None, ErrorResponseBuilder.internal_server_error(
                    f"An unexpected error occurred during {operation_name}"
                )
        return wrapper
    return decorator


class RunService:
    """Persistence of completed runs and their sum-rate traces."""

    @staticmethod
    @handle_database_errors("record run")
    def record_run(report, content_hash: Optional[str] = None) -> Tuple[Optional[RunRecord], Optional[ErrorResponse]]:
        """Store a RunReport summary and its per-iteration trace.

        Args:
            report (RunReport): Finished run.
            content_hash (str, optional): Manifest content hash of the run's files.

        Returns:
            tuple: A tuple containing (RunRecord, None) on success or (None, ErrorResponse) on failure.
        """
        config = report.state.config
        record = RunRecord(
            scheme=report.scheme,
            seed=config.seed,
            config_json=json.dumps(config.model_dump(mode='json'), sort_keys=True),
            sum_rate=float(report.design_sum_rate),
            worst_case_sum_rate=float(report.worst_case_sum_rate),
            iterations=int(report.iterations),
            converged=bool(report.converged),
            content_hash=content_hash,
        )
        record.trace = [IterationRecord(iteration=t, sum_rate=float(value))
                        for t, value in enumerate(report.trace)]
        db.session.add(record)
        db.session.commit()
        logger.info("Run recorded", run_id=record.id, scheme=record.scheme, seed=record.seed)
        return record, None

    @staticmethod
    def get_run(id: int) -> Optional[RunRecord]:
        try:
            return db.session.get(RunRecord, id)
        except DatabaseError:
            return None

    @staticmethod
    def list_runs() -> list[RunRecord]:
        try:
            return db.session.query(RunRecord).order_by(RunRecord.id).all()
        except DatabaseError:
            return []

    @staticmethod
    def list_by_scheme(scheme: str) -> list[RunRecord]:
        """All stored runs of one scheme, oldest first."""
        try:
            return db.session.query(RunRecord).filter(RunRecord.scheme == scheme).order_by(RunRecord.id).all()
        except DatabaseError:
            return []

    @staticmethod
    def delete_run(id: int) -> Tuple[bool, Optional[ErrorResponse]]:
        """Delete a run and its trace.

        Returns:
            tuple: A tuple containing (True, None) on success or (False, ErrorResponse) on failure.
        """
        try:
            record = db.session.get(RunRecord, id)
            if not record:
                return False, ErrorResponseBuilder.not_found("Run", id)
            db.session.delete(record)
            db.session.commit()
            return True, None
        except DatabaseError:
            db.session.rollback()
            return False, ErrorResponseBuilder.database_error(
                "Failed to delete run due to database error"
            )
        except Exception:
            db.session.rollback()
            return False, ErrorResponseBuilder.internal_server_error(
                "An unexpected error occurred while deleting the run"
            )
