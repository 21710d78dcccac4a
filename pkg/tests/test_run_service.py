import json
from unittest.mock import Mock, patch

import pytest
from sqlalchemy.exc import DatabaseError, IntegrityError

from models import db
from models.run import IterationRecord, RunRecord
from schemas.error_schemas import ErrorCode
from services.driver import run_scheme
from services.run_service import RunService
from tests.fixtures import make_config


@pytest.fixture
def s3_report():
    """Cheap finished run: frozen density and random phases."""
    return run_scheme("s3", make_config(solver={'t_max': 2}))


class TestRecordRun:
    """Test RunService.record_run against the in-memory registry."""

    def test_record_run_success(self, app, s3_report):
        """Test record run success."""
        # Act
        record, err = RunService.record_run(s3_report, content_hash="a" * 40)

        # Assert
        assert err is None
        assert record.id is not None
        assert record.scheme == "s3"
        assert record.seed == 0
        assert record.sum_rate == pytest.approx(s3_report.design_sum_rate)
        assert record.worst_case_sum_rate == pytest.approx(s3_report.worst_case_sum_rate)
        assert record.content_hash == "a" * 40
        assert json.loads(record.config_json)["m_antennas"] == 4

    def test_trace_stored_in_order(self, app, s3_report):
        """Test trace stored in order."""
        record, _ = RunService.record_run(s3_report)

        stored = RunService.get_run(record.id)
        assert [row.iteration for row in stored.trace] == list(range(len(s3_report.trace)))
        assert [row.sum_rate for row in stored.trace] == pytest.approx(s3_report.trace)

    @patch('services.run_service.db')
    def test_record_run_database_error(self, mock_db, s3_report):
        """Test record run database error."""
        # Arrange
        mock_db.session.commit.side_effect = DatabaseError("statement", "params", "orig")

        # Act
        record, err = RunService.record_run(s3_report)

        # Assert
        assert record is None
        assert err.code == ErrorCode.DATABASE_ERROR
        mock_db.session.rollback.assert_called_once()

    @patch('services.run_service.db')
    def test_record_run_integrity_error(self, mock_db, s3_report):
        """Test record run integrity error."""
        # Arrange
        integrity_error = IntegrityError("statement", "params", "orig")
        integrity_error.orig = Mock()
        integrity_error.orig.__str__ = Mock(return_value="NOT NULL constraint failed: runs.scheme")
        mock_db.session.commit.side_effect = integrity_error

        # Act
        record, err = RunService.record_run(s3_report)

        # Assert
        assert record is None
        assert err.code == ErrorCode.DATABASE_ERROR
        assert "constraint" in err.message

    @patch('services.run_service.db')
    def test_record_run_unexpected_error(self, mock_db, s3_report):
        """Test record run unexpected error."""
        # Arrange
        mock_db.session.add.side_effect = RuntimeError("boom")

        # Act
        record, err = RunService.record_run(s3_report)

        # Assert
        assert record is None
        assert err.code == ErrorCode.INTERNAL_SERVER_ERROR
        mock_db.session.rollback.assert_called_once()


class TestQueries:
    """Test lookups and deletion."""

    def test_get_missing_run(self, app):
        """Test get missing run."""
        assert RunService.get_run(999) is None

    def test_list_runs_and_by_scheme(self, app, s3_report):
        """Test list runs and by scheme."""
        # Act
        RunService.record_run(s3_report)
        RunService.record_run(s3_report)

        # Assert
        assert len(RunService.list_runs()) == 2
        assert len(RunService.list_by_scheme("s3")) == 2
        assert RunService.list_by_scheme("proposed") == []

    def test_delete_run_removes_trace(self, app, s3_report):
        """Test delete run removes trace."""
        # Arrange
        record, _ = RunService.record_run(s3_report)

        # Act
        success, err = RunService.delete_run(record.id)

        # Assert
        assert success is True
        assert err is None
        assert RunService.get_run(record.id) is None
        assert db.session.query(IterationRecord).count() == 0

    def test_delete_missing_run(self, app):
        """Test delete missing run."""
        # Act
        success, err = RunService.delete_run(42)

        # Assert
        assert success is False
        assert err.code == ErrorCode.RESOURCE_NOT_FOUND

    @patch('services.run_service.db')
    def test_list_runs_database_error(self, mock_db):
        """Test list runs database error."""
        # Act
        mock_db.session.query.side_effect = DatabaseError("statement", "params", "orig")

        # Assert
        assert RunService.list_runs() == []

    @patch('services.run_service.db')
    def test_delete_run_database_error(self, mock_db):
        """Test delete run database error."""
        # Arrange
        mock_db.session.get.return_value = Mock(spec=RunRecord)
        mock_db.session.commit.side_effect = DatabaseError("statement", "params", "orig")

        # Act
        success, err = RunService.delete_run(1)

        # Assert
        assert success is False
        assert err.code == ErrorCode.DATABASE_ERROR
        mock_db.session.rollback.assert_called_once()
