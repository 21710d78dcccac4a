import pytest

from app import create_app
from models import db


@pytest.fixture
def app(tmp_path, monkeypatch):
    """Create and configure a test Flask application."""
    monkeypatch.setenv('SIM_OUTPUT_DIR', str(tmp_path / 'results'))
    monkeypatch.setenv('LOG_DIR', str(tmp_path / 'logs'))
    app = create_app('testing')

    with app.app_context():
        db.create_all()
        yield app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def client(app):
    """Create a test client for the Flask application."""
    return app.test_client()


@pytest.fixture
def runner(app):
    """Create a test runner for the Flask application."""
    return app.test_cli_runner()
