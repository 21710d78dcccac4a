import os

from flask import Flask

from commands import register_commands
from commands.sim import sim_cli
from config import config
from logging_config import get_logger, setup_logging
from models import db
from routes import register_blueprints

logger = get_logger(__name__)


def config_setup(app, config_name=None):
    """Configure the Flask application with environment-specific settings.

    Args:
        app: The Flask application instance to configure.
        config_name (str, optional): Key of the ``config`` registry; defaults to ``FLASK_ENV``.
    """
    config_name = config_name or os.environ.get('FLASK_ENV', 'default')
    app.config.from_object(config[config_name]())
    setup_logging(level=app.config.get('LOG_LEVEL'), log_dir=app.config.get('LOG_DIR'))

    logger.info("Application configured",
                environment=config_name,
                debug=app.config.get('DEBUG', False),
                sim_threads=app.config.get('SIM_THREADS'),
                run_recording_enabled=app.config.get('RUN_RECORDING_ENABLED', False))


def setup_database(app):
    """Initialize the run registry and create tables if they don't exist.

    Args:
        app: The Flask application instance to configure database for.
    """
    db.init_app(app)

    with app.app_context():
        db.create_all()
        logger.info("Run registry initialized and tables created")


def create_app(config_name=None):
    """Application factory shared by the HTTP server, the CLI and the tests.

    Args:
        config_name (str, optional): Key of the ``config`` registry.

    Returns:
        Flask: Configured application with blueprints and the ``sim`` command group.
    """
    app = Flask(__name__)

    config_setup(app, config_name)
    setup_database(app)
    register_blueprints(app)
    register_commands(app)

    @app.route('/health')
    def health_check():
        """Health check endpoint for monitoring application status.

        Returns:
            str: A simple health status message.
        """
        logger.debug("Health check requested")
        return 'healthy, thank you!'

    return app


def cli_main():
    """Console entry point: ``aris-sim <command> ...`` without going through ``flask``."""
    app = create_app()
    with app.app_context():
        sim_cli.main(prog_name='aris-sim')


if __name__ == '__main__':
    setup_logging()
    logger.info("Starting run registry server")

    app = create_app()

    logger.info("Flask application ready to start",
                host='0.0.0.0',
                port=5003,
                debug=app.config.get('DEBUG', False))

    app.run(host='0.0.0.0', debug=app.config.get('DEBUG', False), port=5003)
