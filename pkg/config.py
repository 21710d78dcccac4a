import os


def _env_flag(name, default):
    return os.environ.get(name, default).lower() in ('true', '1', 'yes', 'on')


class Config:
    """Base runtime settings for the simulator, its CLI and the run registry.

    Scenario parameters (system scalars, geometry, solver knobs) live in
    ``schemas.config_schemas.SystemConfig``; this class only carries process
    level settings read from the environment.

    Attributes:
        SQLALCHEMY_DATABASE_URI: Run registry connection string.
        SQLALCHEMY_TRACK_MODIFICATIONS: Disable SQLAlchemy modification tracking.
        LOG_LEVEL: Logging level for the application.
        LOG_DIR: Directory for log files.
        LOG_MAX_BYTES: Rotation size of the log file.
        LOG_BACKUP_COUNT: Number of rotated log files kept.
        SIM_OUTPUT_DIR: Default directory for run and sweep outputs.
        SIM_THREADS: Worker count used by sweeps.
        RUN_RECORDING_ENABLED: Persist CLI runs to the run registry.
    """
    SQLALCHEMY_TRACK_MODIFICATIONS = False

    def __init__(self):
        """Initialize configuration with environment variables."""
        self.SQLALCHEMY_DATABASE_URI = os.environ.get('DATABASE_URL') or 'sqlite:///runs.db'

        self.LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')
        self.LOG_DIR = os.environ.get('LOG_DIR') or 'logs'
        self.LOG_MAX_BYTES = int(os.environ.get('LOG_MAX_BYTES', '10485760'))  # 10MB
        self.LOG_BACKUP_COUNT = int(os.environ.get('LOG_BACKUP_COUNT', '5'))

        self.SIM_OUTPUT_DIR = os.environ.get('SIM_OUTPUT_DIR') or 'results'
        self.SIM_THREADS = max(1, int(os.environ.get('SIM_THREADS', '1')))
        self.RUN_RECORDING_ENABLED = _env_flag('RUN_RECORDING_ENABLED', 'true')


class DevelopmentConfig(Config):
    """Development settings: debug logging."""
    DEBUG = True

    def __init__(self):
        super().__init__()
        self.LOG_LEVEL = 'DEBUG'


class ProductionConfig(Config):
    """Production settings: info logging, no debug."""
    DEBUG = False

    def __init__(self):
        super().__init__()
        self.LOG_LEVEL = 'INFO'


class ConfigTesting(Config):
    """Testing settings: in-memory registry, quiet logs, recording off."""
    TESTING = True

    def __init__(self):
        super().__init__()
        self.SQLALCHEMY_DATABASE_URI = 'sqlite:///:memory:'
        self.RUN_RECORDING_ENABLED = False
        self.LOG_LEVEL = 'WARNING'


config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': ConfigTesting,
    'default': DevelopmentConfig
}
