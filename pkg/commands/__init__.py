from .sim import sim_cli


def register_commands(app):
    """Register the CLI command groups with the Flask app.

    Args:
        app: The Flask application instance to register commands with.
    """
    app.cli.add_command(sim_cli)
