"""
Console entry point. Configures a minimal Django project around the `optimal_balance` app and dispatches to its
management command, so `optimal-balance sweep config.cfg` is `manage.py optimal_balance sweep config.cfg`.
"""

import sys

from django.conf import settings
from django.core.management import execute_from_command_line

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {"format": "%(levelname)s %(name)s: %(message)s"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "simple"},
    },
    "loggers": {
        "optimal_balance": {"handlers": ["console"], "level": "WARNING", "propagate": False},
    },
}


def configure():
    if settings.configured:
        return

    settings.configure(
        INSTALLED_APPS=["optimal_balance"],
        TASKS={
            "default": {
                "BACKEND": "optimal_balance.backend.ThreadPoolBackend",
            },
        },
        LOGGING=LOGGING,
    )


def main(argv: list[str] | None = None):
    configure()

    argv = sys.argv[1:] if argv is None else argv
    execute_from_command_line(["optimal-balance", "optimal_balance", *argv])


def cmd_run(config_path: str):
    main(["run", config_path])


def cmd_sweep(config_path: str):
    main(["sweep", config_path])


def cmd_oracle_check(config_path: str):
    main(["oracle-check", config_path])


def cmd_bvp_compare(config_path: str):
    main(["bvp-compare", config_path])
