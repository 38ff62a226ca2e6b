import os
from logging.config import dictConfig


def configure_logging(level=None, stream="ext://sys.stderr"):
    dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "default": {
                    "format": "[%(asctime)s] %(levelname)s in %(module)s: %(message)s",
                }
            },
            "handlers": {
                "default": {
                    "class": "logging.StreamHandler",
                    "stream": stream,
                    "formatter": "default",
                }
            },
            "root": {
                "level": level or os.environ.get("LOGLEVEL", "WARNING"),
                "handlers": ["default"],
            },
        }
    )
