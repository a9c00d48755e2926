import logging
import json
import os
from datetime import datetime, timezone
from pathlib import Path


LOG_DIR = Path(os.getenv("POINTERMIX_LOG_DIR", "logs"))
LOG_DIR.mkdir(parents=True, exist_ok=True)


class JsonFormatter(logging.Formatter):
    """
    Custom formatter to output logs in JSON format.

    Structured fields can be attached with ``extra={"context": {...}}``.
    """

    def format(self, record):
        log_record = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "module": record.module,
            "message": record.getMessage(),
        }
        context = getattr(record, "context", None)
        if context:
            log_record["context"] = context
        return json.dumps(log_record, default=str)


def setup_logger(name="pointermix"):
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)

    # Prevent duplicate logs
    if logger.handlers:
        return logger

    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)

    # File handler
    file_handler = logging.FileHandler(LOG_DIR / "app.log")
    file_handler.setLevel(logging.DEBUG)

    formatter = JsonFormatter()
    console_handler.setFormatter(formatter)
    file_handler.setFormatter(formatter)

    logger.addHandler(console_handler)
    logger.addHandler(file_handler)

    return logger
