"""
Configuración de logging a partir de Settings.

Los módulos obtienen su logger con logging.getLogger(__name__);
este módulo solo instala handlers y formato una vez por proceso.
Los logs van a stderr (y opcionalmente a archivo rotativo), nunca
a los artefactos deterministas del simulador.
"""

import json
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from app.config.settings import Settings, get_settings


ROOT_LOGGER = "app"
TEXT_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


class JsonFormatter(logging.Formatter):
    """Una línea JSON por registro (level, logger, message y extras simples)."""

    _RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", (), None)).keys()) | {"message", "asctime"}

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "time": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in vars(record).items():
            if key not in self._RESERVED and isinstance(value, (str, int, float, bool)):
                payload[key] = value
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False)


def setup_logging(settings: Optional[Settings] = None, level: Optional[str] = None) -> logging.Logger:
    """
    Instala handlers en el logger raíz de la aplicación.

    Args:
        settings: Configuración (por defecto el singleton)
        level: Override del nivel (p. ej. desde --verbose)

    Returns:
        El logger "app" configurado
    """
    settings = settings or get_settings()
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    formatter: logging.Formatter
    if settings.log_format == "json":
        formatter = JsonFormatter()
    else:
        formatter = logging.Formatter(TEXT_FORMAT)

    stream = logging.StreamHandler(sys.stderr)
    stream.setFormatter(formatter)
    logger.addHandler(stream)

    if settings.log_file_path:
        path = Path(settings.log_file_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        rotating = RotatingFileHandler(
            path,
            maxBytes=settings.log_max_bytes,
            backupCount=settings.log_backup_count,
            encoding="utf-8"
        )
        rotating.setFormatter(formatter)
        logger.addHandler(rotating)

    logger.setLevel((level or settings.log_level).upper())
    logger.propagate = False
    return logger
