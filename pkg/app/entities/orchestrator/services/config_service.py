"""
Carga del JSON de escenario con overrides de línea de comandos

Precedencia: flags > JSON de escenario > entorno (WEEE_*) > config.toml > defaults.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from app.config.settings import get_settings
from app.entities.orchestrator.schemas.scenario_schemas import ScenarioConfig
from app.shared.exceptions import ConfigInvalidError


logger = logging.getLogger(__name__)


def _format_errors(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in e['loc']) or 'config'}: {e['msg']}" for e in error.errors()
    )


def scenario_from_dict(data: Dict[str, Any]) -> ScenarioConfig:
    """
    Raises:
        ConfigInvalidError: Algún campo no pasa validación
    """
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigInvalidError(_format_errors(e), {"errors": e.errors(include_url=False, include_context=False)})


def load_scenario_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ScenarioConfig:
    """
    Lee el JSON de escenario (si se da) y aplica los overrides no nulos.

    Ejemplo:
        cfg = load_scenario_config("scenario.json", {"seed": 1, "battery_fraction": None})
    """
    data: Dict[str, Any] = {}
    if path is not None:
        source = Path(path)
        try:
            data = json.loads(source.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigInvalidError(f"No existe el archivo de escenario {source}", {"path": str(source)})
        except json.JSONDecodeError as e:
            raise ConfigInvalidError(f"JSON inválido en {source}: {e.msg}", {"path": str(source), "line": e.lineno})
        if not isinstance(data, dict):
            raise ConfigInvalidError(f"{source} debe contener un objeto JSON", {"path": str(source)})

    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    if "dt" not in data:
        data["dt"] = get_settings().dt
    cfg = scenario_from_dict(data)
    logger.debug("Escenario cargado: %d objetos, fracción %.3f", cfg.n_items, cfg.battery_fraction)
    return cfg


def resolve_output_dir(cfg: ScenarioConfig, override: Optional[str] = None) -> Path:
    return Path(override or cfg.output_dir or get_settings().output_dir)
