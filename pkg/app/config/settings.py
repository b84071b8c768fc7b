"""
Sistema de configuración híbrida: config.toml + variables de entorno

Este módulo carga configuraciones desde dos fuentes:
1. config.toml - Configuraciones públicas y estáticas
2. Variables de entorno WEEE_* (o .env) - Overrides locales

La precedencia es: entorno > config.toml > valores por defecto.
Los flags de la CLI y el JSON de escenario se aplican encima, en app/cli.
"""

import os
import toml
from pathlib import Path
from typing import Any, Dict, Optional
from pydantic_settings import BaseSettings
from pydantic import Field, validator
from functools import lru_cache


ENV_PREFIX = "WEEE_"


class Settings(BaseSettings):
    """
    Configuración híbrida del simulador.

    Carga configuraciones desde:
    - config.toml (configuraciones públicas)
    - entorno / .env con prefijo WEEE_ (p. ej. WEEE_SEED)
    """

    # ==================== APP ====================
    app_name: str = Field(default="weee-sorter")
    app_version: str = Field(default="1.0.0")
    environment: str = Field(default="default")

    # ==================== SIMULATION ====================
    seed: int = Field(default=0)
    output_dir: str = Field(default="out")
    dt: float = Field(default=0.001)

    # ==================== NETWORK ====================
    host: str = Field(default="127.0.0.1")
    port: int = Field(default=7070)
    connect_timeout: float = Field(default=5.0)

    # ==================== LOGGING ====================
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="text")
    log_file_path: str = Field(default="")
    log_max_bytes: int = Field(default=10485760)  # 10MB
    log_backup_count: int = Field(default=5)

    model_config = {
        "env_prefix": ENV_PREFIX,
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "extra": "ignore"
    }

    def __init__(self, config_path: Optional[Path] = None, **kwargs):
        """Inicializa configuración cargando config.toml primero."""
        config_path = config_path or Path(__file__).parent.parent.parent / "config.toml"
        config_toml_data: Dict[str, Any] = {}
        if config_path.exists():
            config_toml_data = toml.load(config_path)
            kwargs = self._apply_toml_config(kwargs, config_toml_data)

        super().__init__(**kwargs)

        self._apply_environment_config(config_toml_data)

    def _apply_toml_config(self, kwargs: Dict[str, Any], toml_data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Aplica configuraciones desde config.toml.
        Solo aplica si el valor no llega como kwarg ni como variable WEEE_*.
        """

        # Mapeo de campos del TOML a campos de Settings
        mappings = {
            ("app", "name"): "app_name",
            ("app", "version"): "app_version",

            ("simulation", "seed"): "seed",
            ("simulation", "output_dir"): "output_dir",
            ("simulation", "dt"): "dt",

            ("network", "host"): "host",
            ("network", "port"): "port",
            ("network", "connect_timeout"): "connect_timeout",

            ("logging", "level"): "log_level",
            ("logging", "format"): "log_format",
            ("logging", "file_path"): "log_file_path",
            ("logging", "max_bytes"): "log_max_bytes",
            ("logging", "backup_count"): "log_backup_count",
        }

        for toml_path, setting_name in mappings.items():
            if setting_name in kwargs or f"{ENV_PREFIX}{setting_name.upper()}" in os.environ:
                continue
            value = toml_data
            try:
                for key in toml_path:
                    value = value[key]
                kwargs[setting_name] = value
            except KeyError:
                pass  # El valor no existe en el TOML, usar default

        return kwargs

    def _apply_environment_config(self, toml_data: Dict[str, Any]):
        """Aplica configuraciones específicas del ambiente actual."""
        env = self.environment.lower()
        env_config = toml_data.get("environments", {}).get(env, {})

        for key, value in env_config.items():
            if hasattr(self, key) and f"{ENV_PREFIX}{key.upper()}" not in os.environ:
                setattr(self, key, value)

    @validator("log_format")
    def validate_log_format(cls, v):
        """Solo se admiten los formatos json y text."""
        v = str(v).lower()
        if v not in ("json", "text"):
            raise ValueError("log_format debe ser 'json' o 'text'")
        return v

    @validator("log_level")
    def validate_log_level(cls, v):
        """Normaliza el nivel a mayúsculas."""
        return str(v).upper()


@lru_cache()
def get_settings() -> Settings:
    """
    Retorna instancia singleton de Settings.

    Usa lru_cache para asegurar que solo se crea una instancia.
    """
    return Settings()


# Instancia global de configuración
settings = get_settings()
