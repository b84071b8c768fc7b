"""
Modulo de configuracion hibrida.

Exporta el settings singleton para uso en toda la aplicacion.

Uso:
    from app.config import settings

    seed = settings.seed
    output_dir = settings.output_dir
"""

from .settings import settings, get_settings, Settings

__all__ = ["settings", "get_settings", "Settings"]
