"""
Punto de entrada del simulador de clasificación de baterías en RAEE.

Uso:
    python main.py simulate --config scenario.json
    python main.py kin fk 0 0 0
    python main.py serve --port 7070
"""

import sys

from dotenv import load_dotenv

# Cargar variables de entorno (opcional) antes de construir Settings
load_dotenv()

from app.cli.commands import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
