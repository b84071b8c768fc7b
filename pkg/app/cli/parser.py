"""
Definición de subcomandos y flags de la CLI

Cada subcomando fija `handler` con el nombre del método de
CommandController que lo atiende.
"""

import argparse

from app.config.settings import get_settings
from app.entities.detection.schemas.detection_schemas import DetectorModeEnum
from app.entities.xray_sim.schemas.enums import NoiseModeEnum


def _point(parser: argparse.ArgumentParser, name: str, help_text: str) -> None:
    parser.add_argument(f"--{name}", nargs=3, type=float, required=True, metavar=("X", "Y", "Z"), help=help_text)


def _add_simulate(subparsers) -> None:
    p = subparsers.add_parser("simulate", help="Ejecuta un escenario completo de clasificación")
    p.add_argument("--config", help="JSON de escenario (claves de ScenarioConfig)")
    p.add_argument("--seed", type=int, help="Semilla (por defecto la del escenario o WEEE_SEED)")
    p.add_argument("--n-items", dest="n_items", type=int)
    p.add_argument("--battery-fraction", dest="battery_fraction", type=float)
    p.add_argument("--headway", dest="spawn_headway_s", type=float, help="Separación entre dispositivos (s)")
    p.add_argument("--detector", dest="detector_mode", choices=[m.value for m in DetectorModeEnum])
    p.add_argument("--noise-mode", dest="noise_mode", choices=[m.value for m in NoiseModeEnum])
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--emit-frames", action="store_true", help="Escribe los frames PGM/PPM")
    p.add_argument("--emit-traj", action="store_true", help="Escribe un CSV por tramo del robot")
    network = p.add_mutually_exclusive_group()
    network.add_argument("--serve", type=int, metavar="PORT", help="Sirve el extremo robot por TCP en PORT")
    network.add_argument("--connect", metavar="HOST:PORT", help="Usa un extremo robot remoto")
    p.set_defaults(handler="simulate")


def _add_kin(subparsers) -> None:
    p = subparsers.add_parser("kin", help="Cinemática directa o inversa del robot delta")
    kin = p.add_subparsers(dest="direction", required=True)
    fk = kin.add_parser("fk", help="Ángulos (rad) -> posición (mm)")
    fk.add_argument("values", nargs=3, type=float, metavar="THETA")
    ik = kin.add_parser("ik", help="Posición (mm) -> ángulos (rad)")
    ik.add_argument("values", nargs=3, type=float, metavar="COORD")
    p.set_defaults(handler="kin")


def _add_traj(subparsers) -> None:
    p = subparsers.add_parser("traj", help="Trayectoria Pi pick-and-place como CSV")
    _point(p, "pick", "Punto de recogida (mm)")
    _point(p, "place", "Punto de depósito (mm)")
    p.add_argument("--t-total", dest="t_total", type=float, default=1.0)
    p.add_argument("--h", type=float, default=100.0)
    p.add_argument("--alpha", type=float, default=0.77)
    p.add_argument("--dt", type=float, default=0.001)
    p.add_argument("--baseline", action="store_true", help="Interpolación lineal en vez del spline")
    p.set_defaults(handler="traj")


def _add_scan(subparsers) -> None:
    p = subparsers.add_parser("scan", help="Escena JSON -> frames PGM/PPM")
    p.add_argument("scene", help="Documento de escena")
    p.add_argument("--config", help="JSON de escenario (se usa su bloque scanner)")
    p.add_argument("--noise-mode", dest="noise_mode", choices=[m.value for m in NoiseModeEnum])
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", dest="output_dir", required=True)
    p.set_defaults(handler="scan")


def _add_detect(subparsers) -> None:
    p = subparsers.add_parser("detect", help="Frames -> registros de detección JSON")
    p.add_argument("frames", help="Directorio con frames.json")
    p.add_argument("--oracle", metavar="SCENE", help="Registros exactos a partir de la escena")
    p.add_argument("--config", help="JSON de escenario (se usa su bloque detection)")
    p.add_argument("--output", required=True)
    p.set_defaults(handler="detect")


def _add_metrics(subparsers) -> None:
    p = subparsers.add_parser("metrics", help="Recall, precision, recall modificado y AP50")
    p.add_argument("pred", help="Registros predichos (JSON)")
    p.add_argument("gt", help="Registros de referencia (JSON)")
    p.add_argument("--gap", type=float, default=10.0, help="Separación máxima para fusionar GT (px)")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--output", help="CSV de salida (por defecto stdout)")
    p.set_defaults(handler="metrics")


def _add_serve(subparsers) -> None:
    p = subparsers.add_parser("serve", help="Extremo robot como servidor TCP")
    p.add_argument("--config", help="JSON de escenario (bloques robot y trajectory)")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(handler="serve")


def build_parser() -> argparse.ArgumentParser:
    """
    Ejemplo:
        args = build_parser().parse_args(["kin", "fk", "0", "0", "0"])
        args.handler  # "kin"
    """
    settings = get_settings()
    parser = argparse.ArgumentParser(prog=settings.app_name, description="Simulador de clasificación de baterías en RAEE")
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    parser.add_argument("--log-level", dest="log_level", help="Override de WEEE_LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for add in (_add_simulate, _add_kin, _add_traj, _add_scan, _add_detect, _add_metrics, _add_serve):
        add(subparsers)
    return parser
