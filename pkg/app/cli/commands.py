"""
Controlador de la CLI

Coordina entre el parser y los services: convierte argumentos en llamadas,
formatea la salida y traduce las excepciones de la aplicación a códigos de
salida (0 ok, 2 entrada/configuración, 3 dominio).
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from pydantic import ValidationError

from app.cli.parser import build_parser
from app.config.settings import get_settings
from app.entities.detection.services.detector_service import (
    OracleDetector,
    StandInDetector,
    load_records,
    save_records,
)
from app.entities.detection.services.metrics_service import evaluate_records, write_metrics_csv
from app.entities.kinematics.schemas.kinematics_schemas import DeltaParams, EefPose, JointAngles, JointLimits
from app.entities.kinematics.services.kinematics_service import forward_kinematics, inverse_kinematics
from app.entities.orchestrator.schemas.scenario_schemas import ScenarioConfig, ScenarioReport
from app.entities.orchestrator.services.channel_service import (
    RobotEndpointServer,
    TcpChannel,
    open_channel,
    serve_robot_endpoint,
)
from app.entities.orchestrator.services.config_service import load_scenario_config, resolve_output_dir
from app.entities.orchestrator.services.endpoint_service import RobotEndpoint
from app.entities.orchestrator.services.simulation_service import run_scenario
from app.entities.trajectory.services.trajectory_service import (
    build_pi_path,
    linear_interpolation_baseline,
    plan_pick_place,
    write_cartesian_csv,
    write_trajectory_csv,
)
from app.entities.xray_sim.services.frame_io_service import load_frames, load_scene, write_frames
from app.entities.xray_sim.services.line_buffer_service import scan_scene
from app.shared.exceptions import (
    EXIT_OK,
    BaseAppException,
    ConfigInvalidError,
    UnreachableError,
)
from app.shared.formatting import format_row
from app.shared.logging_config import setup_logging


logger = logging.getLogger(__name__)

EXIT_UNEXPECTED = 1

SUMMARY_FIELDS = ("spawned", "battery_items", "sorted_to_bin", "missed", "wrong_picks",
                  "pass_through", "pick_requests", "acks", "rejects")


class CommandController:
    """
    Un método por subcomando; todos devuelven el código de salida.

    Ejemplo:
        controller = CommandController(stdout=io.StringIO())
        controller.kin(args)  # escribe "0.000000 0.000000 -738.690734"
    """

    def __init__(self, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr

    def _print(self, text: str) -> None:
        self.stdout.write(text + "\n")

    # ==================== SIMULACIÓN ====================

    def simulate(self, args) -> int:
        cfg = load_scenario_config(args.config, {
            "seed": args.seed,
            "n_items": args.n_items,
            "battery_fraction": args.battery_fraction,
            "spawn_headway_s": args.spawn_headway_s,
            "detector_mode": args.detector_mode,
            "noise_mode": args.noise_mode,
        })
        out_dir = resolve_output_dir(cfg, args.output_dir)

        server: Optional[RobotEndpointServer] = None
        channel = None
        if args.serve is not None:
            server = serve_robot_endpoint(RobotEndpoint(cfg.robot, cfg.trajectory), get_settings().host,
                                          args.serve, background=True)
            channel = TcpChannel(get_settings().host, server.port, get_settings().connect_timeout)
        elif args.connect:
            channel = open_channel(None, args.connect, get_settings().connect_timeout)

        try:
            report = run_scenario(cfg, channel=channel, out_dir=out_dir,
                                  emit_frames=args.emit_frames, emit_traj=args.emit_traj)
        finally:
            if channel is not None:
                channel.close()
            if server is not None:
                server.shutdown()
                server.server_close()

        self._print_summary(report, out_dir)
        return EXIT_OK

    def _print_summary(self, report: ScenarioReport, out_dir: Path) -> None:
        for name in SUMMARY_FIELDS:
            self._print(f"{name} {getattr(report, name)}")
        for reason, count in report.missed_reasons.items():
            self._print(f"missed[{reason}] {count}")
        self._print(f"output_dir {out_dir}")

    # ==================== CINEMÁTICA Y TRAYECTORIA ====================

    def kin(self, args) -> int:
        params = DeltaParams()
        if args.direction == "fk":
            pose = forward_kinematics(params, JointAngles(*args.values))
            self._print(format_row(pose.as_array()))
            return EXIT_OK

        joints = inverse_kinematics(params, EefPose(*args.values))
        if not JointLimits().contains(joints):
            raise UnreachableError(args.values, arm=int(_first_out_of_limits(joints)))
        self._print(format_row(joints.as_array()))
        return EXIT_OK

    def traj(self, args) -> int:
        path = build_pi_path(args.pick, args.place, args.h, args.alpha)
        if args.baseline:
            times, positions, velocities = linear_interpolation_baseline(path, args.t_total, args.dt)
            write_cartesian_csv(self.stdout, times, positions, velocities)
            return EXIT_OK
        trajectory = plan_pick_place(DeltaParams(), path, args.t_total, args.dt, JointLimits())
        write_trajectory_csv(self.stdout, trajectory)
        return EXIT_OK

    # ==================== IMAGEN Y DETECCIÓN ====================

    def scan(self, args) -> int:
        cfg = load_scenario_config(args.config, {"noise_mode": args.noise_mode})
        scene = load_scene(args.scene)
        seed = args.seed if args.seed is not None else (cfg.seed if cfg.seed is not None else get_settings().seed)
        manifest = write_frames(scan_scene(scene, cfg.scanner, noise_seed=seed), args.output_dir)
        self._print(str(manifest))
        return EXIT_OK

    def detect(self, args) -> int:
        frames = load_frames(args.frames)
        if args.oracle:
            detector = OracleDetector(load_scene(args.oracle))
        else:
            detector = StandInDetector(_scenario(args.config).detection)
        records = [detector.detect_frame(frame) for frame in frames]
        path = save_records(records, args.output)
        self._print(f"{len(records)} {path}")
        return EXIT_OK

    def metrics(self, args) -> int:
        report = evaluate_records(load_records(args.pred), load_records(args.gt), args.gap, args.iou)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as stream:
                write_metrics_csv(report, stream)
        else:
            write_metrics_csv(report, self.stdout)
        return EXIT_OK

    # ==================== RED ====================

    def serve(self, args) -> int:
        cfg = _scenario(args.config)
        settings = get_settings()
        host = args.host or settings.host
        port = args.port if args.port is not None else settings.port
        endpoint = RobotEndpoint(cfg.robot, cfg.trajectory)
        server = RobotEndpointServer((host, port), endpoint)
        logger.info("Extremo robot escuchando en %s:%d", host, server.port)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            logger.info("Servidor detenido: %d aceptadas, %d rechazadas", endpoint.acks, endpoint.rejects)
        finally:
            server.server_close()
        return EXIT_OK


def _scenario(path: Optional[str]) -> ScenarioConfig:
    return load_scenario_config(path) if path else ScenarioConfig()


def _first_out_of_limits(joints: JointAngles) -> int:
    limits = JointLimits()
    for index, theta in enumerate(joints.as_array()):
        if not limits.theta_min <= theta <= limits.theta_max:
            return index
    return 0


# ==================== PUNTO DE ENTRADA ====================

def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None,
         stderr: Optional[TextIO] = None) -> int:
    """
    Ejecuta la CLI y devuelve el código de salida (no llama a sys.exit).

    Ejemplo:
        main(["simulate", "--battery-fraction", "1.5"])  # 2
    """
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level)
    controller = CommandController(stdout, stderr)
    try:
        return getattr(controller, args.handler)(args)
    except BaseAppException as e:
        logger.debug("Detalles: %s", e.details)
        controller.stderr.write(f"error: {e.message}\n")
        return e.exit_code
    except ValidationError as e:
        error = ConfigInvalidError(str(e))
        controller.stderr.write(f"error: {error.message}\n")
        return error.exit_code
    except Exception as e:
        logger.exception("Error inesperado")
        controller.stderr.write(f"error interno: {e}\n")
        return EXIT_UNEXPECTED
