"""
Service Layer de la simulación de la línea de clasificación

Bucle de paso fijo que une todos los módulos:

    cinta → escáner de línea → buffer de frames → detección → seguimiento
          → protocolo visión/robot → controlador del robot → contenedor

El reloj es un contador entero de pasos (t = k·dt) para que los disparos
del escáner y los instantes de recogida caigan siempre en la misma
rejilla. Con la misma configuración y semilla, el registro de eventos y
el informe son idénticos byte a byte.
"""

import csv
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, TextIO, Tuple, Union

import numpy as np

from app.config.settings import get_settings
from app.entities.detection.schemas.detection_schemas import DetectionRecord, DetectorModeEnum
from app.entities.detection.services.detector_service import (
    DetectionProvider,
    OracleDetector,
    StandInDetector,
    save_records,
)
from app.entities.kinematics.schemas.kinematics_schemas import EefPose
from app.entities.orchestrator.schemas.enums import (
    EventTypeEnum,
    ItemLocationEnum,
    ItemOutcomeEnum,
    MissReasonEnum,
)
from app.entities.orchestrator.schemas.scenario_schemas import (
    Event,
    ItemTiming,
    ScenarioConfig,
    ScenarioReport,
)
from app.entities.orchestrator.schemas.wire_schemas import Ack, PickRequest, Reject, Status
from app.entities.orchestrator.services.channel_service import Channel, LocalChannel
from app.entities.orchestrator.services.endpoint_service import RobotEndpoint
from app.entities.orchestrator.services.robot_service import RobotController, grasp_check
from app.entities.orchestrator.services.scene_generation_service import generate_scene
from app.entities.tracking.schemas.tracking_schemas import PickCommand, WorldItem
from app.entities.tracking.services.encoder_service import EncoderModel
from app.entities.tracking.services.tracking_service import Tracker, write_decisions_csv
from app.entities.trajectory.services.trajectory_service import tracking_error, write_trajectory_csv
from app.entities.xray_sim.schemas.xray_schemas import DeviceInstance, DualEnergyFrame, Scene
from app.entities.xray_sim.services.frame_io_service import FrameMetadata, write_frame, write_manifest
from app.entities.xray_sim.services.line_buffer_service import LineBuffer, push_scanned_half
from app.entities.xray_sim.services.scanner_service import LineScanner
from app.shared.exceptions import DomainError
from app.shared.formatting import format_float


logger = logging.getLogger(__name__)

EVENT_CSV_COLUMNS = ["t", "event_type", "item_id", "detail"]
REPORT_NAME = "report.json"
EVENTS_NAME = "events.csv"
DECISIONS_NAME = "decisions.csv"
RECORDS_NAME = "detections.json"

PathLike = Union[str, Path]


# ==================== ESTADO DEL MUNDO ====================

@dataclass
class PhysicalItem:
    """Dispositivo real y su historia; location tiene siempre un único valor."""
    device: DeviceInstance
    spawn_t: float
    location: ItemLocationEnum = ItemLocationEnum.PENDING
    track_id: Optional[str] = None
    detected_t: Optional[float] = None
    t_pick: Optional[float] = None
    binned_t: Optional[float] = None
    exit_t: Optional[float] = None
    miss_reason: Optional[MissReasonEnum] = None

    @property
    def id(self) -> str:
        return self.device.id

    @property
    def has_battery(self) -> bool:
        return self.device.has_battery

    def center_at(self, t: float, v: float) -> Tuple[float, float]:
        """Centro en el marco de la cinta (x hacia delante desde el detector)."""
        x_c, y_c = self.device.center
        return v * t - x_c, y_c

    def footprint_contains(self, x: float, y: float, t: float, v: float) -> bool:
        front = v * t - self.device.x_min
        back = v * t - self.device.x_max
        return back <= x <= front and self.device.y_min <= y <= self.device.y_max

    def outcome(self) -> Tuple[ItemOutcomeEnum, Optional[MissReasonEnum]]:
        if self.location == ItemLocationEnum.IN_BIN:
            return (ItemOutcomeEnum.SORTED_TO_BIN if self.has_battery else ItemOutcomeEnum.WRONG_PICK), None
        if not self.has_battery:
            return ItemOutcomeEnum.PASS_THROUGH, None
        return ItemOutcomeEnum.MISSED, self.miss_reason or MissReasonEnum.NOT_DETECTED


@dataclass
class Counters:
    lines_scanned: int = 0
    frames_emitted: int = 0
    detected_items: int = 0
    pick_requests: int = 0
    acks: int = 0
    rejects: int = 0
    infeasible: int = 0


class Simulation:
    """
    Mundo simulado completo con un único reloj.

    Ejemplo:
        sim = Simulation(ScenarioConfig(n_items=5), seed=1)
        report = sim.run()
        report.sorted_to_bin
    """

    def __init__(
        self,
        cfg: ScenarioConfig,
        seed: int,
        scene: Optional[Scene] = None,
        channel: Optional[Channel] = None,
        frame_dir: Optional[PathLike] = None,
        keep_records: bool = False,
    ):
        self.cfg = cfg
        self.seed = seed
        self.dt = cfg.dt
        self.scene = scene if scene is not None else generate_scene(cfg, seed)
        self.v = self.scene.conveyor_speed
        self.scanner_cfg = cfg.scanner
        self.robot_cfg = cfg.robot

        self.items: List[PhysicalItem] = [
            PhysicalItem(device=d, spawn_t=round(i * cfg.spawn_headway_s, 12))
            for i, d in enumerate(self.scene.devices)
        ]
        self._pending = list(self.items)
        self._on_belt: List[PhysicalItem] = []
        self._by_track: Dict[str, PhysicalItem] = {}
        self._commands: Dict[str, PickCommand] = {}

        # Visión
        self.scanner = LineScanner(self.scene, self.scanner_cfg, noise_seed=seed)
        white_low, white_high = self.scanner.white
        self.buffer = LineBuffer(self.scanner_cfg, white_low, white_high)
        self.detector = self._build_detector()
        self.encoder = EncoderModel(cfg.tracking.ticks_per_mm, cfg.tracking.encoder_sample_hz,
                                    history_s=cfg.tracking.speed_window_s + 1.0)
        self.tracker = Tracker(
            cfg.tracking,
            encoder=self.encoder,
            nominal_speed=self.v,
            traj_lead=cfg.trajectory.t_total,
            cycle_time=cfg.cycle_time,
            step=self.dt,
            place_point=self.robot_cfg.place_point,
        )
        self._encoder_every = max(1, int(round(1.0 / (cfg.tracking.encoder_sample_hz * self.dt))))
        self._next_half = 0

        # Robot
        self.channel = channel if channel is not None else LocalChannel(RobotEndpoint(self.robot_cfg, cfg.trajectory))
        self.controller = RobotController(self.robot_cfg, cfg.trajectory, self)

        self.frame_dir = Path(frame_dir) if frame_dir is not None else None
        self.records: Optional[List[DetectionRecord]] = [] if keep_records else None
        self.frame_manifest: List[FrameMetadata] = []
        self.events: List[Event] = []
        self.counters = Counters()
        self.grasp_errors: List[float] = []
        self.prediction_errors: List[float] = []
        self.k = 0
        self.t = 0.0
        self.encoder.record(0.0, 0.0)

    def _build_detector(self) -> DetectionProvider:
        if self.cfg.detector_mode == DetectorModeEnum.ORACLE:
            return OracleDetector(self.scene)
        return StandInDetector(self.cfg.detection)

    # ==================== EVENTOS ====================

    def emit(self, event: Event) -> None:
        self.events.append(event)

    def _event(self, t: float, event_type: EventTypeEnum, item_id: str = "", detail: str = "") -> None:
        self.events.append(Event(t, event_type, item_id, detail))

    # ==================== PASO ====================

    @property
    def finished(self) -> bool:
        return not self._pending and not self._on_belt and self.controller.is_idle and self.controller.held is None

    def step(self) -> List[Event]:
        """
        Avanza un paso dt y devuelve los eventos producidos en él.

        Orden dentro del paso: apariciones, encoder, líneas del escáner
        (y frames completos), controlador del robot y salidas de la cinta.
        """
        first_event = len(self.events)
        t_old = self.t
        self.k += 1
        t_new = round(self.k * self.dt, 12)
        self.t = t_new

        self._spawn(t_new)
        if self.k % self._encoder_every == 0:
            self.encoder.record(t_new, self.v * t_new)
        self._scan(t_old, t_new)
        self.controller.step(t_new)
        self._exit(t_new)
        return self.events[first_event:]

    def _spawn(self, t: float) -> None:
        while self._pending and self._pending[0].spawn_t <= t + 1e-12:
            item = self._pending.pop(0)
            item.location = ItemLocationEnum.ON_BELT
            self._on_belt.append(item)
            self._event(item.spawn_t, EventTypeEnum.SPAWN, item.id, "battery" if item.has_battery else "")

    def _scan(self, t_old: float, t_new: float) -> None:
        rate = self.scanner_cfg.line_rate
        first = math.ceil(round(t_old * rate, 9))
        end = math.ceil(round(t_new * rate, 9))
        if end <= first:
            return
        self.counters.lines_scanned += end - first

        half = self.scanner_cfg.half_height
        while self._next_half + half <= end:
            first_line = self._next_half
            self._next_half += half
            frame = push_scanned_half(self.buffer, self.scanner, first_line)
            if frame is not None:
                self._on_frame(frame, t_new)

    def _on_frame(self, frame: DualEnergyFrame, now: float) -> None:
        self.counters.frames_emitted += 1
        self._event(now, EventTypeEnum.FRAME, "", str(frame.frame_index))
        if self.frame_dir is not None:
            write_frame(frame, self.frame_dir)
            self.frame_manifest.append(FrameMetadata.from_frame(frame))

        record = self.detector.detect_frame(frame)
        if self.records is not None:
            self.records.append(record)
        for item in self.tracker.ingest(record, now):
            self._on_detected(item, now)

    # ==================== SEGUIMIENTO Y PROTOCOLO ====================

    def _match_physical(self, item: WorldItem) -> Optional[PhysicalItem]:
        for candidate in self._on_belt:
            if candidate.footprint_contains(item.x0, item.y0, item.t0, self.v):
                return candidate
        return None

    def _on_detected(self, item: WorldItem, now: float) -> None:
        self.counters.detected_items += 1
        physical = self._match_physical(item)
        if physical is not None:
            self._by_track[item.id] = physical
            if physical.detected_t is None:
                physical.detected_t = now
                physical.track_id = item.id
        physical_id = physical.id if physical is not None else ""
        self._event(now, EventTypeEnum.DETECTED, item.id, f"{physical_id} battery={str(item.has_battery).lower()}")

        command = self.tracker.plan(item, now)
        if not item.has_battery:
            return
        if command is None:
            self.counters.infeasible += 1
            self._mark_missed(item.id, MissReasonEnum.INFEASIBLE)
            self._event(now, EventTypeEnum.INFEASIBLE, item.id, self.tracker.decisions[-1].status)
            return
        self._request_pick(item, command, now)

    def _request_pick(self, item: WorldItem, command: PickCommand, now: float) -> None:
        request = PickRequest(
            item_id=item.id, x0_mm=item.x0, y0_mm=item.y0, w_mm=item.width, h_mm=item.height,
            v_mm_s=item.v, t0_stamp_s=item.t0, t_pick_s=command.t_pick,
        )
        self.counters.pick_requests += 1
        self._event(now, EventTypeEnum.PICK_REQUEST, item.id, format_float(command.t_pick))

        for reply in self.channel.exchange(request):
            if isinstance(reply, Ack):
                self.counters.acks += 1
                self._event(now, EventTypeEnum.ACK, reply.item_id)
                self.tracker.on_ack(command)
                self._accept(command)
            elif isinstance(reply, Reject):
                self.counters.rejects += 1
                self._event(now, EventTypeEnum.REJECT, reply.item_id, reply.reason)
                self.tracker.on_reject(reply.item_id, reply.reason)
                self._mark_missed(item.id, MissReasonEnum.REJECTED)
            elif isinstance(reply, Status):
                self.tracker.on_status(reply.busy_until_s)

    def _accept(self, command: PickCommand) -> None:
        try:
            self.controller.enqueue(command.item_id, command.pick_point, command.t_pick)
        except DomainError as e:
            logger.warning("Orden aceptada %s no ejecutable: %s", command.item_id, e.message)
            self._mark_missed(command.item_id, MissReasonEnum.REJECTED)
            return
        self._commands[command.item_id] = command
        physical = self._by_track.get(command.item_id)
        if physical is not None:
            physical.t_pick = command.t_pick

    def _mark_missed(self, track_id: str, reason: MissReasonEnum) -> None:
        physical = self._by_track.get(track_id)
        if physical is not None and physical.location != ItemLocationEnum.IN_BIN:
            physical.miss_reason = reason

    # ==================== INTERACCIÓN CON EL ROBOT ====================

    def try_grasp(self, item_id: str, eef: EefPose, t: float) -> Optional[str]:
        """Succiona el objeto de la cinta más cercano a la ventosa, si está en tolerancia."""
        robot = self.robot_cfg
        best, best_distance = None, math.inf
        for candidate in self._on_belt:
            x_b, y_b = candidate.center_at(t, self.v)
            center = robot.to_robot_frame(x_b, y_b)
            if not grasp_check(eef, center, robot.grasp_tol_mm, robot.grasp_z_tol_mm, robot.belt_z):
                continue
            distance = math.hypot(eef.x - center[0], eef.y - center[1])
            if distance < best_distance:
                best, best_distance = candidate, distance

        if best is None:
            self._mark_missed(item_id, MissReasonEnum.GRASP_FAILED)
            return None

        self.grasp_errors.append(best_distance)
        command = self._commands.get(item_id)
        if command is not None:
            x_b, y_b = best.center_at(t, self.v)
            true_point = robot.to_robot_frame(x_b, y_b)
            self.prediction_errors.append(math.hypot(
                command.pick_point[0] - true_point[0], command.pick_point[1] - true_point[1]
            ))
        best.location = ItemLocationEnum.HELD
        self._on_belt.remove(best)
        if best.track_id is None:
            best.track_id = item_id
        return best.id

    def release(self, physical_id: str, t: float) -> None:
        for item in self.items:
            if item.id == physical_id:
                item.location = ItemLocationEnum.IN_BIN
                item.binned_t = t
                item.miss_reason = None
                return

    def _exit(self, t: float) -> None:
        limit = self.robot_cfg.robot_center_x + self.robot_cfg.exit_margin_mm
        leaving = [item for item in self._on_belt if item.center_at(t, self.v)[0] > limit]
        for item in leaving:
            self._on_belt.remove(item)
            item.location = ItemLocationEnum.EXITED
            item.exit_t = t
            self._event(t, EventTypeEnum.EXIT, item.id, "battery" if item.has_battery else "")

    # ==================== EJECUCIÓN ====================

    def run(self, max_steps: Optional[int] = None) -> ScenarioReport:
        """Itera hasta que todos los objetos han salido o están en el contenedor y el robot está en reposo."""
        logger.info("Escenario: %d objetos, semilla %d, detector %s",
                    len(self.items), self.seed, self.cfg.detector_mode.value)
        while not self.finished:
            if max_steps is not None and self.k >= max_steps:
                break
            self.step()
        report = self.report()
        logger.info("Fin en t=%.3f s: %d/%d baterías al contenedor, %d perdidas",
                    self.t, report.sorted_to_bin, report.battery_items, report.missed)
        return report

    def report(self) -> ScenarioReport:
        timings = []
        outcomes: Counter = Counter()
        reasons: Counter = Counter()
        for item in self.items:
            outcome, reason = item.outcome()
            outcomes[outcome] += 1
            if reason is not None:
                reasons[reason.value] += 1
            timings.append(ItemTiming(
                item_id=item.id, has_battery=item.has_battery, spawn_t=item.spawn_t,
                detected_t=item.detected_t, t_pick=item.t_pick, binned_t=item.binned_t,
                exit_t=item.exit_t, outcome=outcome, reason=reason,
            ))

        errors = [tracking_error(self.robot_cfg.params, leg) for _, _, leg in self.controller.executed]
        all_errors = np.concatenate(errors) if errors else np.zeros(0)
        return ScenarioReport(
            seed=self.seed,
            detector_mode=self.cfg.detector_mode,
            sim_time_s=self.t,
            spawned=len(self.items),
            battery_items=sum(1 for item in self.items if item.has_battery),
            sorted_to_bin=outcomes[ItemOutcomeEnum.SORTED_TO_BIN],
            missed=outcomes[ItemOutcomeEnum.MISSED],
            missed_reasons=dict(sorted(reasons.items())),
            wrong_picks=outcomes[ItemOutcomeEnum.WRONG_PICK],
            pass_through=outcomes[ItemOutcomeEnum.PASS_THROUGH],
            pick_requests=self.counters.pick_requests,
            acks=self.counters.acks,
            rejects=self.counters.rejects,
            infeasible=self.counters.infeasible,
            lines_scanned=self.counters.lines_scanned,
            frames_emitted=self.counters.frames_emitted,
            detected_items=self.counters.detected_items,
            tracking_error_mean_mm=float(all_errors.mean()) if all_errors.size else 0.0,
            tracking_error_max_mm=float(all_errors.max()) if all_errors.size else 0.0,
            grasp_error_mean_mm=float(np.mean(self.grasp_errors)) if self.grasp_errors else 0.0,
            grasp_error_max_mm=float(np.max(self.grasp_errors)) if self.grasp_errors else 0.0,
            prediction_error_max_mm=float(np.max(self.prediction_errors)) if self.prediction_errors else 0.0,
            items=timings,
        )


# ==================== ARTEFACTOS ====================

def write_events_csv(events: List[Event], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(EVENT_CSV_COLUMNS)
    for event in events:
        writer.writerow([format_float(event.t), event.event_type.value, event.item_id, event.detail])


def write_trajectories(sim: Simulation, out_dir: PathLike) -> List[Path]:
    """Un CSV por tramo ejecutado: {item}_{approach|transfer|homing}.csv."""
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    paths = []
    for item_id, leg_name, leg in sim.controller.executed:
        path = target / f"{item_id}_{leg_name}.csv"
        with path.open("w", encoding="utf-8", newline="") as stream:
            write_trajectory_csv(stream, leg)
        paths.append(path)
    return paths


def write_artifacts(sim: Simulation, report: ScenarioReport, out_dir: PathLike,
                    emit_traj: bool = False) -> Path:
    """report.json, events.csv y decisions.csv (+ trayectorias y registros si se piden)."""
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    (target / REPORT_NAME).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    with (target / EVENTS_NAME).open("w", encoding="utf-8", newline="") as stream:
        write_events_csv(sim.events, stream)
    with (target / DECISIONS_NAME).open("w", encoding="utf-8", newline="") as stream:
        write_decisions_csv(sim.tracker.decisions, stream)
    if sim.records is not None:
        save_records(sim.records, target / RECORDS_NAME)
    if emit_traj:
        write_trajectories(sim, target / "trajectories")
    return target


def run_scenario(
    cfg: ScenarioConfig,
    seed: Optional[int] = None,
    channel: Optional[Channel] = None,
    out_dir: Optional[PathLike] = None,
    emit_frames: bool = False,
    emit_traj: bool = False,
    scene: Optional[Scene] = None,
) -> ScenarioReport:
    """
    Ejecuta un escenario completo y, si se da out_dir, escribe sus artefactos.

    La semilla se resuelve como: argumento > cfg.seed > Settings.seed (WEEE_SEED).

    Ejemplo:
        report = run_scenario(ScenarioConfig(), seed=0)
        report.sorted_to_bin  # 84
    """
    if seed is None:
        seed = cfg.seed if cfg.seed is not None else get_settings().seed
    frame_dir = Path(out_dir) / "frames" if (emit_frames and out_dir is not None) else None
    sim = Simulation(cfg, seed, scene=scene, channel=channel, frame_dir=frame_dir,
                     keep_records=out_dir is not None)
    report = sim.run()
    if out_dir is not None:
        write_artifacts(sim, report, out_dir, emit_traj=emit_traj)
        if frame_dir is not None:
            write_manifest(sim.frame_manifest, frame_dir)
    return report
