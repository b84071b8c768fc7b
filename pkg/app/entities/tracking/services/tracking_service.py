"""
Service Layer de seguimiento: pixels → mundo, predicción y planificación de recogidas

El Tracker consume registros de detección en orden de frame, crea un
WorldItem por objeto físico (deduplicando los que reaparecen en el frame
solapado siguiente) y decide para cada dispositivo con batería un instante
de recogida dentro del disco de alcance del robot.
"""

import csv
import logging
import math
from typing import Iterable, List, Optional, TextIO, Tuple

from app.entities.detection.schemas.detection_schemas import BoundingBox, DetectionRecord
from app.entities.tracking.schemas.tracking_schemas import (
    DEFAULT_PLACE_POINT,
    PickCommand,
    SchedulingDecision,
    TrackingConfig,
    WorldItem,
)
from app.entities.tracking.services.encoder_service import EncoderModel, speed_from_encoder
from app.shared.exceptions import InfeasiblePickError
from app.shared.formatting import format_float


logger = logging.getLogger(__name__)

DECISION_CSV_COLUMNS = ["item_id", "x0", "y0", "v", "t_pick", "status"]

DEFAULT_STEP_S = 0.001


# ==================== GEOMETRÍA ====================

def image_to_world(box: BoundingBox, frame_origin: float, mm_per_px: float) -> Tuple[float, float, float, float]:
    """
    Centro y tamaño de una caja en mm: (x0, y0, w, h).

    x0 es la coordenada de franja del centro (origen del frame + fila·escala).

    Ejemplo:
        image_to_world(BoundingBox(x_center=4000, y_center=1750, width=500, height=10, label="device"), 0.0, 0.1)
        # (175.0, 400.0, 50.0, 1.0)
    """
    if not mm_per_px > 0.0:
        raise ValueError("mm_per_px debe ser > 0")
    return (
        frame_origin + box.y_center * mm_per_px,
        box.x_center * mm_per_px,
        box.width * mm_per_px,
        box.height * mm_per_px,
    )


def predict_position(x0: float, y0: float, v: float, t_p: float) -> Tuple[float, float]:
    """
    (x_tp, y_tp) = (x0 + v·t_p, y0).

    Ejemplo:
        predict_position(100.0, 200.0, 350.0, 1.0)  # (450.0, 200.0)
    """
    return x0 + v * t_p, y0


def quantize_up(t: float, step: float) -> float:
    """Primer instante de la rejilla de paso `step` que no es anterior a t."""
    k = math.ceil(round(t / step, 6))
    return round(k * step, 12)


# ==================== PLANIFICACIÓN ====================

def schedule_pick(
    item: WorldItem,
    robot_center_x: float,
    robot_busy_until: float,
    now: float,
    cfg: Optional[TrackingConfig] = None,
    traj_lead: float = 1.0,
    step: float = DEFAULT_STEP_S,
    place_point: Tuple[float, float, float] = DEFAULT_PLACE_POINT,
) -> PickCommand:
    """
    Elige t_pick: el cruce del centro del objeto con robot_center_x si el robot
    llega a tiempo; si no, el primer instante libre mientras el objeto siga
    dentro del disco de alcance.

    Raises:
        InfeasiblePickError: Fuera del disco de alcance o el robot se libera demasiado tarde
    """
    cfg = cfg or TrackingConfig()
    if not item.has_battery:
        raise InfeasiblePickError(item.id, "no_battery")
    if not item.v > 0.0:
        raise InfeasiblePickError(item.id, "no_motion")

    lateral = item.y0 - cfg.robot_center_y
    if abs(lateral) > cfg.reach_mm:
        raise InfeasiblePickError(item.id, "outside_reach")
    half_chord = math.sqrt(cfg.reach_mm ** 2 - lateral ** 2)

    earliest = max(now + cfg.min_lead_s, robot_busy_until + traj_lead)
    t_center = item.t0 + (robot_center_x - item.x0) / item.v
    t_exit = item.t0 + (robot_center_x + half_chord - item.x0) / item.v

    t_pick = quantize_up(max(t_center, earliest), step)
    if t_pick > t_exit:
        raise InfeasiblePickError(item.id, "late")

    x_tp, y_tp = predict_position(item.x0, item.y0, item.v, t_pick - item.t0)
    return PickCommand(
        item_id=item.id,
        pick_point=(x_tp - robot_center_x, y_tp - cfg.robot_center_y, cfg.belt_z),
        t_pick=t_pick,
        place_point=tuple(place_point),
        width=item.width,
        height=item.height,
    )


def occupancy_overlaps(a: PickCommand, b: PickCommand, traj_lead: float, cycle_time: float) -> bool:
    """True si los intervalos [t_pick - traj_lead, t_pick + cycle_time] se solapan."""
    return a.t_pick - traj_lead < b.t_pick + cycle_time and b.t_pick - traj_lead < a.t_pick + cycle_time


# ==================== TRACKER ====================

class Tracker:
    """
    Estado del lado de visión: objetos conocidos, ocupación prevista del robot y decisiones.

    Ejemplo:
        tracker = Tracker(TrackingConfig(), encoder, nominal_speed=350.0)
        new_items = tracker.ingest(record, now=1.0)
        for item in new_items:
            command = tracker.plan(item, now=1.0)
    """

    def __init__(
        self,
        cfg: TrackingConfig,
        encoder: Optional[EncoderModel] = None,
        nominal_speed: Optional[float] = None,
        traj_lead: float = 1.0,
        cycle_time: float = 1.6,
        step: float = DEFAULT_STEP_S,
        place_point: Tuple[float, float, float] = DEFAULT_PLACE_POINT,
    ):
        if encoder is None and nominal_speed is None:
            raise ValueError("Se necesita un encoder o una velocidad nominal")
        self.cfg = cfg
        self.encoder = encoder
        self.nominal_speed = nominal_speed
        self.traj_lead = traj_lead
        self.cycle_time = cycle_time
        self.step = step
        self.place_point = place_point
        self.robot_busy_until = -math.inf
        self.items: List[WorldItem] = []
        self.decisions: List[SchedulingDecision] = []
        self._next_id = 1

    # ==================== VELOCIDAD ====================

    def current_speed(self) -> float:
        if self.cfg.use_encoder and self.encoder is not None:
            return speed_from_encoder(self.encoder, self.cfg.speed_window_s)
        return float(self.nominal_speed)

    # ==================== INGESTA ====================

    def _touches_edge(self, box: BoundingBox, record: DetectionRecord) -> bool:
        margin = self.cfg.edge_margin_px
        return box.y_min <= margin or box.y_max >= record.height - margin

    def _is_known(self, x0: float, y0: float, t0: float) -> bool:
        for known in self.items:
            x_known, y_known = known.position_at(t0)
            if math.hypot(x_known - x0, y_known - y0) < self.cfg.dedup_mm:
                return True
        return False

    def ingest(self, record: DetectionRecord, now: float) -> List[WorldItem]:
        """Convierte los dispositivos completos de un registro en WorldItems nuevos."""
        v = self.current_speed()
        if not v > 0.0:
            logger.warning("Frame %d ignorado: velocidad estimada %.3f mm/s", record.frame_index, v)
            return []

        t0 = record.t_last
        new_items = []
        # Filas bajas = más aguas abajo: llegan antes al robot
        for report in sorted(record.reports, key=lambda r: (r.device.y_center, r.device.x_center)):
            box = report.device
            if self._touches_edge(box, record):
                continue
            _, y0, width, height = image_to_world(box, record.origin, record.mm_per_px)
            t_cross = record.t_first + box.y_center * record.row_period
            x0 = v * (t0 - t_cross)
            if self._is_known(x0, y0, t0):
                continue
            item = WorldItem(
                id=f"trk-{self._next_id:04d}",
                x0=x0,
                y0=y0,
                width=width,
                height=height,
                v=v,
                t0=t0,
                has_battery=report.has_battery,
                frame_index=record.frame_index,
            )
            self._next_id += 1
            self.items.append(item)
            new_items.append(item)
            logger.debug("Nuevo objeto %s en x0=%.3f y0=%.3f (frame %d)", item.id, x0, y0, record.frame_index)
        self._forget_passed(now)
        return new_items

    def _forget_passed(self, now: float) -> None:
        # Objetos ya fuera del alcance del robot no pueden volver a confundirse con nuevos
        limit = self.cfg.robot_center_x + self.cfg.reach_mm + self.cfg.dedup_mm
        self.items = [item for item in self.items if item.position_at(now)[0] <= limit]

    # ==================== DECISIONES ====================

    def plan(self, item: WorldItem, now: float) -> Optional[PickCommand]:
        """Planifica un objeto; registra la decisión y devuelve la orden o None."""
        if not item.has_battery:
            self._log(item, None, "no_battery")
            return None
        try:
            command = schedule_pick(
                item, self.cfg.robot_center_x, self.robot_busy_until, now,
                self.cfg, self.traj_lead, self.step, self.place_point,
            )
        except InfeasiblePickError as e:
            self._log(item, None, f"infeasible:{e.details['reason']}")
            logger.info("Recogida inviable para %s: %s", item.id, e.details["reason"])
            return None
        self._log(item, command.t_pick, "scheduled")
        return command

    def on_ack(self, command: PickCommand) -> None:
        self.robot_busy_until = max(self.robot_busy_until, command.t_pick + self.cycle_time)

    def on_reject(self, item_id: str, reason: str) -> None:
        for decision in reversed(self.decisions):
            if decision.item_id == item_id:
                decision.status = f"rejected:{reason}"
                break
        logger.info("Orden para %s rechazada: %s", item_id, reason)

    def on_status(self, busy_until: float) -> None:
        self.robot_busy_until = busy_until

    def _log(self, item: WorldItem, t_pick: Optional[float], status: str) -> None:
        self.decisions.append(SchedulingDecision(
            item_id=item.id, x0=item.x0, y0=item.y0, v=item.v, t_pick=t_pick, status=status,
        ))


def write_decisions_csv(decisions: Iterable[SchedulingDecision], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(DECISION_CSV_COLUMNS)
    for d in decisions:
        writer.writerow([
            d.item_id, format_float(d.x0), format_float(d.y0), format_float(d.v),
            "" if d.t_pick is None else format_float(d.t_pick), d.status,
        ])
