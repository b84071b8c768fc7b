"""
Exportación e importación de frames y escenas

Frames: un PGM de 8 bits por banda (frame_{index:06}_{te|he}.pgm), un PPM
con canales (TE, HE, 0) y un manifiesto frames.json con la geometría de
cada frame. Escenas: documento JSON validado por el schema Scene.
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List, Union

import cv2
import numpy as np
from pydantic import BaseModel, ValidationError

from app.entities.xray_sim.schemas.xray_schemas import DualEnergyFrame, HalfBlock, Scene
from app.shared.exceptions import MalformedInputError


logger = logging.getLogger(__name__)

MANIFEST_NAME = "frames.json"

PathLike = Union[str, Path]


class FrameMetadata(BaseModel):
    """Entrada del manifiesto: todo lo necesario para reconstruir un frame."""
    frame_index: int
    first_line: int
    origin: float
    t_first: float
    row_period: float
    mm_per_px: float
    height: int
    width: int
    bin_factor: int = 1

    @classmethod
    def from_frame(cls, frame: DualEnergyFrame) -> "FrameMetadata":
        return cls(
            frame_index=frame.frame_index,
            first_line=frame.first_line,
            origin=frame.origin,
            t_first=frame.t_first,
            row_period=frame.row_period,
            mm_per_px=frame.mm_per_px,
            height=frame.height,
            width=frame.width,
            bin_factor=frame.halves[0].line_count // (frame.height // 2),
        )


def frame_filename(index: int, band: str) -> str:
    return f"frame_{index:06}_{band}.pgm"


def _imwrite(path: Path, image: np.ndarray) -> None:
    if not cv2.imwrite(str(path), image):
        raise MalformedInputError(str(path), "no se pudo escribir la imagen")


def _imread_gray(path: Path) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if image is None:
        raise MalformedInputError(str(path), "imagen ilegible o inexistente")
    return image


# ==================== FRAMES ====================

def write_frame(frame: DualEnergyFrame, out_dir: PathLike, with_ppm: bool = True) -> List[Path]:
    """
    Escribe las bandas de un frame. Devuelve las rutas creadas.

    Ejemplo:
        write_frame(frame, "out/frames")
        # [out/frames/frame_000000_te.pgm, out/frames/frame_000000_he.pgm, out/frames/frame_000000.ppm]
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / frame_filename(frame.frame_index, "te"), out / frame_filename(frame.frame_index, "he")]
    _imwrite(paths[0], frame.te)
    _imwrite(paths[1], frame.he)
    if with_ppm:
        ppm = out / f"frame_{frame.frame_index:06}.ppm"
        # OpenCV ordena los canales como BGR
        _imwrite(ppm, np.dstack([np.zeros_like(frame.he), frame.he, frame.te]))
        paths.append(ppm)
    return paths


def write_manifest(entries: Iterable[FrameMetadata], out_dir: PathLike) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / MANIFEST_NAME
    manifest.write_text(json.dumps([e.model_dump() for e in entries], indent=2), encoding="utf-8")
    return manifest


def write_frames(frames: Iterable[DualEnergyFrame], out_dir: PathLike, with_ppm: bool = True) -> Path:
    """Escribe todos los frames y el manifiesto; devuelve la ruta del manifiesto."""
    entries = []
    for frame in frames:
        write_frame(frame, out_dir, with_ppm)
        entries.append(FrameMetadata.from_frame(frame))
    manifest = write_manifest(entries, out_dir)
    logger.info("%d frames escritos en %s", len(entries), out_dir)
    return manifest


def load_frames(frames_dir: PathLike) -> List[DualEnergyFrame]:
    """
    Reconstruye los frames de un directorio exportado a partir del manifiesto.

    Raises:
        MalformedInputError: Manifiesto ausente o inválido, imagen ilegible o de tamaño inesperado
    """
    base = Path(frames_dir)
    manifest = base / MANIFEST_NAME
    try:
        entries = [FrameMetadata(**e) for e in json.loads(manifest.read_text(encoding="utf-8"))]
    except FileNotFoundError:
        raise MalformedInputError(str(manifest), "manifiesto inexistente")
    except (json.JSONDecodeError, TypeError, ValidationError) as e:
        raise MalformedInputError(str(manifest), str(e))

    frames = []
    for meta in entries:
        te = _imread_gray(base / frame_filename(meta.frame_index, "te"))
        he = _imread_gray(base / frame_filename(meta.frame_index, "he"))
        if te.shape != (meta.height, meta.width) or he.shape != te.shape:
            raise MalformedInputError(str(base), f"frame {meta.frame_index}: tamaño {te.shape} inesperado")
        frames.append(frame_from_arrays(meta, te, he))
    return frames


def frame_from_arrays(meta: FrameMetadata, te: np.ndarray, he: np.ndarray) -> DualEnergyFrame:
    half_rows = meta.height // 2
    line_count = half_rows * meta.bin_factor
    halves = tuple(
        HalfBlock(
            first_line=meta.first_line + k * line_count,
            line_count=line_count,
            t_first=meta.t_first + k * half_rows * meta.row_period,
            source=lambda rows=slice(k * half_rows, (k + 1) * half_rows): (te[rows].copy(), he[rows].copy()),
        )
        for k in range(2)
    )
    return DualEnergyFrame(
        frame_index=meta.frame_index,
        first_line=meta.first_line,
        origin=meta.origin,
        t_first=meta.t_first,
        row_period=meta.row_period,
        mm_per_px=meta.mm_per_px,
        height=meta.height,
        width=meta.width,
        halves=halves,
    )


# ==================== ESCENAS ====================

def load_scene(path: PathLike) -> Scene:
    """
    Raises:
        MalformedInputError: JSON inválido o escena que no cumple el schema
    """
    source = Path(path)
    try:
        return Scene.model_validate_json(source.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise MalformedInputError(str(source), "archivo inexistente")
    except ValidationError as e:
        raise MalformedInputError(str(source), str(e))


def save_scene(scene: Scene, path: PathLike) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(scene.model_dump_json(indent=2), encoding="utf-8")
    return target
