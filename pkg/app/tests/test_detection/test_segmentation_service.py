import numpy as np
import pytest

from app.entities.detection.schemas.detection_schemas import DetectionConfig
from app.entities.detection.services.detector_service import (
    OracleDetector,
    StandInDetector,
    ground_truth_detections,
    load_records,
    match_batteries_to_devices,
    save_records,
)
from app.entities.detection.services.segmentation_service import (
    classify_battery_shape,
    detect_batteries,
    mask_to_bbox,
    segment_devices,
)
from app.entities.xray_sim.schemas.enums import BatteryClassEnum
from app.entities.xray_sim.schemas.xray_schemas import BatteryInstance, DeviceInstance, Scene
from app.entities.xray_sim.services.line_buffer_service import scan_scene
from app.shared.exceptions import EmptyMaskError, MalformedInputError


@pytest.fixture
def early_scene():
    """Dispositivo completo dentro del primer frame del escáner estrecho."""
    battery = BatteryInstance(id="dev-0001-bat", battery_class=BatteryClassEnum.CYLINDRICAL,
                              x_min=5.0, x_max=13.0, y_min=12.0, y_max=28.0, thickness=8.0)
    device = DeviceInstance(id="dev-0001", x_min=3.0, x_max=15.0, y_min=5.0, y_max=35.0,
                            thickness=10.0, batteries=[battery])
    return Scene(belt_width=40.0, devices=[device])


@pytest.fixture
def first_frame(early_scene, small_scanner):
    return next(iter(scan_scene(early_scene, small_scanner)))


@pytest.mark.unit
class TestMasks:
    def test_mask_to_bbox_uses_floor_midpoint(self):
        mask = np.zeros((50, 60), dtype=bool)
        mask[10:20, 20:40] = True
        box = mask_to_bbox(mask)
        assert (box.x_center, box.y_center, box.width, box.height) == (29, 14, 20, 10)

    def test_mask_offset(self):
        mask = np.ones((2, 3), dtype=bool)
        box = mask_to_bbox(mask, offset=(100, 200))
        assert box.x_min == pytest.approx(199.5)
        assert box.y_center == 100

    def test_empty_mask(self):
        with pytest.raises(EmptyMaskError):
            mask_to_bbox(np.zeros((5, 5), dtype=bool))

    def test_blank_frame_has_no_devices(self):
        assert segment_devices(np.full((100, 100), 255, dtype=np.uint8)) == []

    def test_components_are_four_connected(self):
        he = np.full((40, 40), 255, dtype=np.uint8)
        he[0:10, 0:10] = 100
        he[10:20, 10:20] = 100  # solo toca en diagonal
        masks = segment_devices(he, DetectionConfig(min_area=10))
        assert len(masks) == 2

    def test_small_components_dropped(self):
        he = np.full((40, 40), 255, dtype=np.uint8)
        he[0:5, 0:5] = 100
        assert segment_devices(he, DetectionConfig(min_area=50)) == []

    def test_batteries_inside_devices(self):
        he = np.full((100, 100), 255, dtype=np.uint8)
        he[10:90, 10:90] = 230
        he[30:40, 20:80] = 100
        masks = segment_devices(he)
        batteries = detect_batteries(he, masks, 0.1)
        assert len(masks) == 1 and len(batteries) == 1
        assert batteries[0].width == 60 and batteries[0].height == 10
        assert batteries[0].label == BatteryClassEnum.CYLINDRICAL.value


@pytest.mark.unit
class TestShapeRule:
    @pytest.mark.parametrize("width,height,expected", [
        (180, 60, BatteryClassEnum.CYLINDRICAL),
        (100, 100, BatteryClassEnum.BUTTON),
        (500, 400, BatteryClassEnum.POUCH),
        (300, 250, BatteryClassEnum.OTHER),
    ])
    def test_classes(self, width, height, expected):
        assert classify_battery_shape(width, height, 0.1) == expected


@pytest.mark.unit
class TestProviders:
    def test_ground_truth_projection(self, single_device_scene):
        devices, batteries = ground_truth_detections(single_device_scene, 0.0, 0.1, 3500, 8000)
        assert len(devices) == 1 and len(batteries) == 1
        assert devices[0].y_min == pytest.approx(1000.0)
        assert devices[0].y_max == pytest.approx(1500.0)
        assert devices[0].x_min == pytest.approx(3000.0)
        assert batteries[0].label == "Pouch"

    def test_ground_truth_clipped_to_window(self, single_device_scene):
        devices, _ = ground_truth_detections(single_device_scene, 120.0, 0.1, 3500, 8000)
        assert devices[0].y_min == 0.0
        assert devices[0].height == pytest.approx(300.0)
        assert ground_truth_detections(single_device_scene, 500.0, 0.1, 3500, 8000) == ([], [])

    def test_standin_agrees_with_oracle(self, early_scene, first_frame):
        oracle = OracleDetector(early_scene).detect_frame(first_frame)
        standin = StandInDetector().detect_frame(first_frame)
        assert len(standin.devices) == len(oracle.devices) == 1
        assert len(standin.batteries) == len(oracle.batteries) == 1
        for found, truth in [(standin.devices[0], oracle.devices[0]), (standin.batteries[0], oracle.batteries[0])]:
            for name in ("x_center", "y_center", "width", "height"):
                assert abs(getattr(found, name) - getattr(truth, name)) <= 2
        assert standin.reports[0].has_battery

    def test_record_carries_frame_geometry(self, early_scene, first_frame):
        record = OracleDetector(early_scene).detect_frame(first_frame)
        assert record.frame_index == 0
        assert record.origin == 0.0
        assert record.mm_per_px == pytest.approx(0.1)
        assert record.t_last == pytest.approx(first_frame.t_last)

    def test_smallest_container_wins(self, make_box):
        outer = make_box(0, 0, 100, 100)
        inner = make_box(10, 10, 50, 50)
        stray = make_box(200, 200, 210, 210, label="Button")
        battery = make_box(20, 20, 30, 30, label="Pouch")
        reports, unassigned = match_batteries_to_devices([battery, stray], [outer, inner])
        assert reports[0].batteries == []
        assert reports[1].batteries == [battery]
        assert unassigned == [stray]


@pytest.mark.unit
class TestRecordPersistence:
    def test_round_trip(self, tmp_path, early_scene, first_frame):
        record = OracleDetector(early_scene).detect_frame(first_frame)
        path = save_records([record], tmp_path / "detections.json")
        assert load_records(path) == [record]

    def test_missing_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('[{"frame_index": 0}]', encoding="utf-8")
        with pytest.raises(MalformedInputError):
            load_records(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MalformedInputError):
            load_records(tmp_path / "nope.json")
