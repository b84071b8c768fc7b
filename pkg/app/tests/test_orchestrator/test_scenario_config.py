import json

import pytest
from pydantic import ValidationError

from app.entities.detection.schemas.detection_schemas import DetectorModeEnum
from app.entities.orchestrator.schemas.enums import ItemOutcomeEnum
from app.entities.orchestrator.schemas.scenario_schemas import (
    BELT_EDGE_MARGIN_MM,
    ItemTiming,
    ScenarioConfig,
    ScenarioReport,
)
from app.entities.orchestrator.services.config_service import load_scenario_config, scenario_from_dict
from app.entities.orchestrator.services.scene_generation_service import device_id, generate_scene
from app.entities.xray_sim.schemas.enums import NoiseModeEnum
from app.shared.exceptions import EXIT_INPUT_ERROR, ConfigInvalidError


def report_fields(**overrides):
    fields = dict(
        seed=0, detector_mode=DetectorModeEnum.ORACLE, sim_time_s=1.0,
        spawned=2, battery_items=1, sorted_to_bin=1, missed=0, wrong_picks=0, pass_through=1,
        pick_requests=1, acks=1, rejects=0, infeasible=0,
        lines_scanned=3500, frames_emitted=1, detected_items=2,
        tracking_error_mean_mm=0.0, tracking_error_max_mm=0.0,
        grasp_error_mean_mm=0.0, grasp_error_max_mm=0.0, prediction_error_max_mm=0.0,
    )
    fields.update(overrides)
    return fields


@pytest.mark.unit
class TestScenarioConfig:
    def test_defaults(self):
        cfg = ScenarioConfig()
        assert cfg.n_items == 120
        assert cfg.battery_count() == 84
        assert cfg.cycle_time == pytest.approx(1.6)
        assert cfg.tracking.robot_center_x == cfg.robot.robot_center_x == 2000.0

    @pytest.mark.parametrize("n_items,fraction,expected", [
        (120, 0.7, 84), (6, 0.5, 3), (5, 0.5, 3), (4, 0.0, 0), (3, 1.0, 3),
    ])
    def test_battery_count_rounds_half_up(self, n_items, fraction, expected):
        assert ScenarioConfig(n_items=n_items, battery_fraction=fraction).battery_count() == expected

    def test_speed_must_match_scanner(self):
        with pytest.raises(ValidationError, match="conveyor_speed"):
            ScenarioConfig(conveyor_speed=300.0)

    def test_devices_must_fit_half_window(self):
        with pytest.raises(ValidationError, match="device_length_mm"):
            ScenarioConfig(device_length_mm=(60.0, 175.0))

    def test_inverted_range(self):
        with pytest.raises(ValidationError):
            ScenarioConfig(device_width_mm=(100.0, 40.0))

    def test_noise_override_reaches_scanner(self):
        cfg = ScenarioConfig(noise_mode=NoiseModeEnum.POISSON)
        assert cfg.scanner.noise_mode == NoiseModeEnum.POISSON

    def test_tracking_inherits_robot_mount(self):
        cfg = ScenarioConfig(robot={"robot_center_x": 1500.0})
        assert cfg.tracking.robot_center_x == 1500.0

    def test_contradicting_mount_rejected(self):
        with pytest.raises(ValidationError, match="robot_center_x"):
            ScenarioConfig(tracking={"robot_center_x": 1500.0})

    @pytest.mark.parametrize("field,value", [("battery_fraction", 1.5), ("n_items", -1), ("dt", 0.0)])
    def test_invalid_values(self, field, value):
        with pytest.raises(ConfigInvalidError) as exc:
            scenario_from_dict({field: value})
        assert field in exc.value.message
        assert exc.value.exit_code == EXIT_INPUT_ERROR


@pytest.mark.unit
class TestLoadScenarioConfig:
    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"n_items": 10, "seed": 4, "robot": {"robot_center_x": 1800.0}}),
                        encoding="utf-8")
        cfg = load_scenario_config(path, {"seed": 9, "battery_fraction": None})
        assert cfg.n_items == 10
        assert cfg.seed == 9
        assert cfg.battery_fraction == 0.7
        assert cfg.tracking.robot_center_x == 1800.0

    def test_no_file_uses_defaults(self):
        cfg = load_scenario_config(None, {"n_items": 3})
        assert cfg.n_items == 3
        assert cfg.dt == pytest.approx(0.001)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigInvalidError) as exc:
            load_scenario_config(tmp_path / "nope.json")
        assert exc.value.exit_code == EXIT_INPUT_ERROR

    @pytest.mark.parametrize("content", ["{not json", "[1, 2, 3]"])
    def test_bad_content(self, tmp_path, content):
        path = tmp_path / "bad.json"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(ConfigInvalidError):
            load_scenario_config(path)

    def test_invalid_override(self):
        with pytest.raises(ConfigInvalidError) as exc:
            load_scenario_config(None, {"battery_fraction": 1.5})
        assert exc.value.exit_code == EXIT_INPUT_ERROR


@pytest.mark.unit
class TestSceneGeneration:
    def test_battery_fraction(self):
        scene = generate_scene(ScenarioConfig(), seed=0)
        assert len(scene.devices) == 120
        assert sum(d.has_battery for d in scene.devices) == 84
        assert scene.devices[0].id == device_id(0) == "dev-0001"

    def test_same_seed_same_scene(self):
        cfg = ScenarioConfig(n_items=10)
        assert generate_scene(cfg, seed=7) == generate_scene(cfg, seed=7)
        assert generate_scene(cfg, seed=7) != generate_scene(cfg, seed=8)

    def test_spawn_spacing(self):
        cfg = ScenarioConfig(n_items=5)
        scene = generate_scene(cfg, seed=1)
        gaps = [b.x_min - a.x_min for a, b in zip(scene.devices, scene.devices[1:])]
        assert gaps == pytest.approx([cfg.conveyor_speed * cfg.spawn_headway_s] * 4)
        assert scene.devices[0].x_min == pytest.approx(cfg.spawn_distance_mm)

    def test_devices_stay_on_belt(self):
        cfg = ScenarioConfig(n_items=40)
        for device in generate_scene(cfg, seed=2).devices:
            assert device.y_min >= BELT_EDGE_MARGIN_MM - 1e-9
            assert device.y_max <= cfg.scanner.belt_width - BELT_EDGE_MARGIN_MM + 1e-9
            for battery in device.batteries:
                assert device.contains(battery)


@pytest.mark.unit
class TestScenarioReport:
    def test_conserved_counts(self):
        report = ScenarioReport(**report_fields())
        assert report.spawned == 2

    def test_conservation_violation(self):
        with pytest.raises(ValidationError, match="Conservación"):
            ScenarioReport(**report_fields(pass_through=0))

    def test_every_request_answered(self):
        with pytest.raises(ValidationError):
            ScenarioReport(**report_fields(pick_requests=2))

    def test_item_timing_outcome(self):
        timing = ItemTiming(item_id="dev-0001", has_battery=True, spawn_t=0.0, outcome="sorted_to_bin")
        assert timing.outcome == ItemOutcomeEnum.SORTED_TO_BIN
