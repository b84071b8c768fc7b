import csv
import json
import time

import pytest

from app.entities.orchestrator.schemas.enums import EventTypeEnum, ItemOutcomeEnum
from app.entities.orchestrator.schemas.scenario_schemas import ScenarioConfig, ScenarioReport
from app.entities.orchestrator.services.channel_service import TcpChannel, serve_robot_endpoint
from app.entities.orchestrator.services.endpoint_service import RobotEndpoint
from app.entities.orchestrator.services.simulation_service import (
    DECISIONS_NAME,
    EVENT_CSV_COLUMNS,
    EVENTS_NAME,
    RECORDS_NAME,
    REPORT_NAME,
    Simulation,
    run_scenario,
)
from app.entities.xray_sim.services.frame_io_service import MANIFEST_NAME, load_frames
from app.entities.xray_sim.schemas.xray_schemas import ScannerConfig


def sorted_items(report):
    return [i for i in report.items if i.outcome == ItemOutcomeEnum.SORTED_TO_BIN]


@pytest.mark.unit
class TestSimulationStep:
    def test_first_step_spawns_first_device(self, small_scenario):
        sim = Simulation(small_scenario, seed=3)
        events = sim.step()
        assert sim.t == pytest.approx(small_scenario.dt)
        assert events[0].event_type == EventTypeEnum.SPAWN
        assert events[0].item_id == "dev-0001"
        assert events[0].t == 0.0

    def test_max_steps_stops_early(self, small_scenario):
        sim = Simulation(small_scenario, seed=3)
        report = sim.run(max_steps=100)
        assert sim.k == 100
        assert report.spawned == small_scenario.n_items
        assert report.sorted_to_bin == 0


@pytest.mark.integration
class TestRunScenario:
    def test_every_battery_reaches_the_bin(self, small_scenario):
        report = run_scenario(small_scenario)
        assert report.seed == 3
        assert report.battery_items == 3
        assert report.sorted_to_bin == 3
        assert report.pass_through == 3
        assert report.missed == 0 and report.wrong_picks == 0
        assert report.pick_requests == report.acks == 3
        assert report.grasp_error_max_mm <= small_scenario.robot.grasp_tol_mm
        assert report.tracking_error_max_mm < 1e-6

    def test_item_timeline_is_ordered(self, small_scenario):
        report = run_scenario(small_scenario)
        for timing in sorted_items(report):
            assert timing.has_battery
            assert timing.spawn_t < timing.detected_t < timing.t_pick < timing.binned_t
            assert timing.exit_t is None
        for timing in report.items:
            if not timing.has_battery:
                assert timing.outcome == ItemOutcomeEnum.PASS_THROUGH
                assert timing.t_pick is None

    def test_no_batteries_no_requests(self):
        report = run_scenario(ScenarioConfig(n_items=4, battery_fraction=0.0, seed=1))
        assert report.pick_requests == 0
        assert report.pass_through == 4
        assert report.detected_items >= 4

    def test_short_headway_overloads_robot(self):
        cfg = ScenarioConfig(n_items=10, battery_fraction=1.0, spawn_headway_s=0.5,
                             device_length_mm=(60.0, 100.0), seed=1)
        report = run_scenario(cfg)
        assert report.infeasible > 0
        assert report.missed > 0
        assert report.missed_reasons.get("infeasible", 0) > 0
        assert report.sorted_to_bin >= 1
        assert report.pick_requests == report.acks + report.rejects

    def test_same_seed_same_run(self, small_scenario):
        first = Simulation(small_scenario, seed=5)
        second = Simulation(small_scenario, seed=5)
        report_a, report_b = first.run(), second.run()
        assert first.events == second.events
        assert report_a.model_dump_json() == report_b.model_dump_json()

    def test_seed_argument_wins(self, small_scenario):
        assert run_scenario(small_scenario, seed=11).seed == 11

    def test_standin_detector(self):
        cfg = ScenarioConfig(n_items=6, battery_fraction=0.5, seed=3, detector_mode="standin")
        report = run_scenario(cfg)
        assert report.detector_mode.value == "standin"
        assert report.detected_items > 0
        assert report.sorted_to_bin >= 1

    def test_artifacts(self, small_scenario, tmp_path):
        report = run_scenario(small_scenario, out_dir=tmp_path, emit_traj=True)

        saved = ScenarioReport.model_validate_json((tmp_path / REPORT_NAME).read_text(encoding="utf-8"))
        assert saved == report

        with (tmp_path / EVENTS_NAME).open(encoding="utf-8") as stream:
            rows = list(csv.reader(stream))
        assert rows[0] == EVENT_CSV_COLUMNS
        kinds = {row[1] for row in rows[1:]}
        assert {"spawn", "frame", "detected", "pick_request", "ack", "release", "exit"} <= kinds

        assert (tmp_path / DECISIONS_NAME).read_text(encoding="utf-8").startswith("item_id,")
        records = json.loads((tmp_path / RECORDS_NAME).read_text(encoding="utf-8"))
        assert len(records) == report.frames_emitted

        trajectories = sorted(p.name for p in (tmp_path / "trajectories").glob("*.csv"))
        assert len(trajectories) == 3 * report.sorted_to_bin
        assert any(name.endswith("_approach.csv") for name in trajectories)


@pytest.mark.integration
class TestRemoteEndpoint:
    def test_tcp_endpoint_matches_local(self, small_scenario):
        local = run_scenario(small_scenario)
        server = serve_robot_endpoint(
            RobotEndpoint(small_scenario.robot, small_scenario.trajectory), "127.0.0.1", 0, background=True
        )
        try:
            with TcpChannel("127.0.0.1", server.port) as channel:
                remote = run_scenario(small_scenario, channel=channel)
        finally:
            server.shutdown()
            server.server_close()
        assert remote.model_dump_json() == local.model_dump_json()


@pytest.mark.slow
class TestReferenceLine:
    def test_default_scenario_sorts_every_battery(self):
        started = time.perf_counter()
        report = run_scenario(ScenarioConfig(), seed=0)
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0
        assert report.spawned == 120
        assert report.battery_items == 84
        assert report.sorted_to_bin == 84
        assert report.missed == 0 and report.wrong_picks == 0

    def test_frames_on_disk(self, tmp_path):
        cfg = ScenarioConfig(
            n_items=1, battery_fraction=1.0, seed=2, device_width_mm=(20.0, 60.0),
            scanner=ScannerConfig(width_px=2000, belt_width=200.0, bin_factor=5),
            robot={"robot_center_y": 100.0},
        )
        report = run_scenario(cfg, out_dir=tmp_path, emit_frames=True)
        frames_dir = tmp_path / "frames"
        assert (frames_dir / MANIFEST_NAME).exists()
        frames = load_frames(frames_dir)
        assert len(frames) == report.frames_emitted
        assert frames[0].width == 400
        assert frames[0].height == 700
