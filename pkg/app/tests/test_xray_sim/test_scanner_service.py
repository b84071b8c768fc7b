import math

import numpy as np
import pytest
from pydantic import ValidationError

from app.entities.xray_sim.schemas.enums import BatteryClassEnum, NoiseModeEnum
from app.entities.xray_sim.schemas.xray_schemas import (
    BatteryInstance,
    DeviceInstance,
    Material,
    Scene,
    ScannerConfig,
)
from app.entities.xray_sim.services.attenuation_service import attenuate, compile_scene, path_integrals
from app.entities.xray_sim.services.scanner_service import (
    LineScanner,
    column_positions,
    line_positions,
    scan_block,
    scan_line,
    white_reference,
)


def narrow_scene(devices, **kwargs):
    return Scene(belt_width=40.0, devices=devices, **kwargs)


def phone(x_min=10.0, x_max=60.0, with_battery=True):
    batteries = []
    if with_battery:
        batteries.append(BatteryInstance(
            id="dev-0001-bat", battery_class=BatteryClassEnum.POUCH,
            x_min=x_min + 10.0, x_max=x_max - 10.0, y_min=10.0, y_max=30.0, thickness=5.0,
        ))
    return DeviceInstance(id="dev-0001", x_min=x_min, x_max=x_max, y_min=5.0, y_max=35.0,
                          thickness=10.0, batteries=batteries)


@pytest.mark.unit
class TestAttenuation:
    def test_half_value_thickness(self):
        assert attenuate(40000, math.log(2)) == pytest.approx(20000.0)

    def test_stacked_slabs_multiply(self, small_scanner):
        scene = narrow_scene([phone()])
        scanner = LineScanner(scene, small_scanner)
        low, high = scanner.expected_at(np.array([30.0]))
        # pixel y = 20 mm: dispositivo (plástico, 10 mm) + batería (5 mm)
        column = 200
        expected_low = 40000.0 * math.exp(-(0.015 * 10.0 + 0.25 * 5.0))
        expected_high = 40000.0 * math.exp(-(0.008 * 10.0 + 0.12 * 5.0))
        assert abs(low[0, column] - expected_low) / expected_low < 1e-12
        assert abs(high[0, column] - expected_high) / expected_high < 1e-12

    def test_compiled_slabs_sorted(self):
        scene = narrow_scene([phone(x_min=100.0, x_max=150.0), phone(x_min=10.0, x_max=60.0).model_copy(
            update={"id": "dev-0002", "batteries": []})])
        compiled = compile_scene(scene)
        assert len(compiled) == 3
        assert np.all(np.diff(compiled.x_min) >= 0)

    def test_path_integrals_empty_scene(self, small_scanner):
        compiled = compile_scene(narrow_scene([]))
        low, high = path_integrals(compiled, line_positions(0, 5, small_scanner), column_positions(small_scanner), 0.0)
        assert low.shape == (5, 400)
        assert not low.any() and not high.any()


@pytest.mark.unit
class TestLineScanner:
    def test_empty_belt_reads_white(self, scanner_config):
        line = scan_line(Scene(), 0.0, scanner_config)
        assert line.low.dtype == np.uint16
        assert np.all(line.low == 40000) and np.all(line.high == 40000)

    def test_white_reference_without_gain_spread(self, small_scanner):
        low, high = white_reference(small_scanner)
        assert np.all(low == 40000.0) and np.all(high == 40000.0)

    def test_half_value_layer_counts(self, small_scanner):
        hvl = Material(name="hvl", mu_low=math.log(2) / 10.0, mu_high=math.log(2) / 10.0)
        device = DeviceInstance(id="dev-0001", x_min=1.0, x_max=2.0, y_min=0.0, y_max=40.0,
                                thickness=10.0, material="hvl")
        scene = narrow_scene([device], materials={"hvl": hvl})
        low, high = scan_block(scene, 10, 5, small_scanner)
        assert np.all(np.abs(low.astype(int) - 20000) <= 1)
        assert np.all(np.abs(high.astype(int) - 20000) <= 1)

    def test_object_length_in_rows(self, small_scanner):
        scanner = LineScanner(narrow_scene([phone(x_min=10.0, x_max=60.0)]), small_scanner)
        low, _ = scanner.scan_block(0, 1000)
        rows = np.flatnonzero((low < 40000).any(axis=1))
        assert abs(len(rows) - 500) <= 1
        assert abs(rows[0] - 100) <= 1

    def test_blank_detection(self, small_scanner):
        scanner = LineScanner(narrow_scene([phone(x_min=10.0, x_max=60.0)]), small_scanner)
        assert scanner.is_blank(0, 100)
        assert not scanner.is_blank(50, 100)
        assert scanner.is_blank(600, 100)

    def test_scan_at_matches_block(self, small_scanner):
        scanner = LineScanner(narrow_scene([phone()]), small_scanner)
        low, high = scanner.scan_block(300, 1)
        line = scanner.scan_at(300 / small_scanner.line_rate)
        np.testing.assert_array_equal(line.low, low[0])
        np.testing.assert_array_equal(line.high, high[0])

    def test_poisson_noise_is_seeded_per_line(self, small_scanner):
        cfg = small_scanner.model_copy(update={"noise_mode": NoiseModeEnum.POISSON})
        scene = narrow_scene([phone()])
        first = LineScanner(scene, cfg, noise_seed=7).scan_block(150, 10)[0]
        again = LineScanner(scene, cfg, noise_seed=7).scan_block(150, 10)[0]
        other = LineScanner(scene, cfg, noise_seed=8).scan_block(150, 10)[0]
        single = LineScanner(scene, cfg, noise_seed=7).scan_block(155, 1)[0]
        np.testing.assert_array_equal(first, again)
        assert not np.array_equal(first, other)
        np.testing.assert_array_equal(first[5], single[0])


@pytest.mark.unit
class TestSceneSchemas:
    def test_battery_outside_device(self):
        with pytest.raises(ValidationError):
            DeviceInstance(id="dev-0001", x_min=0.0, x_max=10.0, y_min=0.0, y_max=10.0, thickness=5.0,
                           batteries=[BatteryInstance(id="b", battery_class=BatteryClassEnum.BUTTON,
                                                      x_min=5.0, x_max=15.0, y_min=1.0, y_max=2.0,
                                                      thickness=1.0)])

    def test_device_outside_belt(self):
        with pytest.raises(ValidationError):
            narrow_scene([DeviceInstance(id="dev-0001", x_min=0.0, x_max=10.0, y_min=30.0, y_max=50.0,
                                         thickness=5.0)])

    def test_unknown_material(self):
        with pytest.raises(ValidationError):
            narrow_scene([DeviceInstance(id="dev-0001", x_min=0.0, x_max=10.0, y_min=0.0, y_max=10.0,
                                         thickness=5.0, material="unobtainium")])

    def test_material_ordering(self):
        with pytest.raises(ValidationError):
            Material(name="odd", mu_low=0.1, mu_high=0.2)

    def test_scanner_width_must_cover_belt(self):
        with pytest.raises(ValidationError):
            ScannerConfig(width_px=400, belt_width=800.0)

    def test_synchronized_speed(self, scanner_config):
        assert scanner_config.synchronized_speed == pytest.approx(350.0)
        assert scanner_config.half_height == 1750
