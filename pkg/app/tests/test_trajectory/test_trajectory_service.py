import io

import numpy as np
import pytest

from app.entities.kinematics.schemas.kinematics_schemas import JointLimits
from app.entities.trajectory.services.trajectory_service import (
    TRAJECTORY_CSV_COLUMNS,
    allocate_knot_times,
    build_cartesian_trajectory,
    build_pi_path,
    build_piecewise_cubic,
    cubic_coefficients,
    evaluate,
    intermediate_velocities,
    linear_interpolation_baseline,
    plan_pick_place,
    sample_cartesian,
    tracking_error,
    write_cartesian_csv,
    write_trajectory_csv,
)
from app.shared.exceptions import (
    InvalidAlphaError,
    NonPositiveDurationError,
    NonPositiveOffsetError,
    OutOfDomainError,
    UnreachableWaypointError,
)


PICK = (-200.0, 0.0, -900.0)
PLACE = (200.0, 0.0, -900.0)


@pytest.fixture
def reference_path():
    return build_pi_path(PICK, PLACE, 100.0, 0.77)


@pytest.mark.unit
class TestPiPath:
    def test_intermediate_points_move_toward_median(self, reference_path):
        np.testing.assert_allclose(reference_path.waypoints[1], [-46.0, 0.0, -800.0], atol=1e-9)
        np.testing.assert_allclose(reference_path.waypoints[2], [46.0, 0.0, -800.0], atol=1e-9)
        np.testing.assert_allclose(reference_path.waypoints[0], PICK)
        np.testing.assert_allclose(reference_path.waypoints[3], PLACE)

    def test_zero_alpha_keeps_raw_corners(self):
        path = build_pi_path(PICK, PLACE, 100.0, 0.0)
        np.testing.assert_allclose(path.waypoints, path.raw_corners())

    def test_alpha_out_of_range(self):
        with pytest.raises(InvalidAlphaError):
            build_pi_path(PICK, PLACE, 100.0, 1.5)

    def test_offset_must_be_positive(self):
        with pytest.raises(NonPositiveOffsetError):
            build_pi_path(PICK, PLACE, 0.0, 0.5)


@pytest.mark.unit
class TestCubicPieces:
    def test_sign_change_gives_zero_velocity(self):
        np.testing.assert_allclose(intermediate_velocities([0, 1, 3], [0, 1, 2]), [0.0, 1.5, 0.0])
        np.testing.assert_allclose(intermediate_velocities([0, 1, 0], [0, 1, 2]), [0.0, 0.0, 0.0])

    def test_rest_to_rest_coefficients(self):
        assert cubic_coefficients(0, 1, 0, 0, 1) == pytest.approx((0.0, 0.0, 3.0, -2.0))

    def test_non_increasing_times_rejected(self):
        with pytest.raises(NonPositiveDurationError):
            intermediate_velocities([0, 1, 2], [0, 1, 1])

    def test_knot_times_follow_leg_lengths(self, reference_path):
        times = allocate_knot_times(reference_path.waypoints, 1.0)
        assert times[0] == 0.0 and times[-1] == 1.0
        assert np.all(np.diff(times) > 0)
        # Los tramos de subida y bajada miden lo mismo
        assert times[1] - times[0] == pytest.approx(times[3] - times[2])


@pytest.mark.unit
class TestCartesianSpline:
    def test_passes_through_waypoints(self, reference_path):
        traj = build_cartesian_trajectory(reference_path, 1.0)
        for t, point in zip(traj.knot_times, reference_path.waypoints):
            position, _, _ = evaluate(traj, float(t))
            np.testing.assert_array_equal(position, point)

    def test_rest_at_both_ends(self, reference_path):
        traj = build_cartesian_trajectory(reference_path, 1.0)
        _, v_start, _ = evaluate(traj, traj.t_start)
        _, v_end, _ = evaluate(traj, traj.t_end, side="left")
        np.testing.assert_allclose(v_start, 0.0, atol=1e-12)
        np.testing.assert_allclose(v_end, 0.0, atol=1e-12)

    def test_velocity_continuous_at_interior_knots(self, reference_path):
        traj = build_cartesian_trajectory(reference_path, 1.0)
        for t in traj.knot_times[1:-1]:
            _, v_left, _ = evaluate(traj, float(t), side="left")
            _, v_right, _ = evaluate(traj, float(t), side="right")
            np.testing.assert_allclose(v_left, v_right, atol=1e-9)

    def test_samples_stay_inside_waypoint_box(self, reference_path):
        traj = build_cartesian_trajectory(reference_path, 1.0)
        _, positions, _ = sample_cartesian(traj, 0.001)
        low = reference_path.waypoints.min(axis=0) - 1.0
        high = reference_path.waypoints.max(axis=0) + 1.0
        assert np.all(positions >= low) and np.all(positions <= high)

    def test_outside_domain(self, reference_path):
        traj = build_cartesian_trajectory(reference_path, 1.0, t_start=2.0)
        with pytest.raises(OutOfDomainError):
            evaluate(traj, 1.5)

    def test_single_axis_spline(self):
        traj = build_piecewise_cubic(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
        position, velocity, _ = evaluate(traj, 0.5)
        assert position[0] == pytest.approx(0.5)
        assert velocity[0] == pytest.approx(1.5)

    @pytest.mark.parametrize("pick,place,h", [
        (PICK, PLACE, 100.0),
        ((-150.0, 50.0, -800.0), (200.0, -80.0, -760.0), 25.0),
    ])
    def test_reverse_plan_retraces_path(self, pick, place, h):
        forward = build_cartesian_trajectory(build_pi_path(pick, place, h, 0.77), 1.0)
        backward = build_cartesian_trajectory(build_pi_path(place, pick, h, 0.77), 1.0)
        times, forward_positions, _ = sample_cartesian(forward, dt=0.01)
        mirrored, backward_positions, _ = sample_cartesian(backward, dt=0.01)
        np.testing.assert_allclose(1.0 - mirrored[::-1], times, atol=1e-12)
        np.testing.assert_allclose(backward_positions[::-1], forward_positions, rtol=0.0, atol=1e-9)


@pytest.mark.unit
class TestJointTrajectory:
    def test_plan_samples_whole_window(self, delta_params, reference_path):
        trajectory = plan_pick_place(delta_params, reference_path, 1.0, 0.001)
        assert len(trajectory) == 1001
        assert trajectory.t_start == 0.0
        assert trajectory.t_end == pytest.approx(1.0)
        np.testing.assert_allclose(trajectory.velocities[0], 0.0, atol=1e-12)
        np.testing.assert_allclose(trajectory.velocities[-1], 0.0, atol=1e-12)

    def test_joints_reproduce_cartesian_path(self, delta_params, reference_path):
        trajectory = plan_pick_place(delta_params, reference_path, 1.0, 0.001)
        assert tracking_error(delta_params, trajectory).max() < 1e-6

    def test_time_offset(self, delta_params, reference_path):
        trajectory = plan_pick_place(delta_params, reference_path, 1.0, 0.01, t_start=5.0)
        assert trajectory.t_start == 5.0
        assert trajectory.index_at(5.5) == 50

    def test_stationary_leg_is_constant(self, delta_params):
        path = build_pi_path(PICK, PICK, 100.0, 0.77)
        trajectory = plan_pick_place(delta_params, path, 1.0, 0.01)
        assert np.ptp(trajectory.joints, axis=0).max() == 0.0
        np.testing.assert_allclose(trajectory.positions, np.repeat([PICK], len(trajectory), axis=0))

    def test_unreachable_waypoint(self, delta_params):
        path = build_pi_path((0.0, 0.0, -2000.0), PLACE, 100.0, 0.77)
        with pytest.raises(UnreachableWaypointError) as exc:
            plan_pick_place(delta_params, path, 1.0, 0.01)
        assert exc.value.details["index"] == 0

    def test_limits_apply_to_waypoints(self, delta_params, reference_path):
        with pytest.raises(UnreachableWaypointError):
            plan_pick_place(delta_params, reference_path, 1.0, 0.01, JointLimits(theta_min=-0.05, theta_max=0.05))


@pytest.mark.unit
class TestBaselineAndExport:
    def test_baseline_hits_knots_and_jumps(self, reference_path):
        times, positions, velocities = linear_interpolation_baseline(reference_path, 1.0, 0.001)
        np.testing.assert_allclose(positions[0], PICK)
        np.testing.assert_allclose(positions[-1], PLACE)
        # La velocidad del comparador no arranca en reposo
        assert np.linalg.norm(velocities[0]) > 0.0

    def test_trajectory_csv(self, delta_params, reference_path):
        trajectory = plan_pick_place(delta_params, reference_path, 1.0, 0.01)
        stream = io.StringIO()
        rows = write_trajectory_csv(stream, trajectory)
        lines = stream.getvalue().splitlines()
        assert lines[0].split(",") == TRAJECTORY_CSV_COLUMNS
        assert rows == 101 and len(lines) == 102
        assert lines[1].split(",")[:4] == ["0.000000", "-200.000000", "0.000000", "-900.000000"]

    def test_cartesian_csv_has_no_joint_columns(self, reference_path):
        stream = io.StringIO()
        write_cartesian_csv(stream, *linear_interpolation_baseline(reference_path, 1.0, 0.1))
        assert stream.getvalue().splitlines()[0] == "t,x,y,z,vx,vy,vz"
