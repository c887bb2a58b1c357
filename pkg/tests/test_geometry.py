import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memnav.geometry import (
    AgentPose,
    PixelProjection,
    PolarAction,
    angular_deviation,
    apply_polar,
    back_project,
    bearing_deg,
    camera_extrinsics,
    column_heading,
    heading_column,
    make_intrinsics,
    normalize_relative,
    project_point,
)


# ---------------------------------------------------------------------------
# Independent oracle: explicit homogeneous-coordinate projection built from
# elementary rotations, sharing no code with the implementation.


def oracle_extrinsics(pose_x, pose_y, pose_yaw, cam_h, tilt, view_yaw):
    h = math.radians((pose_yaw + view_yaw) % 360.0)
    rz = np.array(
        [
            [math.cos(h), -math.sin(h), 0.0],
            [math.sin(h), math.cos(h), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    base = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
    a = -tilt
    rx = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, math.cos(a), -math.sin(a)],
            [0.0, math.sin(a), math.cos(a)],
        ]
    )
    cam_to_world = rz @ base @ rx
    r = cam_to_world.T
    center = np.array([pose_x, pose_y, cam_h])
    return r, -r @ center


def oracle_project(width, height, hfov_deg, pose, cam_h, tilt, view_yaw, p):
    fx = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
    k = np.array([[fx, 0.0, width / 2.0], [0.0, fx, height / 2.0], [0.0, 0.0, 1.0]])
    r, t = oracle_extrinsics(pose[0], pose[1], pose[2], cam_h, tilt, view_yaw)
    x = k @ (r @ np.asarray(p) + t)
    lam = x[2]
    if lam <= 0:
        return None
    return x[0] / lam, x[1] / lam, lam


# ---------------------------------------------------------------------------
# Intrinsics


def test_intrinsics_square_fov():
    intr = make_intrinsics(640, 480, 90.0)
    assert intr.fx == pytest.approx(320.0)
    assert intr.fy == intr.fx
    assert (intr.cx, intr.cy) == (320.0, 240.0)


def test_intrinsics_79_deg_matches_scalar_oracle():
    expected = 320.0 / math.tan(math.radians(39.5))
    intr = make_intrinsics(640, 480, 79.0)
    assert intr.fx == pytest.approx(expected, abs=1e-9)
    assert intr.fx == pytest.approx(388.19, abs=0.01)


def test_intrinsics_tiny_image():
    assert make_intrinsics(2, 2, 90.0).fx == pytest.approx(1.0)


@pytest.mark.parametrize("args", [(0, 480, 79), (640, -1, 79), (640, 480, 0), (640, 480, 180)])
def test_intrinsics_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        make_intrinsics(*args)


# ---------------------------------------------------------------------------
# Extrinsics


def test_extrinsics_identity_like_case():
    ext = camera_extrinsics(AgentPose(0, 0, 0), camera_height=0.0, tilt_rad=0.0)
    assert np.allclose(ext.camera_center(), [0, 0, 0], atol=1e-12)
    p_cam = ext.apply(np.array([1.0, 0.0, 0.0]))
    assert np.allclose(p_cam, [0.0, 0.0, 1.0], atol=1e-12)


def test_extrinsics_rear_view_puts_point_behind():
    ext = camera_extrinsics(AgentPose(0, 0, 0), 0.0, 0.0, view_yaw=180.0)
    p_cam = ext.apply(np.array([1.0, 0.0, 0.0]))
    assert p_cam[2] == pytest.approx(-1.0)


def test_extrinsics_matches_composition_oracle():
    pose = AgentPose(1.0, 2.0, 90.0)
    ext = camera_extrinsics(pose, camera_height=0.88, tilt_rad=0.25)
    r, t = oracle_extrinsics(1.0, 2.0, 90.0, 0.88, 0.25, 0.0)
    assert np.allclose(ext.rotation, r, atol=1e-9)
    assert np.allclose(ext.translation, t, atol=1e-9)


def test_extrinsics_round_trip_mount_point():
    ext = camera_extrinsics(AgentPose(3.2, -1.5, 123.0), 0.88, 0.25, view_yaw=150.0)
    assert np.allclose(ext.camera_center(), [3.2, -1.5, 0.88], atol=1e-9)


def test_extrinsics_rejects_bad_tilt():
    with pytest.raises(ValueError):
        camera_extrinsics(AgentPose(0, 0, 0), 0.88, math.pi / 2)


# ---------------------------------------------------------------------------
# Projection


def test_project_optical_axis():
    intr = make_intrinsics(640, 480, 90.0)
    ext = camera_extrinsics(AgentPose(0, 0, 0), 0.0, 0.0)
    proj = project_point(intr, ext, (1.0, 0.0, 0.0))
    assert proj is not None
    assert (proj.u, proj.v) == pytest.approx((intr.cx, intr.cy))
    assert proj.depth == pytest.approx(1.0)


def test_project_half_meter_right():
    # 1 m ahead, 0.5 m right of an agent at the origin facing +x: right is -y.
    intr = make_intrinsics(640, 480, 90.0)
    ext = camera_extrinsics(AgentPose(0, 0, 0), 0.0, 0.0)
    proj = project_point(intr, ext, (1.0, -0.5, 0.0))
    assert proj.u == pytest.approx(intr.cx + 320.0 * 0.5)


def test_project_behind_camera_is_absent():
    intr = make_intrinsics(640, 480, 90.0)
    ext = camera_extrinsics(AgentPose(0, 0, 0), 0.0, 0.0)
    assert project_point(intr, ext, (-1.0, 0.0, 0.0)) is None


def test_projection_matches_oracle_on_seeded_batch():
    rng = np.random.default_rng(42)
    intr = make_intrinsics(640, 480, 79.0)
    for _ in range(300):
        pose = AgentPose(*rng.uniform(-5, 5, 2), rng.uniform(0, 360))
        tilt = rng.uniform(0, 0.6)
        view_yaw = float(rng.choice([30, 90, 150, 210, 270, 330]))
        p = np.array([rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(0, 2)])
        ext = camera_extrinsics(pose, 0.88, tilt, view_yaw)
        got = project_point(intr, ext, p)
        want = oracle_project(640, 480, 79.0, (pose.x, pose.y, pose.yaw), 0.88, tilt, view_yaw, p)
        if want is None:
            assert got is None
        else:
            assert got is not None
            assert got.u == pytest.approx(want[0], abs=1e-9)
            assert got.v == pytest.approx(want[1], abs=1e-9)
            assert got.depth == pytest.approx(want[2], abs=1e-12)


def test_projection_round_trip_recovers_world_point():
    rng = np.random.default_rng(7)
    intr = make_intrinsics(640, 480, 79.0)
    for _ in range(200):
        pose = AgentPose(*rng.uniform(-3, 3, 2), rng.uniform(0, 360))
        ext = camera_extrinsics(pose, 0.88, 0.25, float(rng.choice([30, 150, 270])))
        pix = PixelProjection(
            u=rng.uniform(0, 640), v=rng.uniform(0, 480), depth=rng.uniform(0.5, 8.0)
        )
        p_world = back_project(intr, ext, pix)
        proj = project_point(intr, ext, p_world)
        assert proj is not None
        assert math.hypot(proj.u - pix.u, proj.v - pix.v) < 1e-6
        recovered = back_project(intr, ext, proj)
        assert np.allclose(recovered, p_world, atol=1e-6)


# ---------------------------------------------------------------------------
# Angular arithmetic


@pytest.mark.parametrize(
    "a,b,expected", [(30, 30, 0), (350, 10, 20), (30, 210, 180), (0, 359, 1), (90, 260, 170)]
)
def test_angular_deviation_cases(a, b, expected):
    assert angular_deviation(a, b) == pytest.approx(expected)


@given(st.floats(-720, 720), st.floats(-720, 720))
def test_angular_deviation_symmetric_and_bounded(a, b):
    d = angular_deviation(a, b)
    assert 0.0 <= d <= 180.0
    assert d == pytest.approx(angular_deviation(b, a))
    assert d == pytest.approx(angular_deviation(a + 360.0, b), abs=1e-6)
    assert d == pytest.approx(angular_deviation(a, b + 360.0), abs=1e-6)


# ---------------------------------------------------------------------------
# Polar actions


def test_apply_polar_straight_ahead():
    assert apply_polar(AgentPose(0, 0, 0), PolarAction(1.0, 0.0)) == AgentPose(1.0, 0.0, 0.0)


def test_apply_polar_pure_rotation():
    assert apply_polar(AgentPose(0, 0, 0), PolarAction(0.0, 90.0)) == AgentPose(0.0, 0.0, 90.0)


def test_apply_polar_rotate_then_translate():
    # Hand trigonometry: yaw 45 + 45 = 90, then sqrt(2) along +y.
    got = apply_polar(AgentPose(1, 1, 45), PolarAction(math.sqrt(2.0), 45.0))
    assert got.x == pytest.approx(1.0)
    assert got.y == pytest.approx(1.0 + math.sqrt(2.0))
    assert got.yaw == pytest.approx(90.0)


def test_apply_polar_identity():
    pose = AgentPose(2.5, -1.0, 213.0)
    assert apply_polar(pose, PolarAction(0.0, 0.0)) == pose


@given(
    st.floats(-10, 10),
    st.floats(-10, 10),
    st.floats(0, 360),
    st.floats(0, 5),
    st.floats(-179, 180),
)
def test_apply_polar_composition(x, y, yaw, r, theta):
    pose = AgentPose(x, y, yaw)
    direct = apply_polar(pose, PolarAction(r, theta))
    composed = apply_polar(apply_polar(pose, PolarAction(0.0, theta)), PolarAction(r, 0.0))
    assert direct.x == pytest.approx(composed.x, abs=1e-9)
    assert direct.y == pytest.approx(composed.y, abs=1e-9)
    assert direct.yaw == pytest.approx(composed.yaw, abs=1e-9)


@given(st.floats(0, 360), st.floats(0, 5))
def test_apply_polar_zero_theta_preserves_yaw(yaw, r):
    pose = AgentPose(0, 0, yaw)
    assert apply_polar(pose, PolarAction(r, 0.0)).yaw == pytest.approx(pose.yaw)


def test_polar_action_rejects_negative_radius():
    with pytest.raises(ValueError):
        PolarAction(-0.1, 0.0)


def test_polar_action_normalizes_theta():
    assert PolarAction(1.0, 270.0).theta == pytest.approx(-90.0)
    assert PolarAction(1.0, 180.0).theta == pytest.approx(180.0)


def test_pose_normalizes_yaw():
    assert AgentPose(0, 0, 450.0).yaw == pytest.approx(90.0)
    assert AgentPose(0, 0, -90.0).yaw == pytest.approx(270.0)


# ---------------------------------------------------------------------------
# Column/heading mapping


@given(st.floats(0, 360), st.integers(0, 639))
@settings(max_examples=60)
def test_column_heading_inverse(center, column):
    intr = make_intrinsics(640, 480, 79.0)
    heading = column_heading(intr, center, column)
    assert heading_column(intr, center, heading) == pytest.approx(column, abs=1e-6)


def test_right_of_center_decreases_bearing():
    intr = make_intrinsics(640, 480, 79.0)
    assert normalize_relative(column_heading(intr, 90.0, 600) - 90.0) < 0
    assert normalize_relative(column_heading(intr, 90.0, 40) - 90.0) > 0


def test_bearing_deg():
    assert bearing_deg((0, 0), (1, 0)) == pytest.approx(0.0)
    assert bearing_deg((0, 0), (0, 2)) == pytest.approx(90.0)
    assert bearing_deg((1, 1), (0, 1)) == pytest.approx(180.0)
