"""Camera model, rigid transforms, pixel projection, and polar-action kinematics.

Coordinate conventions (fixed project-wide):

  World frame: right-handed, z up, floor plane at z = 0.
    yaw 0 deg = +x, yaw 90 deg = +y (counterclockwise seen from above).
  Camera frame: standard pinhole, z forward, x right, y down.
  Image frame: u right, v down, origin at the top-left pixel.

With z up, an observer facing +x has +y on their left, so moving right in
the image corresponds to decreasing world bearing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle in degrees into [0, 360)."""
    return yaw % 360.0


def normalize_relative(theta: float) -> float:
    """Wrap an angle in degrees into (-180, 180]."""
    wrapped = theta % 360.0
    if wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


def angular_deviation(a: float, b: float) -> float:
    """Minimal absolute circular difference between two headings, in [0, 180]."""
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def bearing_deg(origin: tuple[float, float], target: tuple[float, float]) -> float:
    """World-frame bearing from origin to target, in [0, 360)."""
    return normalize_yaw(math.degrees(math.atan2(target[1] - origin[1], target[0] - origin[0])))


@dataclass(frozen=True)
class AgentPose:
    """Agent base position (meters, world frame) and heading (degrees)."""

    x: float
    y: float
    yaw: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "yaw", normalize_yaw(self.yaw))

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class PolarAction:
    """Relative motion: rotate by theta degrees, then advance r meters."""

    r: float
    theta: float

    def __post_init__(self) -> None:
        if self.r < 0:
            raise ValueError(f"polar action radius must be >= 0, got {self.r}")
        object.__setattr__(self, "theta", normalize_relative(self.theta))


@dataclass(frozen=True)
class CameraIntrinsics:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class ExtrinsicTransform:
    """World-to-camera rigid transform: p_cam = rotation @ p_world + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3 and translation a 3-vector")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-9):
            raise ValueError("rotation must be orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must be proper (det = +1)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def apply(self, p_world: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(p_world, dtype=float) + self.translation

    def camera_center(self) -> np.ndarray:
        """World position of the camera's optical center."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class PixelProjection:
    u: float
    v: float
    depth: float


def make_intrinsics(width: int, height: int, hfov_deg: float) -> CameraIntrinsics:
    """Build square-pixel intrinsics from a horizontal field of view.

    fx = (width / 2) / tan(hfov / 2), fy = fx, principal point at the image
    center.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    if not (0.0 < hfov_deg < 180.0):
        raise ValueError(f"hfov must lie in (0, 180) degrees, got {hfov_deg}")
    fx = (width / 2.0) / math.tan(math.radians(hfov_deg) / 2.0)
    return CameraIntrinsics(width=width, height=height, fx=fx, fy=fx, cx=width / 2.0, cy=height / 2.0)


# Camera axes in the world frame for a camera at heading 0 with no tilt:
# x_cam (image right) = -y_world, y_cam (image down) = -z_world, z_cam = +x_world.
_BASE_CAM_TO_WORLD = np.array(
    [
        [0.0, 0.0, 1.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


def _rot_z(angle_rad: float) -> np.ndarray:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _rot_x(angle_rad: float) -> np.ndarray:
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def camera_extrinsics(
    pose: AgentPose,
    camera_height: float,
    tilt_rad: float,
    view_yaw: float = 0.0,
) -> ExtrinsicTransform:
    """World-to-camera transform for a camera mounted on the agent.

    The camera sits at (pose.x, pose.y, camera_height), faces the heading
    pose.yaw + view_yaw, and is pitched downward by tilt_rad about the camera
    x axis (yaw about world z first, then pitch, as on a pan-tilt mount).
    """
    if not (0.0 <= tilt_rad < math.pi / 2.0):
        raise ValueError(f"tilt must lie in [0, pi/2), got {tilt_rad}")
    heading = math.radians(normalize_yaw(pose.yaw + view_yaw))
    # Intrinsic pitch: rotating the body about +x_cam by -tilt dips the
    # forward axis below the horizon.
    cam_to_world = _rot_z(heading) @ _BASE_CAM_TO_WORLD @ _rot_x(-tilt_rad)
    rotation = cam_to_world.T
    center = np.array([pose.x, pose.y, camera_height])
    return ExtrinsicTransform(rotation=rotation, translation=-rotation @ center)


def project_point(
    intr: CameraIntrinsics,
    ext: ExtrinsicTransform,
    p_world: np.ndarray | tuple[float, float, float],
) -> PixelProjection | None:
    """Project a world point to pixel coordinates.

    Returns None when the point lies at or behind the camera plane
    (optical-axis depth <= 0). The returned (u, v) may fall outside the image
    rectangle; bounds filtering is the caller's job.
    """
    p_cam = ext.apply(np.asarray(p_world, dtype=float))
    depth = float(p_cam[2])
    if depth <= 0.0:
        return None
    u = intr.fx * p_cam[0] / depth + intr.cx
    v = intr.fy * p_cam[1] / depth + intr.cy
    return PixelProjection(u=float(u), v=float(v), depth=depth)


def back_project(
    intr: CameraIntrinsics, ext: ExtrinsicTransform, proj: PixelProjection
) -> np.ndarray:
    """Invert project_point: recover the world point from (u, v, depth)."""
    x = (proj.u - intr.cx) / intr.fx * proj.depth
    y = (proj.v - intr.cy) / intr.fy * proj.depth
    p_cam = np.array([x, y, proj.depth])
    return ext.rotation.T @ (p_cam - ext.translation)


def apply_polar(pose: AgentPose, action: PolarAction) -> AgentPose:
    """Rotate by action.theta, then advance action.r along the new heading."""
    yaw = normalize_yaw(pose.yaw + action.theta)
    rad = math.radians(yaw)
    return AgentPose(
        x=pose.x + action.r * math.cos(rad),
        y=pose.y + action.r * math.sin(rad),
        yaw=yaw,
    )


def column_heading(intr: CameraIntrinsics, view_center_yaw: float, column: float) -> float:
    """World heading of the ground ray through a pixel column.

    Columns right of center (u > cx) look clockwise of the view center, so
    the heading decreases with increasing column index.
    """
    return normalize_yaw(view_center_yaw - math.degrees(math.atan2(column - intr.cx, intr.fx)))


def heading_column(intr: CameraIntrinsics, view_center_yaw: float, heading: float) -> float:
    """Inverse of column_heading: pixel column whose ground ray has the given heading."""
    offset = math.radians(normalize_relative(view_center_yaw - heading))
    return intr.cx + intr.fx * math.tan(offset)
