"""Rotations, camera projections and Procrustes alignment.

Conventions: y is the vertical axis, x points right, z points toward a
frontal viewer.  Yaw rotates about y, pitch about x, roll about z; all
rotations act around the shape centroid so the centroid never moves.

The perspective camera sits on a sphere around the shape centroid at the
given azimuth/elevation, looks at the centroid, and its distance is chosen so
the shape roughly subtends the field of view.  As the field of view shrinks
the camera recedes and the image converges to the orthographic one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, DimensionMismatchError, NonFiniteError
from .landmarks import LandmarkSet2D, LandmarkSet3D, normalize_points
from .linalg import det3, svd3

PROJECTIONS = ("orthographic", "perspective")


@dataclass(frozen=True)
class ViewParams:
    """Pose and camera description for a single rendered view.

    ``yaw_deg`` is the head pose; the remaining fields describe the camera
    and are ignored under orthographic projection.
    """

    projection: str = "orthographic"
    yaw_deg: float = 0.0
    azimuth_deg: float = 0.0
    elevation_deg: float = 0.0
    fov_deg: float = 0.0

    def __post_init__(self):
        if self.projection not in PROJECTIONS:
            raise ValueError(
                f"projection must be one of {PROJECTIONS}, got {self.projection!r}"
            )
        vals = (self.yaw_deg, self.azimuth_deg, self.elevation_deg, self.fov_deg)
        if not all(np.isfinite(v) for v in vals):
            raise NonFiniteError("view parameters must be finite")
        if not -90.0 < self.elevation_deg < 90.0:
            raise ValueError(f"elevation {self.elevation_deg} out of (-90, 90)")
        if not 0.0 <= self.fov_deg < 179.0:
            raise ValueError(f"field of view {self.fov_deg} out of [0, 179)")


def _rotation_matrix(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    cy, sy = np.cos(np.radians(yaw_deg)), np.sin(np.radians(yaw_deg))
    cp, sp = np.cos(np.radians(pitch_deg)), np.sin(np.radians(pitch_deg))
    cr, sr = np.cos(np.radians(roll_deg)), np.sin(np.radians(roll_deg))
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]])
    rz = np.array([[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]])
    return rz @ rx @ ry


def rotate(
    shape: LandmarkSet3D, yaw_deg: float, pitch_deg: float = 0.0, roll_deg: float = 0.0
) -> LandmarkSet3D:
    """Rigid rotation about the shape centroid (yaw, then pitch, then roll)."""
    if not all(np.isfinite(v) for v in (yaw_deg, pitch_deg, roll_deg)):
        raise NonFiniteError("rotation angles must be finite")
    r = _rotation_matrix(yaw_deg, pitch_deg, roll_deg)
    centroid = shape.points.mean(axis=0)
    pts = (shape.points - centroid) @ r.T + centroid
    return LandmarkSet3D(pts, shape.topology_id)


def _view_direction(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    az, el = np.radians(azimuth_deg), np.radians(elevation_deg)
    return np.array(
        [np.sin(az) * np.cos(el), np.sin(el), np.cos(az) * np.cos(el)]
    )


def _camera_basis(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    up = np.array([0.0, 1.0, 0.0])
    z_cam = direction / np.linalg.norm(direction)
    x_cam = np.cross(up, z_cam)
    nx = np.linalg.norm(x_cam)
    if nx < 1e-12:
        raise DegenerateInputError("camera direction parallel to the up vector")
    x_cam = x_cam / nx
    y_cam = np.cross(z_cam, x_cam)
    return x_cam, y_cam, z_cam


def _perspective_points(
    points: np.ndarray, azimuth_deg: float, elevation_deg: float, fov_deg: float
) -> np.ndarray:
    centroid = points.mean(axis=0)
    centered = points - centroid
    radius = np.sqrt(np.max(np.sum(centered**2, axis=1)))
    if radius == 0.0:
        raise DegenerateInputError("cannot project a set of coincident points")
    direction = _view_direction(azimuth_deg, elevation_deg)
    x_cam, y_cam, z_cam = _camera_basis(direction)
    half = np.radians(fov_deg) / 2.0
    if np.tan(half) < 1e-9:
        # degenerate field of view: camera infinitely far, orthographic limit
        return np.column_stack((centered @ x_cam, centered @ y_cam))
    dist = radius / np.tan(half)
    cam = centroid + dist * direction
    rel = points - cam
    depth = -(rel @ z_cam)
    if np.any(depth <= radius * 1e-9):
        raise DegenerateInputError(
            "point at or behind the camera plane; widen the camera distance "
            "or reduce the field of view"
        )
    return np.column_stack(((rel @ x_cam) / depth, (rel @ y_cam) / depth))


def project(shape: LandmarkSet3D, view: ViewParams) -> LandmarkSet2D:
    """Render the posed shape to normalized 2D landmarks.

    Orthographic projection drops the depth axis after the yaw pose is
    applied; perspective projection views the posed shape through a pinhole
    camera at the requested azimuth/elevation.  Output is normalized to zero
    mean and unit RMS radius, so absolute focal scale never matters.
    """
    posed = rotate(shape, view.yaw_deg) if view.yaw_deg != 0.0 else shape
    if view.projection == "orthographic":
        flat = posed.points[:, :2]
    else:
        flat = _perspective_points(
            posed.points, view.azimuth_deg, view.elevation_deg, view.fov_deg
        )
    return LandmarkSet2D(normalize_points(flat), shape.topology_id)


@dataclass(frozen=True)
class SimilarityTransform:
    """Maps points as ``scale * points @ rotation.T + translation``."""

    rotation: np.ndarray
    scale: float
    translation: np.ndarray
    residual: float = field(default=0.0)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * np.asarray(points) @ self.rotation.T + self.translation


def procrustes_align(
    moving: LandmarkSet3D,
    target: LandmarkSet3D,
    allow_reflection: bool = True,
) -> tuple[LandmarkSet3D, SimilarityTransform]:
    """Best similarity transform (rotation, isotropic scale, translation)
    taking ``moving`` onto ``target`` in the least-squares sense.

    ``allow_reflection`` lets the rotation include a mirror flip, which is
    appropriate when the moving shape comes from a distance-only embedding
    where orientation is arbitrary.  The reported residual is the RMS
    per-point distance after alignment.
    """
    if len(moving) != len(target):
        raise DimensionMismatchError(
            f"point counts differ: {len(moving)} vs {len(target)}"
        )
    m, t = moving.points, target.points
    m_mean, t_mean = m.mean(axis=0), t.mean(axis=0)
    mc, tc = m - m_mean, t - t_mean
    m_var = float(np.sum(mc**2))
    t_var = float(np.sum(tc**2))
    if t_var == 0.0:
        raise DegenerateInputError("target has zero variance, alignment undefined")
    if m_var == 0.0:
        raise DegenerateInputError("moving shape has zero variance")

    u, sigma, vt = svd3(mc.T @ tc)
    signs = np.ones(3)
    if not allow_reflection and det3(vt.T @ u.T) < 0.0:
        signs[2] = -1.0
    rotation = vt.T @ np.diag(signs) @ u.T
    scale = float(np.sum(sigma * signs)) / m_var
    translation = t_mean - scale * (m_mean @ rotation.T)
    aligned = scale * m @ rotation.T + translation
    residual = float(np.sqrt(np.mean(np.sum((aligned - t) ** 2, axis=1))))
    transform = SimilarityTransform(rotation, scale, translation, residual)
    return LandmarkSet3D(aligned, target.topology_id), transform
