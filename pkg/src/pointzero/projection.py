"""Central projection of point clouds into depth maps, plus raster utilities.

The rasterizer is written with explicit per-component arithmetic (no dot
products over a trailing axis) so that every float operation happens in a
documented order; a scalar reference implementation performing the same
operations reproduces it bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud

__all__ = [
    "ViewConfig",
    "RasterConfig",
    "DepthMap",
    "view_preset",
    "project",
    "maxpool_densify",
    "to_image8",
]

_SQRT_HALF = math.sqrt(0.5)
_COS_TABLE = (1.0, _SQRT_HALF, 0.0, -_SQRT_HALF, -1.0, -_SQRT_HALF, 0.0, _SQRT_HALF)
_SIN_TABLE = (0.0, _SQRT_HALF, 1.0, _SQRT_HALF, 0.0, -_SQRT_HALF, -1.0, -_SQRT_HALF)


def _cos_sin_deg(angle: float) -> tuple[float, float]:
    """Cosine and sine with exact values at multiples of 45 degrees.

    The exact table keeps azimuth shifts by 45-degree multiples perfectly
    symmetric, which makes rotation equivariance of the rasterizer hold
    pixel-exactly rather than only to rounding error.
    """
    a = float(angle) % 360.0
    if a % 45.0 == 0.0:
        i = int(a // 45.0)
        return _COS_TABLE[i], _SIN_TABLE[i]
    r = math.radians(a)
    return math.cos(r), math.sin(r)


@dataclass(frozen=True)
class ViewConfig:
    """One camera pose: spherical position plus image-plane distance."""

    azimuth: float
    elevation: float = 35.0
    camera_distance: float = 2.2
    focal_distance: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not self.camera_distance > self.focal_distance > 0:
            raise ValueError(
                f"need camera_distance > focal_distance > 0, got "
                f"{self.camera_distance} and {self.focal_distance}"
            )
        if not -90.0 < self.elevation < 90.0:
            raise ValueError(f"elevation must be in (-90, 90), got {self.elevation}")
        if not self.label:
            object.__setattr__(self, "label", f"az{self.azimuth:g}")


@dataclass(frozen=True)
class RasterConfig:
    """Raster geometry: pixel grid and the world extent it spans."""

    width: int = 224
    height: int = 224
    field_extent: float = 1.1
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ValueError(f"resolution must be >= 16, got {self.width}x{self.height}")
        if not self.field_extent > 0:
            raise ValueError(f"field_extent must be > 0, got {self.field_extent}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Immutable height x width grid of nonnegative inverse-distance values."""

    intensities: np.ndarray
    view: ViewConfig
    object_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.intensities, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"intensities must be 2D, got shape {arr.shape}")
        if not np.isfinite(arr).all() or (arr < 0).any():
            raise ValueError("intensities must be finite and nonnegative")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "intensities", arr)


_PRESET_AZIMUTHS = {
    "single-best": (-135.0,),
    "four-view": (-135.0, -45.0, 45.0, 135.0),
    "eight-view": tuple(-180.0 + 45.0 * i for i in range(8)),
}


def view_preset(name: str) -> list[ViewConfig]:
    """Standard camera rings at elevation 35 degrees."""
    if name not in _PRESET_AZIMUTHS:
        raise ValueError(f"unknown view preset {name!r}; known: {sorted(_PRESET_AZIMUTHS)}")
    return [ViewConfig(azimuth=a) for a in _PRESET_AZIMUTHS[name]]


def camera_basis(v: ViewConfig) -> tuple[tuple[float, float, float], ...]:
    """Camera center and orthonormal (forward, right, up) as plain floats.

    The camera sits at spherical (distance, azimuth, elevation) looking at
    the origin; right is horizontal (forward x z-up, normalized), up
    completes the right-handed frame.
    """
    ca, sa = _cos_sin_deg(v.azimuth)
    ce, se = _cos_sin_deg(v.elevation)
    rho = v.camera_distance
    cx, cy, cz = rho * (ce * ca), rho * (ce * sa), rho * se
    fx, fy, fz = -(ce * ca), -(ce * sa), -se
    # forward x zhat = (fy, -fx, 0); for |elevation| < 90 it is never zero
    n = math.sqrt(fx * fx + fy * fy)
    rx, ry = fy / n, -fx / n
    ux, uy, uz = ry * fz, -(rx * fz), rx * fy - ry * fx
    return (cx, cy, cz), (fx, fy, fz), (rx, ry, 0.0), (ux, uy, uz)


def project(c: PointCloud, v: ViewConfig, r: RasterConfig) -> DepthMap:
    """Rasterize a unit-normalized cloud into an inverse-distance depth map.

    Each point maps along the ray from the camera center through it onto
    the image plane at focal_distance; plane coordinates in
    [-field_extent, +field_extent]^2 map linearly onto the pixel grid and
    the point lands on its nearest pixel (round-half-even, then bounds
    check). Intensity is 1/max(epsilon, axial_distance - focal_distance);
    pixel conflicts keep the maximum, so the nearest point wins. Points
    with axial distance <= 0 or falling outside the grid are skipped.
    """
    (cx, cy, cz), (fx, fy, fz), (rx, ry, rz), (ux, uy, uz) = camera_basis(v)
    p = c.points
    wx, wy, wz = p[:, 0] - cx, p[:, 1] - cy, p[:, 2] - cz
    t = wx * fx + wy * fy + wz * fz
    front = t > 0.0
    if not front.any():
        raise ValueError("empty projection")
    wx, wy, wz, t = wx[front], wy[front], wz[front], t[front]

    s = v.focal_distance / t
    px = s * (wx * rx + wy * ry + wz * rz)
    py = s * (wx * ux + wy * uy + wz * uz)
    e = r.field_extent
    col = np.rint((px + e) / (2.0 * e) * (r.width - 1)).astype(np.int64)
    row = np.rint((e - py) / (2.0 * e) * (r.height - 1)).astype(np.int64)
    d = 1.0 / np.maximum(r.epsilon, t - v.focal_distance)

    inside = (col >= 0) & (col < r.width) & (row >= 0) & (row < r.height)
    if not inside.any():
        raise ValueError("empty projection")
    grid = np.zeros((r.height, r.width), dtype=np.float64)
    np.maximum.at(grid, (row[inside], col[inside]), d[inside])
    return DepthMap(intensities=grid, view=v, object_id=c.source_id or "")


def maxpool_densify(m: DepthMap) -> DepthMap:
    """Spread each pixel's 2x2-window maximum back over the window.

    For every anchor pixel the maximum over its 2x2 window (out-of-range
    cells count as 0) is max-accumulated onto the window's four cells.
    Out-of-place and order-independent; equals a 3x3 max dilation.
    """
    a = m.intensities
    h, w = a.shape
    padded = np.zeros((h + 1, w + 1), dtype=a.dtype)
    padded[:h, :w] = a
    win = np.maximum(
        np.maximum(padded[:h, :w], padded[:h, 1:]),
        np.maximum(padded[1:, :w], padded[1:, 1:]),
    )
    acc = np.zeros((h + 1, w + 1), dtype=a.dtype)
    acc[1:, 1:] = win
    out = np.maximum(
        np.maximum(acc[1:, 1:], acc[1:, :w]),
        np.maximum(acc[:h, 1:], acc[:h, :w]),
    )
    return DepthMap(intensities=out, view=m.view, object_id=m.object_id)


def to_image8(m: DepthMap) -> np.ndarray:
    """Encode a depth map as 8-bit grayscale, background 0, signal 64..255.

    Nonzero intensities are min-max normalized onto [64, 255] with
    round-half-up; a constant nonzero map encodes as 255.
    """
    a = m.intensities
    mask = a > 0.0
    if not mask.any():
        raise ValueError("empty depth map")
    lo = a[mask].min()
    hi = a[mask].max()
    out = np.zeros(a.shape, dtype=np.uint8)
    if hi == lo:
        out[mask] = 255
    else:
        scaled = 64.0 + 191.0 * (a[mask] - lo) / (hi - lo)
        out[mask] = np.floor(scaled + 0.5).astype(np.uint8)
    return out
