"""Per-pixel camera ray maps with crop-aware remapping.

Two embeddings are supported: the 6-channel (origin, origin x direction)
form used by splat generators, and a sinusoidal positional encoding of the
raw (origin, direction) pair used by image denoisers.

Raster convention: the ray of output pixel (u, v) passes through the
continuous coordinate (u + 0.5, v + 0.5). When a crop box is present, that
continuous local coordinate is mapped into the parent view with
:func:`crop_to_global` and the parent camera's ray through the mapped
continuous coordinate is embedded. This makes the full-frame crop
bit-identical to the uncropped map and makes crop cameras built by
intrinsics scaling agree with the remap to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Camera, ValidationError, _freeze

DEFAULT_OCTAVES = 8

PLUCKER = "plucker"
SINUSOIDAL = "sinusoidal"


@dataclass(frozen=True)
class CropBox:
    """Axis-aligned pixel rectangle in a parent view.

    Coordinates are floats and may extend past the parent image bounds;
    rays through out-of-frame pixels are still well defined, so clamping
    (if wanted) is the caller's choice.
    """

    x_tl: float
    y_tl: float
    x_br: float
    y_br: float

    def __post_init__(self):
        vals = (self.x_tl, self.y_tl, self.x_br, self.y_br)
        if not all(np.isfinite(v) for v in vals):
            raise ValidationError(f"non-finite crop box: {vals}")
        if not (self.x_tl < self.x_br and self.y_tl < self.y_br):
            raise ValidationError(f"crop box must have positive area: {vals}")
        for name in ("x_tl", "y_tl", "x_br", "y_br"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def width(self) -> float:
        return self.x_br - self.x_tl

    @property
    def height(self) -> float:
        return self.y_br - self.y_tl


@dataclass(frozen=True)
class RayMap:
    """Row-major float32 raster of per-pixel ray embeddings."""

    values: np.ndarray
    kind: str
    octaves: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 3:
            raise ValidationError(f"ray map values must be (height, width, channels), got {v.shape}")
        if self.kind == PLUCKER:
            expected = 6
        elif self.kind == SINUSOIDAL:
            if self.octaves is None or self.octaves < 1:
                raise ValidationError("sinusoidal ray map requires octaves >= 1")
            expected = 12 * self.octaves
        else:
            raise ValidationError(f"unknown embedding kind: {self.kind!r}")
        if v.shape[2] != expected:
            raise ValidationError(f"{self.kind} ray map must have {expected} channels, got {v.shape[2]}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("non-finite ray map values")
        object.__setattr__(self, "values", _freeze(np.ascontiguousarray(v)))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


def rays_through(camera: Camera, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """World-frame rays through continuous pixel coordinates.

    ``xs``/``ys`` are broadcastable arrays of continuous coordinates (no
    half-pixel shift is applied here). Returns (origins, unit directions)
    with shape (..., 3); the origin is the camera center for every pixel.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    dx = (xs - camera.cx) / camera.fx
    dy = (ys - camera.cy) / camera.fy
    d_cam = np.stack([dx, dy, np.ones_like(dx)], axis=-1)
    d_world = d_cam @ camera.rotation  # row vectors times R == R^T applied
    d_world = d_world / np.linalg.norm(d_world, axis=-1, keepdims=True)
    origin = np.broadcast_to(camera.center, d_world.shape)
    return origin, d_world


def pixel_ray(camera: Camera, i: float, j: float) -> tuple[np.ndarray, np.ndarray]:
    """Ray through the center (i + 0.5, j + 0.5) of pixel (i, j).

    Total over finite inputs: (i, j) may lie outside the image, as happens
    for crop boxes that overflow the frame.
    """
    o, d = rays_through(camera, np.float64(i) + 0.5, np.float64(j) + 0.5)
    return o, d


def plucker_embed(origin: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Six-channel ray embedding (o, o x d); expects unit directions."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    n = np.linalg.norm(d, axis=-1)
    if np.any(np.abs(n - 1.0) > 1e-6):
        raise ValidationError("plucker_embed requires unit-norm directions")
    return np.concatenate([o, np.cross(o, d)], axis=-1)


def sinusoidal_embed(origin: np.ndarray, direction: np.ndarray, octaves: int = DEFAULT_OCTAVES) -> np.ndarray:
    """Positional encoding of the raw (origin, direction) pair.

    For each of the six input scalars v and each octave k, emits
    (sin(2^k v), cos(2^k v)). Channel order is scalar-major, octave-minor,
    sin before cos, giving 12 * octaves channels.
    """
    if octaves < 1:
        raise ValidationError(f"octaves must be >= 1, got {octaves}")
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    v = np.concatenate([o, d], axis=-1)  # (..., 6)
    freqs = 2.0 ** np.arange(octaves)
    phase = v[..., :, None] * freqs  # (..., 6, octaves)
    out = np.stack([np.sin(phase), np.cos(phase)], axis=-1)  # (..., 6, octaves, 2)
    return out.reshape(v.shape[:-1] + (12 * octaves,))


def crop_to_global(box: CropBox, u: float, v: float, w: int, h: int):
    """Map local-view coordinates (u, v) of a (w, h) raster into the parent view."""
    if w < 1 or h < 1:
        raise ValidationError(f"crop raster size must be at least 1x1, got {w}x{h}")
    i = box.x_tl + box.width * np.asarray(u, dtype=np.float64) / w
    j = box.y_tl + box.height * np.asarray(v, dtype=np.float64) / h
    return i, j


def build_ray_map(
    camera: Camera,
    box: Optional[CropBox],
    out_w: int,
    out_h: int,
    kind: str = PLUCKER,
    octaves: int = DEFAULT_OCTAVES,
) -> RayMap:
    """Ray map of a (possibly cropped) view, embedded per ``kind``.

    With a box, each output pixel center is mapped into the parent view by
    :func:`crop_to_global` and the parent camera's ray through the mapped
    continuous coordinate is embedded; without one, the camera's own pixel
    rays are embedded directly. Deterministic: identical inputs produce
    bit-identical maps.
    """
    if out_w < 1 or out_h < 1:
        raise ValidationError(f"output size must be at least 1x1, got {out_w}x{out_h}")
    us = np.arange(out_w, dtype=np.float64) + 0.5
    vs = np.arange(out_h, dtype=np.float64) + 0.5
    gx, gy = np.meshgrid(us, vs)  # (out_h, out_w)
    if box is not None:
        gx, gy = crop_to_global(box, gx, gy, out_w, out_h)
    origins, dirs = rays_through(camera, gx, gy)
    if kind == PLUCKER:
        values = plucker_embed(origins, dirs)
        return RayMap(values=values.astype(np.float32), kind=PLUCKER)
    if kind == SINUSOIDAL:
        values = sinusoidal_embed(origins, dirs, octaves)
        return RayMap(values=values.astype(np.float32), kind=SINUSOIDAL, octaves=octaves)
    raise ValidationError(f"unknown embedding kind: {kind!r}")
