"""Core value types: splats, splat clouds, cameras, images.

Conventions used everywhere in this package:

* World and camera frames are right-handed, metric (meters).
* Cameras look along +z in their own frame, image y points down,
  ``world_to_camera`` is a row-major rigid 4x4 transform.
* Quaternions are stored (w, x, y, z) and unit-norm.
* Splat scales are linear per-axis standard deviations (meters);
  log-space exists only at the PLY boundary.

All types are immutable after construction (arrays are frozen), so values
can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

# Mean camera-center distance to the cloud centroid after normalize_scene.
CANONICAL_CAMERA_DISTANCE = 1.5

_QUAT_NORM_TOL = 1e-6
_ROT_ORTHO_TOL = 1e-6


class SplatKitError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SplatKitError, ValueError):
    """Invalid input data; the message names the offending field."""


class GuardError(SplatKitError, RuntimeError):
    """A runtime cost guard was exceeded."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _as_vec(value, n: int, name: str) -> np.ndarray:
    v = np.asarray(value, dtype=np.float64).reshape(-1)
    if v.shape != (n,):
        raise ValidationError(f"{name} must have {n} components, got shape {np.shape(value)}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"non-finite {name}: {v.tolist()}")
    return v


class PartLabel(Enum):
    """Body-part tag; the detail level drives composition's redundancy rule."""

    FULL = "full"
    UPPER = "upper"
    LOWER = "lower"
    HEAD = "head"

    @property
    def detail_level(self) -> int:
        return _DETAIL_LEVEL[self]


_DETAIL_LEVEL = {
    PartLabel.FULL: 0,
    PartLabel.UPPER: 1,
    PartLabel.LOWER: 1,
    PartLabel.HEAD: 2,
}

# Fixed part order used whenever clouds are concatenated.
PART_ORDER = (PartLabel.FULL, PartLabel.UPPER, PartLabel.LOWER, PartLabel.HEAD)


@dataclass(frozen=True)
class Splat:
    """One 3D Gaussian primitive.

    position: world-frame center (m); rotation: unit quaternion (w,x,y,z);
    scale: per-axis standard deviations (m), strictly positive;
    opacity and color channels lie in [0, 1].
    """

    position: np.ndarray
    rotation: np.ndarray
    scale: np.ndarray
    opacity: float
    color: np.ndarray

    def __post_init__(self):
        pos = _freeze(_as_vec(self.position, 3, "position"))
        rot = _as_vec(self.rotation, 4, "rotation")
        norm = float(np.linalg.norm(rot))
        if abs(norm - 1.0) > _QUAT_NORM_TOL:
            raise ValidationError(f"rotation quaternion norm {norm} deviates from 1 by more than {_QUAT_NORM_TOL}")
        scale = _as_vec(self.scale, 3, "scale")
        if np.any(scale <= 0.0):
            raise ValidationError(f"non-positive scale: {scale.tolist()}")
        if not np.isfinite(self.opacity):
            raise ValidationError(f"non-finite opacity: {self.opacity}")
        if not (0.0 <= self.opacity <= 1.0):
            raise ValidationError(f"opacity {self.opacity} outside [0, 1]")
        color = _as_vec(self.color, 3, "color")
        if np.any(color < 0.0) or np.any(color > 1.0):
            raise ValidationError(f"color channel outside [0, 1]: {color.tolist()}")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "rotation", _freeze(rot))
        object.__setattr__(self, "scale", _freeze(scale))
        object.__setattr__(self, "opacity", float(self.opacity))
        object.__setattr__(self, "color", _freeze(color))


def validate_splat(position, rotation, scale, opacity, color) -> Splat:
    """Normalize raw splat fields into a valid :class:`Splat`.

    The quaternion is renormalized; opacity and color are clamped to [0, 1].
    Non-finite fields and non-positive scales are rejected.
    """
    pos = _as_vec(position, 3, "position")
    rot = _as_vec(rotation, 4, "rotation")
    norm = float(np.linalg.norm(rot))
    if norm == 0.0:
        raise ValidationError("rotation quaternion has zero norm")
    rot = rot / norm
    scl = _as_vec(scale, 3, "scale")
    if np.any(scl <= 0.0):
        raise ValidationError(f"non-positive scale: {scl.tolist()}")
    if not np.isfinite(opacity):
        raise ValidationError(f"non-finite opacity: {opacity}")
    col = _as_vec(color, 3, "color")
    return Splat(
        position=pos,
        rotation=rot,
        scale=scl,
        opacity=float(np.clip(opacity, 0.0, 1.0)),
        color=np.clip(col, 0.0, 1.0),
    )


class SplatCloud:
    """Ordered collection of splats stored as column arrays.

    ``source_index`` is a stable per-splat identifier: dense 0..N-1 at
    construction via :meth:`from_splats` / :meth:`from_arrays`, preserved
    verbatim by :meth:`take` so filtered or merged clouds keep their
    provenance. ``part`` is optional; clouds loaded from disk or produced
    by composition carry ``None``.

    ``normals`` is an opaque per-splat payload carried for PLY round-trips
    and never interpreted geometrically.
    """

    __slots__ = ("part", "positions", "rotations", "scales", "opacities", "colors", "source_index", "normals")

    def __init__(
        self,
        part: Optional[PartLabel],
        positions: np.ndarray,
        rotations: np.ndarray,
        scales: np.ndarray,
        opacities: np.ndarray,
        colors: np.ndarray,
        source_index: np.ndarray,
        normals: Optional[np.ndarray] = None,
    ):
        n = positions.shape[0]
        for name, arr, shape in (
            ("positions", positions, (n, 3)),
            ("rotations", rotations, (n, 4)),
            ("scales", scales, (n, 3)),
            ("opacities", opacities, (n,)),
            ("colors", colors, (n, 3)),
        ):
            if arr.shape != shape:
                raise ValidationError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"non-finite values in {name}")
        if source_index.shape != (n,):
            raise ValidationError(f"source_index has shape {source_index.shape}, expected ({n},)")
        if n:
            norms = np.linalg.norm(rotations, axis=1)
            if np.any(np.abs(norms - 1.0) > _QUAT_NORM_TOL):
                raise ValidationError("rotation quaternion norm deviates from 1 beyond tolerance")
            if np.any(scales <= 0.0):
                raise ValidationError("non-positive scale")
            if np.any(opacities < 0.0) or np.any(opacities > 1.0):
                raise ValidationError("opacity outside [0, 1]")
            if np.any(colors < 0.0) or np.any(colors > 1.0):
                raise ValidationError("color channel outside [0, 1]")
        if normals is not None:
            if normals.shape != (n, 3):
                raise ValidationError(f"normals have shape {normals.shape}, expected ({n}, 3)")
            normals = _freeze(np.array(normals, dtype=np.float64))
        self.part = part
        self.positions = _freeze(np.array(positions, dtype=np.float64))
        self.rotations = _freeze(np.array(rotations, dtype=np.float64))
        self.scales = _freeze(np.array(scales, dtype=np.float64))
        self.opacities = _freeze(np.array(opacities, dtype=np.float64))
        self.colors = _freeze(np.array(colors, dtype=np.float64))
        self.source_index = _freeze(np.array(source_index, dtype=np.int64))
        self.normals = normals

    @classmethod
    def from_splats(cls, splats: Iterable[Splat], part: Optional[PartLabel] = None) -> "SplatCloud":
        splats = list(splats)
        n = len(splats)
        return cls(
            part=part,
            positions=np.array([s.position for s in splats]).reshape(n, 3),
            rotations=np.array([s.rotation for s in splats]).reshape(n, 4),
            scales=np.array([s.scale for s in splats]).reshape(n, 3),
            opacities=np.array([s.opacity for s in splats]).reshape(n),
            colors=np.array([s.color for s in splats]).reshape(n, 3),
            source_index=np.arange(n, dtype=np.int64),
        )

    @classmethod
    def from_arrays(
        cls,
        positions,
        rotations,
        scales,
        opacities,
        colors,
        part: Optional[PartLabel] = None,
        source_index=None,
        normals=None,
    ) -> "SplatCloud":
        positions = np.asarray(positions, dtype=np.float64)
        n = positions.shape[0]
        if source_index is None:
            source_index = np.arange(n, dtype=np.int64)
        return cls(
            part=part,
            positions=positions,
            rotations=np.asarray(rotations, dtype=np.float64),
            scales=np.asarray(scales, dtype=np.float64),
            opacities=np.asarray(opacities, dtype=np.float64),
            colors=np.asarray(colors, dtype=np.float64),
            source_index=np.asarray(source_index, dtype=np.int64),
            normals=None if normals is None else np.asarray(normals, dtype=np.float64),
        )

    def __len__(self) -> int:
        return self.positions.shape[0]

    def splat(self, i: int) -> Splat:
        return Splat(
            position=self.positions[i].copy(),
            rotation=self.rotations[i].copy(),
            scale=self.scales[i].copy(),
            opacity=float(self.opacities[i]),
            color=self.colors[i].copy(),
        )

    def take(self, indices) -> "SplatCloud":
        """Select splats in the given order, keeping their source indices."""
        idx = np.asarray(indices, dtype=np.int64)
        return SplatCloud(
            part=self.part,
            positions=self.positions[idx],
            rotations=self.rotations[idx],
            scales=self.scales[idx],
            opacities=self.opacities[idx],
            colors=self.colors[idx],
            source_index=self.source_index[idx],
            normals=None if self.normals is None else self.normals[idx],
        )

    def with_part(self, part: Optional[PartLabel]) -> "SplatCloud":
        return SplatCloud(
            part=part,
            positions=self.positions,
            rotations=self.rotations,
            scales=self.scales,
            opacities=self.opacities,
            colors=self.colors,
            source_index=self.source_index,
            normals=self.normals,
        )


def concat_clouds(clouds: Sequence[SplatCloud], part: Optional[PartLabel] = None) -> SplatCloud:
    """Concatenate clouds in the given order; source indices pass through."""
    if not clouds:
        return SplatCloud.from_arrays(
            np.zeros((0, 3)), np.zeros((0, 4)), np.zeros((0, 3)), np.zeros(0), np.zeros((0, 3)), part=part
        )
    have_normals = all(c.normals is not None for c in clouds)
    return SplatCloud(
        part=part,
        positions=np.concatenate([c.positions for c in clouds]),
        rotations=np.concatenate([c.rotations for c in clouds]),
        scales=np.concatenate([c.scales for c in clouds]),
        opacities=np.concatenate([c.opacities for c in clouds]),
        colors=np.concatenate([c.colors for c in clouds]),
        source_index=np.concatenate([c.source_index for c in clouds]),
        normals=np.concatenate([c.normals for c in clouds]) if have_normals else None,
    )


@dataclass(frozen=True)
class Camera:
    """Pinhole intrinsics plus rigid extrinsics.

    ``world_to_camera`` maps world points into the camera frame; the camera
    looks along +z and image y points down. Focal lengths and the principal
    point are in pixels.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    world_to_camera: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.fx) and np.isfinite(self.fy) and self.fx > 0 and self.fy > 0):
            raise ValidationError(f"focal lengths must be positive and finite, got fx={self.fx}, fy={self.fy}")
        if not (np.isfinite(self.cx) and np.isfinite(self.cy)):
            raise ValidationError("non-finite principal point")
        if self.width < 1 or self.height < 1:
            raise ValidationError(f"image size must be at least 1x1, got {self.width}x{self.height}")
        m = np.asarray(self.world_to_camera, dtype=np.float64)
        if m.shape != (4, 4):
            raise ValidationError(f"world_to_camera must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("non-finite world_to_camera")
        r = m[:3, :3]
        if np.max(np.abs(r @ r.T - np.eye(3))) > _ROT_ORTHO_TOL:
            raise ValidationError("world_to_camera rotation block is not orthonormal within 1e-6")
        if np.linalg.det(r) < 0:
            raise ValidationError("world_to_camera rotation block is a reflection, not a rotation")
        if np.max(np.abs(m[3] - np.array([0.0, 0.0, 0.0, 1.0]))) > _ROT_ORTHO_TOL:
            raise ValidationError("world_to_camera last row must be (0, 0, 0, 1)")
        object.__setattr__(self, "fx", float(self.fx))
        object.__setattr__(self, "fy", float(self.fy))
        object.__setattr__(self, "cx", float(self.cx))
        object.__setattr__(self, "cy", float(self.cy))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "world_to_camera", _freeze(m))

    @property
    def rotation(self) -> np.ndarray:
        return self.world_to_camera[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.world_to_camera[:3, 3]

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation

    def with_center(self, center: np.ndarray) -> "Camera":
        """Same orientation and intrinsics, repositioned camera center."""
        m = np.array(self.world_to_camera)
        m[:3, 3] = -self.rotation @ np.asarray(center, dtype=np.float64)
        return Camera(self.fx, self.fy, self.cx, self.cy, self.width, self.height, m)

    @staticmethod
    def look_at(eye, target, up=(0.0, 1.0, 0.0), *, fx: float, fy: float, cx: float, cy: float, width: int, height: int) -> "Camera":
        """Camera at ``eye`` looking toward ``target`` (+z forward, image y down)."""
        eye = np.asarray(eye, dtype=np.float64)
        target = np.asarray(target, dtype=np.float64)
        up = np.asarray(up, dtype=np.float64)
        z = target - eye
        nz = np.linalg.norm(z)
        if nz == 0.0:
            raise ValidationError("look_at eye and target coincide")
        z = z / nz
        x = np.cross(z, up)
        nx = np.linalg.norm(x)
        if nx < 1e-12:
            raise ValidationError("look_at up vector is collinear with the view direction")
        x = x / nx
        y = np.cross(z, x)
        m = np.eye(4)
        m[0, :3] = x
        m[1, :3] = y
        m[2, :3] = z
        m[:3, 3] = -m[:3, :3] @ eye
        return Camera(fx, fy, cx, cy, width, height, m)


@dataclass(frozen=True)
class Image:
    """Float32 raster, row-major (height, width, channels), channels 1/3/4.

    Values are nominally in [0, 1] for displayable images; intermediate
    diffusion states may exceed that range, so only finiteness is enforced.
    """

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float32)
        if p.ndim == 2:
            p = p[:, :, None]
        if p.ndim != 3:
            raise ValidationError(f"pixels must be (height, width, channels), got shape {p.shape}")
        if p.shape[2] not in (1, 3, 4):
            raise ValidationError(f"channel count must be 1, 3 or 4, got {p.shape[2]}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValidationError(f"image size must be at least 1x1, got {p.shape[1]}x{p.shape[0]}")
        if not np.all(np.isfinite(p)):
            raise ValidationError("non-finite pixel values")
        object.__setattr__(self, "pixels", _freeze(np.ascontiguousarray(p)))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def rgb(self) -> "Image":
        """RGB view of an RGB or RGBA image."""
        if self.channels == 3:
            return self
        if self.channels == 4:
            return Image(self.pixels[:, :, :3])
        raise ValidationError(f"cannot take RGB of a {self.channels}-channel image")


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrices for unit quaternions; accepts (..., 4) (w, x, y, z)."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def normalize_scene(
    cloud: SplatCloud,
    cameras: Sequence[Camera],
    target_distance: float = CANONICAL_CAMERA_DISTANCE,
) -> tuple[SplatCloud, list[Camera], float]:
    """Uniformly rescale the scene about the cloud centroid.

    Splat positions, splat scales, and camera centers are scaled by one
    scalar so that the mean camera-center distance to the cloud centroid
    equals ``target_distance``. Camera orientations and intrinsics are
    untouched, so renders of the normalized scene match renders of the
    original. Returns the applied scale factor; idempotent.
    """
    if len(cloud) == 0:
        raise ValidationError("cannot normalize an empty cloud")
    if not cameras:
        raise ValidationError("cannot normalize without cameras")
    centroid = cloud.positions.mean(axis=0)
    centers = np.array([c.center for c in cameras])
    mean_dist = float(np.mean(np.linalg.norm(centers - centroid, axis=1)))
    if mean_dist < 1e-12:
        raise ValidationError("degenerate scene: all camera centers coincide with the cloud centroid")
    s = target_distance / mean_dist
    new_cloud = SplatCloud(
        part=cloud.part,
        positions=centroid + s * (cloud.positions - centroid),
        rotations=cloud.rotations,
        scales=cloud.scales * s,
        opacities=cloud.opacities,
        colors=cloud.colors,
        source_index=cloud.source_index,
        normals=cloud.normals,
    )
    new_cameras = [c.with_center(centroid + s * (c.center - centroid)) for c in cameras]
    return new_cloud, new_cameras, s
