"""Scene representation, pinhole projection and analytic occlusion.

World frame: z up, the table top is the plane z = 0 and world +x is the
canonical left-to-right direction. Camera frame: x right, y down, z forward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_RESOLUTION = (640, 480)
DEFAULT_FOCAL = (500.0, 500.0)

# visibility thresholds
MIN_VISIBLE_FRACTION = 0.4
MIN_BOX_AREA = 64.0

# near clipping plane (meters) for objects that straddle the camera plane
NEAR_PLANE = 0.01

Vec3 = tuple[float, float, float]


def _vec3(v) -> Vec3:
    a = tuple(float(x) for x in v)
    if len(a) != 3:
        raise ValueError(f"expected a 3-vector, got {v!r}")
    return a  # type: ignore[return-value]


@dataclass(frozen=True)
class BoundingBox2D:
    """Axis-aligned image box in continuous pixel coordinates."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box {self.as_list()}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    def contains(self, u: float, v: float) -> bool:
        return self.x1 <= u <= self.x2 and self.y1 <= v <= self.y2

    def intersect(self, other: "BoundingBox2D") -> Optional["BoundingBox2D"]:
        x1, y1 = max(self.x1, other.x1), max(self.y1, other.y1)
        x2, y2 = min(self.x2, other.x2), min(self.y2, other.y2)
        if x1 < x2 and y1 < y2:
            return BoundingBox2D(x1, y1, x2, y2)
        return None

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "BoundingBox2D":
        x1, y1, x2, y2 = (float(v) for v in values)
        return cls(x1, y1, x2, y2)


@dataclass(frozen=True)
class ObjectInstance:
    """An axis-aligned object volume resting in the scene."""

    id: int
    class_name: str
    position: Vec3
    half_extents: Vec3
    grasp_point: Optional[Vec3] = None

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "half_extents", _vec3(self.half_extents))
        if min(self.half_extents) <= 0:
            raise ValueError(f"object {self.id}: half extents must be positive")
        if self.grasp_point is None:
            x, y, z = self.position
            gp = (x, y, z + self.half_extents[2])
        else:
            gp = self.grasp_point
        object.__setattr__(self, "grasp_point", _vec3(gp))

    def corners(self) -> np.ndarray:
        """The 8 corners of the volume, shape (8, 3)."""
        signs = np.array(
            [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
            dtype=float,
        )
        return np.asarray(self.position) + signs * np.asarray(self.half_extents)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "class_name": self.class_name,
            "position": list(self.position),
            "half_extents": list(self.half_extents),
            "grasp_point": list(self.grasp_point),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectInstance":
        return cls(
            id=int(d["id"]),
            class_name=str(d["class_name"]),
            position=d["position"],
            half_extents=d["half_extents"],
            grasp_point=d.get("grasp_point"),
        )


@dataclass(frozen=True)
class CameraView:
    """A posed pinhole camera. ``rotation``/``translation`` map world to camera."""

    agent_id: int
    rotation: tuple[Vec3, Vec3, Vec3]
    translation: Vec3
    focal: tuple[float, float] = DEFAULT_FOCAL
    principal: tuple[float, float] = (320.0, 240.0)
    resolution: tuple[int, int] = DEFAULT_RESOLUTION

    def __post_init__(self):
        rot = tuple(_vec3(row) for row in self.rotation)
        if len(rot) != 3:
            raise ValueError("rotation must be 3x3")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", _vec3(self.translation))
        object.__setattr__(self, "focal", tuple(float(f) for f in self.focal))
        object.__setattr__(self, "principal", tuple(float(c) for c in self.principal))
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        if min(self.focal) <= 0:
            raise ValueError("focal lengths must be positive")
        if min(self.resolution) <= 0:
            raise ValueError("resolution must be positive")
        R = np.asarray(rot)
        if np.max(np.abs(R @ R.T - np.eye(3))) > 1e-9:
            raise ValueError("rotation is not orthonormal")

    @property
    def R(self) -> np.ndarray:
        return np.asarray(self.rotation)

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.translation)

    def to_camera(self, points) -> np.ndarray:
        """World points (..., 3) to camera-frame points (..., 3)."""
        return np.asarray(points, dtype=float) @ self.R.T + self.t

    def frame(self) -> BoundingBox2D:
        w, h = self.resolution
        return BoundingBox2D(0.0, 0.0, float(w), float(h))

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "pose": {
                "rotation": [list(r) for r in self.rotation],
                "translation": list(self.translation),
            },
            "focal": list(self.focal),
            "principal": list(self.principal),
            "resolution": list(self.resolution),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraView":
        return cls(
            agent_id=int(d["agent_id"]),
            rotation=d["pose"]["rotation"],
            translation=d["pose"]["translation"],
            focal=d["focal"],
            principal=d["principal"],
            resolution=d["resolution"],
        )


def look_at(
    agent_id: int,
    eye,
    target,
    up=(0.0, 0.0, 1.0),
    focal=DEFAULT_FOCAL,
    resolution=DEFAULT_RESOLUTION,
    principal=None,
) -> CameraView:
    """Build a camera at ``eye`` looking at ``target``."""
    eye = np.asarray(eye, dtype=float)
    forward = np.asarray(target, dtype=float) - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=float))
    n = np.linalg.norm(right)
    if n < 1e-12:
        raise ValueError("viewing direction is parallel to the up vector")
    right /= n
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    if principal is None:
        principal = (resolution[0] / 2.0, resolution[1] / 2.0)
    return CameraView(
        agent_id=agent_id,
        rotation=tuple(map(tuple, R)),
        translation=tuple(-R @ eye),
        focal=focal,
        principal=principal,
        resolution=resolution,
    )


@dataclass(frozen=True)
class Scene:
    objects: tuple[ObjectInstance, ...]
    views: tuple[CameraView, ...]
    seed: int = 0
    _by_id: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "views", tuple(self.views))
        if len(self.views) < 2:
            raise ValueError("a scene needs at least 2 views")
        if len(self.objects) < 1:
            raise ValueError("a scene needs at least 1 object")
        by_id = {o.id: o for o in self.objects}
        if len(by_id) != len(self.objects):
            raise ValueError("object ids must be unique")
        object.__setattr__(self, "_by_id", by_id)

    def object(self, object_id: int) -> ObjectInstance:
        return self._by_id[object_id]

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "objects": [o.to_dict() for o in self.objects],
            "views": [v.to_dict() for v in self.views],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        return cls(
            objects=tuple(ObjectInstance.from_dict(o) for o in d["objects"]),
            views=tuple(CameraView.from_dict(v) for v in d["views"]),
            seed=int(d["seed"]),
        )


def project_point(p, view: CameraView) -> Optional[tuple[float, float]]:
    """Pixel coordinates of a world point, or None if it is not in front of the camera."""
    x, y, z = view.to_camera(p)
    if z <= 0:
        return None
    fx, fy = view.focal
    cx, cy = view.principal
    return (fx * x / z + cx, fy * y / z + cy)


def unproject(u: float, v: float, depth: float, view: CameraView) -> np.ndarray:
    """World point at camera-frame depth ``depth`` behind pixel (u, v)."""
    fx, fy = view.focal
    cx, cy = view.principal
    pc = np.array([(u - cx) / fx * depth, (v - cy) / fy * depth, depth])
    return view.R.T @ (pc - view.t)


# corner index pairs forming the 12 box edges (corners ordered as in ObjectInstance.corners)
_EDGES = [(a, b) for a in range(8) for b in range(a + 1, 8) if bin(a ^ b).count("1") == 1]


def _camera_points(obj: ObjectInstance, view: CameraView) -> np.ndarray:
    """Camera-frame points spanning the part of the volume in front of the near plane."""
    pc = view.to_camera(obj.corners())
    z = pc[:, 2]
    if np.all(z >= NEAR_PLANE):
        return pc
    pts = [pc[z >= NEAR_PLANE]]
    for a, b in _EDGES:
        za, zb = z[a], z[b]
        if (za - NEAR_PLANE) * (zb - NEAR_PLANE) < 0:
            s = (NEAR_PLANE - za) / (zb - za)
            pts.append((pc[a] + s * (pc[b] - pc[a]))[None, :])
    return np.concatenate(pts)


def project_object(
    obj: ObjectInstance, view: CameraView, clamp: bool = True
) -> Optional[BoundingBox2D]:
    """2D box of the projected object volume, clamped to the image by default.

    Returns None when the volume is entirely behind the camera or the clamped
    box is empty.
    """
    pc = _camera_points(obj, view)
    if len(pc) == 0:
        return None
    fx, fy = view.focal
    cx, cy = view.principal
    u = fx * pc[:, 0] / pc[:, 2] + cx
    v = fy * pc[:, 1] / pc[:, 2] + cy
    x1, x2, y1, y2 = u.min(), u.max(), v.min(), v.max()
    if clamp:
        w, h = view.resolution
        x1, x2 = np.clip([x1, x2], 0.0, w)
        y1, y2 = np.clip([y1, y2], 0.0, h)
    if not (x1 < x2 and y1 < y2):
        return None
    return BoundingBox2D(float(x1), float(y1), float(x2), float(y2))


def union_area(boxes: Sequence[BoundingBox2D]) -> float:
    """Exact area of a union of axis-aligned boxes (coordinate compression)."""
    if not boxes:
        return 0.0
    xs = sorted({b.x1 for b in boxes} | {b.x2 for b in boxes})
    total = 0.0
    for xa, xb in zip(xs[:-1], xs[1:]):
        spans = sorted((b.y1, b.y2) for b in boxes if b.x1 <= xa and b.x2 >= xb)
        covered = 0.0
        cur_lo = cur_hi = None
        for lo, hi in spans:
            if cur_hi is None or lo > cur_hi:
                if cur_hi is not None:
                    covered += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        if cur_hi is not None:
            covered += cur_hi - cur_lo
        total += (xb - xa) * covered
    return total


@dataclass(frozen=True)
class Visibility:
    object_id: int
    box: BoundingBox2D
    depth: float
    visible_fraction: float
    visible: bool


def view_visibility(
    scene: Scene,
    view_index: int,
    min_fraction: float = MIN_VISIBLE_FRACTION,
    min_area: float = MIN_BOX_AREA,
) -> list[Visibility]:
    """Occlusion analysis for every object that projects into a view, sorted by id.

    An object's occluded area is the part of its clamped box covered by the
    union of the boxes of strictly nearer objects (nearness by center depth).
    """
    if not 0 <= view_index < len(scene.views):
        raise IndexError(f"view index {view_index} out of range for {len(scene.views)} views")
    view = scene.views[view_index]
    entries = []
    for obj in scene.objects:
        depth = float(view.to_camera(obj.position)[2])
        if depth <= 0:
            continue
        box = project_object(obj, view)
        if box is not None:
            entries.append((obj.id, box, depth))

    out = []
    for oid, box, depth in entries:
        clipped = [
            c
            for c in (b.intersect(box) for _, b, d in entries if d < depth)
            if c is not None
        ]
        clipped.sort(key=BoundingBox2D.as_list)
        frac = max(0.0, 1.0 - union_area(clipped) / box.area)
        out.append(
            Visibility(oid, box, depth, frac, frac >= min_fraction and box.area >= min_area)
        )
    out.sort(key=lambda e: e.object_id)
    return out


def visible_objects(scene: Scene, view_index: int) -> list[tuple[int, BoundingBox2D, float]]:
    """(object id, clamped box, center depth) of each visible object, sorted by id."""
    return [
        (e.object_id, e.box, e.depth)
        for e in view_visibility(scene, view_index)
        if e.visible
    ]


def visible_view_counts(scene: Scene) -> dict[int, int]:
    """Number of views each object is visible in."""
    counts = {o.id: 0 for o in scene.objects}
    for vi in range(len(scene.views)):
        for oid, _, _ in visible_objects(scene, vi):
            counts[oid] += 1
    return counts


def overlap_count(scene: Scene) -> int:
    """Number of objects visible in two or more views."""
    return sum(1 for c in visible_view_counts(scene).values() if c >= 2)
