"""Synthetic E2W task generation with programmatic ground truth.

Pipeline per instance: sample a tabletop scene, extract per-view boxes from
the geometry, compute the answer from world coordinates, and assemble a
templated reasoning trace that the parser reads back exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from e2w.geometry import (
    DEFAULT_FOCAL,
    DEFAULT_RESOLUTION,
    BoundingBox2D,
    ObjectInstance,
    Scene,
    look_at,
    project_point,
    view_visibility,
    visible_objects,
)
from e2w.parser import Task
from e2w.vocab import CLASS_VOCAB, ORDINALS

MAX_SCENE_ATTEMPTS = 1000
MAX_INSTANCE_ATTEMPTS = 100

# total items per task at scale 1.0, and the per-task test size
SPLIT_SIZES = {Task.COUNTING: 30_000, Task.RELATION: 60_000, Task.GRASP: 70_000}
TEST_SIZE = 200

RELATION_TEMPLATES = ("ordinal", "left_right", "nearest")
GRASP_TEMPLATES = ("left_of", "right_of", "farthest", "nearest", "named")


class GenerationError(RuntimeError):
    """A scene or task instance could not be generated."""

    def __init__(self, message: str, seed: Optional[int] = None):
        if seed is not None:
            message = f"{message} (seed={seed})"
        super().__init__(message)
        self.seed = seed


@dataclass(frozen=True)
class SceneConfig:
    """Parameters of the tabletop scene sampler. Lengths in meters."""

    n_objects: tuple[int, int] = (3, 6)
    classes: tuple[str, ...] = CLASS_VOCAB
    # draw object classes from a random subset of this size (None: whole vocabulary)
    class_pool: Optional[int] = None
    distinct_classes: bool = False
    # x_min, x_max, y_min, y_max of object centers on the table; world +x is left-to-right
    workspace: tuple[float, float, float, float] = (-0.7, 0.7, -0.35, 0.35)
    half_extent_range: tuple[float, float] = (0.025, 0.06)
    camera_radius: tuple[float, float] = (0.5, 0.75)
    camera_height: tuple[float, float] = (0.35, 0.55)
    # azimuths in degrees; the default arc keeps every camera in front of the table (y < 0)
    camera_azimuth: tuple[float, float] = (-135.0, -45.0)
    # look-at targets are drawn from this fraction of the workspace
    look_at_spread: float = 0.8
    n_views: int = 2
    resolution: tuple[int, int] = DEFAULT_RESOLUTION
    focal: tuple[float, float] = DEFAULT_FOCAL

    def __post_init__(self):
        lo, hi = self.n_objects
        if not 1 <= lo <= hi:
            raise ValueError(f"bad object-count range {self.n_objects}")
        if self.n_views not in (2, 3):
            raise ValueError("n_views must be 2 or 3")
        if self.distinct_classes and hi > len(self.classes):
            raise ValueError("not enough classes for distinct sampling")


TASK_SCENE_CONFIGS = {
    Task.COUNTING: SceneConfig(n_objects=(1, 6), class_pool=2),
    Task.RELATION: SceneConfig(n_objects=(3, 6), distinct_classes=True),
    Task.GRASP: SceneConfig(n_objects=(2, 5), distinct_classes=True),
}


def _non_interpenetrating(a: ObjectInstance, b: ObjectInstance) -> bool:
    d = math.dist(a.position, b.position)
    return d >= 0.8 * (math.hypot(*a.half_extents) + math.hypot(*b.half_extents))


def _draw_scene(config: SceneConfig, rng: np.random.Generator, seed: int) -> Optional[Scene]:
    n = int(rng.integers(config.n_objects[0], config.n_objects[1] + 1))
    classes = list(config.classes)
    if config.distinct_classes:
        names = [classes[i] for i in rng.choice(len(classes), size=n, replace=False)]
    else:
        pool = classes
        if config.class_pool is not None:
            k = min(config.class_pool, len(classes))
            pool = [classes[i] for i in rng.choice(len(classes), size=k, replace=False)]
        names = [pool[i] for i in rng.integers(0, len(pool), size=n)]

    x0, x1, y0, y1 = config.workspace
    objects: list[ObjectInstance] = []
    for oid, name in enumerate(names):
        he = rng.uniform(*config.half_extent_range, size=3)
        for _ in range(50):
            pos = (rng.uniform(x0, x1), rng.uniform(y0, y1), he[2])
            cand = ObjectInstance(oid, name, pos, tuple(he))
            if all(_non_interpenetrating(cand, o) for o in objects):
                objects.append(cand)
                break
        else:
            return None

    views = []
    s = config.look_at_spread
    for vi in range(config.n_views):
        az = math.radians(rng.uniform(*config.camera_azimuth))
        r = rng.uniform(*config.camera_radius)
        h = rng.uniform(*config.camera_height)
        eye = (r * math.cos(az), r * math.sin(az), h)
        target = (rng.uniform(s * x0, s * x1), rng.uniform(s * y0, s * y1), 0.0)
        views.append(
            look_at(vi, eye, target, focal=config.focal, resolution=config.resolution)
        )

    scene = Scene(tuple(objects), tuple(views), seed=seed)
    seen = set()
    for vi in range(len(views)):
        seen.update(oid for oid, _, _ in visible_objects(scene, vi))
    if len(seen) != len(objects):
        return None
    return scene


def sample_scene(config: SceneConfig, seed: int) -> Scene:
    """Deterministic rejection sampler: every object visible, none interpenetrating."""
    rng = np.random.default_rng(seed)
    for _ in range(MAX_SCENE_ATTEMPTS):
        scene = _draw_scene(config, rng, seed)
        if scene is not None:
            return scene
    raise GenerationError(
        f"scene sampling budget of {MAX_SCENE_ATTEMPTS} attempts exhausted", seed
    )


# ---------------------------------------------------------------------------
# task instances


@dataclass(frozen=True)
class GroundTruth:
    count: Optional[int] = None
    answer_text: Optional[str] = None
    grasp: Optional[tuple[int, tuple[float, float]]] = None

    def __post_init__(self):
        n_set = sum(x is not None for x in (self.count, self.answer_text, self.grasp))
        if n_set != 1:
            raise ValueError("exactly one ground-truth field must be set")
        if self.count is not None and self.count < 0:
            raise ValueError("count must be nonnegative")

    def to_dict(self) -> dict:
        if self.count is not None:
            return {"count": self.count}
        if self.answer_text is not None:
            return {"answer_text": self.answer_text}
        view, (u, v) = self.grasp
        return {"view": view, "point": [u, v]}

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        if "count" in d:
            return cls(count=int(d["count"]))
        if "answer_text" in d:
            return cls(answer_text=str(d["answer_text"]))
        u, v = d["point"]
        return cls(grasp=(int(d["view"]), (float(u), float(v))))


ViewBoxes = tuple[tuple[int, BoundingBox2D], ...]


@dataclass(frozen=True)
class TaskInstance:
    """One benchmark item.

    ``per_view_boxes[i]`` lists (object id, box) for the objects visible in
    view ``i``. ``key_object_ids`` are the objects the question is about;
    their boxes are the grounding targets.
    """

    instance_id: str
    task: Task
    scene: Scene
    question: str
    per_view_boxes: tuple[ViewBoxes, ...]
    ground_truth: GroundTruth
    overlap_truth: int
    key_object_ids: tuple[int, ...] = ()
    reference_trace: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def key_boxes(self) -> list[BoundingBox2D]:
        # exact repeats collapse, matching how evidence boxes are parsed
        keys = set(self.key_object_ids)
        out: list[BoundingBox2D] = []
        for view in self.per_view_boxes:
            for oid, b in view:
                if oid in keys and b not in out:
                    out.append(b)
        return out

    def views_of(self, object_id: int) -> list[int]:
        return [
            vi for vi, view in enumerate(self.per_view_boxes)
            if any(oid == object_id for oid, _ in view)
        ]

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "task": self.task.value,
            "question": self.question,
            "views": [
                {
                    "agent_id": self.scene.views[vi].agent_id,
                    "boxes": [
                        {"id": oid, "class": self.scene.object(oid).class_name, "box": b.as_list()}
                        for oid, b in view
                    ],
                }
                for vi, view in enumerate(self.per_view_boxes)
            ],
            "overlap_truth": self.overlap_truth,
            "ground_truth": self.ground_truth.to_dict(),
            "reference_trace": self.reference_trace,
            "scene": self.scene.to_dict(),
            "key_object_ids": list(self.key_object_ids),
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TaskInstance":
        pvb = tuple(
            tuple((int(b["id"]), BoundingBox2D.from_list(b["box"])) for b in view["boxes"])
            for view in d["views"]
        )
        return cls(
            instance_id=str(d["instance_id"]),
            task=Task.parse(d["task"]),
            scene=Scene.from_dict(d["scene"]),
            question=str(d["question"]),
            per_view_boxes=pvb,
            ground_truth=GroundTruth.from_dict(d["ground_truth"]),
            overlap_truth=int(d["overlap_truth"]),
            key_object_ids=tuple(int(i) for i in d.get("key_object_ids", ())),
            reference_trace=str(d.get("reference_trace", "")),
            metadata=dict(d.get("metadata", {})),
        )


def _snap_box(box: BoundingBox2D) -> BoundingBox2D:
    # outward to 0.1 px so serialized boxes still contain the unrounded ones
    return BoundingBox2D(
        math.floor(box.x1 * 10 + 1e-6) / 10,
        math.floor(box.y1 * 10 + 1e-6) / 10,
        math.ceil(box.x2 * 10 - 1e-6) / 10,
        math.ceil(box.y2 * 10 - 1e-6) / 10,
    )


def _snap(x: float) -> float:
    return round(x * 10) / 10


def per_view_boxes(scene: Scene) -> tuple[ViewBoxes, ...]:
    return tuple(
        tuple((oid, _snap_box(box)) for oid, box, _ in visible_objects(scene, vi))
        for vi in range(len(scene.views))
    )


def _overlap_truth(pvb: Sequence[ViewBoxes]) -> int:
    counts: dict[int, int] = {}
    for view in pvb:
        for oid, _ in view:
            counts[oid] = counts.get(oid, 0) + 1
    return sum(1 for c in counts.values() if c >= 2)


def _covisible(pvb: Sequence[ViewBoxes], ids: Iterable[int]) -> bool:
    ids = set(ids)
    return any(ids <= {oid for oid, _ in view} for view in pvb)


def _finish(instance: TaskInstance) -> TaskInstance:
    return replace(instance, reference_trace=render_trace(instance))


def _unique_class_objects(scene: Scene) -> list[ObjectInstance]:
    counts: dict[str, int] = {}
    for o in scene.objects:
        counts[o.class_name] = counts.get(o.class_name, 0) + 1
    return [o for o in scene.objects if counts[o.class_name] == 1]


def _left_to_right(scene: Scene) -> list[ObjectInstance]:
    return sorted(scene.objects, key=lambda o: (o.position[0], o.id))


def _planar_dist(a: ObjectInstance, b: ObjectInstance) -> float:
    return math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])


def gen_counting(scene: Scene, target_class: str, instance_id: Optional[str] = None) -> TaskInstance:
    if target_class not in CLASS_VOCAB:
        raise ValueError(f"{target_class!r} is not in the class vocabulary")
    pvb = per_view_boxes(scene)
    ids = sorted(
        {oid for view in pvb for oid, _ in view if scene.object(oid).class_name == target_class}
    )
    inst = TaskInstance(
        instance_id=instance_id or f"counting-{scene.seed:016x}",
        task=Task.COUNTING,
        scene=scene,
        question=f"How many {target_class} do you observe?",
        per_view_boxes=pvb,
        ground_truth=GroundTruth(count=len(ids)),
        overlap_truth=_overlap_truth(pvb),
        key_object_ids=tuple(ids),
        metadata={"target_class": target_class},
    )
    return _finish(inst)


def ordinal_from_left(scene: Scene, k: int) -> ObjectInstance:
    """k-th object (1-based) in the fused left-to-right order."""
    return _left_to_right(scene)[k - 1]


def _pick(rng: np.random.Generator, options: list, pvb, key_fn):
    """Prefer options whose key objects never share a single view."""
    cross = [o for o in options if not _covisible(pvb, key_fn(o))]
    pool = cross or options
    return pool[int(rng.integers(len(pool)))], bool(cross)


def gen_relation(
    scene: Scene,
    seed: int,
    template: Optional[str] = None,
    instance_id: Optional[str] = None,
) -> TaskInstance:
    """Relational QA instance answered from world coordinates."""
    rng = np.random.default_rng(seed)
    pvb = per_view_boxes(scene)
    visible = {oid for view in pvb for oid, _ in view}
    objs = [o for o in scene.objects if o.id in visible]
    if len({o.class_name for o in objs}) < 3:
        raise GenerationError("relation task needs 3 objects of distinct classes", seed)
    unique = [o for o in _unique_class_objects(scene) if o.id in visible]

    order = list(RELATION_TEMPLATES)
    if template is not None:
        if template not in RELATION_TEMPLATES:
            raise ValueError(f"unknown relation template {template!r}")
        order = [template]
    else:
        order = [order[i] for i in rng.permutation(len(order))]

    for name in order:
        if name == "ordinal":
            ranked = [o for o in _left_to_right(scene) if o.id in visible]
            k = int(rng.integers(1, min(len(ranked), len(ORDINALS)) + 1))
            target = ranked[k - 1]
            question = f"What do you see as the {ORDINALS[k - 1]} item from the left on the table?"
            answer = target.class_name
            keys = tuple(sorted(o.id for o in ranked))
            meta = {"template": name, "ordinal": k, "target_id": target.id,
                    "left_to_right": [o.id for o in ranked]}
        elif name == "left_right":
            pairs = [(a, b) for a in unique for b in unique if a.id != b.id]
            if not pairs:
                continue
            (a, b), _ = _pick(rng, pairs, pvb, lambda p: (p[0].id, p[1].id))
            side = "left" if rng.integers(2) == 0 else "right"
            is_left = a.position[0] < b.position[0]
            answer = "yes" if is_left == (side == "left") else "no"
            question = f"Is the {a.class_name} to the {side} of the {b.class_name}?"
            keys = tuple(sorted((a.id, b.id)))
            meta = {"template": name, "side": side, "subject_id": a.id, "anchor_id": b.id}
        else:
            options = []
            for anchor in unique:
                others = [o for o in objs if o.id != anchor.id]
                if others:
                    near = min(others, key=lambda o: (_planar_dist(anchor, o), o.id))
                    options.append((anchor, near))
            if not options:
                continue
            (anchor, near), _ = _pick(rng, options, pvb, lambda p: (p[0].id, p[1].id))
            question = f"Which object is nearest to the {anchor.class_name}?"
            answer = near.class_name
            keys = tuple(sorted((anchor.id, near.id)))
            meta = {"template": name, "anchor_id": anchor.id, "target_id": near.id}
        meta["cross_view"] = not _covisible(pvb, keys)
        inst = TaskInstance(
            instance_id=instance_id or f"relation-{scene.seed:016x}",
            task=Task.RELATION,
            scene=scene,
            question=question,
            per_view_boxes=pvb,
            ground_truth=GroundTruth(answer_text=answer),
            overlap_truth=_overlap_truth(pvb),
            key_object_ids=keys,
            metadata=meta,
        )
        return _finish(inst)
    raise GenerationError("no relation template applies to this scene", seed)


def designated_view(scene: Scene, object_id: int) -> Optional[tuple[int, tuple[float, float]]]:
    """View where the object is least occluded, with its grasp-point pixel.

    Only views where the object is visible and its grasp point lands inside
    its (serialized) box qualify; ties go to the lowest view index.
    """
    best = None
    obj = scene.object(object_id)
    for vi in range(len(scene.views)):
        for e in view_visibility(scene, vi):
            if e.object_id != object_id or not e.visible:
                continue
            uv = project_point(obj.grasp_point, scene.views[vi])
            if uv is None:
                continue
            point = (_snap(uv[0]), _snap(uv[1]))
            if not _snap_box(e.box).contains(*point):
                continue
            if best is None or e.visible_fraction > best[0]:
                best = (e.visible_fraction, vi, point)
    return None if best is None else (best[1], best[2])


def gen_grasp(
    scene: Scene,
    seed: int,
    template: Optional[str] = None,
    instance_id: Optional[str] = None,
) -> TaskInstance:
    """Grasp-point instance whose target is picked out by a relational clause."""
    rng = np.random.default_rng(seed)
    pvb = per_view_boxes(scene)
    unique = _unique_class_objects(scene)
    ranked = _left_to_right(scene)
    unique_ids = {o.id for o in unique}

    order = list(GRASP_TEMPLATES)
    if template is not None:
        if template not in GRASP_TEMPLATES:
            raise ValueError(f"unknown grasp template {template!r}")
        order = [template]
    else:
        # the bare "named" template is a fallback unless the scene has one object
        head = [order[i] for i in rng.permutation(len(order) - 1)]
        order = (["named"] + head) if len(scene.objects) == 1 else head + ["named"]

    for name in order:
        options = []
        if name == "left_of" and len(ranked) >= 2 and ranked[1].id in unique_ids:
            anchor, target = ranked[1], ranked[0]
            options.append((anchor, target, f"Please grasp the things in the left of {anchor.class_name}."))
        elif name == "right_of" and len(ranked) >= 2 and ranked[-2].id in unique_ids:
            anchor, target = ranked[-2], ranked[-1]
            options.append((anchor, target, f"Please grasp the things in the right of {anchor.class_name}."))
        elif name in ("farthest", "nearest") and len(ranked) >= 2:
            for anchor in unique:
                others = [o for o in scene.objects if o.id != anchor.id]
                if name == "farthest":
                    target = max(others, key=lambda o: (_planar_dist(anchor, o), -o.id))
                    q = f"Please grasp the object farthest from the {anchor.class_name}."
                else:
                    target = min(others, key=lambda o: (_planar_dist(anchor, o), o.id))
                    q = f"Please grasp the object nearest to the {anchor.class_name}."
                options.append((anchor, target, q))
        elif name == "named":
            for target in unique:
                options.append((None, target, f"Please grasp the {target.class_name}."))

        resolved = []
        for anchor, target, q in options:
            dv = designated_view(scene, target.id)
            if dv is not None:
                resolved.append((anchor, target, q, dv))
        if not resolved:
            continue
        anchor, target, question, (view, point) = resolved[int(rng.integers(len(resolved)))]
        keys = tuple(sorted({target.id} | ({anchor.id} if anchor is not None else set())))
        meta = {
            "template": name,
            "target_id": target.id,
            "anchor_id": None if anchor is None else anchor.id,
            "cross_view": not _covisible(pvb, keys),
        }
        inst = TaskInstance(
            instance_id=instance_id or f"grasp-{scene.seed:016x}",
            task=Task.GRASP,
            scene=scene,
            question=question,
            per_view_boxes=pvb,
            ground_truth=GroundTruth(grasp=(view, point)),
            overlap_truth=_overlap_truth(pvb),
            key_object_ids=keys,
            metadata=meta,
        )
        return _finish(inst)
    raise GenerationError("grasp target is not visible in any view", seed)


# ---------------------------------------------------------------------------
# reasoning traces


def fmt_num(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def fmt_box(box: BoundingBox2D) -> str:
    return "[" + ", ".join(fmt_num(v) for v in box.as_list()) + "]"


def _label(scene: Scene, oid: int) -> str:
    return f"{scene.object(oid).class_name}_{oid}"


def _views_phrase(views: list[int]) -> str:
    if len(views) == 1:
        return f"only visible in view {views[0]}"
    return "visible in views " + ", ".join(str(v) for v in views[:-1]) + f" and {views[-1]}"


def render_trace(instance: TaskInstance) -> str:
    """Templated chain-of-thought ending in a single boxed answer."""
    scene = instance.scene
    keys = set(instance.key_object_ids)
    n_views = len(scene.views)
    lines = [
        f"I need to analyze images from {n_views} robot perspectives to answer the question: "
        f"'{instance.question}'.",
        "",
    ]
    for vi, view in enumerate(instance.per_view_boxes):
        role = "main" if vi == 0 else "auxiliary"
        lines.append(f"View {vi} ({role} perspective):")
        shown = [(oid, b) for oid, b in view if oid in keys]
        if not shown:
            lines.append("- no relevant objects are visible in this view")
        for oid, b in shown:
            lines.append(f"- {_label(scene, oid)} at {fmt_box(b)}")
        lines.append("")
    lines.append(f"Overlap number = {instance.overlap_truth}")
    lines.append("")
    if keys:
        lines.append("Correspondence across views:")
        for oid in sorted(keys):
            views = instance.views_of(oid)
            if views:
                lines.append(f"- {_label(scene, oid)} is {_views_phrase(views)}")
        lines.append("")

    gt = instance.ground_truth
    meta = instance.metadata
    if instance.task is Task.COUNTING:
        lines.append(
            f"Counting each {meta.get('target_class', 'object')} instance once across views, "
            f"the total is {gt.count}."
        )
        boxed = str(gt.count)
    elif instance.task is Task.RELATION:
        template = meta.get("template")
        if template == "ordinal":
            names = ", ".join(_label(scene, i) for i in meta["left_to_right"])
            lines.append(f"Fused left-to-right order on the table: {names}.")
        elif template == "left_right":
            a, b = meta["subject_id"], meta["anchor_id"]
            rel = "left" if scene.object(a).position[0] < scene.object(b).position[0] else "right"
            lines.append(f"In the fused table frame {_label(scene, a)} is to the {rel} of {_label(scene, b)}.")
        elif template == "nearest":
            lines.append(
                f"The object nearest to {_label(scene, meta['anchor_id'])} is {_label(scene, meta['target_id'])}."
            )
        lines.append(f"Therefore, the answer is {gt.answer_text}.")
        boxed = gt.answer_text
    else:
        view, (u, v) = gt.grasp
        target = meta.get("target_id")
        if target is not None:
            lines.append(f"The target is {_label(scene, target)}, least occluded in view {view}.")
        lines.append(f"Thus I should grasp at image {view} coordinates [{fmt_num(u)}, {fmt_num(v)}].")
        boxed = f"{view}, [{fmt_num(u)}, {fmt_num(v)}]"

    body = "\n".join(lines)
    return f"<think>\n{body}\n</think>\n\n\\boxed{{{boxed}}}"


# ---------------------------------------------------------------------------
# dataset assembly and I/O


def derive_seed(*parts: int) -> int:
    """64-bit seed derived from a tuple of nonnegative integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


_TASK_INDEX = {Task.COUNTING: 1, Task.RELATION: 2, Task.GRASP: 3}
_SPLIT_INDEX = {"train": 0, "test": 1}


def generate_instance(
    task: Union[Task, str],
    seed: int,
    instance_id: Optional[str] = None,
    config: Optional[SceneConfig] = None,
) -> TaskInstance:
    """Sample scenes from ``seed`` until the task generator succeeds."""
    task = Task.parse(task)
    config = config or TASK_SCENE_CONFIGS[task]
    for attempt in range(MAX_INSTANCE_ATTEMPTS):
        scene_seed = derive_seed(seed, attempt)
        scene = sample_scene(config, scene_seed)
        rng = np.random.default_rng([scene_seed, 7])
        try:
            if task is Task.COUNTING:
                present = sorted({o.class_name for o in scene.objects})
                if rng.random() < 0.1:
                    absent = [c for c in config.classes if c not in present]
                    target = absent[int(rng.integers(len(absent)))]
                else:
                    target = present[int(rng.integers(len(present)))]
                inst = gen_counting(scene, target)
            elif task is Task.RELATION:
                inst = gen_relation(scene, int(rng.integers(2**63)))
            else:
                inst = gen_grasp(scene, int(rng.integers(2**63)))
        except GenerationError:
            continue
        if instance_id is not None:
            inst = replace(inst, instance_id=instance_id)
        return inst
    raise GenerationError(f"no {task.value} instance after {MAX_INSTANCE_ATTEMPTS} scenes", seed)


def generate_split(task: Union[Task, str], n: int, seed: int, split: str = "train") -> list[TaskInstance]:
    """``n`` instances; train and test draw from disjoint seed streams."""
    task = Task.parse(task)
    tag = f"e2w{_TASK_INDEX[task]}"
    return [
        generate_instance(
            task,
            derive_seed(seed, _TASK_INDEX[task], _SPLIT_INDEX[split], i),
            instance_id=f"{tag}-{split}-{i:06d}",
        )
        for i in range(n)
    ]


def split_sizes(task: Union[Task, str], scale: float) -> tuple[int, int]:
    """(train, test) sizes for a task at the given scale factor."""
    task = Task.parse(task)
    test = max(1, round(TEST_SIZE * scale))
    train = max(1, round(SPLIT_SIZES[task] * scale) - test)
    return train, test


def dumps_instance(instance: TaskInstance) -> str:
    return json.dumps(instance.to_dict(), ensure_ascii=False)


def export_dataset(instances: Iterable[TaskInstance], path) -> None:
    """Write one JSON object per line."""
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for inst in instances:
                fh.write(dumps_instance(inst))
                fh.write("\n")
    except OSError as e:
        raise OSError(f"cannot write dataset {path}: {e}") from e


def load_dataset(path) -> list[TaskInstance]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot read dataset {path}: {e}") from e
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(TaskInstance.from_dict(json.loads(line)))
        except (ValueError, KeyError, TypeError) as e:
            raise ValueError(f"{path}:{lineno}: bad instance record: {e}") from e
    return out
