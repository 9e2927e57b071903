"""Total reward: format term plus the Cross-View Spatial Reward (CVSR).

    R      = lambda_format * R_format + lambda_cvsr * R_cvsr
    R_cvsr = w_ground * R_ground + w_overlap * R_overlap + w_ans * R_ans
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from e2w.datagen import GroundTruth, TaskInstance
from e2w.geometry import BoundingBox2D
from e2w.parser import (
    CountAnswer,
    GraspAnswer,
    ParsedResponse,
    Task,
    TextAnswer,
    normalize_text,
    parse_response,
)


@dataclass(frozen=True)
class RewardWeights:
    lambda_format: float = 0.1
    lambda_cvsr: float = 1.0
    w_ground: float = 0.1
    w_overlap: float = 0.2
    w_ans: float = 0.7
    d_max: float = 100.0

    def __post_init__(self):
        for name in ("lambda_format", "lambda_cvsr", "w_ground", "w_overlap", "w_ans"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RewardBreakdown:
    r_format: float
    r_ground: float
    r_overlap: float
    r_ans: float
    r_cvsr: float
    r_total: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    total_iou: float


def iou(a: BoundingBox2D, b: BoundingBox2D) -> float:
    inter = a.intersect(b)
    if inter is None:
        return 0.0
    i = inter.area
    return i / (a.area + b.area - i)


def iou_matrix(pred: Sequence[BoundingBox2D], gt: Sequence[BoundingBox2D]) -> np.ndarray:
    M = np.zeros((len(pred), len(gt)))
    for i, p in enumerate(pred):
        for j, g in enumerate(gt):
            M[i, j] = iou(p, g)
    return M


def _best_total(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    r, c = linear_sum_assignment(M, maximize=True)
    return float(M[r, c].sum())


def hungarian_match(
    pred: Sequence[BoundingBox2D], gt: Sequence[BoundingBox2D], tol: float = 1e-9
) -> Matching:
    """Maximum-total-IoU matching of size min(m, n).

    Among optimal matchings the lexicographically smallest pair sequence is
    returned: each prediction, in order, takes the smallest gt index that
    keeps the optimum reachable.
    """
    M = iou_matrix(pred, gt)
    m, n = M.shape
    if m == 0 or n == 0:
        return Matching((), 0.0)
    best = _best_total(M)
    size = min(m, n)

    pairs = []
    fixed = 0.0
    free_rows = list(range(m))
    free_cols = list(range(n))
    for i in range(m):
        if len(pairs) == size:
            break
        free_rows.remove(i)
        chosen = None
        for j in free_cols:
            rest_cols = [c for c in free_cols if c != j]
            rest = M[np.ix_(free_rows, rest_cols)]
            if fixed + M[i, j] + _best_total(rest) >= best - tol:
                chosen = j
                break
        if chosen is not None:
            pairs.append((i, chosen))
            fixed += M[i, chosen]
            free_cols.remove(chosen)
        # else row i stays unmatched; only possible when m > n
    total = float(sum(M[i, j] for i, j in pairs))
    return Matching(tuple(pairs), total)


def grounding_reward(pred: Sequence[BoundingBox2D], gt: Sequence[BoundingBox2D]) -> float:
    """Matched IoU normalized by max(m, n); vacuously 1 when both sides are empty."""
    m, n = len(pred), len(gt)
    if m == 0 and n == 0:
        return 1.0
    if m == 0 or n == 0:
        return 0.0
    return hungarian_match(pred, gt).total_iou / max(m, n)


def overlap_reward(parsed: ParsedResponse, n_star: int) -> int:
    return int(parsed.overlap_count is not None and parsed.overlap_count == n_star)


def _as_number(s: str) -> Optional[float]:
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def qa_answer_reward(parsed: ParsedResponse, gt: GroundTruth) -> int:
    ans = parsed.answer
    if gt.count is not None:
        if isinstance(ans, CountAnswer):
            return int(ans.value == gt.count)
        if isinstance(ans, TextAnswer):
            v = _as_number(ans.value)
            return int(v is not None and v == gt.count)
        return 0
    if gt.answer_text is None:
        raise ValueError("qa_answer_reward needs a count or answer_text ground truth")
    if not isinstance(ans, TextAnswer):
        return 0
    pred, truth = normalize_text(ans.value), normalize_text(gt.answer_text)
    a, b = _as_number(pred), _as_number(truth)
    if a is not None and b is not None:
        return int(a == b)
    return int(pred == truth)


def grasp_answer_reward(parsed: ParsedResponse, gt: GroundTruth, weights: RewardWeights = RewardWeights()) -> float:
    if gt.grasp is None:
        raise ValueError("grasp_answer_reward needs a grasp ground truth")
    ans = parsed.answer
    view, (u, v) = gt.grasp
    if not isinstance(ans, GraspAnswer) or ans.view != view:
        return 0.0
    d = math.hypot(ans.point[0] - u, ans.point[1] - v)
    return max(0.0, 1.0 - d / weights.d_max)


def total_reward(
    parsed: ParsedResponse, instance: TaskInstance, weights: RewardWeights = RewardWeights()
) -> RewardBreakdown:
    r_format = 1.0 if parsed.format_ok else 0.0
    r_ground = grounding_reward(list(parsed.evidence_boxes), instance.key_boxes())
    r_overlap = float(overlap_reward(parsed, instance.overlap_truth))
    if instance.task is Task.GRASP:
        r_ans = grasp_answer_reward(parsed, instance.ground_truth, weights)
    else:
        r_ans = float(qa_answer_reward(parsed, instance.ground_truth))
    r_cvsr = weights.w_ground * r_ground + weights.w_overlap * r_overlap + weights.w_ans * r_ans
    r_total = weights.lambda_format * r_format + weights.lambda_cvsr * r_cvsr
    return RewardBreakdown(r_format, r_ground, r_overlap, r_ans, r_cvsr, r_total)


def score_text(text: str, instance: TaskInstance, weights: RewardWeights = RewardWeights()) -> RewardBreakdown:
    return total_reward(parse_response(text, instance.task), instance, weights)


# ---------------------------------------------------------------------------
# line-oriented batch scoring; the serve loop uses the same functions


SCORE_FIELDS = ("r_format", "r_ground", "r_overlap", "r_ans", "r_cvsr", "r_total")


def _sig12(x: float) -> float:
    return float(f"{x:.12g}")


def score_request_line(
    line: str, dataset: Mapping[str, TaskInstance], weights: RewardWeights = RewardWeights()
) -> str:
    """Score one ``{instance_id, response_text}`` JSON line; always returns one JSON line."""
    try:
        req = json.loads(line)
        if not isinstance(req, dict):
            raise ValueError("request is not an object")
        iid = req["instance_id"]
        text = req.get("response_text", "")
        if not isinstance(text, str):
            raise ValueError("response_text must be a string")
    except (ValueError, KeyError, TypeError):
        return json.dumps({"error": "parse"})
    inst = dataset.get(iid) if isinstance(iid, str) else None
    if inst is None:
        return json.dumps({"instance_id": iid, "error": "unknown_instance"})
    b = score_text(text, inst, weights)
    out = {"instance_id": iid}
    out.update({k: _sig12(getattr(b, k)) for k in SCORE_FIELDS})
    return json.dumps(out)


def score_lines(
    lines: Iterable[str],
    dataset: Mapping[str, TaskInstance],
    weights: RewardWeights = RewardWeights(),
    workers: int = 1,
) -> list[str]:
    """Score request lines; output order always matches input order."""
    lines = [ln for ln in lines if ln.strip()]
    if workers <= 1:
        return [score_request_line(ln, dataset, weights) for ln in lines]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ln: score_request_line(ln, dataset, weights), lines))
