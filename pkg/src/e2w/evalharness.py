"""Benchmark scoring: exact-match accuracy for QA tasks, 0-100 grasp score."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from e2w.datagen import TaskInstance
from e2w.parser import Task, parse_response
from e2w.reward import RewardBreakdown, RewardWeights, total_reward


@dataclass(frozen=True)
class EvalRecord:
    instance_id: str
    task: Task
    breakdown: RewardBreakdown
    correct: Optional[bool] = None
    grasp_score: Optional[float] = None


@dataclass(frozen=True)
class BenchmarkReport:
    counting_acc: Optional[float]
    relation_acc: Optional[float]
    reasoning_avg: Optional[float]
    grasp_score: Optional[float]
    perception_avg: Optional[float]
    n_records: int
    n_by_task: dict
    weights: dict

    def to_dict(self) -> dict:
        return {
            "counting_acc": self.counting_acc,
            "relation_acc": self.relation_acc,
            "reasoning_avg": self.reasoning_avg,
            "grasp_score": self.grasp_score,
            "perception_avg": self.perception_avg,
            "n_records": self.n_records,
            "n_by_task": dict(self.n_by_task),
            "weights": dict(self.weights),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def render(self) -> str:
        def cell(v, digits):
            return "-" if v is None else f"{v:.{digits}f}"

        header = ("Counting (Acc)", "Relation (Acc)", "Reasoning Avg", "Grasp (Score)", "Perception Avg")
        row = (
            cell(self.counting_acc, 1),
            cell(self.relation_acc, 1),
            cell(self.reasoning_avg, 1),
            cell(self.grasp_score, 2),
            cell(self.perception_avg, 2),
        )
        widths = [max(len(h), len(c)) for h, c in zip(header, row)]
        fmt = " | ".join("{:>%d}" % w for w in widths)
        rule = "-+-".join("-" * w for w in widths)
        counts = ", ".join(f"{k}={v}" for k, v in self.n_by_task.items())
        return "\n".join([
            f"E2W benchmark report (d_max={self.weights.get('d_max')} px, n={self.n_records}; {counts})",
            fmt.format(*header),
            rule,
            fmt.format(*row),
        ])


def score_record(
    instance: TaskInstance, response_text, weights: RewardWeights = RewardWeights()
) -> EvalRecord:
    """Never raises on response content; unparseable answers score as wrong."""
    parsed = parse_response(response_text, instance.task)
    b = total_reward(parsed, instance, weights)
    if instance.task is Task.GRASP:
        return EvalRecord(instance.instance_id, instance.task, b, grasp_score=100.0 * b.r_ans)
    return EvalRecord(instance.instance_id, instance.task, b, correct=b.r_ans == 1.0)


def score_records(
    dataset: Mapping[str, TaskInstance],
    responses: Sequence[tuple[str, str]],
    weights: RewardWeights = RewardWeights(),
    workers: int = 1,
) -> list[EvalRecord]:
    """Score (instance_id, response_text) pairs; unknown ids raise KeyError."""
    def one(pair):
        iid, text = pair
        return score_record(dataset[iid], text, weights)

    if workers <= 1:
        return [one(p) for p in responses]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, responses))


def _mean(xs):
    return math.fsum(xs) / len(xs) if xs else None


def _round(v, digits):
    return None if v is None else round(v, digits)


def aggregate(records: Sequence[EvalRecord], weights: RewardWeights = RewardWeights()) -> BenchmarkReport:
    """Per-task columns; absent tasks are reported as None, never as zero.

    Reasoning Avg is the unweighted mean of the QA accuracy columns present.
    """
    if not records:
        raise ValueError("cannot aggregate an empty record list")
    by_task = {t: [r for r in records if r.task is t] for t in Task}
    acc = {}
    for t in (Task.COUNTING, Task.RELATION):
        rs = by_task[t]
        acc[t] = None if not rs else 100.0 * sum(bool(r.correct) for r in rs) / len(rs)
    qa_cols = [v for v in acc.values() if v is not None]
    grasp = _mean([r.grasp_score for r in by_task[Task.GRASP]])
    return BenchmarkReport(
        counting_acc=_round(acc[Task.COUNTING], 1),
        relation_acc=_round(acc[Task.RELATION], 1),
        reasoning_avg=_round(_mean(qa_cols), 1),
        grasp_score=_round(grasp, 2),
        perception_avg=_round(grasp, 2),
        n_records=len(records),
        n_by_task={t.value: len(rs) for t, rs in by_task.items()},
        weights=weights.to_dict(),
    )
