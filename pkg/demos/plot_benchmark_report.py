"""
Scoring a response file into a benchmark table
==============================================

A fake model that answers correctly about half the time, scored into the
per-task accuracy and grasp-score columns.
"""

import numpy as np

from e2w.datagen import generate_split
from e2w.evalharness import aggregate, score_records
from e2w.parser import Task

rng = np.random.default_rng(0)
dataset = {}
pairs = []
for task in Task:
    for inst in generate_split(task, 40, seed=5, split="test"):
        dataset[inst.instance_id] = inst
        if rng.random() < 0.5:
            text = inst.reference_trace
        elif task is Task.GRASP:
            view, (u, v) = inst.ground_truth.grasp
            text = f"<think>close</think>\\boxed{{{view}, [{u + rng.normal(0, 40):.1f}, {v:.1f}]}}"
        else:
            text = "<think>guess</think>\\boxed{1}"
        pairs.append((inst.instance_id, text))

report = aggregate(score_records(dataset, pairs, workers=4))
print(report.render())
print(report.to_json())
