"""
Generating counting, relation and grasp items
=============================================

One instance of each task kind with its ground truth and reference trace.
"""

from e2w.datagen import generate_instance
from e2w.parser import Task

for task in Task:
    inst = generate_instance(task, seed=11)
    print("=" * 60)
    print(inst.task.value, "|", inst.question)
    print("ground truth:", inst.ground_truth.to_dict())
    print("overlap:", inst.overlap_truth, "| keys:", inst.key_object_ids)
    print(inst.reference_trace)
