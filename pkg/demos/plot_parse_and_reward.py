"""
Parsing a response and scoring it
=================================

Feed a few candidate answers for the same grasp item through the parser
and the reward, and watch each component move.
"""

from e2w.datagen import generate_instance
from e2w.parser import Task, parse_response
from e2w.reward import score_text

inst = generate_instance(Task.GRASP, seed=4)
view, (u, v) = inst.ground_truth.grasp
print(inst.question, "->", inst.ground_truth.to_dict())

candidates = {
    "reference trace": inst.reference_trace,
    "30 px off": f"<think>aim near the target</think>\n\\boxed{{{view}, [{u + 30}, {v}]}}",
    "wrong view": f"<think>aim</think>\\boxed{{{view + 1}, [{u}, {v}]}}",
    "no think block": f"\\boxed{{{view}, [{u}, {v}]}}",
    "two answers": f"<think>hmm</think>\\boxed{{0, [1, 1]}} \\boxed{{{view}, [{u}, {v}]}}",
}

print(f"\n{'response':<16} fmt  ground  ovl   ans    total")
for name, text in candidates.items():
    b = score_text(text, inst)
    print(f"{name:<16} {b.r_format:.0f}    {b.r_ground:.3f}   {b.r_overlap:.0f}   {b.r_ans:.3f}  {b.r_total:.3f}")

# the parser never raises; garbage just comes back with empty fields
p = parse_response(b"\xff\xfe<think>", Task.GRASP)
print("\ngarbage ->", p.format_ok, p.answer)
