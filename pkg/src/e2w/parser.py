"""Structured parsing of model responses.

The response grammar is a ``<think>...</think>`` reasoning segment holding
``[x1, y1, x2, y2]`` evidence boxes and an optional overlap declaration,
followed by exactly one ``\\boxed{...}`` final answer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from e2w.geometry import BoundingBox2D


class Task(str, Enum):
    COUNTING = "Counting"
    RELATION = "Relation"
    GRASP = "Grasp"

    @classmethod
    def parse(cls, value: Union[str, "Task"]) -> "Task":
        if isinstance(value, Task):
            return value
        key = str(value).strip().lower()
        aliases = {"e2w1": cls.COUNTING, "e2w2": cls.RELATION, "e2w3": cls.GRASP}
        if key in aliases:
            return aliases[key]
        for t in cls:
            if t.value.lower() == key:
                return t
        raise ValueError(f"unknown task {value!r}")


@dataclass(frozen=True)
class CountAnswer:
    value: int


@dataclass(frozen=True)
class TextAnswer:
    value: str


@dataclass(frozen=True)
class GraspAnswer:
    view: int
    point: tuple[float, float]


Answer = Union[CountAnswer, TextAnswer, GraspAnswer]


@dataclass(frozen=True)
class ParsedResponse:
    think_text: Optional[str] = None
    evidence_boxes: tuple[BoundingBox2D, ...] = field(default_factory=tuple)
    overlap_count: Optional[int] = None
    boxed_raw: Optional[str] = None
    answer: Optional[Answer] = None
    format_ok: bool = False
    n_boxed: int = 0


_NUM = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_THINK_RE = re.compile(r"<think>(.*?)</think>", re.DOTALL)
_BOX_RE = re.compile(
    r"\[\s*({n})\s*,\s*({n})\s*,\s*({n})\s*,\s*({n})\s*\]".format(n=_NUM)
)
_OVERLAP_RE = re.compile(
    r"overlap number\s*=\s*(\d+)|overlap_count\s*:\s*(\d+)", re.IGNORECASE
)
_INT_RE = re.compile(r"[-+]?\d+")
_GRASP_RE = re.compile(
    r"(\d+)\s*,\s*\[\s*({n})\s*,\s*({n})\s*\]".format(n=_NUM)
)
_TEXT_WRAP_RE = re.compile(r"^\\(?:text|mathrm|textbf)\{(.*)\}$", re.DOTALL)
_STRIP_CHARS = " \t\r\n.,!?\"'"


def normalize_text(s: str) -> str:
    """Lowercase, collapse internal whitespace, strip surrounding punctuation."""
    s = " ".join(s.split()).lower()
    prev = None
    while prev != s:
        prev = s
        s = s.strip(_STRIP_CHARS)
    return s


def _boxed_spans(text: str) -> list[Optional[str]]:
    """Contents of every ``\\boxed{`` occurrence; None where braces never balance."""
    out = []
    key = "\\boxed{"
    start = text.find(key)
    while start != -1:
        i = start + len(key)
        depth = 1
        j = i
        while j < len(text) and depth:
            if text[j] == "{":
                depth += 1
            elif text[j] == "}":
                depth -= 1
            j += 1
        out.append(text[i : j - 1] if depth == 0 else None)
        start = text.find(key, start + len(key))
    return out


def parse_answer(raw: str, task: Task) -> Optional[Answer]:
    raw = raw.strip()
    m = _TEXT_WRAP_RE.match(raw)
    if m:
        raw = m.group(1).strip()
    if task is Task.COUNTING:
        return CountAnswer(int(raw)) if _INT_RE.fullmatch(raw) else None
    if task is Task.GRASP:
        m = _GRASP_RE.fullmatch(raw)
        if not m:
            return None
        return GraspAnswer(int(m.group(1)), (float(m.group(2)), float(m.group(3))))
    text = normalize_text(raw)
    return TextAnswer(text) if text else None


def extract_boxes(segment: str) -> list[BoundingBox2D]:
    """Evidence boxes in order of first appearance.

    Degenerate tuples (x1 >= x2 or y1 >= y2) are skipped and repeated
    mentions of the same box are kept once.
    """
    boxes = []
    seen = set()
    for m in _BOX_RE.finditer(segment):
        vals = tuple(float(g) for g in m.groups())
        if vals in seen:
            continue
        try:
            box = BoundingBox2D(*vals)
        except ValueError:
            continue
        seen.add(vals)
        boxes.append(box)
    return boxes


def parse_response(text: Union[str, bytes, None], task: Union[Task, str]) -> ParsedResponse:
    """Decompose a raw model response. Never raises on malformed input."""
    task = Task.parse(task)
    if text is None:
        text = ""
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8", errors="replace")

    think_m = _THINK_RE.search(text)
    think = think_m.group(1) if think_m else None
    boxes = extract_boxes(think) if think is not None else []

    overlap = None
    om = _OVERLAP_RE.search(text)
    if om:
        overlap = int(om.group(1) if om.group(1) is not None else om.group(2))

    spans = _boxed_spans(text)
    boxed_raw = spans[-1] if spans else None
    answer = parse_answer(boxed_raw, task) if boxed_raw is not None else None

    format_ok = (
        think is not None
        and think.strip() != ""
        and len(spans) == 1
        and answer is not None
    )
    return ParsedResponse(
        think_text=think,
        evidence_boxes=tuple(boxes),
        overlap_count=overlap,
        boxed_raw=boxed_raw,
        answer=answer,
        format_ok=format_ok,
        n_boxed=len(spans),
    )


def check_format(parsed: ParsedResponse) -> int:
    return 1 if parsed.format_ok else 0
