"""Sample model responses in the think-then-boxed format, one per task."""

from importlib import resources

CASES = ("counting_response", "relation_response", "grasp_response")


def load(name: str) -> str:
    if name not in CASES:
        raise KeyError(name)
    return resources.files(__name__).joinpath(f"{name}.txt").read_text(encoding="utf-8")
