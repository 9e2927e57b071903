"""Ego-to-World benchmark toolkit: scene generation, response parsing,
cross-view spatial reward, GRPO on a toy policy, and evaluation."""

from e2w.datagen import (
    GenerationError,
    GroundTruth,
    SceneConfig,
    TaskInstance,
    export_dataset,
    gen_counting,
    gen_grasp,
    gen_relation,
    generate_instance,
    generate_split,
    load_dataset,
    render_trace,
    sample_scene,
)
from e2w.evalharness import BenchmarkReport, EvalRecord, aggregate, score_record
from e2w.geometry import (
    BoundingBox2D,
    CameraView,
    ObjectInstance,
    Scene,
    look_at,
    project_object,
    project_point,
    visible_objects,
)
from e2w.grpo import (
    GroupSample,
    GrpoConfig,
    ToyPolicy,
    clipped_surrogate,
    group_advantages,
    grpo_objective,
    grpo_train,
    kl_divergence,
    prob_ratio,
    sft_warmstart,
)
from e2w.parser import ParsedResponse, Task, check_format, parse_response
from e2w.reward import (
    Matching,
    RewardBreakdown,
    RewardWeights,
    grasp_answer_reward,
    grounding_reward,
    hungarian_match,
    iou,
    overlap_reward,
    qa_answer_reward,
    total_reward,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "BoundingBox2D",
    "CameraView",
    "EvalRecord",
    "GenerationError",
    "GroundTruth",
    "GroupSample",
    "GrpoConfig",
    "Matching",
    "ObjectInstance",
    "ParsedResponse",
    "RewardBreakdown",
    "RewardWeights",
    "Scene",
    "SceneConfig",
    "Task",
    "TaskInstance",
    "ToyPolicy",
    "aggregate",
    "check_format",
    "clipped_surrogate",
    "export_dataset",
    "gen_counting",
    "gen_grasp",
    "gen_relation",
    "generate_instance",
    "generate_split",
    "grasp_answer_reward",
    "grounding_reward",
    "group_advantages",
    "grpo_objective",
    "grpo_train",
    "hungarian_match",
    "iou",
    "kl_divergence",
    "load_dataset",
    "look_at",
    "overlap_reward",
    "parse_response",
    "prob_ratio",
    "project_object",
    "project_point",
    "qa_answer_reward",
    "render_trace",
    "sample_scene",
    "score_record",
    "sft_warmstart",
    "total_reward",
    "visible_objects",
]
