"""Group-relative policy optimization on a toy categorical policy.

The toy policy maps each context (one task instance) to a softmax over a
finite answer vocabulary, so the probability ratio, clipped surrogate and
KL penalty can be evaluated and differentiated exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from e2w.datagen import TaskInstance, fmt_num
from e2w.parser import Task, parse_response
from e2w.reward import RewardWeights, total_reward


@dataclass(frozen=True)
class GrpoConfig:
    group_size: int = 8
    clip_eps: float = 0.2
    kl_beta: float = 0.04
    # plain gradient ascent; keep learning_rate * kl_beta * max(p) well below 2 for stability
    learning_rate: float = 0.01
    sigma_floor: float = 1e-8

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError("group_size must be at least 2")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")
        if self.kl_beta < 0:
            raise ValueError("kl_beta must be nonnegative")
        if self.learning_rate <= 0 or self.sigma_floor <= 0:
            raise ValueError("learning_rate and sigma_floor must be positive")


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


@dataclass
class ToyPolicy:
    """Per-context logits over a shared answer vocabulary; row ``c`` is context ``c``."""

    logits: np.ndarray
    vocab: tuple[str, ...]

    def __post_init__(self):
        self.logits = np.array(self.logits, dtype=float)
        self.vocab = tuple(self.vocab)
        if self.logits.ndim != 2 or self.logits.shape[1] != len(self.vocab):
            raise ValueError("logits must have shape (n_contexts, len(vocab))")

    @classmethod
    def uniform(cls, n_contexts: int, vocab: Sequence[str]) -> "ToyPolicy":
        return cls(np.zeros((n_contexts, len(vocab))), tuple(vocab))

    @property
    def n_contexts(self) -> int:
        return self.logits.shape[0]

    def log_probs(self, context: Optional[int] = None) -> np.ndarray:
        z = self.logits if context is None else self.logits[context]
        return _log_softmax(z)

    def probs(self, context: Optional[int] = None) -> np.ndarray:
        return np.exp(self.log_probs(context))

    def copy(self) -> "ToyPolicy":
        return ToyPolicy(self.logits.copy(), self.vocab)

    def greedy(self, context: int) -> int:
        return int(np.argmax(self.logits[context]))


class Candidate(NamedTuple):
    answer: int
    logp_current: float
    logp_ref: float
    reward: float


@dataclass(frozen=True)
class GroupSample:
    context: int
    candidates: tuple[Candidate, ...]

    @property
    def rewards(self) -> np.ndarray:
        return np.array([c.reward for c in self.candidates], dtype=float)

    @property
    def answers(self) -> np.ndarray:
        return np.array([c.answer for c in self.candidates], dtype=int)


def group_advantages(rewards: Sequence[float], sigma_floor: float = 1e-8) -> np.ndarray:
    """Rewards standardized within the group (population std, floored)."""
    r = np.asarray(rewards, dtype=float)
    if r.size < 2:
        raise ValueError("a group needs at least 2 rewards")
    if r.max() == r.min():
        return np.zeros_like(r)
    return (r - r.mean()) / max(r.std(), sigma_floor)


def prob_ratio(logp_current: float, logp_ref: float) -> float:
    return math.exp(logp_current - logp_ref)


def clipped_surrogate(ratio: float, advantage: float, eps: float) -> float:
    clipped = min(max(ratio, 1.0 - eps), 1.0 + eps)
    return min(ratio * advantage, clipped * advantage)


def _surrogate_slope(ratio: np.ndarray, adv: np.ndarray, eps: float) -> np.ndarray:
    """d/d(ratio) of the clipped surrogate (zero where the clip binds)."""
    active = np.where(adv >= 0, ratio < 1.0 + eps, ratio > 1.0 - eps)
    return np.where(active, adv, 0.0)


def kl_divergence(p, q) -> float:
    """Exact KL(p || q) for categorical distributions on the same support."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must share a support")
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise ValueError("q must be positive wherever p is")
    return float(max(0.0, np.sum(p[mask] * (np.log(p[mask]) - np.log(q[mask])))))


def grpo_objective_and_grad(
    groups: Sequence[GroupSample], policy: ToyPolicy, ref: ToyPolicy, cfg: GrpoConfig
) -> tuple[float, np.ndarray]:
    """Objective value and its gradient with respect to ``policy.logits``.

    The surrogate is summed over the candidates of a group and averaged over
    groups; the KL penalty is the mean exact per-context divergence to ``ref``.
    Ratios use the log-probabilities of ``policy``, not the ones recorded in
    the samples.
    """
    if not groups:
        raise ValueError("grpo_objective needs at least one group")
    n = len(groups)
    grad = np.zeros_like(policy.logits)
    surr_total = 0.0
    kl_total = 0.0
    for g in groups:
        c = g.context
        logp = policy.log_probs(c)
        logq = ref.log_probs(c)
        p = np.exp(logp)
        y = g.answers
        adv = group_advantages(g.rewards, cfg.sigma_floor)
        ratio = np.exp(logp[y] - logq[y])
        surr_total += sum(clipped_surrogate(r, a, cfg.clip_eps) for r, a in zip(ratio, adv))
        coef = _surrogate_slope(ratio, adv, cfg.clip_eps) * ratio
        # d ratio_j / d z = ratio_j * (onehot(y_j) - p)
        gs = -coef.sum() * p
        np.add.at(gs, y, coef)
        kl = kl_divergence(p, np.exp(logq))
        kl_total += kl
        gk = p * (logp - logq - kl)
        grad[c] += (gs - cfg.kl_beta * gk) / n
    value = surr_total / n - cfg.kl_beta * kl_total / n
    return value, grad


def grpo_objective(
    groups: Sequence[GroupSample], policy: ToyPolicy, ref: ToyPolicy, cfg: GrpoConfig
) -> float:
    return grpo_objective_and_grad(groups, policy, ref, cfg)[0]


def sft_loss(policy: ToyPolicy, labeled: Sequence[tuple[int, int]]) -> float:
    """Mean negative log-likelihood of (context, answer id) labels."""
    return -float(np.mean([policy.log_probs(c)[a] for c, a in labeled]))


def sft_warmstart(
    policy: ToyPolicy,
    labeled: Sequence[tuple[int, int]],
    epochs: int,
    learning_rate: float = 0.5,
    loss_trace: Optional[list] = None,
) -> ToyPolicy:
    """Full-batch gradient ascent on the label log-likelihood."""
    if not labeled:
        raise ValueError("labeled data must be nonempty")
    out = policy.copy()
    n = len(labeled)
    for _ in range(epochs):
        if loss_trace is not None:
            loss_trace.append(sft_loss(out, labeled))
        grad = np.zeros_like(out.logits)
        for c, a in labeled:
            grad[c] -= out.probs(c)
            grad[c, a] += 1.0
        out.logits += learning_rate * grad / n
    if loss_trace is not None:
        loss_trace.append(sft_loss(out, labeled))
    return out


# ---------------------------------------------------------------------------
# training loop


def answer_string(instance: TaskInstance) -> str:
    """The boxed payload of the correct answer."""
    gt = instance.ground_truth
    if gt.count is not None:
        return str(gt.count)
    if gt.answer_text is not None:
        return gt.answer_text
    view, (u, v) = gt.grasp
    return f"{view}, [{fmt_num(u)}, {fmt_num(v)}]"


def render_candidate(
    answer: str,
    instance: TaskInstance,
    rng: Optional[np.random.Generator] = None,
    rich: bool = False,
) -> str:
    """A minimal well-formed response carrying ``answer``.

    With ``rich`` the think block also declares an overlap count (correct
    half the time) and the key-object boxes with Gaussian pixel jitter.
    """
    lines = [f"The answer is {answer}."]
    if rich:
        if rng is None:
            raise ValueError("rich candidates need an rng")
        for b in instance.key_boxes():
            x1, y1, x2, y2 = np.asarray(b.as_list()) + rng.normal(0.0, 4.0, size=4)
            if x1 < x2 and y1 < y2:
                lines.append(f"- evidence at [{x1:.1f}, {y1:.1f}, {x2:.1f}, {y2:.1f}]")
        n = instance.overlap_truth
        declared = n if rng.random() < 0.5 else max(0, n + int(rng.choice([-1, 1])))
        lines.append(f"Overlap number = {declared}")
    body = "\n".join(lines)
    return f"<think>\n{body}\n</think>\n\n\\boxed{{{answer}}}"


@dataclass(frozen=True)
class TraceRow:
    step: int
    objective: float
    mean_reward: float
    mean_kl: float
    greedy_accuracy: float


@dataclass
class TrainResult:
    policy: ToyPolicy
    trace: list[TraceRow] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "objective", "mean_reward", "mean_kl", "greedy_accuracy"])
        for r in self.trace:
            w.writerow([r.step, repr(r.objective), repr(r.mean_reward), repr(r.mean_kl), repr(r.greedy_accuracy)])
        return buf.getvalue()


RewardFn = Callable[[str, TaskInstance], float]


def mean_kl(policy: ToyPolicy, ref: ToyPolicy) -> float:
    return float(np.mean([kl_divergence(policy.probs(c), ref.probs(c)) for c in range(policy.n_contexts)]))


def greedy_accuracy(policy: ToyPolicy, targets: Sequence[int]) -> float:
    return float(np.mean([policy.greedy(c) == t for c, t in enumerate(targets)]))


def grpo_train(
    dataset: Sequence[TaskInstance],
    policy: ToyPolicy,
    cfg: GrpoConfig,
    steps: int,
    seed: int,
    weights: RewardWeights = RewardWeights(),
    reward_fn: Optional[RewardFn] = None,
    rich_candidates: bool = False,
) -> TrainResult:
    """Sample-score-update loop; the reference policy is the input policy.

    Each step draws one context, samples ``cfg.group_size`` answers from the
    current policy, scores their rendered responses and takes one gradient
    ascent step on the GRPO objective.
    """
    if policy.n_contexts != len(dataset):
        raise ValueError("policy needs one context per dataset instance")
    index = {a: i for i, a in enumerate(policy.vocab)}
    targets = []
    for inst in dataset:
        a = answer_string(inst)
        if a not in index:
            raise ValueError(f"vocabulary does not cover ground truth {a!r} of {inst.instance_id}")
        targets.append(index[a])

    if reward_fn is None:
        def reward_fn(text: str, inst: TaskInstance) -> float:
            return total_reward(parse_response(text, inst.task), inst, weights).r_total

    cache: dict[tuple[int, str], float] = {}

    def score(c: int, text: str) -> float:
        if rich_candidates:
            return reward_fn(text, dataset[c])
        key = (c, text)
        if key not in cache:
            cache[key] = reward_fn(text, dataset[c])
        return cache[key]

    rng = np.random.default_rng(seed)
    ref = policy.copy()
    cur = policy.copy()
    result = TrainResult(cur)
    V = len(policy.vocab)
    for step in range(1, steps + 1):
        c = int(rng.integers(len(dataset)))
        logp = cur.log_probs(c)
        logq = ref.log_probs(c)
        answers = rng.choice(V, size=cfg.group_size, p=np.exp(logp))
        cands = []
        for a in answers:
            text = render_candidate(policy.vocab[a], dataset[c], rng, rich_candidates)
            cands.append(Candidate(int(a), float(logp[a]), float(logq[a]), score(c, text)))
        group = GroupSample(c, tuple(cands))
        value, grad = grpo_objective_and_grad([group], cur, ref, cfg)
        cur.logits += cfg.learning_rate * grad
        result.trace.append(
            TraceRow(
                step=step,
                objective=value,
                mean_reward=float(group.rewards.mean()),
                mean_kl=mean_kl(cur, ref),
                greedy_accuracy=greedy_accuracy(cur, targets),
            )
        )
    return result


def counting_vocab(max_count: int = 9) -> tuple[str, ...]:
    return tuple(str(i) for i in range(max_count + 1))


def toy_counting_dataset(n_instances: int, seed: int) -> list[TaskInstance]:
    """Counting instances for the toy policy demos."""
    from e2w.datagen import generate_split

    return generate_split(Task.COUNTING, n_instances, seed, split="train")
