"""Command-line entry point: ``e2w generate|score|eval|grpo-demo|serve``.

Exit codes: 0 success, 2 usage error, 3 data or schema error, 4 generation
budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import socketserver
import sys
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Mapping, Optional, TextIO

from e2w import datagen, evalharness, grpo
from e2w.datagen import GenerationError, TaskInstance
from e2w.parser import Task
from e2w.reward import RewardWeights, score_lines, score_request_line

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_GENERATION = 4


class DataError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("E2W_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"E2W_SEED must be an integer, got {raw!r}")


def _weights(args) -> RewardWeights:
    base = RewardWeights()
    over = {
        "lambda_format": args.lambda_format,
        "lambda_cvsr": args.lambda_cvsr,
        "w_ground": args.w_ground,
        "w_overlap": args.w_overlap,
        "w_ans": args.w_ans,
        "d_max": args.d_max,
    }
    return RewardWeights(**{k: (getattr(base, k) if v is None else v) for k, v in over.items()})


def _load_dataset(path) -> dict[str, TaskInstance]:
    try:
        instances = datagen.load_dataset(path)
    except (OSError, ValueError) as e:
        raise DataError(str(e)) from e
    return {inst.instance_id: inst for inst in instances}


def _read_lines(path) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot write {path}: {e}") from e


def cmd_generate(args) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create {out}: {e}") from e
    for tag in args.tasks.split(","):
        task = Task.parse(tag)
        name = f"e2w{datagen._TASK_INDEX[task]}"
        n_train, n_test = datagen.split_sizes(task, args.scale)
        for split, n in (("train", n_train), ("test", n_test)):
            insts = datagen.generate_split(task, n, args.seed, split)
            try:
                datagen.export_dataset(insts, out / f"{name}_{split}.jsonl")
            except OSError as e:
                raise DataError(str(e)) from e
            print(f"{name} {split}: {len(insts)} instances -> {out / f'{name}_{split}.jsonl'}")
    return EXIT_OK


def cmd_score(args) -> int:
    dataset = _load_dataset(args.dataset)
    lines = score_lines(_read_lines(args.responses), dataset, _weights(args), args.workers)
    _write_text(args.out, "".join(ln + "\n" for ln in lines))
    print(f"scored {len(lines)} responses -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    dataset = _load_dataset(args.dataset)
    weights = _weights(args)
    pairs = []
    for lineno, line in enumerate(_read_lines(args.responses), 1):
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            iid, text = req["instance_id"], req["response_text"]
        except (ValueError, KeyError, TypeError) as e:
            raise DataError(f"{args.responses}:{lineno}: bad response record: {e}") from e
        if iid not in dataset:
            raise DataError(f"{args.responses}:{lineno}: unknown instance {iid!r}")
        pairs.append((iid, text))
    if not pairs:
        raise DataError(f"{args.responses}: no responses")
    records = evalharness.score_records(dataset, pairs, weights, args.workers)
    report = evalharness.aggregate(records, weights)
    if args.report:
        _write_text(args.report, report.to_json() + "\n")
    print(report.render())
    return EXIT_OK


def cmd_grpo_demo(args) -> int:
    cfg = grpo.GrpoConfig(
        group_size=args.G, clip_eps=args.eps, kl_beta=args.beta, learning_rate=args.lr
    )
    data = grpo.toy_counting_dataset(args.instances, args.seed)
    vocab = grpo.counting_vocab(max(9, max(d.ground_truth.count for d in data)))
    policy = grpo.ToyPolicy.uniform(len(data), vocab)
    if args.sft_epochs > 0:
        labeled = [(c, vocab.index(grpo.answer_string(d))) for c, d in enumerate(data)]
        policy = grpo.sft_warmstart(policy, labeled, args.sft_epochs)
    result = grpo.grpo_train(
        data, policy, cfg, args.steps, args.seed, rich_candidates=args.rich_candidates
    )
    csv_text = result.to_csv()
    last = result.trace[-1] if result.trace else None
    summary = (
        f"final greedy accuracy: {last.greedy_accuracy:.4f} (mean KL {last.mean_kl:.3g})"
        if last else "no steps run"
    )
    if args.out:
        _write_text(args.out, csv_text)
        print(summary)
    else:
        sys.stdout.write(csv_text)
        print(summary, file=sys.stderr)
    return EXIT_OK


def serve_stream(
    dataset: Mapping[str, TaskInstance],
    inp: TextIO,
    out: TextIO,
    weights: RewardWeights = RewardWeights(),
    workers: int = 4,
    max_in_flight: int = 256,
) -> int:
    """Score request lines from ``inp`` concurrently, replying in request order.

    At most ``max_in_flight`` requests are pending; reading blocks beyond that.
    Returns the number of replies written.
    """
    n = 0
    pending: deque = deque()

    def emit(fut):
        nonlocal n
        out.write(fut.result() + "\n")
        out.flush()
        n += 1

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        for line in inp:
            if not line.strip():
                continue
            pending.append(pool.submit(score_request_line, line, dataset, weights))
            while pending and (len(pending) >= max_in_flight or pending[0].done()):
                emit(pending.popleft())
        while pending:
            emit(pending.popleft())
    return n


def _serve_tcp(dataset, weights, workers: int, addr: str) -> None:
    host, _, port = addr.rpartition(":")

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            rfile = (ln.decode("utf-8", errors="replace") for ln in self.rfile)

            class _Out:
                def __init__(self, w):
                    self.w = w

                def write(self, s):
                    self.w.write(s.encode("utf-8"))

                def flush(self):
                    self.w.flush()

            serve_stream(dataset, rfile, _Out(self.wfile), weights, workers)

    socketserver.ThreadingTCPServer.allow_reuse_address = True
    with socketserver.ThreadingTCPServer((host or "127.0.0.1", int(port)), Handler) as srv:
        print(f"serving on {srv.server_address[0]}:{srv.server_address[1]}", file=sys.stderr)
        srv.serve_forever()


def cmd_serve(args) -> int:
    dataset = _load_dataset(args.dataset)
    weights = _weights(args)
    if args.listen:
        _serve_tcp(dataset, weights, args.workers, args.listen)
    else:
        serve_stream(dataset, sys.stdin, sys.stdout, weights, args.workers)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="global seed (falls back to $E2W_SEED, then 0)")

    wts = argparse.ArgumentParser(add_help=False)
    for flag in ("--w-ans", "--w-ground", "--w-overlap", "--lambda-format", "--lambda-cvsr", "--d-max"):
        wts.add_argument(flag, type=float, default=None)
    wts.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="e2w", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write train/test JSONL datasets")
    g.add_argument("--tasks", default="e2w1,e2w2,e2w3")
    g.add_argument("--scale", type=float, default=0.01)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("score", parents=[common, wts], help="batch reward scoring")
    s.add_argument("--dataset", required=True)
    s.add_argument("--responses", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_score)

    e = sub.add_parser("eval", parents=[common, wts], help="benchmark report")
    e.add_argument("--dataset", required=True)
    e.add_argument("--responses", required=True)
    e.add_argument("--report", default=None)
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("grpo-demo", parents=[common], help="train the toy policy with GRPO")
    d.add_argument("--instances", type=int, default=16)
    d.add_argument("--steps", type=int, default=500)
    d.add_argument("--G", type=int, default=grpo.GrpoConfig.group_size)
    d.add_argument("--eps", type=float, default=grpo.GrpoConfig.clip_eps)
    d.add_argument("--beta", type=float, default=grpo.GrpoConfig.kl_beta)
    d.add_argument("--lr", type=float, default=grpo.GrpoConfig.learning_rate)
    d.add_argument("--sft-epochs", type=int, default=0)
    d.add_argument("--rich-candidates", action="store_true")
    d.add_argument("--out", default=None, help="CSV trace path (default: stdout)")
    d.set_defaults(func=cmd_grpo_demo)

    v = sub.add_parser("serve", parents=[common, wts], help="line-delimited JSON scoring service")
    v.add_argument("--dataset", required=True)
    v.add_argument("--listen", default=None, metavar="HOST:PORT")
    v.set_defaults(func=cmd_serve, workers=4)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except DataError as e:
        print(f"e2w: error: {e}", file=sys.stderr)
        return EXIT_DATA
    except GenerationError as e:
        print(f"e2w: generation failed: {e}", file=sys.stderr)
        return EXIT_GENERATION
    except ValueError as e:
        print(f"e2w: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
