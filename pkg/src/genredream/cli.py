"""Command-line entry point: ``genredream {train,eval,dream,inspect}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import audio
from .checkpoint import checkpoint_load, checkpoint_save
from .dataset import file_clips, ingest
from .dreamer import DreamConfig, dream, parse_layers
from .errors import GenreDreamError
from .genre_net import init_parameters
from .trainer import TrainConfig, evaluate, train

logger = logging.getLogger("genredream")


def epoch_log_path(checkpoint: Path) -> Path:
    return checkpoint.with_name(checkpoint.name + ".epochs.csv")


def cmd_train(args) -> int:
    data = ingest(args.manifest)
    print(data.summary(), file=sys.stderr)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        momentum=args.momentum,
        shuffle_seed=args.seed,
    )
    net, state = train(init_parameters(args.seed), data.clips, data.labels, cfg)
    out = Path(args.out)
    checkpoint_save(net, out)
    epoch_log_path(out).write_text(state.log_csv(), encoding="utf-8")
    print(f"wrote {out} and {epoch_log_path(out)}")
    return 0


def cmd_eval(args) -> int:
    net = checkpoint_load(args.model)
    data = ingest(args.manifest)
    report = evaluate(net, data.clips, data.labels)
    print(report.format())
    print(report.to_json())
    return 0


def cmd_dream(args) -> int:
    net = checkpoint_load(args.model)
    clips = file_clips(args.input)
    if not clips:
        raise GenreDreamError(f"{args.input} is shorter than one {audio.CLIP_SECONDS}-second clip")
    if len(clips) > 1:
        print(f"{args.input} holds {len(clips)} clips; processing the first only", file=sys.stderr)
    cfg = DreamConfig(
        layers=parse_layers(args.layers),
        steps=args.steps,
        step_size=args.step_size,
        normalize_gradient=not args.no_grad_norm,
    )
    result, trace = dream(net, clips[0], cfg)
    audio.write_wav(args.output, audio.clip_to_wave(result))
    if args.trace:
        Path(args.trace).write_text(trace.to_csv(), encoding="utf-8")
    first, last = trace.objective_per_step[0], trace.objective_per_step[-1]
    print(f"objective {first:.6g} -> {last:.6g}; wrote {args.output}")
    return 0


def cmd_inspect(args) -> int:
    net = checkpoint_load(args.model)
    a = net.arch
    print(f"input length: {a.input_length}")
    for i, (k, frames) in enumerate(zip(a.kernels, a.frames()), start=1):
        print(f"conv{i}: {a.channels} filters x {a.in_channels(i - 1)} ch, kernel {k}, stride {a.stride} -> {frames} frames")
    print(f"dense: {a.dense_in} -> {a.n_classes}")
    for name, t in net.state().items():
        print(f"  {name:<18} {list(t.shape)}")
    print(f"trainable parameters: {net.num_parameters()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genredream", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint path; the epoch log goes next to it")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="per-genre accuracy of a checkpoint")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dream", help="modify the first clip of a WAV by gradient ascent")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--layers", default="all", help="'all' or a comma list such as 1,3")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--step-size", type=float, default=0.01)
    p.add_argument("--no-grad-norm", action="store_true")
    p.add_argument("--trace", help="write step,objective CSV here")
    p.set_defaults(func=cmd_dream)

    p = sub.add_parser("inspect", help="print architecture and parameter counts")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (GenreDreamError, OSError) as exc:
        print(f"genredream {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
