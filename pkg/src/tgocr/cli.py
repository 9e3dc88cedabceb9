"""Command-line front end: ``tgocr {train,eval,predict,inspect,gradcheck,plot}``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import data as D
from .checkpoint import atomic_write, load_checkpoint
from .errors import TgocrError
from .gradcheck import gradcheck
from .model import (
    MLP_PARAM_COUNT,
    PAPER_MLP_PARAM_COUNT,
    TrainConfig,
    build_model,
    build_small_cnn,
    build_small_mlp,
    evaluate,
    train,
)
from .optim import AdadeltaConfig
from .plotting import read_metrics, render_svg
from .tensor import configure_threads


def _fmt_shape(shape):
    return "x".join(str(d) for d in shape)


def cmd_train(args) -> int:
    dataset = D.load_dataset(args.data)
    model = build_model(args.model, seed=args.seed)
    config = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        adadelta=AdadeltaConfig(args.lr, args.rho, args.eps),
        metrics_path=args.metrics or f"{args.model}_metrics.csv",
        checkpoint_path=args.out or f"{args.model}.ckpt",
        checkpoint_every=args.checkpoint_every,
    )
    history = train(model, dataset, config)
    last = history[-1]
    print(f"final: train={last.train_acc:.4f} test={last.test_acc:.4f}")
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    dataset = D.load_dataset(args.data)
    samples = dataset.test if args.split == "test" else dataset.train
    accuracy, confusion = evaluate(model, samples)
    print(f"accuracy: {100 * accuracy:.1f}")
    for row in confusion:
        print(",".join(str(int(v)) for v in row))
    return 0


def cmd_predict(args) -> int:
    model = load_checkpoint(args.checkpoint)
    image = D.load_image(args.image, dtype=model.dtype)
    probs = model.forward(image[None])[0]
    best = int(np.argmax(probs))
    print(f"predicted: {best}")
    for k, p in enumerate(probs):
        print(f"{k}: {p:.9f}{' *' if k == best else ''}")
    return 0


def cmd_inspect(args) -> int:
    model = load_checkpoint(args.checkpoint) if args.checkpoint else build_model(args.model)
    print(f"architecture: {model.architecture}")
    print(f"{'#':>2}  {'layer':<8} {'output':>10} {'params':>9}")
    for i, (kind, shape, count) in enumerate(model.summary()):
        print(f"{i:>2}  {kind:<8} {_fmt_shape(shape):>10} {count:>9,}")
    total = model.param_count()
    print(f"total parameters: {total:,}")
    if model.architecture == "mlp" and total == MLP_PARAM_COUNT:
        print(
            f"note: the published MLP total is {PAPER_MLP_PARAM_COUNT:,}; "
            f"its own layer sizes 1024-512-128-10 give {MLP_PARAM_COUNT:,}"
        )
    return 0


def cmd_gradcheck(args) -> int:
    builder = build_small_cnn if args.model == "cnn" else build_small_mlp
    report = gradcheck(builder, tolerance=args.tolerance, batch=args.batch, seed=args.seed)
    for line in report.lines():
        print(line)
    print(f"{'PASS' if report.passed else 'FAIL'}: max rel err {report.max_error:.3e} (tol {args.tolerance:g})")
    return 0 if report.passed else 1


def cmd_plot(args) -> int:
    metrics = read_metrics(args.metrics)
    atomic_write(args.out, render_svg(metrics))
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tgocr", description="Handwritten Arabic digit OCR (MLP / CNN).")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every epoch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model on a dataset directory")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True, choices=["mlp", "cnn"])
    p.add_argument("--epochs", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.95)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--out", help="checkpoint file (default <model>.ckpt)")
    p.add_argument("--metrics", help="metrics CSV (default <model>_metrics.csv)")
    p.add_argument("--checkpoint-every", type=int, default=50)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy and confusion matrix of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=["test", "train"], default="test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify one 32x32 bitmap")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="per-layer shapes and parameter counts")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--model", choices=["mlp", "cnn"])
    g.add_argument("--checkpoint")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("gradcheck", help="finite-difference check of a down-scaled model")
    p.add_argument("--model", choices=["mlp", "cnn"], default="cnn")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("plot", help="render a metrics CSV as SVG")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    limiter = configure_threads()
    try:
        return args.func(args)
    except (TgocrError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        if limiter is not None:
            limiter.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
