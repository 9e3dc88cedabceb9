"""
Training the CNN
================

Trains on CMATERDB 3.3.1 when ``TGOCR_CMATERDB`` points at it, otherwise on a
generated set of 3000 synthetic glyphs with the same 2000/1000 split. Writes
the metrics CSV, a checkpoint and an SVG of the training curves.

    TGOCR_THREADS=1 python demos/04_train_cnn.py [epochs]
"""

import os
import sys
import tempfile
from pathlib import Path

from tgocr import TrainConfig, build_cnn, evaluate, load_checkpoint, load_dataset, train
from tgocr.checkpoint import atomic_write
from tgocr.plotting import read_metrics, render_svg
from tgocr.synthetic import write_dataset

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 10
out = Path(tempfile.mkdtemp(prefix="tgocr-"))

root = os.environ.get("TGOCR_CMATERDB")
if root is None:
    root = write_dataset(out / "synthetic", per_class=300, seed=0)
dataset = load_dataset(root)
print("train/test per class:", dataset.histogram)

# %%
config = TrainConfig(
    epochs=epochs,
    batch_size=128,
    seed=42,
    metrics_path=str(out / "metrics.csv"),
    checkpoint_path=str(out / "cnn.ckpt"),
)
model = build_cnn(config.seed)
train(model, dataset, config, on_epoch=lambda m: print(
    f"epoch {m.epoch:>3}  loss {m.train_loss:.4f}  train {m.train_acc:.3f}  test {m.test_acc:.3f}"
))

# %%
# The checkpoint reproduces the trained model exactly.
restored = load_checkpoint(config.checkpoint_path)
accuracy, confusion = evaluate(restored, dataset.test)
print(f"test accuracy: {100 * accuracy:.1f}")
print(confusion)

atomic_write(out / "curves.svg", render_svg(read_metrics(config.metrics_path)))
print("outputs in", out)
