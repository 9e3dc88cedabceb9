"""CMATERDB 3.3.1 loading: bitmap decoding, preprocessing, splitting, batching.

Two directory layouts are understood::

    <root>/<label 0..9>/*.bmp        one subdirectory per class
    <root>/<label>_<anything>.bmp    flat, label before the first underscore
"""
from __future__ import annotations

import logging
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DatasetError, DecodeError, UnsupportedFormatError

log = logging.getLogger(__name__)

IMAGE_SIZE = 32
NUM_CLASSES = 10
TRAIN_FRACTION = 2 / 3
EXPECTED_TOTAL = 3000

_FILE_HEADER = struct.Struct("<2sIHHI")
_INFO_HEADER = struct.Struct("<IiiHHIIiiII")


@dataclass
class RawImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8 RGB, top row first


@dataclass
class Sample:
    image: np.ndarray  # (1, 32, 32), values in [0, 1]
    label: int
    path: str = ""


@dataclass
class SplitDataset:
    train: list[Sample]
    test: list[Sample]
    warnings: list[str] = field(default_factory=list)

    @property
    def histogram(self) -> dict[str, list[int]]:
        def counts(samples):
            c = Counter(s.label for s in samples)
            return [c.get(k, 0) for k in range(NUM_CLASSES)]

        return {"train": counts(self.train), "test": counts(self.test)}


def decode_bitmap(data: bytes, name: str = "<bytes>") -> RawImage:
    """Decode an uncompressed 24-bit 32x32 Windows bitmap into RGB rows, top first."""
    if len(data) < _FILE_HEADER.size + _INFO_HEADER.size:
        raise DecodeError(f"{name}: truncated header ({len(data)} bytes)")
    magic, _, _, _, offset = _FILE_HEADER.unpack_from(data, 0)
    if magic != b"BM":
        raise DecodeError(f"{name}: not a Windows bitmap (magic {magic!r})")
    (hdr_size, width, height, _planes, bpp, compression, *_rest) = _INFO_HEADER.unpack_from(
        data, _FILE_HEADER.size
    )
    if hdr_size < _INFO_HEADER.size:
        raise UnsupportedFormatError(f"{name}: unsupported DIB header of {hdr_size} bytes")
    if bpp != 24:
        raise UnsupportedFormatError(f"{name}: {bpp} bits per pixel, only 24 is supported")
    if compression != 0:
        raise UnsupportedFormatError(f"{name}: compressed bitmap (method {compression})")
    top_down = height < 0
    height = abs(height)
    if (width, height) != (IMAGE_SIZE, IMAGE_SIZE):
        raise UnsupportedFormatError(
            f"{name}: image is {width}x{height}, expected {IMAGE_SIZE}x{IMAGE_SIZE}"
        )
    stride = (width * 3 + 3) & ~3
    end = offset + stride * height
    if end > len(data):
        raise DecodeError(f"{name}: truncated pixel data ({len(data)} of {end} bytes)")
    rows = np.frombuffer(data, dtype=np.uint8, count=stride * height, offset=offset)
    bgr = rows.reshape(height, stride)[:, : width * 3].reshape(height, width, 3)
    if not top_down:
        bgr = bgr[::-1]
    return RawImage(width, height, np.ascontiguousarray(bgr[..., ::-1]))


def encode_bitmap(rgb: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 RGB array as a bottom-up 24-bit bitmap."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    height, width, _ = rgb.shape
    stride = (width * 3 + 3) & ~3
    body = np.zeros((height, stride), dtype=np.uint8)
    body[:, : width * 3] = rgb[::-1, :, ::-1].reshape(height, width * 3)
    offset = _FILE_HEADER.size + _INFO_HEADER.size
    header = _FILE_HEADER.pack(b"BM", offset + body.size, 0, 0, offset)
    info = _INFO_HEADER.pack(_INFO_HEADER.size, width, height, 1, 24, 0, body.size, 2835, 2835, 0, 0)
    return header + info + body.tobytes()


def preprocess(raw: RawImage, dtype=np.float32) -> np.ndarray:
    """Grayscale (BT.601 luma, rounded half up), invert, scale to [0, 1].

    Returns a (1, 32, 32) tensor where the dark ink becomes bright foreground.
    """
    rgb = raw.pixels.astype(np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    gray = np.clip(np.floor(luma + 0.5), 0, 255)
    return ((255.0 - gray) / 255.0).astype(dtype)[None]


def load_image(path, dtype=np.float32) -> np.ndarray:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"{path}: unreadable ({exc})") from exc
    return preprocess(decode_bitmap(data, str(path)), dtype=dtype)


def _is_bmp(p: Path) -> bool:
    return p.is_file() and p.suffix.lower() == ".bmp"


def _discover(root: Path) -> dict[int, list[Path]]:
    by_class: dict[int, list[Path]] = {k: [] for k in range(NUM_CLASSES)}
    subdirs = [d for d in root.iterdir() if d.is_dir() and d.name.isdigit()]
    if subdirs:
        for d in subdirs:
            label = int(d.name)
            if label >= NUM_CLASSES:
                raise DatasetError(f"{d}: class directory outside 0..9")
            by_class[label].extend(p for p in d.iterdir() if _is_bmp(p))
    else:
        for p in root.iterdir():
            if not _is_bmp(p):
                continue
            prefix = p.name.split("_", 1)[0]
            if "_" not in p.name or not prefix.isdigit() or int(prefix) >= NUM_CLASSES:
                raise DatasetError(f"{p}: cannot derive a label from the file name")
            by_class[int(prefix)].append(p)
    for files in by_class.values():
        files.sort(key=lambda p: p.name)
    return by_class


def load_dataset(root, split_seed=None, dtype=np.float32) -> SplitDataset:
    """Load every bitmap under ``root`` and split each class 2/3 train, 1/3 test.

    Files are sorted by name within each class; the first two thirds go to the
    training split. With ``split_seed`` set, each class is permuted by that
    seed first. Counts that differ from 3000 images (300 per class) are
    reported as warnings and split proportionally.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"{root}: dataset directory does not exist")
    by_class = _discover(root)
    total = sum(len(v) for v in by_class.values())
    if total == 0:
        raise DatasetError(f"{root}: no .bmp images found")

    notes = []
    if total != EXPECTED_TOTAL:
        notes.append(f"found {total} images, expected {EXPECTED_TOTAL}; splitting proportionally")
    rng = np.random.default_rng(split_seed) if split_seed is not None else None
    train, test = [], []
    for label, files in by_class.items():
        if rng is not None:
            files = [files[i] for i in rng.permutation(len(files))]
        n_train = int(np.floor(len(files) * TRAIN_FRACTION + 0.5))
        for i, path in enumerate(files):
            sample = Sample(load_image(path, dtype=dtype), label, str(path))
            (train if i < n_train else test).append(sample)
    for note in notes:
        log.warning(note)
    return SplitDataset(train, test, notes)


def one_hot(label: int, num_classes: int = NUM_CLASSES, dtype=np.float32) -> np.ndarray:
    if not (isinstance(label, (int, np.integer)) and 0 <= label < num_classes):
        raise DataError(f"label {label!r} outside 0..{num_classes - 1}")
    out = np.zeros(num_classes, dtype=dtype)
    out[label] = 1.0
    return out


def one_hot_batch(labels, num_classes: int = NUM_CLASSES, dtype=np.float32) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DataError(f"labels must lie in 0..{num_classes - 1}")
    out = np.zeros((labels.size, num_classes), dtype=dtype)
    out[np.arange(labels.size), labels] = 1.0
    return out


def stack(samples) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(images (N, 1, 32, 32), labels (N,))`` for a list of samples."""
    if not samples:
        raise DataError("no samples to stack")
    x = np.stack([s.image for s in samples])
    y = np.array([s.label for s in samples], dtype=np.int64)
    return x, y


def batches(split, batch_size=128, epoch_seed=0, flat=False):
    """Yield shuffled ``(images, one-hot targets)`` mini-batches.

    ``split`` is a list of samples or an ``(images, labels)`` pair. The last
    partial batch is included. With ``flat=True`` images come as (batch, 1024).
    """
    if batch_size < 1:
        raise DataError("batch_size must be >= 1")
    x, y = stack(split) if not isinstance(split, tuple) else split
    order = np.random.default_rng(epoch_seed).permutation(len(y))
    for start in range(0, len(y), batch_size):
        idx = order[start : start + batch_size]
        xb = x[idx]
        if flat:
            xb = xb.reshape(len(idx), -1)
        yield xb, one_hot_batch(y[idx], dtype=x.dtype)
