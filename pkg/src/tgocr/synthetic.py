"""Synthetic stand-in for CMATERDB: jittered stroke glyphs written as 24-bit bitmaps.

Each class is a fixed set of strokes loosely shaped like the Arabic-Indic
digit of that index. Samples differ by translation, scale, stroke width and
per-point jitter. Ink is dark on a white background, as in the real scans.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import IMAGE_SIZE, encode_bitmap

# strokes in a unit box, (x, y) with y pointing down
GLYPHS = {
    0: [[(0.45, 0.45), (0.55, 0.45), (0.55, 0.55), (0.45, 0.55), (0.45, 0.45)]],
    1: [[(0.5, 0.15), (0.5, 0.85)]],
    2: [[(0.3, 0.2), (0.5, 0.3), (0.7, 0.2)], [(0.5, 0.3), (0.5, 0.85)]],
    3: [[(0.25, 0.2), (0.38, 0.3), (0.5, 0.2), (0.62, 0.3), (0.75, 0.2)], [(0.5, 0.25), (0.5, 0.85)]],
    4: [[(0.65, 0.15), (0.35, 0.35), (0.6, 0.5), (0.35, 0.65), (0.65, 0.85)]],
    5: [[(0.5, 0.2), (0.75, 0.5), (0.5, 0.85), (0.25, 0.5), (0.5, 0.2)]],
    6: [[(0.3, 0.2), (0.7, 0.2), (0.7, 0.85)]],
    7: [[(0.25, 0.2), (0.5, 0.85), (0.75, 0.2)]],
    8: [[(0.25, 0.85), (0.5, 0.2), (0.75, 0.85)]],
    9: [[(0.5, 0.85), (0.5, 0.3)], [(0.5, 0.3), (0.35, 0.2), (0.45, 0.1), (0.6, 0.2), (0.5, 0.3)]],
}


def render_glyph(label: int, rng: np.random.Generator) -> np.ndarray:
    """Return a (32, 32, 3) uint8 RGB image of one jittered glyph."""
    size = IMAGE_SIZE
    scale = rng.uniform(0.8, 1.05) * size
    offset = rng.uniform(-2.5, 2.5, size=2) + (size - scale) / 2
    radius = rng.uniform(1.0, 1.9)
    yy, xx = np.mgrid[0:size, 0:size]
    ink = np.zeros((size, size))
    for stroke in GLYPHS[label]:
        pts = np.array(stroke) * scale + offset + rng.normal(0, 0.6, size=(len(stroke), 2))
        for (xa, ya), (xb, yb) in zip(pts[:-1], pts[1:]):
            n = max(2, int(np.hypot(xb - xa, yb - ya) * 2))
            for t in np.linspace(0, 1, n):
                cx, cy = xa + t * (xb - xa), ya + t * (yb - ya)
                d2 = (xx - cx) ** 2 + (yy - cy) ** 2
                ink = np.maximum(ink, np.clip(radius + 0.5 - np.sqrt(d2), 0, 1))
    gray = 255.0 * (1.0 - ink) - rng.uniform(0, 12, size=ink.shape) * (ink > 0)
    gray = np.clip(gray, 0, 255)
    rgb = np.stack([gray, gray, gray], axis=-1)
    return np.rint(rgb).astype(np.uint8)


def write_dataset(root, per_class=30, seed=0, layout="dirs") -> Path:
    """Write ``10 * per_class`` bitmaps under ``root``.

    ``layout="dirs"`` gives ``root/<label>/<label>_<i>.bmp``; ``layout="flat"``
    puts every ``<label>_<i>.bmp`` directly in ``root``.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    for label in range(10):
        folder = root / str(label) if layout == "dirs" else root
        folder.mkdir(parents=True, exist_ok=True)
        for i in range(per_class):
            (folder / f"{label}_{i:04d}.bmp").write_bytes(encode_bitmap(render_glyph(label, rng)))
    return root
