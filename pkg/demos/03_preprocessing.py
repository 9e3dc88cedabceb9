"""
From bitmap to input tensor
===========================

Decode a 24-bit bitmap, convert to gray, invert, and scale to [0, 1].
"""

import numpy as np

from tgocr.data import decode_bitmap, encode_bitmap, preprocess
from tgocr.synthetic import render_glyph

# %%
# A synthetic glyph of the digit seven, dark ink on white, saved as a bitmap.
rgb = render_glyph(7, np.random.default_rng(3))
blob = encode_bitmap(rgb)
print(len(blob), "bytes")

# %%
# After preprocessing the ink is bright and the background is zero.
image = preprocess(decode_bitmap(blob))
print(image.shape, image.min(), image.max())
for row in image[0, ::2]:
    print("".join(" .:-=+*#%@"[int(v * 9.99)] for v in row))
