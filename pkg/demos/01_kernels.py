"""
Convolution, pooling and gradient checks
========================================

The kernels under every layer, checked against loops and finite differences.
"""

import numpy as np

from tgocr import tensor as T
from tgocr.gradcheck import gradcheck
from tgocr.model import build_small_cnn, build_small_mlp

# %%
# Valid cross-correlation: a 2x2 all-ones kernel sums each window.
x = np.arange(1.0, 10.0).reshape(1, 3, 3)
print(T.conv2d_valid(x, np.ones((1, 1, 2, 2)), np.zeros(1))[0])

# %%
# The first CNN layer maps a 32x32 digit to 30 feature maps of 28x28.
rng = np.random.default_rng(0)
maps = T.conv2d_valid(rng.random((1, 32, 32)), rng.normal(size=(30, 1, 5, 5)), np.zeros(30))
print(maps.shape)

# %%
# Max pooling remembers which element of each 2x2 window won, and the
# backward pass sends the gradient only there.
window = np.array([[[1.0, 2.0], [3.0, 4.0]]])
pooled, argmax = T.maxpool2x2(window)
print(pooled.ravel(), T.maxpool2x2_backward(argmax, np.array([[[5.0]]]))[0])

# %%
# Whole-model gradient check on down-scaled networks (8x8 inputs), 64-bit.
for builder in (build_small_cnn, build_small_mlp):
    report = gradcheck(builder, tolerance=1e-4)
    print(builder.__name__)
    for line in report.lines():
        print("  ", line)
