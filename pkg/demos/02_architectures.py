"""
The two recognizers
===================

Layer-by-layer shapes and parameter counts of the MLP and the CNN.
"""

from tgocr.model import PAPER_MLP_PARAM_COUNT, build_cnn, build_mlp

for model in (build_mlp(0), build_cnn(0)):
    print(f"\n{model.architecture.upper()}")
    for kind, shape, count in model.summary():
        print(f"  {kind:<8} {str(shape):>14} {count:>9,}")
    print(f"  total {model.param_count():,}")

# The dense layers 1024-512-128-10 add up to 591,754 weights and biases;
# the published total is 9 lower.
print("\npublished MLP total:", f"{PAPER_MLP_PARAM_COUNT:,}")
