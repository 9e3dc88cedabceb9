"""From-scratch MLP and CNN recognizers for handwritten Arabic-Indic digits."""
from .checkpoint import load_checkpoint, save_checkpoint
from .data import Sample, SplitDataset, batches, decode_bitmap, load_dataset, one_hot, preprocess
from .gradcheck import gradcheck
from .model import (
    EpochMetrics,
    SequentialModel,
    TrainConfig,
    build_cnn,
    build_mlp,
    build_small_cnn,
    build_small_mlp,
    evaluate,
    train,
)
from .optim import AdadeltaConfig, adadelta_step, softmax_cross_entropy

__version__ = "0.1.0"
