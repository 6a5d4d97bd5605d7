from .layers import (
    BatchNorm1d,
    Conv1d,
    Flatten,
    Layer,
    Linear,
    MaxPool1d,
    Parameter,
    ReLU,
    ResBlock,
    Sequential,
)
from .gradcheck import check_layer, max_rel_error, numeric_grad
from .loss import softmax, softmax_cross_entropy
from .model import (
    FlopsReport,
    FlopsRow,
    SyncModel,
    build_sync_model,
    count_flops,
    count_params,
    flops_report,
    param_count,
    head_classes,
    load_model,
    save_model,
    two_stage_flops,
)
from .optim import AdamW
from .io import WeightsFormatError, load_tensors, save_tensors, split_metadata

__all__ = [
    "AdamW",
    "BatchNorm1d",
    "Conv1d",
    "Flatten",
    "FlopsReport",
    "FlopsRow",
    "Layer",
    "Linear",
    "MaxPool1d",
    "Parameter",
    "ReLU",
    "ResBlock",
    "Sequential",
    "SyncModel",
    "WeightsFormatError",
    "build_sync_model",
    "check_layer",
    "count_flops",
    "count_params",
    "param_count",
    "max_rel_error",
    "numeric_grad",
    "flops_report",
    "head_classes",
    "load_model",
    "load_tensors",
    "save_model",
    "save_tensors",
    "softmax",
    "softmax_cross_entropy",
    "split_metadata",
    "two_stage_flops",
]
