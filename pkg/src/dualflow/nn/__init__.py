from .tensor import Tensor, concat_cols, segment_max, segment_sum
from .layers import Linear, PointNetConv, GatLayer, message_edges
from .model import (GnnConfig, GnnModel, init, count_parameters,
                    parameter_table, save_checkpoint, load_checkpoint,
                    checkpoint_id)

__all__ = [
    "Tensor", "concat_cols", "segment_max", "segment_sum",
    "Linear", "PointNetConv", "GatLayer", "message_edges",
    "GnnConfig", "GnnModel", "init", "count_parameters", "parameter_table",
    "save_checkpoint", "load_checkpoint", "checkpoint_id",
]
