"""Минимальное ядро нейросетей на numpy: слои, плоские параметры, Adam."""

from common.nn.gradcheck import GradCheckReport, grad_check
from common.nn.layers import (
    GruCache,
    elu_backward,
    elu_forward,
    gru_backward,
    gru_forward,
    gru_shapes,
    gru_step_forward,
    linear_backward,
    linear_forward,
    relu_backward,
    relu_forward,
    sigmoid,
)
from common.nn.optim import AdamState, adam_update, clip_grad_norm
from common.nn.params import ParamLayout, ParamVector, check_same_layout, flatten_grads

__all__ = [
    "AdamState",
    "GradCheckReport",
    "GruCache",
    "ParamLayout",
    "ParamVector",
    "adam_update",
    "check_same_layout",
    "clip_grad_norm",
    "elu_backward",
    "elu_forward",
    "flatten_grads",
    "grad_check",
    "gru_backward",
    "gru_forward",
    "gru_shapes",
    "gru_step_forward",
    "linear_backward",
    "linear_forward",
    "relu_backward",
    "relu_forward",
    "sigmoid",
]
