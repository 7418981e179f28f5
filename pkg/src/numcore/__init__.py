from . import tensor as ops
from .checkpoint import checkpoint_io, load_checkpoint, read_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, check_gradients, numerical_gradient
from .layers import LSTM, MLP, Linear, lstm_step, mean_pool, pairwise_distance
from .optim import AdamW, adamw_update
from .params import ParameterStore, evaluate_and_grad, glorot
from .tensor import Tensor, no_grad

__all__ = [
    "AdamW",
    "GradCheckReport",
    "LSTM",
    "Linear",
    "MLP",
    "ParameterStore",
    "Tensor",
    "adamw_update",
    "check_gradients",
    "checkpoint_io",
    "evaluate_and_grad",
    "glorot",
    "load_checkpoint",
    "lstm_step",
    "mean_pool",
    "no_grad",
    "numerical_gradient",
    "ops",
    "pairwise_distance",
    "read_checkpoint",
    "save_checkpoint",
]
