from .engine import Tape, Tensor, active_tape, backward, constant, tensor
from .gradcheck import finite_diff_check
from .optim import AdamState, adam_step
from . import ops

__all__ = [
    "Tape",
    "Tensor",
    "active_tape",
    "backward",
    "constant",
    "tensor",
    "finite_diff_check",
    "AdamState",
    "adam_step",
    "ops",
]
