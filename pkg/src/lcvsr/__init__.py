"""Video super-resolution with dynamic local filters applied through locally-connected layers."""

from lcvsr.model import ModelConfig, init_params, lcvsr_forward
from lcvsr.tensor import Tensor, backward, no_grad

__all__ = ["ModelConfig", "Tensor", "backward", "init_params", "lcvsr_forward", "no_grad"]
__version__ = "0.1.0"
