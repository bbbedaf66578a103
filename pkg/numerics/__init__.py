"""This package contains the dense-tensor engine the captioning network is built on.

    -- <tensor.py>:      the Tensor class, the recording tape, and reverse-mode <backward>.
    -- <functional.py>:  composite operations with fused gradients (softmax, layer_norm, cross-entropy, ...).
    -- <optim.py>:       the Adam optimizer and its configuration.
    -- <rng.py>:         the seeded counter-based random generator used for every draw.
"""
from .tensor import Tensor, backward, no_grad, concatenate
from .rng import Rng, as_rng
from .optim import OptimizerConfig, Adam
from . import functional
