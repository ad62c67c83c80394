import logging
from dataclasses import dataclass

import numpy as np

from engine.tensor import Tensor
from errors import DimensionError, NumericError, PreconditionError

logger = logging.getLogger(__name__)

# PyTorch defaults
DEFAULT_LR = 0.001
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    learning_rate: float = DEFAULT_LR
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.m.shape != self.v.shape:
            raise DimensionError(f"AdamState: moments {self.m.shape} vs {self.v.shape}")
        if self.t < 0 or not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise PreconditionError("AdamState: need t >= 0 and betas in [0, 1)")

    @classmethod
    def zeros_like(cls, param: np.ndarray, **hyper) -> "AdamState":
        return cls(np.zeros_like(param), np.zeros_like(param), **hyper)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, sparse: bool = False,
              name: str = "parameter"):
    """
    One bias-corrected Adam update of `param` in place.

    With `sparse`, only rows whose gradient is nonzero are touched: their moments
    decay and update, every other row keeps its parameters and its stale moments
    (lazy update, no catch-up decay).
    """
    if grad.shape != param.shape or state.m.shape != param.shape:
        raise DimensionError(f"adam_step: {name} is {param.shape}, grad {grad.shape}, moments {state.m.shape}")
    if not np.all(np.isfinite(grad)):
        raise NumericError(f"non-finite gradient in parameter '{name}'")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t

    if sparse and param.ndim >= 1:
        flat_rows = grad.reshape(grad.shape[0], -1)
        touched = np.flatnonzero(np.any(flat_rows != 0, axis=1))
        if touched.size == 0:
            return param, state
        g = grad[touched]
        m = b1 * state.m[touched] + (1.0 - b1) * g
        v = b2 * state.v[touched] + (1.0 - b2) * (g * g)
        state.m[touched] = m
        state.v[touched] = v
        param[touched] -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
        return param, state

    state.m *= b1
    state.m += (1.0 - b1) * grad
    state.v *= b2
    state.v += (1.0 - b2) * (grad * grad)
    param -= state.learning_rate * (state.m / bc1) / (np.sqrt(state.v / bc2) + state.epsilon)
    return param, state


class Adam:
    """Adam over a dict of named tensors; parameters without a gradient are skipped."""

    def __init__(self, params: dict[str, Tensor], lr: float = DEFAULT_LR, beta1: float = DEFAULT_BETA1,
                 beta2: float = DEFAULT_BETA2, epsilon: float = DEFAULT_EPSILON, sparse: bool = False):
        self.params = dict(params)
        self.sparse = sparse
        self.states = {
            name: AdamState.zeros_like(p.data, learning_rate=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
            for name, p in self.params.items()
        }

    def step(self):
        for name, p in self.params.items():
            if p.grad is None:
                continue
            adam_step(p.data, p.grad, self.states[name], sparse=self.sparse, name=name)

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None
