"""
Dense tensors with tape-based reverse-mode differentiation.

Operations record onto the active `ComputationTape` of the current thread, and
only when at least one input requires gradients. Replaying the tape in reverse
recorded order is a valid topological order because every node is appended
after all of its inputs exist.
"""
import logging
import threading
from contextlib import contextmanager
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from errors import DimensionError, DomainError, PreconditionError, VocabularyError

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float64
LOG_EPS = 1e-12

_local = threading.local()


class RowGradient(NamedTuple):
    """Gradient that touches a single row of a 2-D table."""
    row: int
    values: np.ndarray


class Tensor:
    def __init__(self, values, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        if isinstance(values, np.ndarray) and dtype is None and values.dtype in (np.float32, np.float64):
            self.data = values
        else:
            self.data = np.asarray(values, dtype=dtype or DEFAULT_DTYPE)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    def _accumulate(self, grad):
        if isinstance(grad, RowGradient):
            if self.grad is None:
                self.grad = np.zeros_like(self.data)
            self.grad[grad.row] += grad.values
            return
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad += grad

    def __repr__(self):
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


class _Node(NamedTuple):
    inputs: tuple
    output: Tensor
    backward: Callable


def _tape_stack() -> list:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


def active_tape() -> Optional["ComputationTape"]:
    stack = _tape_stack()
    return stack[-1] if stack else None


class ComputationTape:
    def __init__(self):
        self.nodes: list[_Node] = []

    def __enter__(self) -> "ComputationTape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _tape_stack().pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def backward(self, loss: Tensor, upstream=None):
        """Seed `loss` with `upstream` (ones by default) and replay the tape backwards."""
        seed = np.ones_like(loss.data) if upstream is None else np.asarray(upstream, dtype=loss.dtype)
        loss._accumulate(seed)
        for node in reversed(self.nodes):
            grad = node.output.grad
            if grad is None:
                continue
            for inp, g in zip(node.inputs, node.backward(grad)):
                if g is not None and inp.requires_grad:
                    inp._accumulate(g)


@contextmanager
def no_tape():
    """Suspend recording on this thread."""
    stack = _tape_stack()
    stack.append(None)
    try:
        yield
    finally:
        stack.pop()


def _result(data: np.ndarray, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
    tape = active_tape()
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(np.asarray(data), requires_grad=track)
    if track:
        tape.nodes.append(_Node(tuple(inputs), out, backward))
    return out


def _same_shape(op: str, a: Tensor, b: Tensor):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def _log_guard(dtype) -> float:
    # 1 - 1e-12 rounds to 1 in float32
    return max(LOG_EPS, float(np.finfo(dtype).eps))


# ── Linear algebra ────────────────────────────────────────────────────────────

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """a[r×k] · b[k×c]; a may also be a vector of length k."""
    if b.data.ndim != 2 or a.data.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward(g):
        grad_a = g @ b.data.T
        grad_b = np.outer(a.data, g) if a.data.ndim == 1 else a.data.T @ g
        return grad_a, grad_b

    return _result(a.data @ b.data, (a, b), backward)


# ── Elementwise ───────────────────────────────────────────────────────────────

def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return _result(a.data + b.data, (a, b), lambda g: (g, g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    return _result(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def sigmoid(x: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _result(y, (x,), lambda g: (g * y * (1.0 - y),))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _result(y, (x,), lambda g: (g * (1.0 - y * y),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _result(x.data * mask, (x,), lambda g: (g * mask,))


def log(x: Tensor, eps: Optional[float] = None) -> Tensor:
    """Natural log; with `eps` computes log(x + eps) instead of rejecting non-positive input."""
    if eps is None:
        if np.any(x.data <= 0):
            raise DomainError("log: input has non-positive components")
        shifted = x.data
    else:
        shifted = x.data + eps
    return _result(np.log(shifted), (x,), lambda g: (g / shifted,))


def concat(tensors: Sequence[Tensor]) -> Tensor:
    if not tensors:
        raise PreconditionError("concat: no operands")
    trailing = tensors[0].shape[1:]
    for t in tensors:
        if t.data.ndim == 0 or t.shape[1:] != trailing:
            raise DimensionError(f"concat: incompatible shapes {[t.shape for t in tensors]}")
    bounds = np.cumsum([t.shape[0] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=0))

    return _result(np.concatenate([t.data for t in tensors], axis=0), tensors, backward)


_ELEMENTWISE = {
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "mul": mul,
    "add": add,
    "log": log,
}


def elementwise(op_kind: str, *operands, **kwargs) -> Tensor:
    if op_kind == "concat":
        return concat(operands)
    try:
        fn = _ELEMENTWISE[op_kind]
    except KeyError:
        raise PreconditionError(f"unknown elementwise op '{op_kind}'") from None
    return fn(*operands, **kwargs)


# ── Pooling, reversal, normalisation ──────────────────────────────────────────

def maxpool_vectors(vs: Sequence[Tensor]) -> Tensor:
    """Per-index max over equal-length vectors. Ties go to the lowest input position."""
    if not vs:
        raise PreconditionError("maxpool_vectors: empty list")
    shape = vs[0].shape
    if len(shape) != 1 or any(v.shape != shape for v in vs):
        raise DimensionError(f"maxpool_vectors: shapes {[v.shape for v in vs]} are not equal-length vectors")
    stacked = np.stack([v.data for v in vs])
    winners = np.argmax(stacked, axis=0)
    out = stacked[winners, np.arange(shape[0])]

    def backward(g):
        return tuple(g * (winners == j) for j in range(len(vs)))

    return _result(out, vs, backward)


def grad_reverse(x: Tensor, lam: float) -> Tensor:
    """Identity forward; multiplies the upstream gradient by -lam on the way back."""
    if not lam > 0:
        raise PreconditionError(f"grad_reverse: lambda must be positive, got {lam}")
    return _result(x.data.copy(), (x,), lambda g: (-lam * g,))


def softmax(x: Tensor) -> Tensor:
    if x.data.ndim != 1 or x.shape[0] < 1:
        raise PreconditionError(f"softmax: expected a non-empty vector, got shape {x.shape}")
    e = np.exp(x.data - np.max(x.data))
    s = e / e.sum()

    def backward(g):
        return (s * (g - np.dot(g, s)),)

    return _result(s, (x,), backward)


# ── Losses ────────────────────────────────────────────────────────────────────

def bce_loss(pred: Tensor, target) -> Tensor:
    """Mean binary cross entropy. The target is always treated as a constant."""
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=pred.dtype)
    if t.shape != pred.shape:
        raise DimensionError(f"bce_loss: pred {pred.shape} vs target {t.shape}")
    eps = _log_guard(pred.dtype)
    p = np.clip(pred.data, eps, 1.0 - eps)
    n = p.size
    value = -np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))

    def backward(g):
        return (g * (p - t) / (p * (1.0 - p)) / n,)

    return _result(np.asarray(value, dtype=pred.dtype), (pred,), backward)


def nll_loss(log_probs: Tensor, target_index: int) -> Tensor:
    n = log_probs.shape[0]
    if not 0 <= target_index < n:
        raise PreconditionError(f"nll_loss: target {target_index} outside [0, {n})")

    def backward(g):
        grad = np.zeros_like(log_probs.data)
        grad[target_index] = -g
        return (grad,)

    return _result(-log_probs.data[target_index], (log_probs,), backward)


# ── Plumbing ──────────────────────────────────────────────────────────────────

def rows(table: Tensor, index: int) -> Tensor:
    """Row lookup; the backward pass touches only that row of the table's gradient."""
    if not 0 <= index < table.shape[0]:
        raise VocabularyError(f"id {index} outside table of {table.shape[0]} rows")
    return _result(table.data[index].copy(), (table,), lambda g: (RowGradient(index, g),))


def slice_vector(x: Tensor, start: int, stop: int) -> Tensor:
    def backward(g):
        grad = np.zeros_like(x.data)
        grad[start:stop] = g
        return (grad,)

    return _result(x.data[start:stop].copy(), (x,), backward)


def scale(x: Tensor, c: float) -> Tensor:
    return _result(x.data * c, (x,), lambda g: (g * c,))


def add_all(scalars: Sequence[Tensor]) -> Tensor:
    if not scalars:
        raise PreconditionError("add_all: nothing to add")
    total = scalars[0].data.copy()
    for s in scalars[1:]:
        total = total + s.data
    return _result(total, scalars, lambda g: tuple(g for _ in scalars))


def numerical_gradient(fn: Callable[[], float], tensor: Tensor, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the scalar `fn()` with respect to `tensor.data`."""
    grad = np.zeros_like(tensor.data)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    with no_tape():
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            upper = fn()
            flat[i] = orig - h
            lower = fn()
            flat[i] = orig
            out[i] = (upper - lower) / (2 * h)
    return grad
