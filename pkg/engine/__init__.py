from engine.tensor import (
    ComputationTape,
    Tensor,
    active_tape,
    add,
    add_all,
    bce_loss,
    concat,
    elementwise,
    grad_reverse,
    log,
    matmul,
    maxpool_vectors,
    mul,
    nll_loss,
    no_tape,
    numerical_gradient,
    relu,
    rows,
    scale,
    sigmoid,
    slice_vector,
    softmax,
    tanh,
)
from engine.optim import Adam, AdamState, adam_step
