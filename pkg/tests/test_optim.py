import numpy as np
import pytest

from engine import Adam, AdamState, Tensor, adam_step
from errors import DimensionError, NumericError, PreconditionError


def test_zero_gradient_leaves_dense_parameters_and_counts_step():
    param = np.array([1.0, -2.0, 3.0])
    state = AdamState.zeros_like(param)
    adam_step(param, np.zeros(3), state)
    np.testing.assert_array_equal(param, [1.0, -2.0, 3.0])
    assert state.t == 1


def test_first_step_moves_by_learning_rate():
    param = np.array(0.0)
    state = AdamState.zeros_like(param, learning_rate=0.1)
    adam_step(param, np.array(1.0), state)
    assert float(param) == pytest.approx(-0.1, rel=1e-6)


def test_sparse_step_touches_only_rows_with_gradient():
    rng = np.random.default_rng(0)
    param = rng.standard_normal((5, 3))
    state = AdamState.zeros_like(param, learning_rate=0.1)
    # give every row some history first
    adam_step(param, rng.standard_normal((5, 3)), state, sparse=True)
    before, m_before, v_before = param.copy(), state.m.copy(), state.v.copy()

    grad = np.zeros((5, 3))
    grad[3] = [0.5, -1.0, 2.0]
    adam_step(param, grad, state, sparse=True)

    untouched = [0, 1, 2, 4]
    assert param[untouched].tobytes() == before[untouched].tobytes()
    assert state.m[untouched].tobytes() == m_before[untouched].tobytes()
    assert state.v[untouched].tobytes() == v_before[untouched].tobytes()
    assert not np.array_equal(param[3], before[3])


def test_non_finite_gradient_names_parameter():
    param = np.zeros(2)
    with pytest.raises(NumericError, match="encoder.w_h"):
        adam_step(param, np.array([np.nan, 0.0]), AdamState.zeros_like(param), name="encoder.w_h")


def test_state_validation():
    with pytest.raises(DimensionError):
        AdamState(np.zeros(2), np.zeros(3))
    with pytest.raises(PreconditionError):
        AdamState(np.zeros(2), np.zeros(2), beta1=1.0)
    with pytest.raises(DimensionError):
        adam_step(np.zeros(2), np.zeros(3), AdamState.zeros_like(np.zeros(2)))


def test_optimizer_skips_parameters_without_gradient():
    a = Tensor(np.ones(2), requires_grad=True, name="a")
    b = Tensor(np.ones(2), requires_grad=True, name="b")
    opt = Adam({"a": a, "b": b}, lr=0.5)
    a.grad = np.array([1.0, -1.0])
    opt.step()
    np.testing.assert_allclose(a.data, [0.5, 1.5])
    np.testing.assert_array_equal(b.data, [1.0, 1.0])
    assert opt.states["b"].t == 0
    opt.zero_grad()
    assert a.grad is None
