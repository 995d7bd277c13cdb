import copy

import numpy as np
import pytest

from charlm.optim import AdamState, adam_step, clip_global_norm, global_norm


def test_zero_gradient_is_noop():
    params = {"w": np.array([1.0, -2.0])}
    state = AdamState.fresh(params)
    adam_step(params, {"w": np.zeros(2)}, state)
    assert params["w"].tolist() == [1.0, -2.0]
    assert state.t == 1


def test_first_step_magnitude():
    params = {"w": np.array([0.0])}
    state = AdamState.fresh(params)
    adam_step(params, {"w": np.array([1.0])}, state)
    expected = -1e-3 / (1 + 1e-8)
    assert params["w"][0] == pytest.approx(expected, abs=1e-15)
    assert abs(params["w"][0] + 1e-3) < 1e-6


@pytest.mark.parametrize("scale", [1e-6, 1.0, 1e6])
def test_first_step_bounded_by_lr(scale):
    rng = np.random.default_rng(0)
    params = {"w": np.zeros(50)}
    state = AdamState.fresh(params, lr=0.01)
    adam_step(params, {"w": rng.normal(size=50) * scale}, state)
    assert np.abs(params["w"]).max() <= 0.01 * (1 + 1e-9)


def test_quadratic_decreases_monotonically():
    params = {"theta": np.array([1.0])}
    state = AdamState.fresh(params, lr=0.05)
    f = [1.0]
    for _ in range(10):
        adam_step(params, {"theta": 2 * params["theta"]}, state)
        f.append(float(params["theta"][0] ** 2))
    assert all(b < a for a, b in zip(f, f[1:]))


def test_betas_zero_reduce_to_sign_scaling():
    g = np.array([3.0, -0.5, 1e-3])
    params = {"w": np.zeros(3)}
    state = AdamState.fresh(params, lr=0.1, beta1=0.0, beta2=0.0)
    adam_step(params, {"w": g}, state)
    np.testing.assert_allclose(params["w"], -0.1 * g / (np.abs(g) + 1e-8), rtol=1e-14)


def test_update_formula_against_hand_computation():
    params = {"w": np.array([0.5])}
    state = AdamState.fresh(params, lr=0.01)
    grads = [0.2, -0.1, 0.4]
    m = v = 0.0
    w = 0.5
    for t, g in enumerate(grads, 1):
        adam_step(params, {"w": np.array([g])}, state)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        w -= 0.01 * (m / (1 - 0.9**t)) / ((v / (1 - 0.999**t)) ** 0.5 + 1e-8)
    assert params["w"][0] == pytest.approx(w, abs=1e-15)
    assert np.all(state.v["w"] >= 0)


def test_state_copy_gives_identical_trajectory():
    rng = np.random.default_rng(1)
    grads = [rng.normal(size=4) for _ in range(10)]
    params = {"w": np.ones(4)}
    state = AdamState.fresh(params)
    for g in grads[:5]:
        adam_step(params, {"w": g}, state)
    p2, s2 = copy.deepcopy(params), copy.deepcopy(state)
    for g in grads[5:]:
        adam_step(params, {"w": g}, state)
        adam_step(p2, {"w": g}, s2)
    assert params["w"].tobytes() == p2["w"].tobytes()


def test_shape_mismatch():
    params = {"w": np.zeros(3)}
    with pytest.raises(ValueError, match="shape mismatch for 'w'"):
        adam_step(params, {"w": np.zeros(4)}, AdamState.fresh(params))


def test_non_finite_gradient_named():
    params = {"a": np.zeros(2), "b": np.zeros(2)}
    state = AdamState.fresh(params)
    with pytest.raises(FloatingPointError, match="'b'"):
        adam_step(params, {"a": np.ones(2), "b": np.array([1.0, np.nan])}, state)
    assert state.t == 0 and params["a"].tolist() == [0.0, 0.0]


def test_clip_global_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_global_norm(grads, 1.0) == pytest.approx(5.0)
    assert global_norm(grads) == pytest.approx(1.0, rel=1e-9)
    small = {"a": np.array([0.1])}
    clip_global_norm(small, 1.0)
    assert small["a"][0] == 0.1
