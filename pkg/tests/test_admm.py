import math

import numpy as np
import pytest

from rdpadmm.admm import (
    CONSTANT,
    INVERSE_EPOCH,
    INVERSE_SQRT,
    AdmmParams,
    AdmmState,
    admm_step,
    soft_threshold,
    step_size,
    x_update,
)


def test_soft_threshold_values():
    w = np.array([-3.0, -0.5, 0.0, 0.2, 2.0])
    assert np.allclose(soft_threshold(w, 1.0), [-2.0, 0.0, 0.0, 0.0, 1.0])
    assert np.array_equal(soft_threshold(w, 0.0), w)


@pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
def test_soft_threshold_is_prox_of_l1(t, rng):
    # S_t(w) minimises t|u|_1 + |u - w|^2/2; compare against a dense grid per coordinate
    grid = np.linspace(-5, 5, 200001)
    for w in rng.uniform(-4, 4, size=20):
        u = grid[np.argmin(t * np.abs(grid) + 0.5 * (grid - w) ** 2)]
        assert soft_threshold(np.array([w]), t)[0] == pytest.approx(u, abs=1e-4)


@pytest.mark.parametrize("t", [0.01, 0.1, 1.0])
def test_soft_threshold_order_relation(t, rng):
    w = rng.normal(size=(2000, 5))
    v = w + rng.normal(size=(2000, 5)) * rng.choice([1e-3, 0.1, 1.0], size=(2000, 1))
    d_in = w - v
    d_out = soft_threshold(w, t) - soft_threshold(v, t)
    ulp = 4 * np.finfo(float).eps * np.maximum(np.maximum(np.abs(w), np.abs(v)), t)
    assert np.all(np.abs(d_out) <= np.abs(d_in) + ulp)
    assert np.all((np.abs(d_out) <= ulp) | (np.sign(d_out) == np.sign(d_in)))


def test_step_schedules():
    p = AdmmParams(0.25, 0.0, eta0=2.0, schedule=INVERSE_EPOCH, epoch_length=10)
    assert [step_size(p, k) for k in (0, 9, 10, 19, 20)] == [2.0, 2.0, 1.0, 1.0, 2.0 / 3]
    p = AdmmParams(0.25, 0.0, eta0=2.0, schedule=INVERSE_SQRT)
    assert step_size(p, 3) == pytest.approx(1.0)
    p = AdmmParams(0.25, 0.0, eta0=2.0, schedule=CONSTANT)
    assert step_size(p, 1000) == 2.0


def test_params_validation():
    with pytest.raises(ValueError):
        AdmmParams(0.0, 0.1)
    with pytest.raises(ValueError):
        AdmmParams(1.0, -0.1)
    with pytest.raises(ValueError):
        AdmmParams(1.0, 0.1, schedule="cosine")


def test_x_update_minimises_linearised_subproblem(rng):
    # x' = argmin g.x + y.(x - z) + rho/2 |x - z|^2 + |x - x_k|^2 / (2 eta)
    p = 4
    st = AdmmState(rng.normal(size=p), rng.normal(size=p), rng.normal(size=p), k=3)
    params = AdmmParams(0.7, 0.1, eta0=0.9, schedule=INVERSE_SQRT)
    g = rng.normal(size=p)
    eta = 0.9 / 2.0
    x = x_update(st, g, params)
    residual = g + st.y + 0.7 * (x - st.z) + (x - st.x) / eta
    assert np.allclose(residual, 0.0, atol=1e-12)


def test_fixed_point_of_lasso_problem():
    # with g = grad at the optimum, (x*, x*, -g) is a fixed point of the iteration
    x_star = np.array([1.5, 0.0, -0.5])
    lam = 0.2
    g = -lam * np.array([1.0, 0.3, -1.0])  # -g in lam * subdifferential of |.|_1 at x*
    state = AdmmState(x_star.copy(), x_star.copy(), -g, k=0)
    params = AdmmParams(0.5, lam, eta0=1.0)
    nxt = admm_step(state, g, params)
    assert np.allclose(nxt.x, x_star)
    assert np.allclose(nxt.z, x_star)
    assert np.allclose(nxt.y, -g)
    assert nxt.k == 1


def test_admm_solves_separable_quadratic():
    # f(x) = |x - c|^2 / 2 with L1 penalty: solution is soft_threshold(c, lam)
    c = np.array([2.0, -0.05, 0.4, -3.0])
    lam = 0.1
    params = AdmmParams(1.0, lam, eta0=0.5)
    state = AdmmState.zeros(4)
    for _ in range(3000):
        state = admm_step(state, state.x - c, params)
    assert np.allclose(state.z, soft_threshold(c, lam), atol=1e-8)
    assert state.is_finite()
    assert math.isclose(np.linalg.norm(state.x - state.z), 0.0, abs_tol=1e-8)
