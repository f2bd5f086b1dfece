import itertools

import numpy as np
import pytest
from dataclasses import replace

from rdpadmm.accounting import DpBudget, GaussianMechanismSpec, compose, gaussian_rdp, to_approx_dp
from rdpadmm.admm import INVERSE_SQRT, AdmmState, admm_step
from rdpadmm.data import Dataset
from rdpadmm.losses import LossModel
from rdpadmm.mechanisms import TAG_X, TAG_Y, TAG_Z, NoiseSource, gaussian_vector
from rdpadmm.mpadmm import (
    MpAdmmConfig,
    calibrate,
    epoch_curve,
    epoch_sensitivities,
    mpadmm_curve,
    train_mpadmm,
)
from rdpadmm.ssadmm import batch_gradient


def test_defaults():
    cfg = MpAdmmConfig.default(1e-3, 1.0)
    assert cfg.admm.rho == 0.5
    assert cfg.eta == 1.0
    with pytest.raises(ValueError):
        replace(cfg, admm=replace(cfg.admm, schedule=INVERSE_SQRT))


def test_sensitivity_formula():
    dx, dz, dy = epoch_sensitivities(1.0, 100, 2.0, 0.5)
    assert dx == pytest.approx(2 * 2.0 / (100 * 2.0))
    assert dz == dx
    assert dy == pytest.approx(0.5 * dx)


def _neighbour_gaps(data, pool, pool_l, state, params, C):
    model = LossModel()
    base = admm_step(state, batch_gradient(model, state.x, data.features, data.labels, C), params)
    gaps = []
    for i, j in itertools.product(range(data.n), range(len(pool))):
        S = data.features.copy()
        l = data.labels.copy()
        S[i], l[i] = pool[j], pool_l[j]
        alt = admm_step(state, batch_gradient(model, state.x, S, l, C), params)
        gaps.append((base.x - alt.x, base.z - alt.z, base.y - alt.y))
    return gaps


@pytest.mark.parametrize("eta,rho", [(0.5, 0.25), (2.0, 1.0)])
def test_epoch_sensitivity_brute_force(eta, rho, rng):
    n, p = 12, 3
    data = Dataset(rng.normal(size=(n, p)), rng.choice([-1.0, 1.0], size=n))
    pool = rng.normal(size=(15, p)) * 3
    pool_l = rng.choice([-1.0, 1.0], size=15)
    cfg = MpAdmmConfig.default(0.05, 1.0, eta=eta, rho=rho)
    dx, dz, dy = epoch_sensitivities(cfg.clip, n, eta, rho)
    state = AdmmState(rng.normal(size=p), rng.normal(size=p), rng.normal(size=p))
    for gx, gz, gy in _neighbour_gaps(data, pool, pool_l, state, cfg.admm, cfg.clip):
        assert np.linalg.norm(gx) <= dx * (1 + 1e-12)
        assert np.all(np.abs(gz) <= np.abs(gx) * (1 + 1e-12) + 1e-15)
        assert np.linalg.norm(gy) <= rho * np.linalg.norm(gx) * (1 + 1e-12) + 1e-15


def test_curve_is_three_gaussians_per_epoch():
    cfg = MpAdmmConfig.default(1e-3, 0.7, epochs=1)
    dx, dz, dy = epoch_sensitivities(cfg.clip, 500, cfg.eta, cfg.admm.rho)
    want = compose([gaussian_rdp(GaussianMechanismSpec(d, 0.7)) for d in (dx, dz, dy)])
    assert np.allclose(epoch_curve(500, cfg).epsilons, want.epsilons, rtol=1e-14)
    c5 = mpadmm_curve(500, replace(cfg, epochs=5))
    assert np.allclose(c5.epsilons, 5 * np.array(want.epsilons), rtol=1e-14)
    assert mpadmm_curve(500, replace(cfg, sigma=0.0)) is None


def test_calibrate_reaches_target():
    cfg = MpAdmmConfig.default(1e-3, 1.0, epochs=20)
    sigma = calibrate(2000, cfg, DpBudget(0.5, 1e-8))
    eps = to_approx_dp(mpadmm_curve(2000, replace(cfg, sigma=sigma)), 1e-8).epsilon
    assert 0.49 < eps <= 0.5


def test_training_replays_from_keys(rng):
    n, p = 40, 3
    data = Dataset(rng.normal(size=(n, p)) / 2, rng.choice([-1.0, 1.0], size=n))
    cfg = MpAdmmConfig.default(1e-3, 0.3, epochs=6)
    noise = NoiseSource(2)
    r = train_mpadmm(data, LossModel(), cfg, noise)
    state = AdmmState.zeros(p)
    for k in range(6):
        g = batch_gradient(LossModel(), state.x, data.features, data.labels, cfg.clip)
        s = admm_step(state, g, cfg.admm)
        state = AdmmState(
            s.x + gaussian_vector(noise, p, 0.3, step=k, tag=TAG_X),
            s.z + gaussian_vector(noise, p, 0.3, step=k, tag=TAG_Z),
            s.y + gaussian_vector(noise, p, 0.3, step=k, tag=TAG_Y),
            s.k,
        )
    assert np.array_equal(r.model, state.x)
    assert r.to_json() == train_mpadmm(data, LossModel(), cfg, NoiseSource(2)).to_json()
