import numpy as np
import pytest

from rdpadmm.data import SyntheticSpec, generate_synthetic, preprocess

from oracles import SMALL_TRUE_MODEL, prox_grad_optimum


@pytest.fixture(scope="session")
def small_instance():
    """200 x 10 lasso-logistic problem with a dense known model."""
    raw = generate_synthetic(SyntheticSpec(n=200, p=10, seed=1, true_model=SMALL_TRUE_MODEL))
    return preprocess(raw, add_intercept=False)


@pytest.fixture(scope="session")
def small_optimum(small_instance):
    """Objective value of the 10^6-step proximal gradient oracle at lambda=1e-3."""
    _, f_star = prox_grad_optimum(small_instance.features, small_instance.labels, 1e-3)
    return f_star


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
