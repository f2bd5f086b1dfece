import numpy as np
import pytest

from rdpadmm.data import Dataset
from rdpadmm.metrics import accuracy, xi_coverage, xi_profile


def test_xi_worked_example():
    # 20 relevant coordinates; top 30 by magnitude contain 16 of them -> 0.8
    model = np.zeros(100)
    model[:16] = 10.0
    model[16:20] = 0.01
    model[20:34] = 5.0
    assert xi_coverage(model, range(20), 30) == pytest.approx(16 / 20)


def test_xi_ties_go_to_lower_index():
    model = np.array([1.0, 1.0, 1.0, 1.0])
    assert xi_coverage(model, [0, 1], 2) == 1.0
    assert xi_coverage(model, [2, 3], 2) == 0.0


def test_xi_is_monotone_in_k(rng):
    model = rng.normal(size=60)
    vals = [xi_coverage(model, range(20), k) for k in range(61)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert vals[0] == 0.0 and vals[-1] == 1.0
    with pytest.raises(ValueError):
        xi_coverage(model, range(20), 61)


def test_xi_profile_skips_large_k():
    assert set(xi_profile(np.ones(25), range(5))) == {20, 25}


def test_accuracy_sign_rule():
    data = Dataset(np.array([[1.0], [-1.0], [0.0]]), np.array([1.0, 1.0, 1.0]))
    assert accuracy(np.array([2.0]), data) == pytest.approx(2 / 3)
