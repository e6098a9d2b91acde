import numpy as np
import pytest

from paenmf.gradcheck import RTOL, run_gradcheck, scaled_error


def test_default_run_passes():
    res = run_gradcheck(seed=0)
    assert res.passed
    assert res.max_error < RTOL
    assert len(res.configs) == 5
    for c in res.configs:
        assert c["m"] <= 20 and c["r"] <= 4


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_other_seeds_pass(seed):
    assert run_gradcheck(seed=seed).passed


def test_corrupted_gradient_detected():
    res = run_gradcheck(seed=0, corrupt=True)
    assert not res.passed
    config, name, index = res.worst
    assert (config, name, index) == (0, "W_f", (0, 0))


def test_report_is_seed_stable():
    a, b = run_gradcheck(seed=4), run_gradcheck(seed=4)
    assert a.max_error == b.max_error
    assert a.worst == b.worst
    assert a.configs == b.configs


def test_scaled_error_floor():
    # below the absolute floor a large relative gap still passes
    assert scaled_error(np.array([1e-9]), np.array([5e-7]))[0] < RTOL
    assert scaled_error(np.array([1.0]), np.array([1.0 + 2e-4]))[0] > RTOL
    assert scaled_error(np.array([1.0]), np.array([1.0 + 5e-5]))[0] < RTOL
