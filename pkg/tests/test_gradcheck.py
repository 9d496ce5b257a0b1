import numpy as np
import pytest

from attralign.gradcheck import CheckResult, _fd_array, check_align_grad, random_alignment_params, rel_err


def test_rel_err_floor_and_zero_handling():
    assert rel_err(0.0, 0.0) == 0.0
    assert rel_err(1.0, 1.1) == pytest.approx(0.1 / 1.1)
    # tiny entries compared against the floor instead of themselves
    assert rel_err(1e-12, 2e-12, floor=1e-6) == pytest.approx(1e-6)


def test_check_result_line():
    assert CheckResult("x", 1e-6, 1e-4).line().startswith("PASS x")
    assert not CheckResult("x", 1e-3, 1e-4).passed


def test_fd_array_on_quadratic():
    x = np.array([1.0, -2.0, 3.0])
    g = _fd_array(lambda: float(np.sum(x ** 2)), x, 1e-5)
    np.testing.assert_allclose(g, 2 * np.array([1.0, -2.0, 3.0]), rtol=1e-9)
    np.testing.assert_array_equal(x, [1.0, -2.0, 3.0])


def test_random_params_are_valid():
    rng = np.random.default_rng(0)
    for _ in range(100):
        p = random_alignment_params(rng)
        assert 0 < p.m < p.alpha <= 1 and abs(p.beta - (p.alpha - p.m)) <= 1e-12


def test_check_detects_a_wrong_gradient(monkeypatch):
    from attralign import gradcheck

    real = gradcheck.align_loss_grad
    monkeypatch.setattr(gradcheck, "align_loss_grad", lambda s, p: tuple(1.01 * g for g in real(s, p)))
    assert not check_align_grad(n_param_sets=2, n_samples=50).passed
