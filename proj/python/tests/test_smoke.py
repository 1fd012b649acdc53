import math

import numpy as np
import pytest

import admmrate as ar


def equal(n, sigma2):
    return [ar.Objective.quadratic(np.array([[sigma2]]), np.array([-sigma2 * (i + 1)])) for i in range(n)]


def test_centralized_rate():
    cs = ar.centralized(4)
    for rho in (4.0, 16.0, 64.0):
        Q = ar.build_Q(cs, [np.array([[16.0]])] * 4, rho)
        assert np.allclose(Q, rho / (16 + rho) * np.eye(4))
        rep = ar.compute_alpha(cs, Q)
        assert rep["alpha"] == pytest.approx(max(rho, 16) / (rho + 16), abs=1e-10)


def test_ring_of_four():
    rep = ar.analyze(ar.ring(4), equal(4, 16.0), 8.0)
    assert rep["alpha"] == pytest.approx(0.5, abs=1e-7)
    assert rep["dim_kernel"] == 1
    assert rep["tight"]
    assert len(rep["spectrum"]) == 8


def test_ring_roots_match_dense_spectrum():
    N, rho = 9, 3.0
    cs = ar.ring(N)
    R = ar.build_R(cs, ar.build_Q(cs, [np.array([[16.0]])] * N, rho))
    ev = np.linalg.eigvals(R)
    ev = sorted(ev, key=lambda z: abs(z - 1))[1:]
    alpha, closed, regime = ar.ring_alpha(rho, 16.0, N)
    assert max(abs(z) for z in ev) == pytest.approx(alpha, abs=1e-9)
    assert closed == pytest.approx(alpha, abs=1e-9)
    assert regime in ("low", "mid", "high")


def test_optimal_rho():
    cs = ar.ring(20)
    rho, alpha = ar.optimize_rho(cs, [np.array([[16.0]])] * 20)
    assert rho == pytest.approx(16 / (2 * math.sin(2 * math.pi / 20)), rel=1e-3)
    assert alpha == pytest.approx(ar.ring_optimal_alpha(20), abs=1e-6)


def test_run_matches_theory():
    cs = ar.ring(6)
    fs = ar.sample_objectives("quadratic", 6, 3)
    rho = 50.0
    errors = ar.run(cs, fs, rho, max_iters=5000, stop_tol=1e-10, seed=1)
    fit = ar.fit_empirical_rate(errors)
    assert not fit["degenerate"]
    assert fit["alpha_empirical"] == pytest.approx(ar.analyze(cs, fs, rho)["alpha"], rel=0.02)


def test_forms_agree():
    cs = ar.ring(5)
    fs = ar.sample_objectives("exponential", 5, 2)
    a = ar.run(cs, fs, 20.0, max_iters=40, stop_tol=0.0, seed=4)
    b = ar.run(cs, fs, 20.0, max_iters=40, stop_tol=0.0, form="edges", seed=4)
    assert np.allclose(a, b, atol=1e-10, rtol=0)


def test_prox_exponential():
    w = ar.prox(ar.Objective.exponential(1.0), 1.0, np.array([0.0]))
    assert w[0] == pytest.approx(-0.567143290409784, abs=1e-12)


def test_errors():
    with pytest.raises(ar.ValidationError):
        ar.build_Q(ar.ComponentStructure(4, 1, [[1, 2], [3, 4]]), [np.eye(1)] * 4, 1.0)
    with pytest.raises(ar.ValidationError):
        ar.ComponentStructure(3, 1, [[1]])
    ok, summary = ar.validate(ar.ring(5))
    assert ok and summary


def test_config_entry_point():
    cfg = '{"topology": {"kind": "centralized", "n_agents": 3},' \
          ' "objective": {"kind": "uniform_quadratic", "sigma2": 16}, "rho": 16}'
    assert ar.rate_from_config(cfg)["alpha"] == pytest.approx(0.5)
