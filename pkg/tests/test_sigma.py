import itertools

import numpy as np
import pytest

from kleinsigma import sigma as sg
from kleinsigma.differentials import continue_point
from kleinsigma.errors import DegenerateConfig, OnThetaDivisor


def brute_theta(z, tau, char, box=6):
    g = len(z)
    a, b = char[:g], char[g:]
    total = 0j
    for n in itertools.product(range(-box, box + 1), repeat=g):
        v = np.array(n) + a
        total += np.exp(1j * np.pi * v @ tau @ v + 2j * np.pi * v @ (z + b))
    return total


def small_tau(rng, g=2):
    A = rng.normal(size=(g, g))
    Y = A @ A.T + g * np.eye(g) * 0.8
    X = rng.uniform(-0.5, 0.5, size=(g, g))
    return 0.5 * (X + X.T) + 1j * Y


def test_theta_matches_brute_force(rng):
    for _ in range(5):
        tau = small_tau(rng)
        z = rng.normal(size=2) + 1j * rng.normal(size=2) * 0.3
        char = rng.integers(0, 2, size=4) / 2
        assert abs(sg.theta(z, tau, char) - brute_theta(z, tau, char)) < 1e-12 * max(1, abs(brute_theta(z, tau, char)))


def test_theta_derivatives_fd(rng):
    tau = small_tau(rng)
    z = rng.normal(size=2) * 0.3
    v, gr, he = sg.theta(z, tau, derivs=2)
    h = 1e-5
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd = (sg.theta(z + e, tau) - sg.theta(z - e, tau)) / (2 * h)
        assert abs(fd - gr[i]) < 1e-6 * max(1, abs(gr[i]))
        _, gp = sg.theta(z + e, tau, derivs=1)
        _, gm = sg.theta(z - e, tau, derivs=1)
        np.testing.assert_allclose((gp - gm) / (2 * h), he[i], rtol=1e-6, atol=1e-6)


def test_odd_characteristic_vanishes_at_zero(rng):
    tau = small_tau(rng)
    assert sg.theta_parity([0.5, 0, 0.5, 0]) == -1
    assert abs(sg.theta(np.zeros(2), tau, [0.5, 0, 0.5, 0])) < 1e-14


def test_radius_monotone():
    assert sg.radius_for_tail(1e-14, 4) > sg.radius_for_tail(1e-6, 4)


def test_lll_unimodular(rng):
    B = rng.normal(size=(4, 4))
    U = sg.lll(B)
    assert abs(abs(round(np.linalg.det(U))) - 1) == 0
    R = B @ U
    # size reduced and no longer than the input's longest column
    assert np.linalg.norm(R[:, 0]) <= np.linalg.norm(B, axis=0).max() + 1e-12


def test_quasi_periodicity(sig4, rng):
    for _ in range(10):
        u = (rng.normal(size=4) + 1j * rng.normal(size=4)) * 0.3
        l1 = rng.integers(-1, 2, size=4)
        l2 = rng.integers(-1, 2, size=4)
        assert sig4.quasi_periodicity_residual(u, l1, l2) < 1e-8


def test_sigma_even(sig4, rng):
    for _ in range(5):
        u = (rng.normal(size=4) + 1j * rng.normal(size=4)) * 0.3
        assert abs(sig4.parity_sign(u) - 1) < 1e-10


def test_sigma_vanishes_on_three_points(x4, sig4, abel4, rng):
    for _ in range(5):
        u = abel4([x4.random_point(rng) for _ in range(3)], shifted=True)
        assert sg.vanishing_ratio(sig4, u) < 1e-6
    u = abel4([x4.random_point(rng) for _ in range(4)], shifted=True)
    assert sg.vanishing_ratio(sig4, u) > 1e-3


def test_gradient_hessian_fd(sig4, rng):
    u = (rng.normal(size=4) + 1j * rng.normal(size=4)) * 0.2
    sv = sig4(u, derivs=2)
    h = 1e-5
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        fd = (sig4.value(u + e) - sig4.value(u - e)) / (2 * h)
        assert abs(fd - sv.gradient[i]) < 1e-6 * max(1, np.max(np.abs(sv.gradient)))
        gfd = (sig4(u + e, 1).gradient - sig4(u - e, 1).gradient) / (2 * h)
        assert np.max(np.abs(gfd - sv.hessian[i])) < 1e-6 * max(1, np.max(np.abs(sv.hessian)))


def test_wp_symmetric_and_refuses_theta_divisor(x4, sig4, abel4, rng):
    u = (rng.normal(size=4) + 1j * rng.normal(size=4)) * 0.2
    W = sig4.wp_matrix(u)
    assert np.max(np.abs(W - W.T)) < 1e-8 * np.max(np.abs(W))
    with pytest.raises(OnThetaDivisor):
        sig4.wp_matrix(abel4([x4.random_point(rng) for _ in range(3)], shifted=True))


def test_sigma_needs_characteristic(x4):
    from kleinsigma.periods import period_matrices

    with pytest.raises(ValueError):
        sg.Sigma(period_matrices(x4))


def test_fundamental_relation(x4, sig4, abel4):
    rng = np.random.default_rng(3)
    Ps = [x4.random_point(rng) for _ in range(4)]
    Qs = [continue_point(x4, p, p.x + 0.15 * np.exp(2j * np.pi * rng.random())) for p in Ps]
    P = x4.random_point(rng)
    Q = continue_point(x4, P, P.x + 0.2 * np.exp(2j * np.pi * rng.random()))
    assert sg.fundamental_relation_residual(x4, sig4, abel4, P, Q, Ps, Qs) < 1e-10
    assert sg.fundamental_relation_residual(x4, sig4, abel4, Q, P, Ps, Qs) < 1e-10
    with pytest.raises(DegenerateConfig):
        sg.fundamental_relation_residual(x4, sig4, abel4, P, P, Ps, Qs)
