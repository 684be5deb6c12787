import json

import numpy as np
import pytest

from kleinsigma import periods as pr
from kleinsigma.curves import cyclic_action
from kleinsigma.sigma import theta, theta_parity


def test_tau_symmetric_positive(pd4):
    assert pr.tau_symmetry(pd4) < 1e-8
    assert np.linalg.eigvalsh(pd4.tau.imag).min() > 0


def test_legendre_relation(pd4):
    assert pr.legendre_residual(pd4) < 1e-8
    assert pr.omega_eta_symmetry(pd4) < 1e-9


def test_intersection_form_standard(x4):
    basis = pr.homology_basis(x4)
    np.testing.assert_array_equal(basis.intersection(), pr.standard_J(4))


def test_siegel_reduced(pd4):
    # reduced: |Re tau| <= 1/2 and the shortest vector of Im tau is at least sqrt(3)/2
    tau = pd4.tau
    assert np.max(np.abs(tau.real)) <= 0.5 + 1e-9
    assert tau.imag[0, 0] >= np.sqrt(3) / 2 - 1e-9


def test_quadrature_convergence(x4):
    pd = pr.period_matrices(x4, certify=True)
    assert pd.convergence < 1e-10


def test_fibre_sum_is_a_period(x4, pd4, abel4, rng):
    # x - c has divisor (fibre) - 3 infinity, so the fibre sums to a lattice point
    for _ in range(3):
        p = x4.random_point(rng)
        total = sum(abel4.point(cyclic_action(x4, p, k)) for k in range(3))
        assert pr.lattice_residual(pd4, total) < 1e-9


def test_abel_path_independent_mod_lattice(x4, pd4, abel4, rng):
    p = x4.random_point(rng)
    a = abel4.point(p)
    b = abel4.point(p, via=p.x + 0.4j + 0.3)
    assert pr.lattice_residual(pd4, a - b) < 1e-9


def test_branch_points_are_torsion(x4, pd4, abel4):
    # 3 B_j ~ 3 infinity on the cyclic trigonal cover
    for j in range(5):
        assert pr.lattice_residual(pd4, 3 * abel4.point(x4.branch_point(j))) < 1e-9


def test_riemann_constant_even(pd4):
    assert pd4.characteristic is not None
    assert set(np.round(2 * pd4.characteristic).astype(int)) <= {0, 1}
    assert theta_parity(pd4.characteristic) == 1


def test_theta_divisor_vanishing(x4, pd4, abel4, rng):
    # theta[kappa] vanishes on the image of three points
    C = np.linalg.inv(2 * pd4.omega1)
    for _ in range(5):
        u = abel4([x4.random_point(rng) for _ in range(3)], shifted=True)
        v = theta(C @ u, pd4.tau, pd4.characteristic)
        w = theta(C @ u + 0.05, pd4.tau, pd4.characteristic)
        assert abs(v) < 1e-8 * abs(w)


def test_periods_roundtrip(x4, pd4, tmp_path):
    data = pr.periods_to_dict(x4, pd4)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(data))
    c2, pd2 = pr.periods_from_dict(json.loads(path.read_text()))
    assert c2.branch_points == x4.branch_points
    np.testing.assert_array_equal(pd2.omega1, pd4.omega1)
    np.testing.assert_array_equal(pd2.eta2, pd4.eta2)
    np.testing.assert_array_equal(pd2.characteristic, pd4.characteristic)
    assert pr.periods_to_dict(c2, pd2) == data


@pytest.mark.slow
def test_x12_periods(pd12):
    assert pr.tau_symmetry(pd12) < 1e-8
    assert np.linalg.eigvalsh(pd12.tau.imag).min() > 0
    assert pr.legendre_residual(pd12) < 1e-6
