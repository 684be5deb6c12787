import numpy as np
import pytest

from kleinsigma import inversion as inv
from kleinsigma import periods as pr


def test_mu_vanishes_at_its_points(x4, rng):
    pts = inv.generic_points(x4, rng, 4)
    m = inv.mu_function(x4, pts)
    for p in pts:
        assert abs(m(x4, p)) < 1e-9 * np.max(np.abs(m.coefficients))
    assert inv.mu_extraction_gap(x4, pts) < 1e-9


def test_mu_zero_count(x4, rng):
    # mu_(H0,3) has as many zeros as its pole order (7), all finite
    pts = inv.generic_points(x4, rng, 3, tag="H0")
    m = inv.mu_function(x4, pts, "H0")
    extra = inv.mu_zeros(x4, m)
    assert len(extra) == 4
    big = 2 + max(abs(p.x - 3) for p in pts + extra)
    assert inv.zero_count(x4, m, radius=big) == 7
    for q in extra:
        assert abs(m(x4, q)) < 1e-8 * np.max(np.abs(m.coefficients))


def test_jacobi_inversion(x4, sig4, abel4, rng):
    for _ in range(4):
        pts = inv.generic_points(x4, rng, 4)
        out = inv.jacobi_inversion_residual(x4, sig4, abel4, pts)
        assert out["residual"] < 1e-5
        assert out["symmetry"] < 1e-6


@pytest.mark.parametrize("k", [1, 2, 3])
def test_strata(x4, sig4, abel4, rng, k):
    for _ in range(3):
        pts = inv.generic_points(x4, rng, k)
        out = inv.strata_residual(x4, sig4, abel4, pts)
        assert out["residual"] < 1e-5
        assert out["sigma_relative"] < 1e-6
        assert out["gradient_relative"] > 0.1


def test_bridge(x4, sig4, abel4, rng):
    for _ in range(3):
        pts = inv.generic_points(x4, rng, 4)
        assert inv.bridge_residual(x4, sig4, abel4, x4.random_point(rng), pts) < 1e-5


def test_partial_derivatives(x4, abel4, rng):
    pts = inv.generic_points(x4, rng, 4)
    assert inv.partial_derivative_residual(x4, abel4, pts) < 1e-6


def test_serre_duality(x4, pd4, abel4, rng):
    for _ in range(3):
        P = inv.generic_triple(x4, rng)
        Q = inv.serre_dual_points(x4, P)
        assert inv.serre_abel_residual(x4, pd4, abel4, P, Q) < 1e-6
        back = inv.serre_dual_points(x4, Q)
        assert all(any(x4.same_point(a, b, 1e-7) for b in back) for a in P)


def test_unshifted_representative(x4, pd4, abel4, rng):
    P = inv.generic_triple(x4, rng)
    R = inv.unshifted_representative(x4, P)
    assert len(R) == 4
    assert pr.lattice_residual(pd4, abel4(R) - abel4(P, shifted=True)) < 1e-8
    # the shift is 3-torsion but not a period
    assert pr.lattice_residual(pd4, 3 * abel4.shift()) < 1e-9
    assert pr.lattice_residual(pd4, abel4.shift()) > 0.1


def test_serre_rejects_wrong_input(x12, rng):
    with pytest.raises(ValueError):
        inv.serre_dual_points(x12, [x12.random_point(rng) for _ in range(3)])
