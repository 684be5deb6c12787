from fractions import Fraction

import numpy as np
import pytest

from kleinsigma import curves as cv
from kleinsigma.errors import InvalidModuli, NotOnCurve
from kleinsigma.polyring import MultiPoly


@pytest.mark.parametrize("which,genus", [("x4", 4), ("x12", 12)])
def test_genus(which, genus):
    c = cv.build_curve(which)
    assert c.genus == genus
    assert c.riemann_hurwitz_genus() == genus


@pytest.mark.parametrize("which", ["x4", "x12"])
def test_minor_identities(which):
    assert all(cv.minor_checks(cv.build_curve(which)).values())


@pytest.mark.parametrize("which", ["h4", "h12"])
def test_monomial_kernel(which):
    assert all(cv.monomial_kernel_check(which).values())


def test_x4_relation_weights(x4):
    # each relation is named after its pole order at infinity
    for name, f in x4.relations.items():
        assert cv.poly_weight(f, x4) == int(name[1:])


@pytest.mark.parametrize("which", ["x4", "x12"])
def test_random_points_on_curve_and_smooth(which, rng):
    c = cv.build_curve(which)
    for _ in range(30):
        p = c.random_point(rng)
        c.check_point(p)
        assert cv.jacobian_rank(c, p) == c.variables.__len__() - 1
    for j in range(len(c.branch_points)):
        assert cv.jacobian_rank(c, c.branch_point(j)) == len(c.variables) - 1


def test_x4_second_chart_smooth_at_infinity():
    assert cv.second_chart_rank(cv.build_curve("x4"), None) == 2


def test_x12_second_chart_rank_at_infinity():
    # three of the four required: the projective chart is singular there
    assert cv.second_chart_rank(cv.build_curve("x12"), None) == 3


def test_not_on_curve(x4):
    p = x4.point(0.3 + 0.2j)
    bad = cv.CurvePoint(p.x, (p.w[0] * 1.01, p.w[1]))
    with pytest.raises(NotOnCurve):
        x4.check_point(bad)


@pytest.mark.parametrize("branch", [(1, 2, 3, 4), (1, 1, 3, 4, 5), (0, 2, 3, 4, 5), ("a", 2, 3, 4, 5)])
def test_invalid_moduli(branch):
    with pytest.raises(InvalidModuli):
        cv.build_curve("x4", branch)


def test_custom_moduli():
    b = (Fraction(1, 2), -1, 2, 3, Fraction(7, 3))
    c = cv.build_curve("x4", b)
    rng = np.random.default_rng(1)
    p = c.random_point(rng)
    assert max(c.residuals(p).values()) < 1e-10


def test_cyclic_action(x4, rng):
    p = x4.random_point(rng)
    orbit = [cv.cyclic_action(x4, p, k) for k in range(3)]
    for q in orbit:
        x4.check_point(q)
    assert x4.same_point(cv.cyclic_action(x4, p, 3), p)
    assert not x4.same_point(orbit[1], p)


def test_normal_form_example(x4):
    V = x4.variables
    y7, y8 = MultiPoly.var(V, "y7"), MultiPoly.var(V, "y8")
    nf = cv.normal_form(y7**2 * y8, x4)
    assert x4.rewrite.is_normal(nf)
    # the reduction is a valid identity on the curve
    rng = np.random.default_rng(3)
    for _ in range(5):
        vals = x4.coords(x4.random_point(rng))
        assert abs((y7**2 * y8 - nf).evaluate(vals)) < 1e-8 * (1 + abs(nf.evaluate(vals)))
    assert cv.poly_weight(nf, x4) == 22


@pytest.mark.parametrize("which", ["x4", "x12"])
def test_phi_basis_weights(which):
    c = cv.build_curve(which)
    nongaps = c.semigroup.non_gaps(c.phi[-1][0])
    basis = cv.phi_basis(c, len(nongaps))
    assert [cv.poly_weight(p, c) for p in basis] == nongaps


def test_projection_and_lift(x4, x12, rng):
    for _ in range(5):
        p = x12.random_point(rng)
        q = cv.project_x12_to_x4(p, x4)
        x4.check_point(q)
        lifts = cv.lift_x4_to_x12(q, x4, x12)
        assert len(lifts) == 2
        assert any(x12.same_point(p, l) for l in lifts)
