from fractions import Fraction

import numpy as np
import pytest
import sympy

from kleinsigma.errors import UnboundVariable
from kleinsigma.polyring import MultiPoly, RewriteSystem, elementary_symmetric, univariate_from_roots

V = ("x", "y", "z")


def to_sympy(p):
    syms = sympy.symbols(p.vars)
    return sympy.expand(sum(sympy.Rational(c.numerator, c.denominator)
                            * sympy.Mul(*[s**e for s, e in zip(syms, m)])
                            for m, c in p.terms.items()))


def random_poly(rng, terms=5, deg=3):
    out = {}
    for _ in range(terms):
        m = tuple(int(e) for e in rng.integers(0, deg + 1, size=len(V)))
        out[m] = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
    return MultiPoly(V, out)


def test_arithmetic_matches_sympy(rng):
    for _ in range(20):
        a, b = random_poly(rng), random_poly(rng)
        assert sympy.expand(to_sympy(a * b) - to_sympy(a) * to_sympy(b)) == 0
        assert sympy.expand(to_sympy(a + b) - to_sympy(a) - to_sympy(b)) == 0
        assert sympy.expand(to_sympy(a - b) - to_sympy(a) + to_sympy(b)) == 0
        assert sympy.expand(to_sympy(a**2) - to_sympy(a) ** 2) == 0


def test_diff_matches_sympy(rng):
    x = sympy.Symbol("x")
    for _ in range(10):
        a = random_poly(rng)
        assert sympy.expand(to_sympy(a.diff("x")) - sympy.diff(to_sympy(a), x)) == 0


def test_parse_roundtrip():
    p = MultiPoly.parse("y^2*z - 3/2*x + 1", V)
    assert p == MultiPoly.monomial(V, {"y": 2, "z": 1}) - Fraction(3, 2) * MultiPoly.var(V, "x") + 1
    assert MultiPoly.parse(str(p), V) == p


def test_parse_unknown_variable():
    with pytest.raises(UnboundVariable):
        MultiPoly.parse("x + w", V)


def test_evaluate():
    p = MultiPoly.parse("x^2*y - 3*z + 2", V)
    assert p.evaluate({"x": 2, "y": 1j, "z": 0.5}) == pytest.approx(4j + 0.5)
    vals = np.array([1.0, 2.0])
    np.testing.assert_allclose(p.evaluate({"x": vals, "y": 1, "z": 0}), vals**2 + 2)
    with pytest.raises(UnboundVariable):
        p.evaluate({"x": 1, "y": 2})
    # variables absent from every term need no value
    assert MultiPoly.parse("x + 1", V).evaluate({"x": 2}) == 3


def test_zero_and_substitute():
    x, y = MultiPoly.var(V, "x"), MultiPoly.var(V, "y")
    assert (x * y - y * x).is_zero()
    assert not MultiPoly.const(V, 1).is_zero()
    p = (x + y) ** 2
    q = p.substitute({"y": -x})
    assert q.is_zero()


def test_elementary_symmetric():
    roots = [1, 2, 3]
    assert elementary_symmetric(roots) == [-6, 11, -6]
    p = univariate_from_roots(V, "x", roots)
    assert p == MultiPoly.univariate(V, "x", [-6, 11, -6, 1])


def test_rewrite_reaches_normal_form():
    # y^2 -> x over Q[x, y]: odd/even split in y
    W = ("x", "y")
    x, y = MultiPoly.var(W, "x"), MultiPoly.var(W, "y")
    rs = RewriteSystem(W, ("y",), [((2,), x)])
    r = rs.reduce(y**5 + x * y**2)
    assert r == x**2 * y + x**2
    assert rs.is_normal(r)
    assert not rs.is_normal(y**2)
