from fractions import Fraction

import pytest
import sympy

from kleinsigma import moonshine as ms
from kleinsigma.errors import TruncationError


def sympy_grunsky(coeffs, order):
    """Independent expansion of -log(pq (f(q) - f(p)) / (p - q)) with sympy."""
    p, q, t = sympy.symbols("p q t")
    h = [sympy.Rational(c.numerator, c.denominator) for c in coeffs]
    dd = sum(hi * sympy.cancel((p ** i - q ** i) / (p - q)) for i, hi in enumerate(h, start=1))
    u = -p * q * dd  # the argument is 1 + u
    u = sympy.expand(u.subs({p: t * p, q: t * q}))
    ser = sympy.expand(sympy.series(-sympy.log(1 + u), t, 0, order + 2).removeO().subs(t, 1))
    poly = sympy.Poly(ser, p, q)
    return {(m, n): Fraction(int(c.p), int(c.q)) for (m, n), c in poly.as_dict().items()}


def test_grunsky_against_sympy():
    f = ms.QSeries((Fraction(3), Fraction(-1, 2), Fraction(5), Fraction(2, 3), Fraction(-4), Fraction(1)))
    table = ms.grunsky(f, 6)
    ref = sympy_grunsky(f.coefficients, 6)
    for m, n in table.pairs():
        assert table[m, n] == ref.get((m, n), 0), (m, n)


def test_j_series_data():
    j = ms.j_series()
    assert j.truncation == 25
    assert j.constant == 744
    assert j.h(1) == 196884 and j.h(2) == 21493760 and j.h(3) == 864299970
    with pytest.raises(TruncationError):
        j.h(26)


def test_table_symmetric_and_first_row():
    j = ms.j_series()
    t = ms.grunsky(j, 20)
    assert t.is_symmetric()
    assert all(t[1, i] == j.h(i) for i in range(1, 20))
    with pytest.raises(TruncationError):
        t[15, 15]


def test_j_is_replicable_and_perturbation_detected():
    j = ms.j_series()
    assert ms.norton_check(j, 20) == []
    viol = ms.norton_check(j.perturbed(5, 1), 20)
    assert viol and all(v.difference != 0 for v in viol)


def test_example_identities():
    checks = ms.example_identities(ms.j_series())
    assert len(checks) == 5
    assert all(c.holds for c in checks)
    assert [c.pair for c in checks] == [(3, 2), (3, 4), (5, 2), (7, 2), (3, 5)]


def test_recursion_matches_table():
    rep = ms.recursion_report(ms.j_series(), 20)
    assert rep.matches and rep.inner_index_reading == "n" and rep.checked > 100


def test_faber_and_hecke():
    j = ms.j_series()
    for n in range(1, 6):
        assert ms.faber_residual(j, n) == 0
    for n in range(2, 6):
        assert ms.hecke_faber_residual(j, n, 4) == 0
    assert ms.hecke_faber_residual(j.perturbed(4, 1), 2, 10) != 0
    with pytest.raises(TruncationError):
        ms.hecke_sum(j, 5, 10)


def test_gap_vs_norton():
    rep = ms.gap_vs_norton()
    assert rep.symmetric_difference == (10, 19)
    assert rep.gap_complement_is_semigroup
    assert rep.has_witness(10, 13)
    assert rep.complement_witnesses


def test_series_json_roundtrip(tmp_path):
    import json

    j = ms.j_series(10)
    path = tmp_path / "s.json"
    path.write_text(json.dumps(j.to_json()))
    assert ms.QSeries.from_json(path) == j
