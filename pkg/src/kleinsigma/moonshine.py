"""Exact formal-series tools for replicable functions.

A series ``f(q) = 1/q + h_1 q + h_2 q^2 + ...`` (constant term dropped) is
stored as exact rationals.  From it we build the Grunsky table ``h_{m,n}``,
the Faber polynomials, the Norton replicability scan and a comparison of the
Norton index set with the gap sequence of ``<6,13,14,15,16>``.

Sign convention: ``h_{m,n}`` is the coefficient of ``p^m q^n`` in
``-log(pq (f(q) - f(p)) / (p - q))``.  With this sign ``h_{1,m} = h_m``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from math import gcd
from pathlib import Path

from .errors import TruncationError
from .semigroup import gaps

NORTON_SET = (1, 2, 3, 4, 5, 7, 8, 9, 11, 17, 19, 23)
X12_GENERATORS = (6, 13, 14, 15, 16)


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x)) if isinstance(x, str) else Fraction(x)


@dataclass(frozen=True)
class QSeries:
    """``1/q + sum_{i=1}^N h_i q^i`` with exact coefficients.

    ``coefficients[i - 1]`` is ``h_i``.  A constant term is not part of the
    normal form; ``constant`` only records it for reporting.
    """

    coefficients: tuple[Fraction, ...]
    constant: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(_frac(c) for c in self.coefficients))
        object.__setattr__(self, "constant", _frac(self.constant))

    @property
    def truncation(self) -> int:
        return len(self.coefficients)

    def h(self, i: int) -> Fraction:
        if i < 1:
            raise IndexError("coefficients start at h_1")
        if i > self.truncation:
            raise TruncationError(f"h_{i} is beyond the truncation {self.truncation}")
        return self.coefficients[i - 1]

    def laurent(self) -> dict[int, Fraction]:
        """Exponent -> coefficient, including ``q^-1`` and the constant."""
        out = {-1: Fraction(1)}
        if self.constant:
            out[0] = self.constant
        for i, c in enumerate(self.coefficients, start=1):
            if c:
                out[i] = c
        return out

    def perturbed(self, index: int, delta) -> "QSeries":
        cs = list(self.coefficients)
        cs[index - 1] += _frac(delta)
        return QSeries(tuple(cs), self.constant)

    @classmethod
    def from_json(cls, path) -> "QSeries":
        data = json.loads(Path(path).read_text())
        return cls(tuple(_frac(c) for c in data["coeffs"]), _frac(data.get("constant", "0")))

    def to_json(self) -> dict:
        return {"constant": str(self.constant), "coeffs": [str(c) for c in self.coefficients]}


def j_series(order: int | None = None) -> QSeries:
    """The modular invariant from the bundled data file, optionally cut to ``order``."""
    text = resources.files("kleinsigma").joinpath("data/j.json").read_text()
    data = json.loads(text)
    coeffs = tuple(Fraction(c) for c in data["coeffs"])
    if order is not None:
        if order > len(coeffs):
            raise TruncationError(f"data file holds {len(coeffs)} coefficients, {order} requested")
        coeffs = coeffs[:order]
    return QSeries(coeffs, Fraction(data["constant"]))


# ---------------------------------------------------------------------------
# bivariate truncated series, dict (i, j) -> Fraction


def _bimul(a: dict, b: dict, degree: int) -> dict:
    out: dict = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            if i1 + i2 + j1 + j2 <= degree:
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, 0) + c1 * c2
    return {k: v for k, v in out.items() if v}


def _divided_difference(f: QSeries, degree: int) -> dict:
    """``v`` with ``pq (f(q) - f(p)) / (p - q) = 1 - v``, up to total degree."""
    v: dict = {}
    for i in range(1, degree):
        hi = f.h(i)
        if not hi:
            continue
        # (q^i - p^i)/(q - p) = sum_{a+b=i-1} q^a p^b, times pq
        for b in range(i):
            a = i - 1 - b
            v[(b + 1, a + 1)] = v.get((b + 1, a + 1), 0) + hi
    return v


@dataclass(frozen=True)
class GrunskyTable:
    """``h_{m,n}`` for ``m, n >= 1`` and weight ``m + n - 1 <= order``."""

    order: int
    entries: dict = field(repr=False)

    def __getitem__(self, mn: tuple[int, int]) -> Fraction:
        m, n = mn
        if m < 1 or n < 1:
            raise IndexError("indices start at 1")
        if m + n - 1 > self.order:
            raise TruncationError(f"h_{{{m},{n}}} is beyond order {self.order}")
        return self.entries.get((m, n), Fraction(0))

    def h(self, i: int) -> Fraction:
        return self[1, i]

    def pairs(self):
        for w in range(1, self.order + 1):
            for m in range(1, w + 1):
                yield m, w + 1 - m

    def is_symmetric(self) -> bool:
        return all(self[m, n] == self[n, m] for m, n in self.pairs())


def grunsky(f: QSeries, order: int | None = None) -> GrunskyTable:
    """Grunsky coefficients by exact expansion of the bivariate logarithm.

    Raises
    ------
    TruncationError
        If ``order`` exceeds the number of known coefficients.
    """
    order = f.truncation if order is None else order
    if order > f.truncation:
        raise TruncationError(f"order {order} needs h_1..h_{order}, series has {f.truncation}")
    degree = order + 1
    v = _divided_difference(f, degree)
    # -log(1 - v) = sum v^k / k; v has no terms below total degree 2
    total: dict = {}
    power = dict(v)
    k = 1
    while power:
        for key, c in power.items():
            total[key] = total.get(key, 0) + Fraction(c) / k
        k += 1
        power = _bimul(power, v, degree)
    return GrunskyTable(order, {key: Fraction(c) for key, c in total.items() if c})


# ---------------------------------------------------------------------------
# Faber polynomials and the Hecke cross-check


def _series_mul(a: dict, b: dict, top: int) -> dict:
    out: dict = {}
    for i, x in a.items():
        for j, y in b.items():
            if i + j <= top:
                out[i + j] = out.get(i + j, 0) + x * y
    return out


def faber(f: QSeries, n: int) -> list[Fraction]:
    """Coefficients ``[c_0, ..., c_n]`` of the monic Faber polynomial ``F_{f,n}``.

    ``F_{f,n}(f(q)) - q^{-n}`` has no pole and no constant term.  Only the
    normal-form part of ``f`` is used.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > f.truncation:
        raise TruncationError(f"Faber polynomial of degree {n} needs h_1..h_{n}")
    base = {-1: Fraction(1), **{i: f.h(i) for i in range(1, n + 1)}}
    # f^k is needed up to q^0; keep q^(n-k) so later factors of 1/q stay exact
    powers = [{0: Fraction(1)}]
    for k in range(1, n + 1):
        powers.append(_series_mul(powers[-1], base, n - k))
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    # kill q^{-n+1}, ..., q^0 from the top down; f^k starts at q^{-k}
    acc = dict(powers[n])
    for k in range(n - 1, -1, -1):
        c = -acc.get(-k, Fraction(0))
        coeffs[k] = c
        for e, val in powers[k].items():
            acc[e] = acc.get(e, 0) + c * val
    return coeffs


def compose(poly: list[Fraction], f: QSeries, top: int) -> dict[int, Fraction]:
    """``poly(f(q))`` as a Laurent series up to ``q^top`` (normal-form ``f``)."""
    n = len(poly) - 1
    if top + n - 1 > f.truncation:
        raise TruncationError("series too short for the requested order")
    base = {-1: Fraction(1), **{i: f.h(i) for i in range(1, top + n)}}
    out: dict = {}
    power = {0: Fraction(1)}
    for k, c in enumerate(poly):
        if k:
            power = _series_mul(power, base, top + n - k)
        for e, val in power.items():
            if e <= top:
                out[e] = out.get(e, 0) + c * val
    return {e: v for e, v in out.items() if v}


def faber_residual(f: QSeries, n: int, top: int | None = None) -> Fraction:
    """Largest deviation of ``F_{f,n}(f) = q^-n + n sum h_{m,n} q^m`` up to ``q^top``."""
    top = f.truncation - n + 1 if top is None else top
    table = grunsky(f, top + n - 1)
    lhs = compose(faber(f, n), f, top)
    rhs = {-n: Fraction(1)}
    for m in range(1, top + 1):
        rhs[m] = n * table[m, n]
    keys = set(lhs) | set(rhs)
    return max(abs(lhs.get(k, 0) - rhs.get(k, 0)) for k in keys)


def hecke_sum(f: QSeries, n: int, top: int) -> dict[int, Fraction]:
    """``sum_{ad=n, 0<=b<d} f((a tau + b)/d)`` up to ``q^top``, including constants.

    The ``d = n`` term reads ``h_{n k}`` into ``q^k``, so ``n * top`` coefficients
    are required.
    """
    if n * top > f.truncation:
        raise TruncationError(f"Hecke sum to q^{top} needs {n * top} coefficients")
    coeff = f.laurent()
    out: dict = {}
    for d in range(1, n + 1):
        if n % d:
            continue
        a = n // d
        # the b-sum keeps q^k only when d | k, with weight d
        for k, c in coeff.items():
            if k % d == 0:
                e = a * k // d
                if e <= top:
                    out[e] = out.get(e, 0) + d * c
    return out


def hecke_faber_residual(f: QSeries, n: int, top: int) -> Fraction:
    """Compare ``n T_n f`` with ``F_{f,n}(f)`` away from the constant term."""
    lhs = hecke_sum(f, n, top)
    rhs = compose(faber(f, n), f, top)
    keys = (set(lhs) | set(rhs)) - {0}
    return max(abs(lhs.get(k, 0) - rhs.get(k, 0)) for k in keys)


# ---------------------------------------------------------------------------
# replicability


@dataclass(frozen=True)
class NortonViolation:
    first: tuple[int, int]
    second: tuple[int, int]
    difference: Fraction


def norton_check(f: QSeries, order: int | None = None) -> list[NortonViolation]:
    """Pairs with equal product and gcd but different Grunsky coefficients.

    An empty list means the series is replicable to the tested order.
    """
    table = grunsky(f, order)
    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for m, n in table.pairs():
        if m <= n:
            groups.setdefault((m * n, gcd(m, n)), []).append((m, n))
    out = []
    for members in groups.values():
        ref = members[0]
        for other in members[1:]:
            diff = table[other] - table[ref]
            if diff:
                out.append(NortonViolation(ref, other, diff))
    return out


# ---------------------------------------------------------------------------
# the coefficient recursion and the low-order identities


def recursion_value(table: GrunskyTable, r: int, s: int) -> Fraction:
    """Right-hand side of the Euler-operator recursion for ``h_{r,s}``.

    ``h_{r,s} = h_{r+s-1} + 1/(r+s) sum_{m<r} sum_{n<s} (m+n) h_{r+s-m-n-1} h_{m,n}``.
    """
    acc = Fraction(0)
    for m in range(1, r):
        for n in range(1, s):
            acc += (m + n) * table.h(r + s - m - n - 1) * table[m, n]
    return table.h(r + s - 1) + acc / (r + s)


@dataclass(frozen=True)
class RecursionReport:
    """Outcome of testing the two-index recursion against the direct expansion.

    The inner summation index is read as ``n``.  Any ``(r, s)`` where the
    result disagrees with the table is recorded.
    """

    inner_index_reading: str
    checked: int
    mismatches: dict

    @property
    def matches(self) -> bool:
        return not self.mismatches


def recursion_report(f: QSeries, order: int | None = None) -> RecursionReport:
    table = grunsky(f, order)
    bad = {}
    count = 0
    for r, s in table.pairs():
        count += 1
        diff = recursion_value(table, r, s) - table[r, s]
        if diff:
            bad[(r, s)] = diff
    return RecursionReport("n", count, bad)


def _identity_rows(t: GrunskyTable):
    h = t.h
    return [
        (6, (3, 2), h(4) + h(1) * h(2)),
        (12, (3, 4), h(6) + h(1) ** 2 * h(2) + 2 * h(2) * h(3) + h(1) * h(4)),
        (10, (5, 2), h(6) + h(1) * h(4) + h(2) * h(3)),
        (14, (7, 2), h(8) + h(1) * h(6) + h(2) * h(5) + h(3) * h(4)),
        (15, (3, 5), h(7) + 2 * h(2) * h(4) + h(3) ** 2 + h(5) * h(1) + h(1) ** 2 * h(3) + h(1) * h(2) ** 2),
    ]


@dataclass(frozen=True)
class IdentityCheck:
    """``h_n = h_{r,s} = polynomial`` for one replicability identity."""

    n: int
    pair: tuple[int, int]
    h_n: Fraction
    h_rs: Fraction
    polynomial: Fraction

    @property
    def holds(self) -> bool:
        return self.h_n == self.h_rs == self.polynomial


def example_identities(f: QSeries) -> list[IdentityCheck]:
    """Five low-order Norton identities evaluated on the Grunsky table."""
    table = grunsky(f, 15)
    return [IdentityCheck(n, rs, table.h(n), table[rs], poly) for n, rs, poly in _identity_rows(table)]


# ---------------------------------------------------------------------------
# gap sequence versus Norton set


@dataclass(frozen=True)
class GapNortonReport:
    gap_sequence: tuple[int, ...]
    norton_set: tuple[int, ...]
    symmetric_difference: tuple[int, ...]
    complement_witnesses: tuple[tuple[int, int, int], ...]
    gap_complement_is_semigroup: bool

    def has_witness(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b), a + b) in self.complement_witnesses

    def to_dict(self) -> dict:
        return {
            "gap_sequence": list(self.gap_sequence),
            "norton_set": list(self.norton_set),
            "symmetric_difference": list(self.symmetric_difference),
            "complement_witnesses": [list(w) for w in self.complement_witnesses],
            "gap_complement_is_semigroup": self.gap_complement_is_semigroup,
        }


def _closure_witnesses(holes: set[int]) -> tuple[tuple[int, int, int], ...]:
    """All ``a + b = c`` with ``a <= b`` outside ``holes`` and ``c`` inside."""
    members = [k for k in range(1, max(holes) + 1) if k not in holes]
    return tuple((a, b, a + b) for a in members for b in members if b >= a and a + b in holes)


def gap_vs_norton(generators=X12_GENERATORS, norton=NORTON_SET) -> GapNortonReport:
    gs = tuple(gaps(generators))
    ns = tuple(sorted(norton))
    diff = tuple(sorted(set(gs) ^ set(ns)))
    return GapNortonReport(gs, ns, diff, _closure_witnesses(set(ns)), not _closure_witnesses(set(gs)))
