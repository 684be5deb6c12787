"""Curve models for the semigroups <3,7,8> and <6,13,14,15,16>.

Each space curve is also a cyclic cover of the line.  A point is stored as
its x-coordinate plus the values of the root functions: for the genus-4
curve ``w3**3 = k3(x)`` and ``w2**3 = k2(x)``, for the genus-12 curve sixth
roots ``w3, w2, wh2`` of ``k3, k2, kh2``.  Every y-coordinate is a monomial in
these roots, which keeps branch points and sheets unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidModuli, NotOnCurve
from .polyring import MultiPoly, RewriteSystem, elementary_symmetric, univariate_from_roots
from .semigroup import H4, H12, NumericalSemigroup

DEFAULT_B4 = (1, 2, 3, 4, 5)
DEFAULT_B12 = (1, 2, 3, 4, 5, 6, 7)

RANK_RTOL = 1e-8


@dataclass(frozen=True)
class RootGroup:
    """Root ``w`` with ``w**n = prod (x - b_j)`` over the listed branch indices."""

    name: str
    indices: tuple[int, ...]


@dataclass(frozen=True)
class CurvePoint:
    x: complex
    w: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", complex(self.x))
        object.__setattr__(self, "w", tuple(complex(v) for v in self.w))


@dataclass(frozen=True, eq=False)
class CurveModel:
    name: str
    semigroup: NumericalSemigroup
    degree: int
    branch_points: tuple[Fraction, ...]
    groups: tuple[RootGroup, ...]
    yvars: tuple[str, ...]
    ymonos: dict
    weights: dict
    relations: dict
    rewrite: RewriteSystem | None
    phi: tuple = ()
    kpolys: dict = field(default_factory=dict)

    # convenience ------------------------------------------------------------
    @property
    def variables(self) -> tuple[str, ...]:
        return ("x",) + self.yvars

    @property
    def genus(self) -> int:
        return self.semigroup.genus

    @property
    def x_weight(self) -> int:
        return self.weights["x"]

    @property
    def branch_complex(self) -> np.ndarray:
        return np.array([complex(b) for b in self.branch_points])

    @property
    def exponents(self) -> tuple[int, ...]:
        """Exponent of each branch factor in the first y-coordinate."""
        mono = self.ymonos[self.yvars[0]]
        e = [0] * len(self.branch_points)
        for g, grp in enumerate(self.groups):
            for j in grp.indices:
                e[j] = mono[g]
        return tuple(e)

    def group_of(self, j: int) -> int:
        for g, grp in enumerate(self.groups):
            if j in grp.indices:
                return g
        raise IndexError(j)

    def riemann_hurwitz_genus(self) -> int:
        """Genus of the smooth model of the cyclic cover from its branching."""
        from math import gcd

        n = self.degree
        e = self.exponents
        total = sum(n - gcd(n, ej) for ej in e)
        total += n - gcd(n, (-sum(e)) % n)
        return (total - 2 * n) // 2 + 1

    def lambdas(self, group: str) -> list[Fraction]:
        grp = next(g for g in self.groups if g.name == group)
        return elementary_symmetric([self.branch_points[j] for j in grp.indices])

    # points -------------------------------------------------------------------
    def k_values(self, x) -> list:
        x = np.asarray(x, dtype=complex)
        out = []
        for grp in self.groups:
            v = np.ones_like(x)
            for j in grp.indices:
                v = v * (x - complex(self.branch_points[j]))
            out.append(v)
        return out

    def point(self, x: complex, sheet: int = 0) -> CurvePoint:
        """Principal roots at ``x`` moved to ``sheet`` by the cyclic action."""
        ks = self.k_values(complex(x))
        w = [complex(k) ** (1.0 / self.degree) if k != 0 else 0j for k in ks]
        return cyclic_action(self, CurvePoint(x, tuple(w)), sheet)

    def branch_point(self, j: int) -> CurvePoint:
        """The unique point over a branch value whose group is fully ramified.

        For groups whose root is not totally ramified the returned point is
        one of the points over ``b_j``; the vanishing root identifies it.
        """
        return self.point(complex(self.branch_points[j]))

    def y_values(self, pt: CurvePoint) -> dict:
        out = {}
        for name in self.yvars:
            v = 1 + 0j
            for wg, e in zip(pt.w, self.ymonos[name]):
                v *= wg ** e if e else 1
            out[name] = v
        return out

    def coords(self, pt: CurvePoint) -> dict:
        d = {"x": pt.x}
        d.update(self.y_values(pt))
        return d

    def residuals(self, pt: CurvePoint) -> dict:
        vals = self.coords(pt)
        out = {}
        for name, f in self.relations.items():
            scale = sum(abs(complex(c)) * abs(_mono_value(m, f.vars, vals))
                        for m, c in f.terms.items())
            out[name] = abs(f.evaluate(vals)) / max(scale, 1.0)
        return out

    def check_point(self, pt: CurvePoint, tol: float = 1e-8) -> None:
        bad = {k: v for k, v in self.residuals(pt).items() if v > tol}
        if bad:
            raise NotOnCurve(f"relations not satisfied: {bad}")

    def sheet_of(self, pt: CurvePoint) -> int:
        """Index s with ``pt = action^s(principal point over pt.x)``."""
        base = self.point(pt.x)
        y0 = self.y_values(base)[self.yvars[0]]
        y1 = self.y_values(pt)[self.yvars[0]]
        if abs(y0) < 1e-300:
            return 0
        ang = np.angle(y1 / y0) / (2 * np.pi) * self.degree
        return int(round(ang)) % self.degree

    def same_point(self, p: CurvePoint, q: CurvePoint, tol: float = 1e-9) -> bool:
        if abs(p.x - q.x) > tol * (1 + abs(p.x)):
            return False
        yp, yq = self.y_values(p), self.y_values(q)
        return all(abs(yp[k] - yq[k]) <= tol * (1 + abs(yp[k])) for k in self.yvars)

    def random_point(self, rng: np.random.Generator, margin: float = 0.25) -> CurvePoint:
        """Uniform x on an annulus around the branch points, uniform sheet."""
        b = self.branch_complex
        center = b.mean()
        spread = max(abs(b - center))
        gap = min(abs(b[i] - b[j]) for i in range(len(b)) for j in range(i))
        r_in, r_out = 0.3, spread + 1.5
        while True:
            r = np.sqrt(rng.uniform(r_in**2, r_out**2))
            t = rng.uniform(0, 2 * np.pi)
            x = center + r * np.exp(1j * t)
            if min(abs(x - b)) > margin * gap:
                break
        return self.point(x, int(rng.integers(self.degree)))


def _mono_value(m, variables, vals):
    v = 1 + 0j
    for name, e in zip(variables, m):
        if e:
            v *= vals[name] ** e
    return v


def cyclic_action(curve: CurveModel, pt: CurvePoint, k: int = 1) -> CurvePoint:
    """Multiply the first root by ``zeta_n**k``; y_a picks up ``zeta**(a mod n)``."""
    k %= curve.degree
    if k == 0:
        return pt
    w = list(pt.w)
    w[0] *= np.exp(2j * np.pi * k / curve.degree)
    return CurvePoint(pt.x, tuple(w))


# model construction -------------------------------------------------------------

def _validate_branch(b, count):
    try:
        b = tuple(Fraction(v) for v in b)
    except (TypeError, ValueError) as exc:
        raise InvalidModuli(f"branch points must be rationals: {exc}") from None
    if len(b) != count:
        raise InvalidModuli(f"expected {count} branch points, got {len(b)}")
    if len(set(b)) != len(b):
        raise InvalidModuli(f"branch points must be distinct: {[str(v) for v in b]}")
    if any(v == 0 for v in b):
        raise InvalidModuli("branch points must be nonzero")
    return b


def _kpoly(variables, b, idx):
    return univariate_from_roots(variables, "x", [b[j] for j in idx])


def build_curve(which: str, branch_points=None) -> CurveModel:
    which = which.lower()
    if which == "x4":
        return _build_x4(branch_points or DEFAULT_B4)
    if which == "x12":
        return _build_x12(branch_points or DEFAULT_B12)
    if which in ("x6", "x7"):
        return _build_plane(which, branch_points or DEFAULT_B4)
    raise ValueError(f"unknown curve {which!r}")


def _build_x4(branch) -> CurveModel:
    b = _validate_branch(branch, 5)
    V = ("x", "y7", "y8")
    x, y7, y8 = (MultiPoly.var(V, v) for v in V)
    k3 = _kpoly(V, b, (0, 1, 2))
    k2 = _kpoly(V, b, (3, 4))
    relations = {
        "f14": y7**2 - y8 * k2,
        "f15": y7 * y8 - k2 * k3,
        "f16": y8**2 - y7 * k3,
    }
    rewrite = RewriteSystem(V, ("y7", "y8"), [
        ((2, 0), y8 * k2),
        ((1, 1), k2 * k3),
        ((0, 2), y7 * k3),
    ])
    one = MultiPoly.const(V, 1)
    # Weierstrass table up to pole order 16; 15 is the product y7*y8.
    table = [(0, one), (3, x), (6, x**2), (7, y7), (8, y8), (9, x**3), (10, x * y7),
             (11, x * y8), (12, x**4), (13, x**2 * y7), (14, x**2 * y8),
             (15, y7 * y8), (16, x**3 * y7)]
    return CurveModel(
        name="x4", semigroup=NumericalSemigroup(H4), degree=3, branch_points=b,
        groups=(RootGroup("w3", (0, 1, 2)), RootGroup("w2", (3, 4))),
        yvars=("y7", "y8"), ymonos={"y7": (1, 2), "y8": (2, 1)},
        weights={"x": 3, "y7": 7, "y8": 8, "w3": 3, "w2": 2},
        relations=relations, rewrite=rewrite, phi=tuple(table),
        kpolys={"k3": k3, "k2": k2},
    )


def _build_x12(branch) -> CurveModel:
    b = _validate_branch(branch, 7)
    V = ("x", "y13", "y14", "y15", "y16")
    x, y13, y14, y15, y16 = (MultiPoly.var(V, v) for v in V)
    k3 = _kpoly(V, b, (0, 1, 2))
    k2 = _kpoly(V, b, (3, 4))
    kh2 = _kpoly(V, b, (5, 6))
    relations = {
        "f1": y13**2 - kh2 * y14,
        "f2": y13 * y14 - k2 * y15,
        "f3": kh2 * y14**2 - y13 * y15 * k2,
        "f4": y14**2 - k2 * y16,
        "f5": y13 * y16 - y14 * y15,
        "f6": y15**2 - kh2 * k3,
        "f7": y14 * y16 - k2 * k3,
        "f8": y15 * y16 - k3 * y13,
        "f9": y16**2 - k3 * y14,
    }
    # y13*y16 is the only quadratic y-monomial kept in normal form.
    rewrite = RewriteSystem(V, ("y13", "y14", "y15", "y16"), [
        ((2, 0, 0, 0), kh2 * y14),
        ((1, 1, 0, 0), k2 * y15),
        ((1, 0, 1, 0), kh2 * y16),
        ((0, 2, 0, 0), k2 * y16),
        ((0, 1, 1, 0), y13 * y16),
        ((0, 0, 2, 0), kh2 * k3),
        ((0, 1, 0, 1), k2 * k3),
        ((0, 0, 1, 1), k3 * y13),
        ((0, 0, 0, 2), k3 * y14),
        ((2, 0, 0, 1), kh2 * y14 * y16),
        ((1, 0, 0, 2), k3 * y13 * y14),
    ])
    table = [(0, MultiPoly.const(V, 1)), (6, x), (12, x**2), (13, y13), (14, y14),
             (15, y15), (16, y16), (18, x**3), (19, x * y13), (20, x * y14),
             (21, x * y15), (22, x * y16), (24, x**4)]
    return CurveModel(
        name="x12", semigroup=NumericalSemigroup(H12), degree=6, branch_points=b,
        groups=(RootGroup("w3", (0, 1, 2)), RootGroup("w2", (3, 4)), RootGroup("wh2", (5, 6))),
        yvars=("y13", "y14", "y15", "y16"),
        ymonos={"y13": (1, 2, 3), "y14": (2, 4, 0), "y15": (3, 0, 3), "y16": (4, 2, 0)},
        weights={"x": 6, "y13": 13, "y14": 14, "y15": 15, "y16": 16,
                 "w3": 3, "w2": 2, "wh2": 2},
        relations=relations, rewrite=rewrite, phi=tuple(table),
        kpolys={"k3": k3, "k2": k2, "kh2": kh2},
    )


def _build_plane(which, branch) -> CurveModel:
    """Singular plane models ``y7**3 = k3 k2**2`` and ``y8**3 = k3**2 k2``."""
    b = _validate_branch(branch, 5)
    yv = "y7" if which == "x6" else "y8"
    V = ("x", yv)
    y = MultiPoly.var(V, yv)
    k3 = _kpoly(V, b, (0, 1, 2))
    k2 = _kpoly(V, b, (3, 4))
    rel = y**3 - (k3 * k2**2 if which == "x6" else k3**2 * k2)
    mono = (1, 2) if which == "x6" else (2, 1)
    return CurveModel(
        name=which, semigroup=NumericalSemigroup(H4), degree=3, branch_points=b,
        groups=(RootGroup("w3", (0, 1, 2)), RootGroup("w2", (3, 4))),
        yvars=(yv,), ymonos={yv: mono},
        weights={"x": 3, yv: 7 if which == "x6" else 8, "w3": 3, "w2": 2},
        relations={"f21" if which == "x6" else "f24": rel}, rewrite=None,
        kpolys={"k3": k3, "k2": k2},
    )


# normal forms and weights --------------------------------------------------------

def normal_form(p: MultiPoly, curve: CurveModel) -> MultiPoly:
    if curve.rewrite is None:
        raise ValueError(f"{curve.name} has no normal form rules")
    return curve.rewrite.reduce(p.extend(curve.variables) if p.vars != curve.variables else p)


def basis_monomial(curve: CurveModel, order: int) -> MultiPoly:
    """The normal-form monomial with the given pole order at infinity."""
    V = curve.variables
    xw = curve.x_weight
    if curve.name == "x4":
        tails = [((), 0), (("y7",), 7), (("y8",), 8)]
    else:
        tails = [((), 0), (("y13",), 13), (("y14",), 14), (("y15",), 15),
                 (("y16",), 16), (("y13", "y16"), 29)]
    for names, w in tails:
        if order >= w and (order - w) % xw == 0:
            exps = {"x": (order - w) // xw}
            for nm in names:
                exps[nm] = 1
            return MultiPoly.monomial(V, exps)
    raise ValueError(f"{order} is a gap")


def phi_basis(curve: CurveModel, count: int) -> list[MultiPoly]:
    """First ``count`` normal-form monomials ordered by pole order."""
    out, order = [], 0
    while len(out) < count:
        if order in curve.semigroup:
            out.append(basis_monomial(curve, order))
        order += 1
    return out


def weight(exps: dict, curve: CurveModel) -> int:
    from .polyring import monomial_weight

    return monomial_weight(exps, curve.weights)


def poly_weight(p: MultiPoly, curve: CurveModel) -> int:
    """Largest weight among the monomials of ``p`` (pole order at infinity)."""
    return max(weight(dict(zip(p.vars, m)), curve) for m in p.terms)


# ideal structure -------------------------------------------------------------------

def minor_checks(curve: CurveModel) -> dict:
    """Exact identities tying the relations to 2x2 minors.

    Returns name -> bool.  Two entries are combinations rather than plain
    minors: the (1,4) and (3,4) minors of the 2x4 matrix for the genus-12
    curve.
    """
    V = curve.variables
    R = curve.relations
    k = curve.kpolys

    def minor(M, i, j):
        return M[0][i] * M[1][j] - M[0][j] * M[1][i]

    if curve.name == "x4":
        x, y7, y8 = (MultiPoly.var(V, v) for v in V)
        M = [[k["k2"], y7, y8], [y7, y8, k["k3"]]]
        return {
            "f14": R["f14"] == -minor(M, 0, 1),
            "f15": R["f15"] == -minor(M, 0, 2),
            "f16": R["f16"] == -minor(M, 1, 2),
        }
    x, y13, y14, y15, y16 = (MultiPoly.var(V, v) for v in V)
    A = [[k["k2"], y14, y16], [y14, y16, k["k3"]]]
    B = [[k["kh2"], y13, y14 * k["kh2"], y15], [y13, y14, y15 * k["k2"], y16]]
    return {
        "f4": R["f4"] == -minor(A, 0, 1),
        "f7": R["f7"] == -minor(A, 0, 2),
        "f9": R["f9"] == -minor(A, 1, 2),
        "f1": R["f1"] == -minor(B, 0, 1),
        "f2": minor(B, 0, 2) == -k["kh2"] * R["f2"],
        "f3": R["f3"] == -minor(B, 1, 2),
        "f5": R["f5"] == minor(B, 1, 3),
        "minor14_via_f8_f1_f9": y16 * minor(B, 0, 3)
        == -(y13 * R["f8"] + k["k3"] * R["f1"] - k["kh2"] * R["f9"]),
        "minor34_via_f6_f7": minor(B, 2, 3) == k["kh2"] * R["f7"] - k["k2"] * R["f6"],
    }


def monomial_curve(which: str) -> tuple[tuple[str, ...], dict]:
    """Generators of the kernel of ``Z_a -> t**a`` for the two semigroups."""
    if which.lower() in ("h4", "x4"):
        V = ("Z3", "Z7", "Z8")
        Z3, Z7, Z8 = (MultiPoly.var(V, v) for v in V)
        return V, {
            "f14": Z7**2 - Z3**2 * Z8,
            "f15": Z7 * Z8 - Z3**5,
            "f16": Z8**2 - Z3**3 * Z7,
        }
    V = ("Z6", "Z13", "Z14", "Z15", "Z16")
    Z6, Z13, Z14, Z15, Z16 = (MultiPoly.var(V, v) for v in V)
    return V, {
        "f1": Z13**2 - Z6**2 * Z14,
        "f2": Z13 * Z14 - Z6**2 * Z15,
        "f3": Z14**2 - Z13 * Z15,
        "f4": Z14**2 - Z6**2 * Z16,
        "f5": Z13 * Z16 - Z14 * Z15,
        "f6": Z15**2 - Z6**5,
        "f7": Z14 * Z16 - Z6**5,
        "f8": Z15 * Z16 - Z6**3 * Z13,
        "f9": Z16**2 - Z6**3 * Z14,
    }


def monomial_kernel_check(which: str) -> dict:
    """Each generator vanishes under ``Z_a -> t**a`` (exact)."""
    V, rels = monomial_curve(which)
    T = ("t",)
    sub = {v: MultiPoly.monomial(T, {"t": int(v[1:])}) for v in V}
    return {name: f.substitute(sub, T).is_zero() for name, f in rels.items()}


# smoothness -------------------------------------------------------------------------

def _rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def jacobian_matrix(relations: dict, variables, values: dict) -> np.ndarray:
    rows = []
    for f in relations.values():
        rows.append([complex(f.diff(v).evaluate(values)) for v in variables])
    return np.array(rows)


def jacobian_rank(curve: CurveModel, pt: CurvePoint, check: bool = True) -> int:
    if check:
        curve.check_point(pt)
    M = jacobian_matrix(curve.relations, curve.variables, curve.coords(pt))
    return _rank(M)


def chart_relations(curve: CurveModel) -> tuple[tuple[str, ...], dict]:
    """Relations in ``xb = 1/x``, ``yb_a = y_a / x**3``, cleared of poles."""
    W = ("xb",) + tuple(v + "b" for v in curve.yvars)
    Xv = MultiPoly.var(("X",) + W[1:], "X")
    big = ("X",) + W[1:]
    sub = {"x": Xv}
    for v in curve.yvars:
        sub[v] = MultiPoly.var(big, v + "b") * Xv**3
    out = {}
    for name, f in curve.relations.items():
        g = f.substitute(sub, big)
        d = g.degree("X")
        terms = {}
        for m, c in g.terms.items():
            terms[(d - m[0],) + m[1:]] = c
        h = MultiPoly(W, terms)
        # strip a common power of xb
        low = min(m[0] for m in h.terms)
        if low:
            h = MultiPoly(W, {(m[0] - low,) + m[1:]: c for m, c in h.terms.items()})
        out[name] = h
    return W, out


def chart_coords(curve: CurveModel, pt: CurvePoint | None) -> dict:
    """Second-chart coordinates of ``pt``; ``None`` means the point at infinity."""
    if pt is None:
        return {"xb": 0j, **{v + "b": 0j for v in curve.yvars}}
    ys = curve.y_values(pt)
    out = {"xb": 1 / pt.x}
    for v in curve.yvars:
        out[v + "b"] = ys[v] / pt.x**3
    return out


def second_chart_rank(curve: CurveModel, pt: CurvePoint | None = None) -> int:
    W, rels = chart_relations(curve)
    vals = chart_coords(curve, pt)
    return _rank(jacobian_matrix(rels, W, vals))


def project_x12_to_x4(pt: CurvePoint, x4: CurveModel) -> CurvePoint:
    """Send y7, y8 to y14, y16: cube roots are squares of the sixth roots."""
    return CurvePoint(pt.x, (pt.w[0] ** 2, pt.w[1] ** 2))


def lift_x4_to_x12(pt: CurvePoint, x4: CurveModel, x12: CurveModel) -> list[CurvePoint]:
    """The two genus-12 points lying over a genus-4 point."""
    target = x4.y_values(pt)
    out = []
    for cand in _fibre(x12, pt.x):
        ys = x12.y_values(cand)
        if all(abs(ys[a] - target[b]) <= 1e-9 * (1 + abs(target[b]))
               for a, b in (("y14", "y7"), ("y16", "y8"))):
            out.append(cand)
    return out


def _fibre(curve: CurveModel, x: complex) -> list[CurvePoint]:
    return [curve.point(x, s) for s in range(curve.degree)]
