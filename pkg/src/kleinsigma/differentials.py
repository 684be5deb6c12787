"""Holomorphic and second-kind differentials, the kernel Sigma and the 2-form.

A one-form is stored exactly as ``numerator/denominator * dx`` with both
parts polynomials in the curve coordinates (the denominator a single
y-monomial).  For numerics the same form is rewritten in root monomials,
``sum_E p_E(x) * prod_g w_g**E_g`` with every exponent in ``(-n, 0]``, which
stays finite and unambiguous up to the branch points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .curves import CurveModel, CurvePoint, normal_form
from .errors import ConditioningError, PoleAtDiagonal
from .polyring import MultiPoly, RewriteSystem

# ---------------------------------------------------------------------------
# root-monomial bookkeeping


def y_exponents(curve: CurveModel, mono, variables=None) -> tuple[int, ...]:
    """Root exponents of the y-part of a monomial over ``curve.variables``."""
    variables = variables or curve.variables
    E = [0] * len(curve.groups)
    for name, e in zip(variables, mono):
        if e and name in curve.ymonos:
            for g, m in enumerate(curve.ymonos[name]):
                E[g] += e * m
    return tuple(E)


def _x_power(mono, variables) -> int:
    return mono[variables.index("x")]


def _kpoly_coeffs(curve: CurveModel, g: int) -> np.ndarray:
    c = np.array([1.0 + 0j])
    for j in curve.groups[g].indices:
        c = np.convolve(c, [-complex(curve.branch_points[j]), 1.0])
    return c


def root_monomial_to_ring(curve: CurveModel, E) -> MultiPoly:
    """Express ``prod w_g**E_g`` (all E_g >= 0) as a ring element."""
    V = curve.variables
    n = curve.degree
    tails = [{}] + [{y: 1} for y in curve.yvars]
    if curve.name == "x12":
        tails.append({"y13": 1, "y16": 1})
    for tail in tails:
        m = [0] * len(curve.groups)
        for y, e in tail.items():
            for g, v in enumerate(curve.ymonos[y]):
                m[g] += e * v
        diff = [a - b for a, b in zip(E, m)]
        if all(d >= 0 and d % n == 0 for d in diff):
            p = MultiPoly.monomial(V, tail)
            for g, d in enumerate(diff):
                kname = _group_k(curve, g)
                p = p * curve.kpolys[kname] ** (d // n)
            return p
    raise ValueError(f"root monomial {E} is not a polynomial on {curve.name}")


def _group_k(curve: CurveModel, g: int) -> str:
    return {"w3": "k3", "w2": "k2", "wh2": "kh2"}[curve.groups[g].name]


@dataclass(frozen=True)
class OneForm:
    """``numerator / denominator * dx`` over the curve coordinates."""

    numerator: MultiPoly
    denominator: MultiPoly
    label: str = ""

    def w_terms(self, curve: CurveModel) -> tuple:
        return _w_terms(curve, self)

    def value(self, curve: CurveModel, pt: CurvePoint) -> complex:
        """Coefficient of dx at a finite point."""
        return evaluate_w_terms(self.w_terms(curve), pt.x, pt.w)

    def __str__(self):
        return f"({self.numerator}) dx / ({self.denominator})"


def _w_terms(curve: CurveModel, form: OneForm) -> tuple:
    den = form.denominator
    if len(den.terms) != 1:
        raise ValueError("denominator must be a single monomial")
    (dmono, dcoef), = den.terms.items()
    if _x_power(dmono, den.vars):
        raise ValueError("denominator may not involve x")
    Ed = y_exponents(curve, dmono, den.vars)
    n = curve.degree
    acc: dict = {}
    for mono, c in form.numerator.terms.items():
        E = [a - b for a, b in zip(y_exponents(curve, mono, form.numerator.vars), Ed)]
        poly = np.zeros(_x_power(mono, form.numerator.vars) + 1, dtype=complex)
        poly[-1] = complex(c / dcoef)
        for g in range(len(E)):
            q = -((-E[g]) // n)  # ceil(E/n): brings E into (-n, 0]
            if q < 0:
                raise ValueError("form has a pole at a branch point")
            for _ in range(q):
                poly = np.convolve(poly, _kpoly_coeffs(curve, g))
            E[g] -= n * q
        key = tuple(E)
        old = acc.get(key)
        if old is None:
            acc[key] = poly
        else:
            size = max(len(old), len(poly))
            acc[key] = np.pad(old, (0, size - len(old))) + np.pad(poly, (0, size - len(poly)))
    return tuple((k, v) for k, v in sorted(acc.items()))


def evaluate_w_terms(terms, x, w):
    """Evaluate ``sum p_E(x) prod w**E``; ``x`` and each ``w[g]`` may be arrays."""
    total = 0
    for E, poly in terms:
        v = np.polynomial.polynomial.polyval(x, poly)
        for wg, e in zip(w, E):
            if e:
                v = v * wg ** e
        total = total + v
    return total


# ---------------------------------------------------------------------------
# bases


def top_denominator(curve: CurveModel) -> MultiPoly:
    V = curve.variables
    if curve.name == "x4":
        return MultiPoly.monomial(V, {"y7": 1, "y8": 1}, 3)
    return MultiPoly.monomial(V, {"y13": 1, "y16": 1}, 6)


def h1_monomials(curve: CurveModel, count: int) -> list[MultiPoly]:
    """Numerators of the holomorphic forms over the top denominator.

    On the genus-4 curve these are ``y7, y8, x y7, x y8, x^2 y7, ...`` (then
    the ordinary basis shifted by five); on the genus-12 curve the ordinary
    monomial basis.
    """
    from .curves import phi_basis

    V = curve.variables
    if curve.name == "x12":
        return phi_basis(curve, count)
    x, y7, y8 = (MultiPoly.var(V, v) for v in V)
    head = [y7, y8, x * y7, x * y8, x**2 * y7, x**2 * y8]
    if count <= len(head):
        return head[:count]
    tail = phi_basis(curve, count + 5)[11:]
    return (head + tail)[:count]


def holomorphic_basis(curve: CurveModel) -> list[OneForm]:
    """``nu_i = phi_(i-1) dx / D`` with D the top denominator, simplified."""
    V = curve.variables
    if curve.name == "x4":
        x = MultiPoly.var(V, "x")
        d8 = MultiPoly.monomial(V, {"y8": 1}, 3)
        d7 = MultiPoly.monomial(V, {"y7": 1}, 3)
        one = MultiPoly.const(V, 1)
        return [OneForm(one, d8, "nu1"), OneForm(one, d7, "nu2"),
                OneForm(x, d8, "nu3"), OneForm(x, d7, "nu4")]
    x = MultiPoly.var(V, "x")
    one = MultiPoly.const(V, 1)
    D = top_denominator(curve)

    def single(y, c=6):
        return MultiPoly.monomial(V, {y: 1}, c)

    return [
        OneForm(one, D, "nu1"), OneForm(x, D, "nu2"), OneForm(x**2, D, "nu3"),
        OneForm(one, single("y16"), "nu4"), OneForm(one, single("y15"), "nu5"),
        OneForm(one, single("y14"), "nu6"), OneForm(one, single("y13"), "nu7"),
        OneForm(x**3, D, "nu8"), OneForm(x, single("y16"), "nu9"),
        OneForm(x, single("y15"), "nu10"), OneForm(x, single("y14"), "nu11"),
        OneForm(x, single("y13"), "nu12"),
    ]


def holomorphic_basis_by_rule(curve: CurveModel) -> list[OneForm]:
    """The unsimplified ``phi_(i-1) dx / D`` (used to cross-check the table)."""
    D = top_denominator(curve)
    return [OneForm(p, D, f"nu{i + 1}") for i, p in enumerate(h1_monomials(curve, curve.genus))]


def _lam(curve: CurveModel):
    L = {"l3": [None] + curve.lambdas("w3"), "l2": [None] + curve.lambdas("w2")}
    if curve.name == "x12":
        L["lh2"] = [None] + curve.lambdas("wh2")
    return L


def _upoly(V, coeffs_desc) -> MultiPoly:
    """Polynomial in x from coefficients listed from the top degree down."""
    return MultiPoly.univariate(V, "x", list(reversed(coeffs_desc)))


def second_kind_reference(curve: CurveModel) -> list[OneForm]:
    """Reference second-kind basis in closed form, with its original overall sign."""
    V = curve.variables
    L = _lam(curve)
    l3, l2 = L["l3"], L["l2"]
    if curve.name == "x4":
        d7 = MultiPoly.monomial(V, {"y7": 1}, 3)
        d8 = MultiPoly.monomial(V, {"y8": 1}, 3)
        n4 = _upoly(V, [-1, 0, 0])
        n3 = _upoly(V, [-2, -l2[1], 0])
        n2 = _upoly(V, [-4, -(3 * l3[1] + 2 * l2[1]), -(2 * l3[2] + l2[1] * l3[1]), -l3[3]])
        n1 = _upoly(V, [-5, -(3 * l3[1] + 4 * l2[1]),
                        -(l3[2] + 2 * l2[1] * l3[1] + 3 * l2[2]), -l2[2] * l3[1]])
        return [OneForm(n1, d7, "nuII1"), OneForm(n2, d8, "nuII2"),
                OneForm(n3, d7, "nuII3"), OneForm(n4, d8, "nuII4")]
    h = L["lh2"]

    def den(*ys):
        return MultiPoly.monomial(V, {y: 1 for y in ys}, 6)

    c1 = [23, 19 * l2[1] + 18 * l3[1] + 20 * h[1],
          14 * l3[1] * l2[1] + 15 * l3[1] * h[1] + 16 * l2[1] * h[1]
          + 13 * l3[2] + 15 * l2[2] + 17 * h[2],
          10 * l3[1] * l2[2] + 9 * l3[2] * l2[1] + 10 * l3[2] * h[1] + 12 * l2[2] * h[1]
          + 12 * l3[1] * h[2] + 13 * l2[1] * h[2] + 8 * l3[3] + 11 * l3[1] * l2[1] * h[1],
          4 * l3[3] * l2[1] + 5 * l3[2] * l2[2] + 5 * l3[3] * h[1] + 7 * l3[2] * h[2]
          + 9 * l2[2] * h[2] + 6 * l3[2] * l2[1] * h[1] + 8 * l3[1] * l2[1] * h[2]
          + 7 * l3[1] * l2[2] * h[1],
          3 * l3[2] * l2[1] * h[2] + 4 * l3[1] * l2[2] * h[2] + 2 * l3[2] * l2[2] * h[1]
          + l3[3] * l2[1] * h[1] + 2 * l3[3] * h[2]]
    c2 = [17, 13 * l2[1] + 12 * l3[1] + 14 * h[1],
          10 * l2[1] * h[1] + 9 * l3[1] * h[1] + 8 * l3[1] * l2[1] + 11 * h[2] + 9 * l2[2] + 7 * l3[2],
          7 * l2[1] * h[2] + 6 * l3[1] * h[2] + 4 * l3[1] * l2[2] + 6 * l2[2] * h[1]
          + 4 * l3[2] * h[1] + 3 * l3[2] * l2[1] + 2 * l3[3] + 5 * l3[1] * l2[1] * h[1],
          l3[1] * l2[2] * h[1] + 2 * l3[1] * l2[1] * h[2] + 3 * l2[2] * h[2] + l3[2] * h[2]]
    # leading sign opposite to its neighbours
    c3 = [11, 6 * l3[1] + 7 * l2[1] + 8 * h[1],
          4 * l2[1] * h[1] + 3 * l3[1] * h[1] + 2 * l3[1] * l2[1] + l3[2] + 3 * l2[2] + 5 * h[2],
          -3 * l3[2] * l2[1] + l2[1] * h[2]]
    # x-coefficient taken as a sum of the two terms
    c4 = [8, 4 * l2[1] + 6 * l3[1], 2 * l3[1] * l2[1] + 4 * l3[2], 2 * l3[3]]
    c5 = [9, 6 * h[1] + 6 * l3[1], 3 * l3[1] * h[1] + 3 * h[2] + 3 * l3[2], 0]
    c6 = [10, 8 * l2[1] + 6 * l3[1], 4 * l3[1] * l2[1] + 2 * l3[2] + 6 * l2[2], 2 * l3[1] * l2[2]]
    # the last group carries no power of x here
    c7 = [7, 6 * l3[1] + 5 * l2[1] + 4 * h[1],
          3 * l2[2] + 3 * l3[1] * h[1] - h[2] + 5 * l3[2] + 2 * l2[1] * h[1] + 4 * l3[1] * l2[1],
          l3[1] * l2[1] * h[1] + 2 * l3[2] * h[1] + 3 * l3[2] * l2[1] + 2 * l3[1] * l2[2] + 4 * l3[3],
          0,
          -2 * l3[3] * l2[1] - l3[2] * l2[2] - l3[3] * h[1]]
    c8 = [5, 2 * h[1] + l2[1], 0]
    forms = [
        (-_upoly(V, c1), den("y13")), (-_upoly(V, c2), den("y13")),
        (_upoly(V, c3), den("y13")), (-_upoly(V, c4), den("y14")),
        (-_upoly(V, c5), den("y15")), (-_upoly(V, c6), den("y16")),
        (-_upoly(V, c7), den("y13", "y16")), (-_upoly(V, c8), den("y13")),
        (_upoly(V, [-2, 0, 0]), den("y14")), (_upoly(V, [-3, 0, 0]), den("y15")),
        (_upoly(V, [-4, -2 * l2[1], 0]), den("y16")),
        (_upoly(V, [-1, 0, 0, 0, 0]), den("y13", "y16")),
    ]
    return [OneForm(nm, d, f"nuII{i + 1}") for i, (nm, d) in enumerate(forms)]


# ---------------------------------------------------------------------------
# two-point algebra


def point_vars(curve: CurveModel, k: int) -> tuple[str, ...]:
    return tuple(f"{v}_{k}" for v in curve.variables)


def two_point_vars(curve: CurveModel) -> tuple[str, ...]:
    return point_vars(curve, 1) + point_vars(curve, 2)


def at_point(p: MultiPoly, curve: CurveModel, k: int, variables) -> MultiPoly:
    """Rename curve variables to their copy for point ``k`` inside ``variables``."""
    return p.rename({v: f"{v}_{k}" for v in curve.variables}).extend(variables)


@lru_cache(maxsize=None)
def _two_point_rewrite(curve: CurveModel) -> RewriteSystem:
    V2 = two_point_vars(curve)
    rules = []
    rewritten = []
    for k in (1, 2):
        mapping = {v: f"{v}_{k}" for v in curve.variables}
        sys_k = curve.rewrite.relabel(mapping, V2)
        rewritten.append(sys_k)
    # merge: leads over both sets of y-variables
    ys = [f"{y}_{k}" for k in (1, 2) for y in curve.yvars]
    ny = len(curve.yvars)
    for k, sys_k in enumerate(rewritten):
        for lead, repl in sys_k.rules:
            full = [0] * (2 * ny)
            full[k * ny:(k + 1) * ny] = lead
            rules.append((tuple(full), repl))
    return RewriteSystem(V2, ys, rules)


def two_point_normal_form(curve: CurveModel, p: MultiPoly) -> MultiPoly:
    return _two_point_rewrite(curve).reduce(p)


def derivative_numerators(curve: CurveModel) -> dict:
    """``D * dy_a/dx`` as ring elements, D the top denominator without its constant.

    Uses ``d log w_g / dx = k_g' / (n k_g)``.
    """
    D = top_denominator(curve)
    (dmono, dcoef), = D.terms.items()
    Ed = y_exponents(curve, dmono)
    n = curve.degree
    out = {}
    for y in curve.yvars:
        m = curve.ymonos[y]
        total = MultiPoly(curve.variables)
        for g, mg in enumerate(m):
            if not mg:
                continue
            E = [a + b for a, b in zip(Ed, m)]
            E[g] -= n
            kprime = curve.kpolys[_group_k(curve, g)].diff("x")
            total = total + root_monomial_to_ring(curve, E) * kprime * Fraction(mg * dcoef, n)
        out[y] = normal_form(total, curve)
    return out


def kernel_numerator(curve: CurveModel) -> MultiPoly:
    """Numerator of Sigma(P1, P2) over the two-point variables."""
    V2 = two_point_vars(curve)

    def y(name, k):
        return MultiPoly.var(V2, f"{name}_{k}")

    if curve.name == "x4":
        return y("y7", 1) * y("y8", 1) + y("y7", 1) * y("y8", 2) + y("y7", 2) * y("y8", 1)
    return (y("y13", 1) * y("y16", 1) + y("y13", 2) * y("y16", 1) + y("y13", 1) * y("y16", 2)
            + y("y14", 2) * y("y15", 1) + y("y14", 1) * y("y15", 2) + y("y14", 2) * y("y15", 2))


def total_derivative(curve: CurveModel, p: MultiPoly, k: int) -> MultiPoly:
    """``D_k * d/dx_k`` applied along the curve, as a polynomial."""
    V2 = p.vars
    D = top_denominator(curve)
    Dk = at_point(D, curve, k, V2)
    dn = derivative_numerators(curve)
    out = Dk * p.diff(f"x_{k}")
    for y in curve.yvars:
        out = out + at_point(dn[y], curve, k, V2) * p.diff(f"{y}_{k}")
    return out


def fundamental_numerator(curve: CurveModel, second_kind: tuple | None = None) -> MultiPoly:
    """``F`` with ``Omega = F dx1 dx2 / ((x1 - x2)^2 D1 D2)`` in normal form.

    ``Omega(P1, P2) = d_{P2} Sigma(P1, P2) + sum_i nu_i(P1) nu_II,i(P2)``.
    """
    key = (_curve_key(curve), second_kind)
    if key not in _F_CACHE:
        _F_CACHE[key] = _build_fundamental(curve, second_kind)
    return _F_CACHE[key]


def _build_fundamental(curve: CurveModel, second_kind) -> MultiPoly:
    V2 = two_point_vars(curve)
    N = kernel_numerator(curve)
    D = top_denominator(curve)
    x1, x2 = MultiPoly.var(V2, "x_1"), MultiPoly.var(V2, "x_2")
    D2 = at_point(D, curve, 2, V2)
    F = total_derivative(curve, N, 2) * (x1 - x2) + N * D2
    forms2 = second_kind if second_kind is not None else tuple(second_kind_basis(curve))
    nums1 = h1_monomials(curve, curve.genus)
    for phi, f2 in zip(nums1, forms2):
        F = F + (x1 - x2) ** 2 * at_point(phi, curve, 1, V2) * _over_top(curve, f2, 2, V2)
    return two_point_normal_form(curve, F)


def _over_top(curve: CurveModel, form: OneForm, k: int, V2) -> MultiPoly:
    """Numerator of ``form`` rewritten over the top denominator, at point ``k``."""
    D = top_denominator(curve)
    (dmono, dcoef), = D.terms.items()
    (fmono, fcoef), = form.denominator.terms.items()
    E = [a - b for a, b in zip(y_exponents(curve, dmono), y_exponents(curve, fmono))]
    mult = root_monomial_to_ring(curve, E) * (dcoef / fcoef)
    return at_point(normal_form(form.numerator * mult, curve), curve, k, V2)


def two_point_values(curve: CurveModel, P: CurvePoint, Q: CurvePoint) -> dict:
    vals = {}
    for k, pt in ((1, P), (2, Q)):
        for name, v in curve.coords(pt).items():
            vals[f"{name}_{k}"] = v
    return vals


def _top_value(curve: CurveModel, pt: CurvePoint) -> complex:
    return complex(top_denominator(curve).evaluate(curve.coords(pt)))


# ---------------------------------------------------------------------------
# kernel, identities and the 2-form


def sigma_kernel(curve: CurveModel, P: CurvePoint, Q: CurvePoint) -> complex:
    """Coefficient of ``dx_P`` in Sigma(P, Q)."""
    dx = P.x - Q.x
    if abs(dx) < 1e-14 * (1 + abs(P.x)):
        if curve.same_point(P, Q):
            raise PoleAtDiagonal("Sigma(P, Q) has a pole at P = Q")
        return _kernel_equal_x(curve, P, Q)
    vals = two_point_values(curve, P, Q)
    return complex(kernel_numerator(curve).evaluate(vals)) / (dx * _top_value(curve, P))


def _kernel_equal_x(curve: CurveModel, P: CurvePoint, Q: CurvePoint, h: float = 1e-4) -> complex:
    """Removable singularity at equal x on different sheets: average a small circle."""
    vals = []
    for t in np.exp(2j * np.pi * np.arange(8) / 8):
        Pt = continue_point(curve, P, P.x + h * t)
        vals.append(sigma_kernel(curve, Pt, Q))
    return complex(np.mean(vals))


def continue_point(curve: CurveModel, pt: CurvePoint, x: complex) -> CurvePoint:
    """Short analytic continuation of ``pt`` to abscissa ``x`` (no branch point crossed)."""
    k0 = curve.k_values(pt.x)
    k1 = curve.k_values(complex(x))
    n = curve.degree
    w = tuple(wg * (complex(b) / complex(a)) ** (1.0 / n) for wg, a, b in zip(pt.w, k0, k1))
    return CurvePoint(complex(x), w)


def d_sigma(curve: CurveModel, P: CurvePoint, Q: CurvePoint) -> complex:
    """Coefficient of ``dx_P dx_Q`` in ``d_Q Sigma(P, Q)``."""
    vals = two_point_values(curve, P, Q)
    N = kernel_numerator(curve)
    dN = total_derivative(curve, N, 2)
    dx = P.x - Q.x
    DP, DQ = _top_value(curve, P), _top_value(curve, Q)
    num = complex(dN.evaluate(vals)) * dx + complex(N.evaluate(vals)) * DQ
    return num / (dx**2 * DP * DQ)


def identity_residual(curve: CurveModel, P: CurvePoint, Q: CurvePoint, second_kind=None) -> float:
    """Relative residual of the antisymmetrised d-Sigma identity at (P, Q)."""
    nus = holomorphic_basis(curve)
    nu2 = second_kind if second_kind is not None else second_kind_basis(curve)
    lhs = d_sigma(curve, P, Q) - d_sigma(curve, Q, P)
    terms = [a.value(curve, Q) * b.value(curve, P) - a.value(curve, P) * b.value(curve, Q)
             for a, b in zip(nus, nu2)]
    rhs = sum(terms)
    scale = max(abs(lhs), max(abs(t) for t in terms), 1e-300)
    return abs(lhs - rhs) / scale


def omega(curve: CurveModel, P: CurvePoint, Q: CurvePoint) -> complex:
    """Coefficient of ``dx_P dx_Q`` in the fundamental 2-form."""
    F = fundamental_numerator(curve)
    vals = two_point_values(curve, P, Q)
    dx = P.x - Q.x
    return complex(F.evaluate(vals)) / (dx**2 * _top_value(curve, P) * _top_value(curve, Q))


def omega_direct(curve: CurveModel, P: CurvePoint, Q: CurvePoint) -> complex:
    """The same 2-form assembled from Sigma and the bases, without F."""
    nus = holomorphic_basis(curve)
    nu2 = second_kind_basis(curve)
    return d_sigma(curve, P, Q) + sum(a.value(curve, P) * b.value(curve, Q) for a, b in zip(nus, nu2))


def symmetry_residual(curve: CurveModel, P: CurvePoint, Q: CurvePoint) -> float:
    a, b = omega(curve, P, Q), omega(curve, Q, P)
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def f_symmetric_exact(curve: CurveModel) -> bool:
    """``F(P1, P2) = F(P2, P1)`` in the two-point ring (exact)."""
    F = fundamental_numerator(curve)
    swap = {}
    for v in curve.variables:
        swap[f"{v}_1"] = f"{v}_2"
        swap[f"{v}_2"] = f"{v}_1"
    G = F.rename(swap).extend(F.vars)
    return two_point_normal_form(curve, F - G).is_zero()


# ---------------------------------------------------------------------------
# second-kind basis with validation / re-derivation


def _identity_design(curve: CurveModel, pairs, candidates):
    """Linear system for coefficients of the second kind forms."""
    nus = holomorphic_basis(curve)
    g = curve.genus
    K = len(candidates)
    rows, rhs = [], []
    for P, Q in pairs:
        nP = np.array([f.value(curve, P) for f in nus])
        nQ = np.array([f.value(curve, Q) for f in nus])
        cP = np.array([f.value(curve, P) for f in candidates])
        cQ = np.array([f.value(curve, Q) for f in candidates])
        # sum_i sum_k C_ik (nu_i(Q) c_k(P) - nu_i(P) c_k(Q))
        row = (np.outer(nQ, cP) - np.outer(nP, cQ)).reshape(g * K)
        lhs = d_sigma(curve, P, Q) - d_sigma(curve, Q, P)
        scale = 1.0 / max(abs(lhs), 1.0)
        rows.append(row * scale)
        rhs.append(lhs * scale)
    return np.array(rows), np.array(rhs)


def candidate_forms(curve: CurveModel, max_weight: int) -> list[OneForm]:
    """``phi_k dx / D`` for every normal-form monomial of weight <= max_weight."""
    from .curves import basis_monomial

    D = top_denominator(curve)
    out = []
    for w in range(max_weight + 1):
        if w not in curve.semigroup:
            continue
        form = OneForm(basis_monomial(curve, w), D, f"phi{w}")
        try:
            form.w_terms(curve)
        except ValueError:
            continue  # pole at a branch point
        out.append(form)
    return out


def rederive_second_kind(curve: CurveModel, rng=None, reference=None) -> tuple[list[OneForm], dict]:
    """Solve the d-Sigma identity for the second kind basis.

    The solution is unique up to adding ``sum_j S_ij nu_j`` with S symmetric.
    Starting from ``reference``, the unavoidable corrections are the
    non-holomorphic ones plus the antisymmetric holomorphic part; each
    antisymmetric pair is charged to a form that already needs changing
    (else the higher index), so untouched entries stay verbatim.
    Coefficients are rationalised and the result re-checked.
    """
    rng = np.random.default_rng(12345) if rng is None else rng
    reference = reference if reference is not None else second_kind_signed(curve)
    g = curve.genus
    top_w = max(_form_weight(curve, f) for f in reference)
    cands = candidate_forms(curve, top_w)
    K = len(cands)
    pairs = [(curve.random_point(rng), curve.random_point(rng)) for _ in range(2 * g * K)]
    A, b = _identity_design(curve, pairs, cands)
    R = np.array([_coords_in(curve, f, cands) for f in reference])
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    X, *_ = np.linalg.lstsq(A / scale, b - A @ R.reshape(-1), rcond=None)
    X = (X / scale).reshape(g, K)
    X = np.array(_rationalise(X, _denominator_bound(curve)), dtype=object)

    hol = _holomorphic_columns(curve, cands)
    forced = {i for i in range(g) if any(X[i, k] != 0 for k in range(K) if k not in hol)}
    H = np.array([[X[i, hol[j]] for j in range(g)] for i in range(g)], dtype=object)
    newH = np.zeros((g, g), dtype=object)
    for i in range(g):
        for j in range(i + 1, g):
            twice_a = H[i, j] - H[j, i]
            if twice_a == 0:
                continue
            if i in forced or (j not in forced and i > j):
                newH[i, j] = twice_a
                forced.add(i)
            else:
                newH[j, i] = -twice_a
                forced.add(j)
    for i in range(g):
        for j in range(g):
            X[i, hol[j]] = newH[i, j]

    V = curve.variables
    D = top_denominator(curve)
    forms, report = [], {}
    for i in range(g):
        if i not in forced:
            forms.append(reference[i])
            report[reference[i].label] = False
            continue
        num = _over_top(curve, reference[i], 1, two_point_vars(curve))
        num = _drop_point_index(curve, num)
        for k in range(K):
            if X[i, k]:
                num = num + cands[k].numerator * X[i, k]
        forms.append(OneForm(num, D, reference[i].label))
        report[reference[i].label] = True
    worst = max_identity_residual(curve, forms)
    if worst > 1e-9:
        raise ConditioningError(f"re-derived second kind forms fail the identity ({worst:.2e})")
    return forms, report


def _denominator_bound(curve: CurveModel) -> int:
    from math import lcm

    L = 1
    for b in curve.branch_points:
        L = lcm(L, Fraction(b).denominator)
    return 1000 * L ** 6


def _holomorphic_columns(curve: CurveModel, cands: list[OneForm]) -> list[int]:
    index = {}
    for k, c in enumerate(cands):
        (m, _), = c.numerator.terms.items()
        index[m] = k
    out = []
    for phi in h1_monomials(curve, curve.genus):
        (m, _), = phi.terms.items()
        out.append(index[m])
    return out


def _drop_point_index(curve: CurveModel, p: MultiPoly) -> MultiPoly:
    nv = len(curve.variables)
    back = p.rename({f"{v}_1": v for v in curve.variables})
    return MultiPoly(curve.variables, {m[:nv]: c for m, c in back.terms.items()})


def _form_weight(curve: CurveModel, form: OneForm) -> int:
    from .curves import poly_weight

    (dmono, _), = form.denominator.terms.items()
    dw = sum(curve.weights[v] * e for v, e in zip(form.denominator.vars, dmono))
    D = top_denominator(curve)
    (tmono, _), = D.terms.items()
    tw = sum(curve.weights[v] * e for v, e in zip(D.vars, tmono))
    return poly_weight(form.numerator, curve) - dw + tw


def _coords_in(curve: CurveModel, form: OneForm, cands: list[OneForm]) -> np.ndarray:
    back = _drop_point_index(curve, _over_top(curve, form, 1, two_point_vars(curve)))
    out = np.zeros(len(cands))
    index = {}
    for k, c in enumerate(cands):
        (m, _), = c.numerator.terms.items()
        index[m] = k
    for m, c in back.terms.items():
        if m not in index:
            raise ValueError(f"monomial {m} outside the candidate span")
        out[index[m]] = float(c)
    return out


def _rationalise(C: np.ndarray, max_den: int = 10**6) -> list[list[Fraction]]:
    out = []
    for row in C:
        out.append([Fraction(float(v)).limit_denominator(max_den) if abs(v) > 1e-6 else Fraction(0)
                    for v in np.real(row)])
    return out


def second_kind_signed(curve: CurveModel) -> list[OneForm]:
    """Reference forms with the overall sign reversed.

    With the original signs the antisymmetrised d-Sigma identity holds with
    the opposite sign and the 2-form is not symmetric.  Reversing every
    numerator fixes both and gives the expected limit of F at infinity.
    """
    return [OneForm(-f.numerator, f.denominator, f.label) for f in second_kind_reference(curve)]


def _curve_key(curve: CurveModel) -> tuple:
    return curve.name, tuple(curve.branch_points)


_SECOND_KIND: dict = {}
_F_CACHE: dict = {}


def _second_kind_cached(curve: CurveModel) -> tuple:
    key = _curve_key(curve)
    if key not in _SECOND_KIND:
        _SECOND_KIND[key] = _derive_second_kind(curve)
    return _SECOND_KIND[key]


def _derive_second_kind(curve: CurveModel) -> tuple:
    forms = second_kind_signed(curve)
    report = {f.label: False for f in forms}
    if max_identity_residual(curve, forms) > 1e-9:
        forms, report = rederive_second_kind(curve, reference=forms)
    return tuple(forms), tuple(k for k, v in report.items() if v)


def second_kind_basis(curve: CurveModel) -> list[OneForm]:
    """Sign-corrected reference forms; entries failing the identity are re-derived."""
    return list(_second_kind_cached(curve)[0])


def rederived_labels(curve: CurveModel) -> tuple[str, ...]:
    """Labels of second kind forms that differ from the sign-corrected reference."""
    return _second_kind_cached(curve)[1]


def max_identity_residual(curve: CurveModel, forms, npairs: int = 20, seed: int = 7) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(npairs):
        P, Q = curve.random_point(rng), curve.random_point(rng)
        worst = max(worst, identity_residual(curve, P, Q, forms))
    return worst



# ---------------------------------------------------------------------------
# local checks: residues, infinity, branch points, limits


def point_near_infinity(curve: CurveModel, t: complex) -> CurvePoint:
    """Point with ``x = t**-n`` on the branch analytic in the local parameter t."""
    n = curve.degree
    t = complex(t)
    x = t ** (-n)
    w = []
    for grp in curve.groups:
        d = len(grp.indices)
        corr = 1 + 0j
        for j in grp.indices:
            corr *= (1 - complex(curve.branch_points[j]) * t**n) ** (1.0 / n)
        w.append(t ** (-d) * corr)
    return CurvePoint(x, tuple(w))


def laurent_at_infinity(curve: CurveModel, form: OneForm, radius: float = 0.3,
                        samples: int = 128) -> dict:
    """Laurent coefficients of ``form`` in the parameter t at infinity.

    Returns ``{k: c_k}`` for the expansion ``sum c_k t**k dt``; computed by the
    trapezoidal rule on ``|t| = radius``.
    """
    terms = form.w_terms(curve)
    n = curve.degree
    ts = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    vals = np.empty(samples, dtype=complex)
    for i, t in enumerate(ts):
        pt = point_near_infinity(curve, t)
        vals[i] = evaluate_w_terms(terms, pt.x, pt.w) * (-n) * t ** (-n - 1)
    coeffs = np.fft.fft(vals) / samples
    out = {}
    for k in range(-samples // 2, samples // 2):
        out[k] = coeffs[k % samples] / radius**k
    return out


def _rel_coeff(coeffs: dict, k: int, radius: float) -> float:
    scale = max(abs(c) * radius**j for j, c in coeffs.items())
    return abs(coeffs[k]) * radius**k / max(scale, 1e-300)


def residue_at_infinity(curve: CurveModel, form: OneForm, radius: float = 0.3) -> float:
    """``|c_-1|`` relative to the size of the form on the contour."""
    coeffs = laurent_at_infinity(curve, form, radius)
    return _rel_coeff(coeffs, -1, radius)


def pole_order_at_infinity(curve: CurveModel, form: OneForm, radius: float = 0.3,
                           tol: float = 1e-10) -> int:
    """Largest m with a nonzero ``t**-m`` coefficient (0 if regular)."""
    coeffs = laurent_at_infinity(curve, form, radius)
    neg = [k for k in coeffs if k < 0 and _rel_coeff(coeffs, k, radius) > tol]
    return -min(neg) if neg else 0


def ramification_index(curve: CurveModel, j: int) -> int:
    from math import gcd

    n = curve.degree
    return n // gcd(n, curve.exponents[j])


def branch_order_slope(curve: CurveModel, form: OneForm, j: int) -> float:
    """Smallest growth exponent of the form in the local parameter at ``B_j``.

    The coefficient of ``ds`` with ``x = b_j + s**r`` is sampled along a ray
    on every sheet; a slope >= 0 means the form is regular there.
    """
    r = ramification_index(curve, j)
    b = complex(curve.branch_points[j])
    others = [complex(v) for i, v in enumerate(curve.branch_points) if i != j]
    direction = np.exp(0.37j)
    reach = 0.1 * min(abs(b - o) for o in others)
    worst = np.inf
    terms = form.w_terms(curve)
    for sheet in range(curve.degree):
        vals = []
        ss = reach * np.array([1e-2, 1e-3, 1e-4])
        for s in ss:
            pt = curve.point(b + (s * direction) ** r, sheet)
            v = evaluate_w_terms(terms, pt.x, pt.w) * r * (s * direction) ** (r - 1)
            vals.append(abs(v))
        vals = np.maximum(vals, 1e-300)
        slope = np.polyfit(np.log(ss), np.log(vals), 1)[0]
        if vals.max() < 1e-200:
            slope = np.inf
        worst = min(worst, slope)
    return float(worst)


def is_regular_everywhere(curve: CurveModel, form: OneForm) -> bool:
    at_inf = pole_order_at_infinity(curve, form) == 0
    at_b = all(branch_order_slope(curve, form, j) > -0.5 for j in range(len(curve.branch_points)))
    return at_inf and at_b


def third_kind(curve: CurveModel, P1: CurvePoint, P2: CurvePoint):
    """``P -> Sigma(P, P1) - Sigma(P, P2)`` (coefficient of dx_P)."""
    if curve.same_point(P1, P2):
        raise ValueError("third kind differential needs distinct points")

    def pi(P: CurvePoint) -> complex:
        return sigma_kernel(curve, P, P1) - sigma_kernel(curve, P, P2)

    return pi


def contour_residue(curve: CurveModel, func, center: CurvePoint, radius: float = 1e-2,
                    samples: int = 32) -> complex:
    r"""``(1/2 pi i) \oint func dx`` around ``center`` on its own sheet."""
    total = 0j
    for k in range(samples):
        dz = radius * np.exp(2j * np.pi * k / samples)
        pt = continue_point(curve, center, center.x + dz)
        total += func(pt) * dz
    return total / samples


def kernel_residue(curve: CurveModel, Q: CurvePoint, **kw) -> complex:
    return contour_residue(curve, lambda P: sigma_kernel(curve, P, Q), Q, **kw)


def local_expansion(curve: CurveModel, Q: CurvePoint, h: float = 1e-3) -> complex:
    """``(x_P - x_Q)**2 Omega(P, Q)`` for P at distance h from Q on the same sheet."""
    P = continue_point(curve, Q, Q.x + h * np.exp(0.7j))
    return (P.x - Q.x) ** 2 * omega(curve, P, Q)


def limit_target(curve: CurveModel) -> tuple[MultiPoly, MultiPoly]:
    """(divisor monomial at P1, expected limit at P2) for the limit at infinity."""
    V = curve.variables
    if curve.name == "x4":
        return (MultiPoly.monomial(V, {"x": 1, "y8": 1}), MultiPoly.monomial(V, {"x": 2, "y7": 1}))
    return MultiPoly.monomial(V, {"x": 1, "y16": 1}), MultiPoly.monomial(V, {"x": 4})


def limit_check(curve: CurveModel, Q: CurvePoint, degree: int = 10) -> tuple[complex, complex]:
    """Numeric limit of ``F(P, Q) / (phi(P) (x_P - x_Q)**2)`` as P -> infinity.

    P runs along the chart parameter t; the limit is read off a polynomial
    fit in t.  Returns (numeric limit, expected value at Q).
    """
    F = fundamental_numerator(curve)
    lead, expected = limit_target(curve)
    ts = np.linspace(0.02, 0.12, degree + 6)
    vals = []
    for t in ts:
        P = point_near_infinity(curve, t)
        v = complex(F.evaluate(two_point_values(curve, P, Q)))
        v /= complex(lead.evaluate(curve.coords(P))) * (P.x - Q.x) ** 2
        vals.append(v)
    vals = np.array(vals)
    fit_re = np.polynomial.polynomial.polyfit(ts, vals.real, degree)
    fit_im = np.polynomial.polynomial.polyfit(ts, vals.imag, degree)
    got = complex(fit_re[0], fit_im[0])
    return got, complex(expected.evaluate(curve.coords(Q)))


def limit_exact(curve: CurveModel) -> MultiPoly:
    """Coefficient of the top point-1 monomial of F (the limit as an element of R)."""
    F = fundamental_numerator(curve)
    lead, _ = limit_target(curve)
    (lm, _), = (lead * MultiPoly.var(curve.variables, "x") ** 2).terms.items()
    nv = len(curve.variables)
    out = {}
    for m, c in F.terms.items():
        if m[:nv] == lm:
            out[m[nv:]] = c
    return MultiPoly(curve.variables, out)


def f_is_normal(curve: CurveModel) -> bool:
    return _two_point_rewrite(curve).is_normal(fundamental_numerator(curve))


EMBEDDING = {0: 3, 1: 5, 2: 8, 3: 10}  # nu_(i+1) on the genus-4 curve -> index on the genus-12 curve


def embedding_residual(x4: CurveModel, x12: CurveModel, P: CurvePoint) -> float:
    """Max ``|nu_i^(4)(pi P) / 2 - nu_j^(12)(P)|`` over the embedded forms."""
    from .curves import project_x12_to_x4

    Pp = project_x12_to_x4(P, x4)
    b4, b12 = holomorphic_basis(x4), holomorphic_basis(x12)
    worst = 0.0
    for i, j in EMBEDDING.items():
        a = 0.5 * b4[i].value(x4, Pp)
        b = b12[j].value(x12, P)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst
