"""Frobenius-Stickelberger determinants, mu-functions and Jacobi inversion checks.

The FS matrix of points ``P_1..P_n`` has rows ``(phi_0(P_i), ..., phi_(n-1)(P_i))``
for one of the monomial families:

``"H0"``  the ring basis ordered by pole order (1, x, x^2, y7, ...),
``"H1"``  the numerators of the holomorphic forms on the genus-4 curve
          (y7, y8, x y7, x y8, x^2 y7, ...),
``"phi"`` the ring basis on the genus-12 curve (1, x, x^2, y13, ...).

``mu_n(P) = psi_(n+1)(P_1..P_n, P) / psi_n(P_1..P_n)`` is the monic function of
the family that vanishes at the given points.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .curves import CurveModel, CurvePoint, phi_basis, poly_weight
from .differentials import continue_point, fundamental_numerator, h1_monomials, two_point_values
from .errors import ConditioningError, DeeperStratum, RootFindingError, SingularConfiguration

CAUCHY_RADIUS = 1e-2
CAUCHY_NODES = 32


# ---------------------------------------------------------------------------
# monomial families


def default_tag(curve: CurveModel) -> str:
    return "H1" if curve.name == "x4" else "phi"


@lru_cache(maxsize=16)
def _family(curve: CurveModel, tag: str, count: int):
    if tag == "H1":
        if curve.name != "x4":
            raise ValueError("the H1 family lives on the genus-4 curve")
        polys = h1_monomials(curve, count)
    elif tag in ("H0", "phi"):
        polys = phi_basis(curve, count)
    else:
        raise ValueError(f"unknown family {tag!r}")
    return tuple(polys)


def family(curve: CurveModel, tag: str, count: int) -> list:
    return list(_family(curve, tag, count))


def phi_values(curve: CurveModel, tag: str, pt: CurvePoint, count: int) -> np.ndarray:
    vals = curve.coords(pt)
    return np.array([complex(p.evaluate(vals)) for p in _family(curve, tag, count)])


def phi_derivative_values(curve: CurveModel, tag: str, pt: CurvePoint, count: int,
                          order: int) -> np.ndarray:
    """``d^order/dx^order`` of each family member at ``pt`` (Cauchy integral in x)."""
    if order == 0:
        return phi_values(curve, tag, pt, count)
    ts = np.exp(2j * np.pi * np.arange(CAUCHY_NODES) / CAUCHY_NODES)
    acc = np.zeros(count, dtype=complex)
    r = CAUCHY_RADIUS
    for t in ts:
        q = continue_point(curve, pt, pt.x + r * t)
        acc += phi_values(curve, tag, q, count) / (r * t) ** order
    return factorial(order) * acc / CAUCHY_NODES


# ---------------------------------------------------------------------------
# FS matrices


@dataclass
class FSMatrix:
    points: list
    basis_tag: str
    entries: np.ndarray

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.entries))


def _rows(curve: CurveModel, points, tag: str, ncols: int) -> np.ndarray:
    seen: Counter = Counter()
    rows = []
    keys: list[CurvePoint] = []
    for p in points:
        # repeated points get successive x-derivative rows (confluent limit)
        match = next((k for k in keys if curve.same_point(k, p)), None)
        if match is None:
            keys.append(p)
            match = p
        m = seen[id(match)]
        seen[id(match)] += 1
        rows.append(phi_derivative_values(curve, tag, p, ncols, m))
    return np.array(rows)


def fs_matrix(curve: CurveModel, points, tag: str | None = None, ncols: int | None = None) -> FSMatrix:
    tag = default_tag(curve) if tag is None else tag
    ncols = len(points) if ncols is None else ncols
    return FSMatrix(list(points), tag, _rows(curve, points, tag, ncols))


def fs_det(curve: CurveModel, points, tag: str | None = None) -> complex:
    """``psi_n(P_1..P_n)``; equals 1 for the empty list."""
    if not points:
        return 1.0 + 0j
    return fs_matrix(curve, points, tag).det


def conditioning(M: np.ndarray) -> float:
    """``|det M|`` relative to the product of row norms."""
    norms = np.prod(np.linalg.norm(M, axis=1))
    return float(abs(np.linalg.det(M)) / max(norms, 1e-300))


@dataclass
class MuFunction:
    n: int
    coefficients: np.ndarray  # mu_(n,k), k = 0..n with mu_(n,n) = 1
    basis_tag: str
    points: list

    def signed(self) -> np.ndarray:
        """Coefficients ``c_k`` of ``mu_n = sum_k c_k phi_k``."""
        n = self.n
        return np.array([(-1) ** (n - k) * self.coefficients[k] for k in range(n + 1)])

    def __call__(self, curve: CurveModel, pt: CurvePoint) -> complex:
        return complex(self.signed() @ phi_values(curve, self.basis_tag, pt, self.n + 1))


def mu_function(curve: CurveModel, points, tag: str | None = None, method: str = "cofactor",
                guard: float = 1e-8) -> MuFunction:
    """Coefficients of ``mu_n`` through cofactors of the (n+1)-column FS matrix.

    ``mu_(n,k)`` is the minor obtained by deleting column k, divided by psi_n.
    """
    tag = default_tag(curve) if tag is None else tag
    n = len(points)
    M = fs_matrix(curve, points, tag, n + 1).entries
    square = M[:, :n]
    if n and conditioning(square) < guard:
        raise SingularConfiguration("FS determinant vanishes for these points")
    if method == "cofactor":
        psi = np.linalg.det(square) if n else 1.0
        coeffs = np.array([np.linalg.det(np.delete(M, k, axis=1)) / psi if n else 1.0
                           for k in range(n + 1)], dtype=complex)
        coeffs[n] = 1.0
    elif method == "solve":
        c = np.linalg.solve(square, -M[:, n]) if n else np.zeros(0)
        coeffs = np.array([(-1) ** (n - k) * c[k] for k in range(n)] + [1.0], dtype=complex)
    else:
        raise ValueError(method)
    return MuFunction(n, coeffs, tag, list(points))


def mu(curve: CurveModel, P: CurvePoint, points, tag: str | None = None):
    """Value ``mu_n(P)`` and the coefficient list."""
    m = mu_function(curve, points, tag)
    return m(curve, P), m.coefficients


def mu_extraction_gap(curve: CurveModel, points, tag: str | None = None) -> float:
    a = mu_function(curve, points, tag, "cofactor").coefficients
    b = mu_function(curve, points, tag, "solve").coefficients
    return float(np.max(np.abs(a - b)) / np.max(np.abs(a)))


# ---------------------------------------------------------------------------
# sampling


def generic_points(curve: CurveModel, rng, k: int, guard: float = 1e-3, tag: str | None = None,
                   tries: int = 50) -> list[CurvePoint]:
    """k random points with a well conditioned FS matrix (resampled otherwise)."""
    tag = default_tag(curve) if tag is None else tag
    for _ in range(tries):
        pts = [curve.random_point(rng) for _ in range(k)]
        if conditioning(fs_matrix(curve, pts, tag).entries) > guard:
            return pts
    raise ConditioningError("could not sample a generic configuration")


def _abel_image(abel, points, curve: CurveModel) -> np.ndarray:
    return abel(points, shifted=curve.name == "x4")


# ---------------------------------------------------------------------------
# Jacobi inversion and the strata


def jacobi_inversion_residual(curve: CurveModel, sig, abel, points) -> dict:
    """Compare ``wp_(g,k+1)(u(P))`` with ``(-1)^(g-k-1) mu_(g,k)`` for k < g.

    Also compares the full row ``wp_(g,j)`` read through the signed
    coefficients; the residual is relative to the largest coefficient.
    """
    g = curve.genus
    if len(points) != g:
        raise ValueError(f"need {g} points")
    m = mu_function(curve, points)
    u = _abel_image(abel, points, curve)
    W = sig.wp_matrix(u)
    lhs = W[g - 1, :g]
    rhs = np.array([(-1) ** (g - k - 1) * m.coefficients[k] for k in range(g)])
    scale = max(np.max(np.abs(rhs)), 1.0)
    return {"residual": float(np.max(np.abs(lhs - rhs)) / scale),
            "wp_row": lhs, "mu": rhs, "symmetry": float(np.max(np.abs(W - W.T)))}


def strata_residual(curve: CurveModel, sig, abel, points, rel_tol: float = 1e-7) -> dict:
    """``sigma_i(u) / sigma_(k+1)(u)`` on the image of k points.

    Expected values are ``(-1)^(k-i+1) mu_(k,i-1)`` for i <= k, 1 at i = k+1
    and 0 beyond.
    """
    g = curve.genus
    k = len(points)
    if not 1 <= k <= g - 1:
        raise ValueError("need between 1 and g-1 points")
    u = _abel_image(abel, points, curve)
    sv = sig(u, derivs=1)
    grad = sv.gradient
    scale = max(sig.local_scale(u), 1e-300)
    # |grad| times the probe radius against |sigma| on the probe sphere:
    # order one at a simple zero, small where sigma vanishes to second order
    reach = 1e-2 * max(1.0, float(np.max(np.abs(u))))
    grad_rel = float(np.max(np.abs(grad)) * reach / scale)
    if np.max(np.abs(grad)) < rel_tol * scale:
        raise DeeperStratum("all first derivatives of sigma vanish here")
    ratios = grad / grad[k]
    m = mu_function(curve, points)
    expected = np.zeros(g, dtype=complex)
    for i in range(1, k + 1):
        expected[i - 1] = (-1) ** (k - i + 1) * m.coefficients[i - 1]
    expected[k] = 1.0
    norm = max(np.max(np.abs(expected)), 1.0)
    return {"residual": float(np.max(np.abs(ratios - expected)) / norm),
            "ratios": ratios, "expected": expected,
            "sigma_relative": float(abs(sv.value) / scale),
            "gradient_relative": grad_rel}


# ---------------------------------------------------------------------------
# zeros of mu-functions


def _norm_poly(curve: CurveModel, m: MuFunction, degree: int, radius: float, center: complex,
               divide=()):
    """Coefficients of ``prod over the fibre of mu`` as a polynomial in x.

    Factors ``x - r`` for r in ``divide`` are removed from the sampled values
    before interpolation, so known zeros never enter the root finder.
    """
    degree -= len(divide)
    N = 2 * degree + 2
    xs = center + radius * np.exp(2j * np.pi * (np.arange(N) + 0.5) / N)
    vals = []
    for x in xs:
        fib = [curve.point(x, s) for s in range(curve.degree)]
        v = np.prod([m(curve, p) for p in fib])
        for r in divide:
            v /= x - r
        vals.append(v)
    vals = np.array(vals)
    t = (xs - center) / radius
    V = np.vander(t, N, increasing=True)
    c = np.linalg.solve(V, vals)
    return c, radius


def _baseline_branch_zeros(curve: CurveModel, tag: str, count: int) -> list[int]:
    """Branch indices where every member of the family vanishes."""
    out = []
    for j in range(len(curve.branch_points)):
        vals = phi_values(curve, tag, curve.branch_point(j), count)
        if np.max(np.abs(vals)) < 1e-12:
            out.append(j)
    return out


def mu_zeros(curve: CurveModel, m: MuFunction, cluster: float = 1e-2) -> list[CurvePoint]:
    """Zeros of ``mu`` beyond its defining points and the family's common zeros.

    The norm of ``mu`` over the x-fibre is a polynomial whose degree is the
    pole order.  The known zeros are divided out of its samples, and the
    roots of the quotient are located on the right sheet by Newton's method.
    Leftover roots at a branch value are reported as that branch point.
    """
    degree = poly_weight(family(curve, m.basis_tag, m.n + 1)[m.n], curve)
    b = curve.branch_complex
    center = complex(np.mean(b))
    radius = 2.0 * (np.max(np.abs(b - center)) + 1)
    for p in m.points:
        radius = max(radius, 2.0 * abs(p.x - center) + 1)
    known = [p.x for p in m.points]
    known += [complex(curve.branch_points[j]) for j in _baseline_branch_zeros(curve, m.basis_tag, m.n + 1)]
    if len(known) > degree:
        raise RootFindingError("more known zeros than the pole order allows")
    # deflating the known zeros keeps clustered roots near branch values well conditioned
    c, r = _norm_poly(curve, m, degree, radius, center, divide=known)
    left = degree - len(known)
    roots = list(np.roots(c[: left + 1][::-1]) * r + center) if left else []
    base = set(_baseline_branch_zeros(curve, m.basis_tag, m.n + 1))
    out: list[CurvePoint] = []
    for x in roots:
        jb = int(np.argmin(np.abs(b - x)))
        d = abs(b[jb] - x)
        if d < cluster:
            # x resolves zeros near a ramification point poorly; refine in t
            out.append(_zero_near_branch(curve, m, jb, x, 1 if jb in base else 0))
            continue
        fib = [curve.point(x, s) for s in range(curve.degree)]
        vals = [abs(m(curve, p)) for p in fib]
        out.append(_newton_on_sheet(curve, m, fib[int(np.argmin(vals))]))
    return out


def point_near_branch(curve: CurveModel, j: int, t: complex) -> CurvePoint:
    """Point with local parameter t at a totally ramified branch point: x = b_j + t^n."""
    n = curve.degree
    g0 = curve.group_of(j)
    if np.gcd(n, curve.exponents[j]) != 1:
        raise ValueError("branch point is not totally ramified")
    bj = complex(curve.branch_points[j])
    x = bj + t**n
    w = []
    for g, grp in enumerate(curve.groups):
        rest = np.prod([x - complex(curve.branch_points[i]) for i in grp.indices if i != j])
        root = complex(rest) ** (1.0 / n)
        w.append(t * root if g == g0 else root)
    return CurvePoint(x, tuple(w))


def _zero_near_branch(curve: CurveModel, m: MuFunction, j: int, x_guess: complex,
                      base: int) -> CurvePoint:
    """Zero of ``mu / t^base`` in the local parameter at ``B_j``, started from an x-root."""
    n = curve.degree

    def f(t):
        return m(curve, point_near_branch(curve, j, t)) / t**base if base else \
            m(curve, point_near_branch(curve, j, t))

    d = abs(x_guess - complex(curve.branch_points[j]))
    r0 = max(d, 1e-12) ** (1.0 / n)
    best = None
    for th in np.linspace(0, 2 * np.pi, 4 * n, endpoint=False):
        t = r0 * np.exp(1j * th) if r0 > 1e-6 else 1e-3 * np.exp(1j * th)
        for _ in range(60):
            h = 1e-7 * max(abs(t), 1e-3)
            fp = (f(t + h) - f(t - h)) / (2 * h)
            if fp == 0:
                break
            step = f(t) / fp
            t = t - step
            if abs(step) < 1e-15:
                break
        val = abs(f(t))
        if best is None or val < best[0]:
            best = (val, t)
    t = best[1]
    if abs(t) < 1e-9:
        return curve.branch_point(j)
    return point_near_branch(curve, j, t)


def _branch_order(curve: CurveModel, m: MuFunction, j: int, radius: float, steps: int = 256) -> int:
    """Vanishing order of ``mu`` at the branch point ``B_j`` in its local parameter."""
    from .differentials import ramification_index

    ram = ramification_index(curve, j)
    bj = complex(curve.branch_points[j])
    p = curve.point(bj + radius)
    prev = m(curve, p)
    total = 0.0
    for th in np.linspace(0, 2 * np.pi * ram, steps * ram + 1)[1:]:
        p = continue_point(curve, p, bj + radius * np.exp(1j * th))
        v = m(curve, p)
        total += np.angle(v / prev)
        prev = v
    return int(round(total / (2 * np.pi)))


def _newton_on_sheet(curve: CurveModel, m: MuFunction, p: CurvePoint, iters: int = 30) -> CurvePoint:
    h = 1e-6
    for _ in range(iters):
        f = m(curve, p)
        fp = (m(curve, continue_point(curve, p, p.x + h)) - m(curve, continue_point(curve, p, p.x - h))) / (2 * h)
        if fp == 0:
            break
        step = f / fp
        p = continue_point(curve, p, p.x - step)
        if abs(step) < 1e-14 * (1 + abs(p.x)):
            break
    if abs(m(curve, p)) > 1e-6 * (1 + np.max(np.abs(m.coefficients))):
        raise RootFindingError("Newton polishing did not converge")
    return p


def zero_count(curve: CurveModel, m: MuFunction, radius: float, samples: int = 2048) -> int:
    """Zeros of ``mu`` over ``|x - c| < radius`` by the argument principle.

    The product of ``mu`` over the x-fibre is single valued in x, so its
    winding number on the circle counts zeros with multiplicity.
    """
    c = complex(np.mean(curve.branch_complex))
    xs = c + radius * np.exp(2j * np.pi * np.arange(samples + 1) / samples)
    vals = np.array([np.prod([m(curve, curve.point(x, s)) for s in range(curve.degree)]) for x in xs])
    return int(round(np.sum(np.angle(vals[1:] / vals[:-1])) / (2 * np.pi)))


# ---------------------------------------------------------------------------
# Serre-duality involution on the genus-4 curve


def serre_dual_points(curve: CurveModel, points) -> list[CurvePoint]:
    """The three further zeros of ``mu_(H1,3)(. ; P1, P2, P3)``."""
    if curve.name != "x4" or len(points) != 3:
        raise ValueError("defined for three points on the genus-4 curve")
    Q = mu_zeros(curve, mu_function(curve, points, "H1"))
    if len(Q) != 3:
        raise RootFindingError(f"expected three dual points, found {len(Q)}")
    return Q


def serre_abel_residual(curve: CurveModel, pd, abel, points, dual) -> float:
    """``-u_o(P) - u_o(Q) - 2 u_o(B4, B5)`` reduced modulo the lattice."""
    from .periods import lattice_residual

    total = abel(points) + abel(dual) + 2 * abel.shift()
    return lattice_residual(pd, total)


def unshifted_representative(curve: CurveModel, points) -> list[CurvePoint]:
    """Points R with ``u_o(R) = u_o(P) + u_o(B4, B5)`` modulo the lattice.

    Take the dual triple Q, then the ring-family function vanishing at Q and
    at B1, B2, B3; its remaining zeros form R.  The divisor of y7 gives
    ``u_o(B1 + B2 + B3) = -2 u_o(B4 + B5)`` and each ``3 u_o(B_j)`` is a
    period, which yields the identity.  R has four points: ``u_o(B4 + B5)``
    is a nonzero 3-torsion point, so a triple cannot work in general.
    """
    Q = serre_dual_points(curve, points)
    B = [curve.branch_point(j) for j in range(3)]
    return mu_zeros(curve, mu_function(curve, Q + B, "H0"))


def generic_triple(curve: CurveModel, rng, margin: float = 1e-2, tries: int = 50) -> list[CurvePoint]:
    """Three points whose dual triple stays away from the branch values."""
    b = curve.branch_complex
    for _ in range(tries):
        P = generic_points(curve, rng, 3)
        try:
            Q = serre_dual_points(curve, P)
        except (RootFindingError, SingularConfiguration):
            continue
        if all(np.min(np.abs(b - q.x)) > margin for q in Q):
            return P
    raise ConditioningError("could not sample a generic triple")


# ---------------------------------------------------------------------------
# the bridge between wp, Omega and the FS machinery


def bridge_residual(curve: CurveModel, sig, abel, P: CurvePoint, points, a: int = 0) -> float:
    """``sum_ij wp_ij(u_o(P) - u) phi_(i-1)(P) phi_(j-1)(P_a)`` vs ``F(P, P_a)/(x - x_a)^2``."""
    g = curve.genus
    tag = default_tag(curve)
    u = _abel_image(abel, points, curve)
    v = abel.point(P) - u
    W = sig.wp_matrix(v)
    Pa = points[a]
    lhs = phi_values(curve, tag, P, g) @ W @ phi_values(curve, tag, Pa, g)
    F = fundamental_numerator(curve)
    rhs = complex(F.evaluate(two_point_values(curve, P, Pa))) / (P.x - Pa.x) ** 2
    return float(abs(lhs - rhs) / max(abs(rhs), 1e-300))


def partial_derivative_residual(curve: CurveModel, abel, points, h: float = 1e-5) -> float:
    """Chain rule between ``x(P_a)`` and ``u``: ``dx_a/du_i = D(P_a) (Psi^-1)_(a,i)``.

    ``Psi`` is the FS matrix of the holomorphic numerators and ``D`` the top
    denominator; the Jacobian ``du/dx_a`` is taken from the Abel map by
    central differences and inverted.
    """
    from .differentials import _top_value

    g = curve.genus
    tag = default_tag(curve)
    J = np.zeros((g, g), dtype=complex)
    for a, p in enumerate(points):
        up = abel.point(continue_point(curve, p, p.x + h))
        dn = abel.point(continue_point(curve, p, p.x - h))
        J[:, a] = (up - dn) / (2 * h)
    Psi = fs_matrix(curve, points, tag).entries
    Dv = np.array([_top_value(curve, p) for p in points])
    predicted = np.diag(Dv) @ np.linalg.inv(Psi.T)
    actual = np.linalg.inv(J)
    return float(np.max(np.abs(actual - predicted)) / np.max(np.abs(predicted)))
