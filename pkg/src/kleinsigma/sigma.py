"""Riemann theta with characteristics and the sigma function built on it.

Convention::

    theta[a; b](z) = sum_n exp(pi i (n+a)^T tau (n+a) + 2 pi i (n+a)^T (z+b))
    sigma(u) = exp(-1/2 u^T eta' omega'^-1 u) theta[delta]((2 omega')^-1 u)

with the characteristic stacked as ``(a, b) = (delta', delta'')``.  The lattice
sum runs over the integer points of an ellipsoid in the ``Im tau`` metric
centred on the dominant term; the basis is LLL-reduced first so the
enumeration stays compact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammainccinv

from .errors import DegenerateConfig, OnThetaDivisor, TruncationError

MAX_POINTS = 40_000_000
CHUNK = 400_000


# ---------------------------------------------------------------------------
# lattice enumeration


def lll(B: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """LLL-reduce the columns of ``B``; returns the unimodular ``U`` with B U reduced."""
    B = np.array(B, dtype=float)
    g = B.shape[1]
    U = np.eye(g, dtype=np.int64)

    def gso(B):
        Q = np.zeros_like(B)
        mu = np.zeros((g, g))
        for i in range(g):
            v = B[:, i].copy()
            for j in range(i):
                mu[i, j] = B[:, i] @ Q[:, j] / (Q[:, j] @ Q[:, j])
                v -= mu[i, j] * Q[:, j]
            Q[:, i] = v
        return Q, mu

    Q, mu = gso(B)
    k = 1
    guard = 0
    while k < g:
        guard += 1
        if guard > 10000:
            break
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[:, k] -= q * B[:, j]
                U[:, k] -= q * U[:, j]
                Q, mu = gso(B)
        if Q[:, k] @ Q[:, k] >= (delta - mu[k, k - 1] ** 2) * (Q[:, k - 1] @ Q[:, k - 1]):
            k += 1
        else:
            B[:, [k, k - 1]] = B[:, [k - 1, k]]
            U[:, [k, k - 1]] = U[:, [k - 1, k]]
            Q, mu = gso(B)
            k = max(k - 1, 1)
    return U


@dataclass(frozen=True)
class ThetaSpec:
    """Riemann matrix, characteristic and truncation radius."""

    tau: np.ndarray
    characteristic: np.ndarray
    radius: float

    @classmethod
    def build(cls, tau, characteristic=None, tail: float = 1e-14) -> ThetaSpec:
        tau = np.asarray(tau, dtype=complex)
        g = tau.shape[0]
        if np.linalg.eigvalsh(tau.imag).min() <= 0:
            raise ValueError("Im tau must be positive definite")
        char = np.zeros(2 * g) if characteristic is None else np.asarray(characteristic, float)
        return cls(tau, char, radius_for_tail(tail, g))


def radius_for_tail(tail: float, g: int) -> float:
    """Ellipsoid radius whose omitted Gaussian mass is ``tail`` of the total.

    Terms decay like ``exp(-pi r^2)`` in the ``Im tau`` distance r from the
    dominant index and lattice points have density ``~ r^(g-1) dr``, so the
    omitted fraction is the regularised upper incomplete gamma
    ``Q(g/2, pi R^2)``.
    """
    return float(np.sqrt(gammainccinv(g / 2, tail) / np.pi))


class _Enumerator:
    """Cached LLL data for one ``Im tau``."""

    def __init__(self, Y: np.ndarray):
        self.Y = Y
        R = np.linalg.cholesky(Y).T  # Y = R^T R
        self.U = lll(R)
        self.Uinv = np.round(np.linalg.inv(self.U)).astype(np.int64)
        self.R = np.linalg.cholesky(self.U.T @ Y @ self.U).T

    def blocks(self, center: np.ndarray, radius: float, chunk: int = CHUNK):
        """Yield integer n with ``(n - center)^T Y (n - center) <= radius^2`` in blocks."""
        c = self.Uinv @ center
        g = len(c)
        start = (np.zeros((1, 0), dtype=np.int32), np.zeros(1))
        total = 0
        for part, _ in self._expand(start, g - 1, c, radius**2, chunk):
            total += len(part)
            if total > MAX_POINTS:
                raise TruncationError(f"theta enumeration needs more than {MAX_POINTS} points")
            yield part @ self.U.T

    def points(self, center: np.ndarray, radius: float) -> np.ndarray:
        out = list(self.blocks(center, radius))
        return np.vstack(out) if out else np.zeros((0, len(center)), dtype=np.int64)

    def _expand(self, state, i, c, r2, chunk):
        # breadth-first Fincke-Pohst, last coordinate first; splits large fronts
        partial, used = state
        R = self.R
        while i >= 0:
            if partial.shape[1]:
                off = (partial - c[i + 1:]) @ R[i, i + 1:]
            else:
                off = np.zeros(len(partial))
            centre_i = c[i] - off / R[i, i]
            halfw = np.sqrt(np.maximum(r2 - used, 0)) / R[i, i]
            lo = np.ceil(centre_i - halfw).astype(np.int64)
            hi = np.floor(centre_i + halfw).astype(np.int64)
            counts = np.maximum(hi - lo + 1, 0)
            total = int(counts.sum())
            if total > chunk and len(partial) > 1:
                half = len(partial) // 2
                for sl in (slice(0, half), slice(half, None)):
                    yield from self._expand((partial[sl], used[sl]), i, c, r2, chunk)
                return
            idx = np.repeat(np.arange(len(partial)), counts)
            within = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
            xi = np.repeat(lo, counts) + within
            used = used[idx] + (R[i, i] * (xi - centre_i[idx])) ** 2
            partial = np.column_stack([xi.astype(np.int32), partial[idx]])
            i -= 1
        yield partial, used


@lru_cache(maxsize=32)
def _enumerator(key: bytes, g: int) -> _Enumerator:
    Y = np.frombuffer(key, dtype=float).reshape(g, g)
    return _Enumerator(Y)


def _get_enumerator(Y: np.ndarray) -> _Enumerator:
    Y = np.ascontiguousarray(0.5 * (Y + Y.T), dtype=float)
    return _enumerator(Y.tobytes(), Y.shape[0])


# ---------------------------------------------------------------------------
# theta


def theta(z, tau, char=None, derivs: int = 0, tail: float = 1e-14, radius: float | None = None):
    """Theta with characteristic; with ``derivs`` also gradient and Hessian in z.

    Returns the value, or a tuple ``(value, gradient[, hessian])``.
    """
    tau = np.asarray(tau, dtype=complex)
    g = tau.shape[0]
    z = np.asarray(z, dtype=complex).reshape(g)
    char = np.zeros(2 * g) if char is None else np.asarray(char, dtype=float)
    a, b = char[:g], char[g:]
    Y = tau.imag
    radius = radius_for_tail(tail, g) if radius is None else radius
    # dominant index: minimise (n+a)^T Y (n+a) + 2 (n+a)^T Im z
    vstar = np.linalg.solve(Y, z.imag)
    center = -a - vstar
    # every term is bounded by exp(pi y^T Y^-1 y); factor it out
    shift = np.pi * z.imag @ vstar
    zb = z + b
    val = 0j
    grad = np.zeros(g, dtype=complex)
    hess = np.zeros((g, g), dtype=complex)
    for N in _get_enumerator(Y).blocks(center, radius):
        V = N + a
        expo = 1j * np.pi * np.sum((V @ tau) * V, axis=1) + 2j * np.pi * (V @ zb)
        terms = np.exp(expo - shift)
        val += terms.sum()
        if derivs >= 1:
            grad += V.T @ terms
        if derivs >= 2:
            hess += (V * terms[:, None]).T @ V
    scale = np.exp(shift)
    val *= scale
    if derivs == 0:
        return val
    grad *= (2j * np.pi) * scale
    if derivs == 1:
        return val, grad
    hess *= (2j * np.pi) ** 2 * scale
    return val, grad, hess


def theta_parity(char) -> int:
    """``(-1)**(4 a.b)`` for a half characteristic."""
    g = len(char) // 2
    return 1 if int(round(4 * np.dot(char[:g], char[g:]))) % 2 == 0 else -1


# ---------------------------------------------------------------------------
# sigma


@dataclass
class SigmaValue:
    value: complex
    gradient: np.ndarray | None = None
    hessian: np.ndarray | None = None


class Sigma:
    """Sigma function attached to a PeriodData with its characteristic set."""

    def __init__(self, pd, tail: float = 1e-14):
        if pd.characteristic is None:
            raise ValueError("period data carries no characteristic")
        self.pd = pd
        self.g = pd.genus
        self.tau = pd.tau
        self.char = np.asarray(pd.characteristic, dtype=float)
        self.C = np.linalg.inv(2 * pd.omega1)  # z = C u
        self.H = pd.eta1 @ np.linalg.inv(pd.omega1)  # eta' omega'^-1
        self.H = 0.5 * (self.H + self.H.T)
        self.tail = tail

    def z(self, u) -> np.ndarray:
        return self.C @ np.asarray(u, dtype=complex)

    def __call__(self, u, derivs: int = 0) -> SigmaValue:
        u = np.asarray(u, dtype=complex)
        Hu = self.H @ u
        E = np.exp(-0.5 * u @ Hu)
        out = theta(self.z(u), self.tau, self.char, derivs=derivs, tail=self.tail)
        if derivs == 0:
            return SigmaValue(E * out)
        th, gz = out[0], out[1]
        gu = self.C.T @ gz
        val = E * th
        grad = E * (gu - Hu * th)
        if derivs == 1:
            return SigmaValue(val, grad)
        hz = out[2]
        hu = self.C.T @ hz @ self.C
        hess = E * (np.outer(Hu, Hu) * th - self.H * th - np.outer(Hu, gu) - np.outer(gu, Hu) + hu)
        return SigmaValue(val, grad, hess)

    def value(self, u) -> complex:
        return self(u).value

    # periodicity --------------------------------------------------------
    def lattice(self, l1, l2) -> np.ndarray:
        return self.pd.lattice_vector(l1, l2)

    def L(self, u, l1, l2) -> complex:
        """``-u^T (2 eta' l1 + 2 eta'' l2)``.

        The sign is opposite to the usual one because the second kind basis
        carries the opposite overall sign (so that the kernel identity holds).
        """
        return -np.asarray(u) @ (2 * self.pd.eta1 @ np.asarray(l1) + 2 * self.pd.eta2 @ np.asarray(l2))

    def chi(self, l1, l2) -> complex:
        g = self.g
        a, b = self.char[:g], self.char[g:]
        l1, l2 = np.asarray(l1), np.asarray(l2)
        return np.exp(2j * np.pi * (l1 @ a - l2 @ b) + 1j * np.pi * (l1 @ l2))

    def quasi_periodicity_residual(self, u, l1, l2) -> float:
        u = np.asarray(u, dtype=complex)
        ell = self.lattice(l1, l2)
        lhs = self.value(u + ell)
        rhs = self.value(u) * np.exp(self.L(u + 0.5 * ell, l1, l2)) * self.chi(l1, l2)
        return float(abs(lhs - rhs) / max(abs(lhs), 1e-300))

    # wp ------------------------------------------------------------------
    def wp_matrix(self, u, tol: float = 1e-12) -> np.ndarray:
        """``-d^2 log sigma``; raises OnThetaDivisor where sigma vanishes."""
        sv = self(u, derivs=2)
        scale = abs(sv.value) + np.max(np.abs(sv.gradient)) * np.max(np.abs(u)) + 1e-300
        if abs(sv.value) < tol * scale:
            raise OnThetaDivisor("sigma vanishes at u")
        s, gr, he = sv.value, sv.gradient, sv.hessian
        return -(s * he - np.outer(gr, gr)) / s**2

    def wp(self, i: int, j: int, u) -> complex:
        return self.wp_matrix(u)[i, j]

    def parity_sign(self, u) -> complex:
        return self.value(-np.asarray(u)) / self.value(u)

    def local_scale(self, u, radius: float = 1e-2, samples: int = 6, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        vals = []
        for _ in range(samples):
            d = rng.normal(size=self.g) + 1j * rng.normal(size=self.g)
            d *= radius * max(1.0, np.max(np.abs(u))) / np.linalg.norm(d)
            vals.append(abs(self.value(np.asarray(u) + d)))
        return float(max(vals))


def vanishing_ratio(sig: Sigma, u, radius: float = 1e-2) -> float:
    """``|sigma(u)|`` relative to its size on a small sphere around u."""
    return abs(sig.value(u)) / max(sig.local_scale(u, radius), 1e-300)


# ---------------------------------------------------------------------------
# Riemann fundamental relation


def _omega_integral(curve, P, Q, A, B, order: int = 24):
    """``int_A^B int_P^Q Omega`` via third-kind differentials and straight paths.

    Uses ``int_P^Q Omega(., R)`` = the normalised third kind integral; here the
    double integral is evaluated directly on the square of the two segments.
    """
    from .differentials import continue_point, omega

    xs, ws = np.polynomial.legendre.leggauss(order)
    t = 0.5 * (xs + 1)
    w = 0.5 * ws
    pts1 = [continue_point(curve, P, P.x + (Q.x - P.x) * s) for s in t]
    pts2 = [continue_point(curve, A, A.x + (B.x - A.x) * s) for s in t]
    total = 0j
    for p, wi in zip(pts1, w):
        for q, wj in zip(pts2, w):
            total += wi * wj * omega(curve, p, q)
    return total * (Q.x - P.x) * (B.x - A.x)


def fundamental_relation_residual(curve, sig: Sigma, abel, P, Q, Ps, Qs) -> float:
    """Check ``exp(sum_i int_Qi^Pi int_Q^P Omega)`` against a sigma cross-ratio.

    ``Ps`` and ``Qs`` hold g points each; paths are short straight segments
    so every point of ``Ps`` must lie near its partner in ``Qs`` on the same
    sheet, and ``P`` near ``Q``.  Returns the relative residual.
    """
    g = curve.genus
    if len(Ps) != g or len(Qs) != g:
        raise DegenerateConfig("need g points on each side")
    if curve.same_point(P, Q):
        raise DegenerateConfig("P and Q coincide")
    lhs_exp = 0j
    for Pi, Qi in zip(Ps, Qs):
        lhs_exp += _omega_integral(curve, Q, P, Qi, Pi)
    lhs = np.exp(lhs_exp)
    shifted = curve.name == "x4"
    uP, uQ = abel.point(P), abel.point(Q)
    uPs = abel(Ps, shifted)
    uQs = abel(Qs, shifted)
    num = sig.value(uP - uPs) * sig.value(uQ - uQs)
    den = sig.value(uQ - uPs) * sig.value(uP - uQs)
    if abs(den) < 1e-300:
        raise DegenerateConfig("sigma vanishes in the denominator")
    rhs = num / den
    return float(abs(lhs - rhs) / max(abs(rhs), 1e-300))
