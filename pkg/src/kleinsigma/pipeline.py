"""Run configuration and the staged end-to-end verification.

Stages run in a fixed order and each one reports its residuals as max/mean
pairs against a tolerance.  The report is plain JSON with complex numbers
stored as ``[re, im]``; it contains no timings so that two runs with the same
configuration and seed produce identical bytes.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import curves as cv
from . import differentials as df
from . import inversion as inv
from . import periods as pr
from . import semigroup as sg
from .errors import KleinError
from .sigma import Sigma, vanishing_ratio

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

REPORT_SCHEMA = 1
STAGES = ("semigroup", "curve", "forms", "periods", "legendre", "sigma", "jacobi")

DEFAULT_TOLERANCES = {
    "rank": 0.0,
    "relation": 1e-10,
    "omega_symmetry": 1e-9,
    "dsigma_identity": 1e-9,
    "residue": 1e-8,
    "limit": 1e-5,
    "tau_symmetry": 1e-8,
    "legendre_x4": 1e-8,
    "legendre_x12": 1e-6,
    "quasi_periodicity": 1e-8,
    "vanishing": 1e-6,
    "vanishing_x12": 1e-3,
    "finite_difference": 1e-6,
    "jacobi": 1e-5,
    "jacobi_x12": 1e-3,
    "strata": 1e-5,
    "bridge": 1e-5,
}


@dataclass
class RunConfig:
    """Everything a pipeline run depends on.  Every field has a default.

    ``branch_points`` are exact rationals written as strings; an empty list
    selects the curve's default moduli.  ``theta_tail`` of 0 selects the
    genus default (1e-14 for genus 4, 1e-6 for genus 12).
    """

    curve: str = "x4"
    branch_points: list[str] = field(default_factory=list)
    quadrature_order: int = 32
    theta_tail: float = 0.0
    samples: int = 20
    pairs: int = 50
    rank_samples: int = 100
    tolerances: dict[str, float] = field(default_factory=dict)
    output: str = ""
    seed: int = 0
    precision: str = "double"
    stages: list[str] = field(default_factory=lambda: list(STAGES))

    def __post_init__(self):
        if self.precision not in ("double", "extended"):
            raise ValueError("precision must be 'double' or 'extended'")
        unknown = set(self.stages) - set(STAGES)
        if unknown:
            raise ValueError(f"unknown stages {sorted(unknown)}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerances {sorted(unknown)}")

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    @property
    def tail(self) -> float:
        if self.theta_tail:
            return self.theta_tail
        return 1e-14 if self.curve == "x4" else 1e-6

    @property
    def order(self) -> int:
        # extended precision doubles the quadrature order
        return self.quadrature_order * (2 if self.precision == "extended" else 1)

    def moduli(self):
        return [Fraction(b) for b in self.branch_points] or None

    def dumps(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        extra = set(data) - names
        if extra:
            raise ValueError(f"unknown config keys {sorted(extra)}")
        data = dict(data)
        if "branch_points" in data:
            data["branch_points"] = [str(Fraction(str(b))) for b in data["branch_points"]]
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".toml":
            return cls.from_dict(tomllib.loads(text))
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# report helpers


def jsonable(v):
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, Fraction):
        return str(v)
    return v


@dataclass
class StageResult:
    stage: str
    residuals: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    error: dict | None = None
    stretch: bool = False

    def add(self, name: str, values, tol: float, *, below: bool = True) -> None:
        """Record a residual series; ``below=False`` means values must exceed tol."""
        vals = [float(v) for v in np.atleast_1d(values)]
        ok = max(vals) <= tol if below else min(vals) >= tol
        self.residuals[name] = {"max": max(vals), "mean": float(np.mean(vals)),
                                "tol": tol, "passed": bool(ok)}
        if not below:
            self.residuals[name]["min"] = min(vals)
            self.residuals[name]["bound"] = "lower"

    @property
    def passed(self) -> bool:
        return self.error is None and all(r["passed"] for r in self.residuals.values())

    def to_dict(self) -> dict:
        out = {"stage": self.stage, "passed": self.passed, "residuals": self.residuals,
               "info": jsonable(self.info)}
        if self.stretch:
            out["stretch"] = True
        if self.error is not None:
            out["error"] = self.error
        return out


class Context:
    """Lazily built objects shared between stages."""

    def __init__(self, config: RunConfig):
        self.config = config
        self._curve = None
        self._pd = None
        self._abel = None
        self._sigma = None

    def rng(self, stage: str) -> np.random.Generator:
        # one independent stream per stage, so --stages does not shift samples
        return np.random.default_rng([self.config.seed, STAGES.index(stage)])

    @property
    def curve(self) -> cv.CurveModel:
        if self._curve is None:
            self._curve = cv.build_curve(self.config.curve, self.config.moduli())
        return self._curve

    @property
    def pd(self) -> pr.PeriodData:
        if self._pd is None:
            self._pd = pr.period_matrices(self.curve, order=self.config.order)
        return self._pd

    @property
    def abel(self) -> pr.AbelMap:
        if self._abel is None:
            self._abel = pr.AbelMap(self.curve, self.pd.basis.x0)
        return self._abel

    @property
    def sigma(self) -> Sigma:
        if self._sigma is None:
            if self.pd.characteristic is None:
                pr.riemann_constant(self.curve, self.pd, self.abel, seed=self.config.seed)
            self._sigma = Sigma(self.pd, tail=self.config.tail)
        return self._sigma


# ---------------------------------------------------------------------------
# stages

EXPECTED_GAPS = {
    "x4": [1, 2, 4, 5],
    "x12": [1, 2, 3, 4, 5, 7, 8, 9, 10, 11, 17, 23],
}


def stage_semigroup(ctx: Context, res: StageResult) -> None:
    gens = sg.H4 if ctx.config.curve == "x4" else sg.H12
    s = sg.NumericalSemigroup(gens)
    summary = sg.summary(s)
    res.info.update(summary)
    top = 4 * max(s.gaps)
    reach = [True] + [False] * top
    for n in range(1, top + 1):
        reach[n] = any(n >= a and reach[n - a] for a in gens)
    brute = [n for n in range(top + 1) if not reach[n]]
    res.add("gap_mismatch", [float(summary["gaps"] != EXPECTED_GAPS[ctx.config.curve]),
                             float(brute != list(s.gaps))], 0.0)
    prof = sg.profile(s)
    res.add("weight_defect", [float(abs(prof.weight - sum(prof.alpha)))], 0.0)


def stage_curve(ctx: Context, res: StageResult) -> None:
    c = ctx.curve
    rng = ctx.rng("curve")
    res.info["riemann_hurwitz_genus"] = c.riemann_hurwitz_genus()
    res.add("genus_mismatch", [float(c.riemann_hurwitz_genus() != c.genus)], 0.0)
    checks = {**cv.minor_checks(c), **cv.monomial_kernel_check(c.name)}
    res.info["ideal_checks"] = checks
    res.add("ideal_failures", [float(sum(not v for v in checks.values()))], 0.0)
    expected = 2 if c.name == "x4" else 4
    pts = [c.branch_point(j) for j in range(len(c.branch_points))]
    pts += [c.random_point(rng) for _ in range(ctx.config.rank_samples)]
    rank_def = [abs(cv.jacobian_rank(c, p) - expected) for p in pts]
    rank_def.append(abs(cv.second_chart_rank(c, None) - expected))
    res.add("rank_defect", rank_def, ctx.config.tol("rank"))
    res.add("relation_residual", [max(c.residuals(p).values()) for p in pts], ctx.config.tol("relation"))


def stage_forms(ctx: Context, res: StageResult) -> None:
    c = ctx.curve
    rng = ctx.rng("forms")
    cfg = ctx.config
    sym, ident = [], []
    for _ in range(cfg.pairs):
        P, Q = c.random_point(rng), c.random_point(rng)
        sym.append(df.symmetry_residual(c, P, Q))
        ident.append(df.identity_residual(c, P, Q))
    res.add("omega_symmetry", sym, cfg.tol("omega_symmetry"))
    res.add("dsigma_identity", ident, cfg.tol("dsigma_identity"))
    resid, lim = [], []
    for _ in range(5):
        P1, P2 = c.random_point(rng), c.random_point(rng)
        pi = df.third_kind(c, P1, P2)
        resid.append(abs(df.contour_residue(c, pi, P1) - 1))
        resid.append(abs(df.contour_residue(c, pi, P2) + 1))
        got, want = df.limit_check(c, c.random_point(rng))
        lim.append(abs(got - want) / max(1.0, abs(want)))
    res.add("third_kind_residue", resid, cfg.tol("residue"))
    res.add("limit_at_infinity", lim, cfg.tol("limit"))
    res.info["rederived_second_kind"] = list(df.rederived_labels(c))


def stage_periods(ctx: Context, res: StageResult) -> None:
    pd = ctx.pd
    res.add("tau_symmetry", [pr.tau_symmetry(pd)], ctx.config.tol("tau_symmetry"))
    res.add("min_eig_im_tau", [float(np.linalg.eigvalsh(pd.tau.imag).min())], 0.0, below=False)
    res.add("omega_eta_symmetry", [pr.omega_eta_symmetry(pd)], ctx.config.tol("tau_symmetry"))
    res.info["intersection_is_standard"] = bool(
        np.array_equal(pd.basis.intersection(), pr.standard_J(pd.genus)))


def stage_legendre(ctx: Context, res: StageResult) -> None:
    key = "legendre_x4" if ctx.config.curve == "x4" else "legendre_x12"
    res.add("legendre", [pr.legendre_residual(ctx.pd)], ctx.config.tol(key))


def _fd_gradient_residual(sig: Sigma, u, h: float = 1e-5) -> tuple[float, float]:
    sv = sig(u, derivs=2)
    g = len(u)
    fd_g = np.zeros(g, dtype=complex)
    fd_h = np.zeros((g, g), dtype=complex)
    for i in range(g):
        e = np.zeros(g, dtype=complex)
        e[i] = h
        p, m = sig(u + e, derivs=1), sig(u - e, derivs=1)
        fd_g[i] = (p.value - m.value) / (2 * h)
        fd_h[i] = (p.gradient - m.gradient) / (2 * h)
    rg = np.max(np.abs(fd_g - sv.gradient)) / np.max(np.abs(sv.gradient))
    rh = np.max(np.abs(fd_h - sv.hessian)) / np.max(np.abs(sv.hessian))
    return float(rg), float(rh)


def stage_sigma(ctx: Context, res: StageResult) -> None:
    c, cfg = ctx.curve, ctx.config
    sig, abel = ctx.sigma, ctx.abel
    rng = ctx.rng("sigma")
    g = c.genus
    res.info["characteristic"] = [float(v) for v in ctx.pd.characteristic]
    if g > 4:
        # coarse property checks only; the full battery is out of desk reach
        res.stretch = True
        n = min(cfg.samples, 5)
        van = [vanishing_ratio(sig, abel([c.random_point(rng) for _ in range(g - 1)]))
               for _ in range(n)]
        res.add("vanishing", van, cfg.tol("vanishing_x12"))
        return
    scale = np.max(np.abs(ctx.pd.omega1))
    quasi, signs = [], []
    for _ in range(cfg.samples):
        u = scale * (rng.normal(size=g) + 1j * rng.normal(size=g)) / 2
        k = int(rng.integers(2 * g))
        l1, l2 = np.zeros(g, dtype=int), np.zeros(g, dtype=int)
        (l1 if k < g else l2)[k % g] = 1 if rng.random() < 0.5 else -1
        quasi.append(sig.quasi_periodicity_residual(u, l1, l2))
        signs.append(sig.parity_sign(u))
    res.add("quasi_periodicity", quasi, cfg.tol("quasi_periodicity"))
    s0 = signs[0]
    res.add("parity_spread", [abs(s - s0) for s in signs], 1e-8)
    res.info["parity_sign"] = round(float(s0.real))
    van = []
    for _ in range(cfg.samples):
        van.append(vanishing_ratio(sig, abel([c.random_point(rng) for _ in range(g - 1)], shifted=True)))
    res.add("vanishing", van, cfg.tol("vanishing"))
    generic = [vanishing_ratio(sig, abel([c.random_point(rng) for _ in range(g)], shifted=True))
               for _ in range(5)]
    res.add("generic_nonvanishing", generic, 1e-3, below=False)
    fd_g, fd_h = [], []
    for _ in range(3):
        u = scale * (rng.normal(size=g) + 1j * rng.normal(size=g)) / 4
        a, b = _fd_gradient_residual(sig, u)
        fd_g.append(a)
        fd_h.append(b)
    res.add("gradient_fd", fd_g, cfg.tol("finite_difference"))
    res.add("hessian_fd", fd_h, cfg.tol("finite_difference"))


def stage_jacobi(ctx: Context, res: StageResult) -> None:
    c, cfg = ctx.curve, ctx.config
    sig, abel = ctx.sigma, ctx.abel
    rng = ctx.rng("jacobi")
    g = c.genus
    if g > 4:
        res.stretch = True
        pts = inv.generic_points(c, rng, g)
        res.add("jacobi", [inv.jacobi_inversion_residual(c, sig, abel, pts)["residual"]],
                cfg.tol("jacobi_x12"))
        return
    jac = []
    for _ in range(cfg.samples):
        pts = inv.generic_points(c, rng, g)
        jac.append(inv.jacobi_inversion_residual(c, sig, abel, pts)["residual"])
    res.add("jacobi", jac, cfg.tol("jacobi"))
    for k in range(1, g):
        vals = []
        for _ in range(max(cfg.samples // 4, 1)):
            pts = inv.generic_points(c, rng, k)
            vals.append(inv.strata_residual(c, sig, abel, pts)["residual"])
        res.add(f"strata_k{k}", vals, cfg.tol("strata"))
    br = []
    for _ in range(max(cfg.samples // 4, 1)):
        pts = inv.generic_points(c, rng, g)
        br.append(inv.bridge_residual(c, sig, abel, c.random_point(rng), pts))
    res.add("bridge", br, cfg.tol("bridge"))


STAGE_FUNCS = {
    "semigroup": stage_semigroup,
    "curve": stage_curve,
    "forms": stage_forms,
    "periods": stage_periods,
    "legendre": stage_legendre,
    "sigma": stage_sigma,
    "jacobi": stage_jacobi,
}


def run_pipeline(config: RunConfig, raise_errors: bool = False) -> dict:
    """Execute the selected stages in canonical order and collect a report.

    A library error inside a stage is recorded with that stage's tag and
    stops the run; with ``raise_errors`` it is re-raised with ``.stage`` set.
    """
    ctx = Context(config)
    results = []
    for name in STAGES:
        if name not in config.stages:
            continue
        res = StageResult(name)
        try:
            STAGE_FUNCS[name](ctx, res)
        except KleinError as exc:
            exc.stage = name
            if raise_errors:
                raise
            res.error = {"type": type(exc).__name__, "message": str(exc)}
            results.append(res)
            break
        results.append(res)
    stages = [r.to_dict() for r in results]
    return {
        "schema": REPORT_SCHEMA,
        "config": asdict(config),
        "stages": stages,
        "passed": all(s["passed"] for s in stages),
    }


def dumps_report(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"
