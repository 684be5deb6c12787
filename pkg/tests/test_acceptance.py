"""End-to-end acceptance criteria, one test each.

Every criterion prints a single ``PASS``/``FAIL`` line (collected again in
the terminal summary).  Run directly with ``python3 tests/test_acceptance.py``
to get just the lines.
"""

import json
import time

import numpy as np
import pytest

from kleinsigma import curves as cv
from kleinsigma import differentials as df
from kleinsigma import inversion as inv
from kleinsigma import moonshine as ms
from kleinsigma import periods as pr
from kleinsigma import semigroup as sgp
from kleinsigma.errors import DeeperStratum
from kleinsigma.pipeline import RunConfig, dumps_report, run_pipeline
from kleinsigma.sigma import Sigma, theta_parity, vanishing_ratio

LINES: list[str] = []


def report(num: int, title: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {num:2d}  {title}: {detail}"
    LINES.append(line)
    print(line)
    return ok


def _stage(report_dict, name):
    return next(s for s in report_dict["stages"] if s["stage"] == name)


def _worst(stage, key):
    return stage["residuals"][key]["max"]


# ---------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    want = {
        (3, 7, 8): ((1, 2, 4, 5), (0, 0, 1, 1), 2, (2, 2, 1, 1)),
        (3, 7): ((1, 2, 4, 5, 8, 11), (0, 0, 1, 1, 3, 5), 10, (6, 4, 2, 2, 1, 1)),
        (3, 8): ((1, 2, 4, 5, 7, 10, 13), (0, 0, 1, 1, 2, 4, 6), 14, (7, 5, 3, 2, 2, 1, 1)),
        (6, 13, 14, 15, 16): ((1, 2, 3, 4, 5, 7, 8, 9, 10, 11, 17, 23),
                              (0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 6, 11), 22,
                              (12, 7, 2, 2, 2, 2, 2, 1, 1, 1, 1, 1)),
    }
    bad = []
    for gens, (gaps, alpha, weight, young) in want.items():
        s = sgp.NumericalSemigroup(gens)
        p = sgp.profile(s)
        got = (tuple(s.gaps), tuple(p.alpha), p.weight, tuple(p.young))
        if got != (gaps, alpha, weight, young):
            bad.append((gens, got))
    buch = sgp.buchweitz_l2(sgp.NumericalSemigroup(sgp.H_BUCHWEITZ))
    dt = time.perf_counter() - t0
    ok = not bad and buch == (46, 45, True) and dt < 1
    return report(1, "semigroup exactness", ok,
                  f"mismatches={bad or 'none'} buchweitz={buch} time={dt:.2f}s")


def criterion_2():
    t0 = time.perf_counter()
    checks = {}
    for which in ("x4", "x12"):
        checks.update({f"{which}:{k}": v for k, v in cv.minor_checks(cv.build_curve(which)).items()})
        checks.update({f"{which}:mono:{k}": v for k, v in cv.monomial_kernel_check(which).items()})
    dt = time.perf_counter() - t0
    failed = [k for k, v in checks.items() if not v]
    ok = not failed and dt < 1
    return report(2, "ideal consistency", ok,
                  f"{len(checks)} exact identities, failed={failed or 'none'} time={dt:.2f}s")


def criterion_3():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for which, want in (("x4", 2), ("x12", 4)):
        c = cv.build_curve(which)
        rng = np.random.default_rng(2024)
        pts = [c.branch_point(j) for j in range(len(c.branch_points))]
        pts += [c.random_point(rng) for _ in range(100)]
        first = {cv.jacobian_rank(c, p) for p in pts}
        second = {cv.second_chart_rank(c, p) for p in pts[len(c.branch_points):]}
        origin = cv.second_chart_rank(c, None)
        good = first == {want} and second == {want} and origin == want
        ok &= good
        parts.append(f"{which} ranks={sorted(first)} chart2={sorted(second)} chart2@inf={origin} (want {want})")
    dt = time.perf_counter() - t0
    ok &= dt < 10
    return report(3, "smoothness", ok, "; ".join(parts) + f" time={dt:.1f}s")


def criterion_4():
    t0 = time.perf_counter()
    parts, ok = [], True
    for which in ("x4", "x12"):
        rep = run_pipeline(RunConfig(curve=which, stages=["forms"], pairs=50, seed=4))
        st = _stage(rep, "forms")
        ok &= st["passed"]
        parts.append(
            f"{which} sym={_worst(st, 'omega_symmetry'):.1e} ident={_worst(st, 'dsigma_identity'):.1e} "
            f"res={_worst(st, 'third_kind_residue'):.1e} limit={_worst(st, 'limit_at_infinity'):.1e} "
            f"rederived={st['info']['rederived_second_kind']}")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    return report(4, "differential identities", ok, "; ".join(parts) + f" time={dt:.1f}s")


def criterion_5():
    parts, ok = [], True
    for which, tol, limit in (("x4", 1e-8, 60), ("x12", 1e-6, 600)):
        t0 = time.perf_counter()
        pd = pr.period_matrices(cv.build_curve(which))
        ts, leg = pr.tau_symmetry(pd), pr.legendre_residual(pd)
        mineig = float(np.linalg.eigvalsh(pd.tau.imag).min())
        dt = time.perf_counter() - t0
        good = ts < 1e-8 and mineig > 0 and leg < tol and dt < limit
        ok &= good
        parts.append(f"{which} tau_sym={ts:.1e} min_eig={mineig:.2e} legendre={leg:.1e} time={dt:.1f}s")
    return report(5, "periods", ok, "; ".join(parts))


def criterion_6():
    rep = run_pipeline(RunConfig(stages=["sigma"], samples=20, seed=6))
    st = _stage(rep, "sigma")
    detail = (f"quasi={_worst(st, 'quasi_periodicity'):.1e} vanishing={_worst(st, 'vanishing'):.1e} "
              f"generic_min={st['residuals']['generic_nonvanishing']['min']:.2f} "
              f"grad_fd={_worst(st, 'gradient_fd'):.1e} hess_fd={_worst(st, 'hessian_fd'):.1e}")
    return report(6, "sigma (genus 4)", st["passed"], detail)


def criterion_7():
    t0 = time.perf_counter()
    rep = run_pipeline(RunConfig(stages=["jacobi"], samples=20, seed=7))
    st = _stage(rep, "jacobi")
    dt = time.perf_counter() - t0
    detail = (f"jacobi={_worst(st, 'jacobi'):.1e} "
              + " ".join(f"k{k}={_worst(st, f'strata_k{k}'):.1e}" for k in (1, 2, 3))
              + f" bridge={_worst(st, 'bridge'):.1e} time={dt:.1f}s")
    return report(7, "Jacobi inversion (genus 4)", st["passed"] and dt < 300, detail)


def criterion_8():
    c = cv.build_curve("x4")
    pd = pr.period_matrices(c)
    abel = pr.AbelMap(c, pd.basis.x0)
    rng = np.random.default_rng(8)
    worst, involutive = 0.0, 0
    for _ in range(10):
        P = inv.generic_triple(c, rng)
        Q = inv.serre_dual_points(c, P)
        worst = max(worst, inv.serre_abel_residual(c, pd, abel, P, Q))
        back = inv.serre_dual_points(c, Q)
        involutive += all(any(c.same_point(a, b, 1e-7) for b in back) for a in P)
    ok = worst < 1e-6 and involutive == 10
    return report(8, "Serre-duality involution", ok,
                  f"abel residual mod lattice={worst:.1e} involution holds on {involutive}/10 triples")


def criterion_9():
    t0 = time.perf_counter()
    c = cv.build_curve("x12")
    pd = pr.period_matrices(c)
    abel = pr.AbelMap(c, pd.basis.x0)
    pr.riemann_constant(c, pd, abel)
    rng = np.random.default_rng(9)
    g = c.genus
    fine, finer = Sigma(pd, tail=1e-6), Sigma(pd, tail=1e-8)
    u = abel([c.random_point(rng) for _ in range(g)])
    s6 = fine.value(u)
    parity = fine.value(-u) / s6
    parity_ok = abs(parity - theta_parity(pd.characteristic)) < 1e-6
    trunc = abs(finer.value(u) - s6) / abs(s6)
    coarse = Sigma(pd, tail=1e-3)
    van = [vanishing_ratio(coarse, abel([c.random_point(rng) for _ in range(g - 1)])) for _ in range(5)]
    mid = Sigma(pd, tail=1e-4)
    w1, grad_rel = [], []
    for _ in range(3):
        P = c.random_point(rng)
        try:
            out = inv.strata_residual(c, mid, abel, [P])
            w1.append(out["residual"])
            grad_rel.append(out["gradient_relative"])
        except DeeperStratum:
            w1.append(np.inf)
    dt = time.perf_counter() - t0
    ok = parity_ok and trunc < 1e-6 and max(van) < 1e-3 and max(w1) < 1e-3
    detail = (f"[stretch] parity={parity.real:+.6f} truncation={trunc:.1e} vanishing={max(van):.1e} "
              f"W1 sigma_1/sigma_2=-x residual={max(w1):.2f} "
              f"(|grad| vs |sigma| nearby: {max(grad_rel, default=0):.1e}) time={dt:.0f}s")
    return report(9, "genus-12 property checks", ok, detail)


def criterion_10():
    t0 = time.perf_counter()
    j = ms.j_series()
    ids = ms.example_identities(j)
    clean = ms.norton_check(j, 20)
    flagged = ms.norton_check(j.perturbed(5, 1), 20)
    gap = ms.gap_vs_norton()
    dt = time.perf_counter() - t0
    ok = all(i.holds for i in ids) and not clean and bool(flagged) \
        and gap.symmetric_difference == (10, 19) and dt < 10
    return report(10, "moonshine", ok,
                  f"identities {sum(i.holds for i in ids)}/5, j violations={len(clean)}, "
                  f"perturbed violations={len(flagged)}, symmetric difference={set(gap.symmetric_difference)} "
                  f"time={dt:.1f}s")


def criterion_11():
    cfg = RunConfig(seed=11)
    a = dumps_report(run_pipeline(cfg))
    b = dumps_report(run_pipeline(cfg))
    passed = json.loads(a)["passed"]
    return report(11, "determinism", a == b,
                  f"{len(a)} report bytes, identical={a == b}, default genus-4 run passed={passed}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 12)])
def test_criterion(crit):
    assert crit()


if __name__ == "__main__":
    for crit in CRITERIA:
        crit()
