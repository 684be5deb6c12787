"""Command-line front end (``kleinsigma``)."""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import curves as cv
from . import moonshine as ms
from . import periods as pr
from . import semigroup as sg
from .errors import KleinError
from .pipeline import STAGES, RunConfig, dumps_report, jsonable, run_pipeline
from .polyring import MultiPoly


def _emit(ctx: click.Context, payload: dict, text: str | None = None) -> None:
    if ctx.obj["json"] or text is None:
        click.echo(json.dumps(jsonable(payload), sort_keys=True, indent=2))
    else:
        click.echo(text)


def _parse_complex_list(text: str) -> np.ndarray:
    parts = [p.strip().replace("i", "j").replace("I", "j") for p in text.split(",") if p.strip()]
    return np.array([complex(p) for p in parts])


def _curve_from(config: RunConfig, name: str | None) -> cv.CurveModel:
    which = name or config.curve
    moduli = config.moduli() if which == config.curve else None
    return cv.build_curve(which, moduli)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="TOML or JSON run configuration.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.option("--seed", type=int, default=None, help="Random seed (overrides the config).")
@click.option("--precision", type=click.Choice(["double", "extended"]), default=None)
@click.pass_context
def main(ctx, config_path, as_json, seed, precision):
    """Sigma functions on the curves with semigroups <3,7,8> and <6,13,14,15,16>."""
    config = RunConfig.load(config_path) if config_path else RunConfig()
    if seed is not None:
        config = replace(config, seed=seed)
    if precision is not None:
        config = replace(config, precision=precision)
    ctx.obj = {"config": config, "json": as_json}


# ---------------------------------------------------------------------------


@main.command()
@click.option("--gens", required=True, help="Comma separated generators, e.g. 3,7,8.")
@click.pass_context
def semigroup(ctx, gens):
    """Gap data of a numerical semigroup."""
    s = sg.NumericalSemigroup(tuple(int(g) for g in gens.split(",")))
    info = sg.summary(s)
    text = "\n".join(f"{k}: {v}" for k, v in info.items())
    _emit(ctx, info, text)


@main.group()
def ring():
    """Polynomial ring operations."""


@ring.command("reduce")
@click.option("--curve", "which", type=click.Choice(["x4", "x12"]), default=None)
@click.option("--poly", required=True, help='Polynomial such as "y7^2*y8".')
@click.pass_context
def ring_reduce(ctx, which, poly):
    """Normal form of a polynomial modulo the curve's relations."""
    curve = _curve_from(ctx.obj["config"], which)
    p = MultiPoly.parse(poly, curve.variables)
    nf = cv.normal_form(p, curve)
    _emit(ctx, {"input": poly, "normal_form": str(nf), "weight": cv.poly_weight(nf, curve) if nf else None},
          str(nf))


@main.group()
def curve():
    """Curve model checks."""


@curve.command("check")
@click.option("--curve", "which", type=click.Choice(["x4", "x12"]), default=None)
@click.option("--samples", type=int, default=100)
@click.pass_context
def curve_check(ctx, which, samples):
    """Jacobian ranks and relation residuals at branch and random points."""
    config = ctx.obj["config"]
    c = _curve_from(config, which)
    rng = np.random.default_rng(config.seed)
    pts = [c.branch_point(j) for j in range(len(c.branch_points))]
    pts += [c.random_point(rng) for _ in range(samples)]
    ranks = [cv.jacobian_rank(c, p) for p in pts]
    resid = [max(c.residuals(p).values()) for p in pts]
    out = {"curve": c.name, "points": len(pts), "ranks": sorted(set(ranks)),
           "second_chart_rank": cv.second_chart_rank(c, None),
           "relation_residual": {"max": max(resid), "mean": float(np.mean(resid))},
           "riemann_hurwitz_genus": c.riemann_hurwitz_genus()}
    _emit(ctx, out)


@main.group()
def forms():
    """Differential forms."""


@forms.command("verify")
@click.option("--curve", "which", type=click.Choice(["x4", "x12"]), default=None)
@click.option("--pairs", type=int, default=50)
@click.pass_context
def forms_verify(ctx, which, pairs):
    """Symmetry, the d-Sigma identity, residues and the limit at infinity."""
    config = replace(ctx.obj["config"], curve=which or ctx.obj["config"].curve, pairs=pairs,
                     stages=["forms"])
    if which and which != ctx.obj["config"].curve:
        config = replace(config, branch_points=[])
    report = run_pipeline(config)
    _emit(ctx, report["stages"][0])
    sys.exit(0 if report["passed"] else 1)


@main.group()
def periods():
    """Period matrices."""


@periods.command("compute")
@click.option("--curve", "which", type=click.Choice(["x4", "x12"]), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--no-characteristic", is_flag=True, help="Skip the Riemann constant.")
@click.pass_context
def periods_compute(ctx, which, out_path, no_characteristic):
    """Compute periods (and the Riemann constant) and store them as JSON."""
    config = ctx.obj["config"]
    c = _curve_from(config, which)
    pd = pr.period_matrices(c, order=config.order)
    if not no_characteristic:
        pr.riemann_constant(c, pd, seed=config.seed)
    data = pr.periods_to_dict(c, pd)
    if out_path:
        Path(out_path).write_text(json.dumps(data, indent=1) + "\n")
    _emit(ctx, data["residuals"] | {"curve": c.name, "out": out_path})


@main.group()
def sigma():
    """Sigma function evaluation."""


@sigma.command("eval")
@click.option("--periods", "periods_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--u", "u_text", required=True, help='Comma separated complex entries, e.g. "0.1+0.2i,0,0,0".')
@click.option("--derivs", type=click.IntRange(0, 2), default=0)
@click.option("--tail", type=float, default=None)
@click.pass_context
def sigma_eval(ctx, periods_path, u_text, derivs, tail):
    """Evaluate sigma and optionally its gradient and Hessian."""
    from .sigma import Sigma

    c, pd = pr.periods_from_dict(json.loads(Path(periods_path).read_text()))
    if pd.characteristic is None:
        pr.riemann_constant(c, pd, seed=ctx.obj["config"].seed)
    u = _parse_complex_list(u_text)
    if len(u) != pd.genus:
        raise click.BadParameter(f"need {pd.genus} entries", param_hint="--u")
    tail = tail if tail is not None else (1e-14 if pd.genus <= 4 else 1e-6)
    sv = Sigma(pd, tail=tail)(u, derivs=derivs)
    out = {"value": sv.value}
    if derivs >= 1:
        out["gradient"] = sv.gradient
    if derivs >= 2:
        out["hessian"] = sv.hessian
    _emit(ctx, out, None)


@main.group()
def jacobi():
    """Jacobi inversion checks."""


@jacobi.command("verify")
@click.option("--samples", type=int, default=None)
@click.pass_context
def jacobi_verify(ctx, samples):
    """Inversion, strata and bridge residuals on the configured curve."""
    config = ctx.obj["config"]
    config = replace(config, stages=["jacobi"], samples=samples or config.samples)
    report = run_pipeline(config)
    _emit(ctx, report["stages"][0])
    sys.exit(0 if report["passed"] else 1)


@main.group()
def moonshine():
    """Grunsky coefficients and replicability."""


@moonshine.command("grunsky")
@click.option("--series", "series_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file {coeffs: [h1, h2, ...]}; defaults to the bundled j-series.")
@click.option("--order", type=int, default=20)
@click.pass_context
def moonshine_grunsky(ctx, series_path, order):
    """Grunsky table, Norton scan and the low-order identities."""
    f = ms.QSeries.from_json(series_path) if series_path else ms.j_series()
    table = ms.grunsky(f, order)
    viol = ms.norton_check(f, order)
    out = {
        "order": order,
        "symmetric": table.is_symmetric(),
        "replicable": not viol,
        "violations": [{"pair": [list(v.first), list(v.second)], "difference": str(v.difference)}
                       for v in viol[:20]],
        "identities": [{"n": c.n, "pair": list(c.pair), "holds": c.holds} for c in ms.example_identities(f)]
        if f.truncation >= 15 else [],
        "recursion_matches": ms.recursion_report(f, order).matches,
        "gap_vs_norton": ms.gap_vs_norton().to_dict(),
        "table": {f"{m},{n}": str(table[m, n]) for m, n in table.pairs() if m <= n},
    }
    _emit(ctx, out)


@main.command()
@click.option("--stages", default=None, help=f"Comma separated subset of {','.join(STAGES)}.")
@click.option("--curve", "which", type=click.Choice(["x4", "x12"]), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def pipeline(ctx, stages, which, out_path):
    """Run the staged verification and print the JSON report."""
    config = ctx.obj["config"]
    if stages:
        config = replace(config, stages=[s.strip() for s in stages.split(",") if s.strip()])
    if which:
        config = replace(config, curve=which)
    report = run_pipeline(config)
    text = dumps_report(report)
    target = out_path or config.output
    if target:
        Path(target).write_text(text)
    click.echo(text, nl=False)
    sys.exit(0 if report["passed"] else 1)


def run() -> None:  # pragma: no cover
    try:
        main(standalone_mode=True)
    except KleinError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":  # pragma: no cover
    run()
