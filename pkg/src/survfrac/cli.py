"""Command-line front end: estimate, compare, simulate, km-curve."""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import __version__
from .dataset import DataError, Dataset, parse_csv, split_by_group
from .fracmean import (
    FractionGrid,
    decile_grid,
    fraction_mean_bounds,
    fraction_means,
    max_observed_fraction,
    restricted_mean,
    truncate_grid,
)
from .inference import bootstrap_fraction_diff, bootstrap_restricted_mean_diff
from .km import BandUndefinedError, ep_band, fit_km
from .output import FORMATS, OutputDocument, Section, render
from .sim import SimConfig, run_study

CONVENTIONS = {
    "tie_rule": "events-before-censorings",
    "band_variant": "nair-equal-precision-untransformed",
    "band_range": "first-event-to-last-event-with-positive-survival-and-5pct-at-risk",
    "upper_bound_averaging": "finite-values-only",
    "noncomputable_fractions": "flagged-partial-sums",
}


def _default_format() -> str:
    fmt = os.environ.get("SURVFRAC_FORMAT", "table")
    return fmt if fmt in FORMATS else "table"


def _parse_lambdas(text: str) -> FractionGrid:
    try:
        uppers = [float(tok) for tok in text.split(",") if tok.strip() != ""]
        return FractionGrid.from_uppers(uppers)
    except ValueError as exc:
        raise DataError(f"bad --lambdas value {text!r}: {exc}") from None


def _base_metadata(**extra) -> dict:
    meta = {"version": __version__}
    meta.update(extra)
    meta["conventions"] = CONVENTIONS
    return meta


def _load(args) -> Dataset:
    return parse_csv(
        args.input,
        time_col=args.time_col,
        status_col=args.status_col,
        group_col=getattr(args, "group_col", None),
    )


def _estimate_rows(curve, grid, bounds):
    rows = []
    fm = fraction_means(curve, grid)
    for j in range(grid.k):
        lo, up = bounds[j] if bounds is not None else (None, None)
        rows.append(
            {
                "k": j + 1,
                "lambda": grid.lambdas[j + 1],
                "mu": fm.mu[j],
                "mu_bar": fm.mu_bar[j],
                "lower": lo,
                "upper": up,
                "upper_finite": (math.isfinite(up) if up is not None else None),
                "computable": fm.computable[j],
                "events": fm.events[j],
            }
        )
    return rows


def cmd_estimate(args) -> OutputDocument:
    ds = _load(args)
    curve = fit_km(ds)
    max_frac = max_observed_fraction(curve)
    if args.lambdas:
        grid = _parse_lambdas(args.lambdas)
    else:
        grid = decile_grid(max_frac)

    notes = []
    bounds = None
    try:
        band = ep_band(curve, args.band_level)
        bounds = fraction_mean_bounds(curve, band, grid)
        band_coeff = band.coefficient
    except BandUndefinedError as exc:
        notes.append(f"band undefined: {exc}")
        band_coeff = None

    meta = _base_metadata(
        input=str(args.input),
        n=len(ds),
        events=ds.n_events,
        max_observed_fraction=max_frac,
        lambdas=list(grid.lambdas),
        band_level=args.band_level,
        band_coefficient=band_coeff,
        notes=notes,
    )
    cols = ["k", "lambda", "mu", "mu_bar", "lower", "upper", "upper_finite",
            "computable", "events"]
    return OutputDocument(
        command="estimate",
        metadata=meta,
        sections=[Section(columns=cols, rows=_estimate_rows(curve, grid, bounds))],
    )


def cmd_compare(args) -> OutputDocument:
    ds = _load(args)
    groups = split_by_group(ds)
    if len(groups) != 2:
        raise DataError(
            f"comparison needs exactly 2 groups, found {sorted(groups)}"
        )
    if args.ref_group not in groups:
        raise DataError(
            f"--ref-group {args.ref_group!r} not among groups {sorted(groups)}"
        )
    (other,) = [g for g in groups if g != args.ref_group]
    g0, g1 = groups[args.ref_group], groups[other]

    curves = {label: fit_km(g) for label, g in ((args.ref_group, g0), (other, g1))}
    common_max = min(max_observed_fraction(c) for c in curves.values())
    requested = _parse_lambdas(args.lambdas) if args.lambdas else decile_grid(common_max)
    grid = truncate_grid(requested, common_max)

    estimates = bootstrap_fraction_diff(
        g0, g1, grid, B=args.bootstrap, level=args.level, seed=args.seed,
        workers=args.workers,
    )
    rows = []
    for j, est in enumerate(estimates):
        rows.append(
            {
                "k": j + 1,
                "lambda": grid.lambdas[j + 1],
                "diff": est.point,
                "ci_lower": est.ci_lower,
                "ci_upper": est.ci_upper,
                "effective_replicates": est.effective_replicates,
                "unreliable": est.unreliable,
            }
        )
    sections = [
        Section(
            label="fraction_mean_differences",
            columns=["k", "lambda", "diff", "ci_lower", "ci_upper",
                     "effective_replicates", "unreliable"],
            rows=rows,
        )
    ]

    horizon = None
    if args.restricted_mean is not None:
        if args.restricted_mean == "auto":
            horizon = min(float(c.times[-1]) for c in curves.values())
        else:
            horizon = float(args.restricted_mean)
            if horizon <= 0:
                raise DataError(f"horizon must be positive, got {horizon}")
        est = bootstrap_restricted_mean_diff(
            g0, g1, horizon, B=args.bootstrap, level=args.level,
            seed=args.seed, workers=args.workers,
        )
        sections.append(
            Section(
                label="restricted_mean_difference",
                columns=["horizon", "diff", "ci_lower", "ci_upper",
                         "effective_replicates", "unreliable"],
                rows=[
                    {
                        "horizon": horizon,
                        "diff": est.point,
                        "ci_lower": est.ci_lower,
                        "ci_upper": est.ci_upper,
                        "effective_replicates": est.effective_replicates,
                        "unreliable": est.unreliable,
                    }
                ],
            )
        )

    meta = _base_metadata(
        input=str(args.input),
        ref_group=args.ref_group,
        comparison_group=other,
        group_sizes={label: len(g) for label, g in ((args.ref_group, g0), (other, g1))},
        common_max_fraction=common_max,
        lambdas=list(grid.lambdas),
        bootstrap=args.bootstrap,
        level=args.level,
        seed=args.seed,
        restricted_mean_horizon=horizon,
    )
    return OutputDocument(command="compare", metadata=meta, sections=sections)


def _read_sim_config(path: str) -> dict:
    values: dict = {}
    known = {
        "n_datasets": int,
        "n": int,
        "alpha": float,
        "beta": float,
        "censor_upper": float,
        "lambdas": str,
        "band_level": float,
        "seed": int,
    }
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            for sep in ("=", ":"):
                if sep in line:
                    key, _, val = line.partition(sep)
                    break
            else:
                raise DataError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
            key = key.strip()
            val = val.strip()
            if key not in known:
                raise DataError(f"{path}:{line_no}: unknown key {key!r}")
            try:
                values[key] = known[key](val)
            except ValueError:
                raise DataError(f"{path}:{line_no}: bad value {val!r} for {key}") from None
    return values


def cmd_simulate(args) -> OutputDocument:
    settings = _read_sim_config(args.config) if args.config else {}
    for key in ("n_datasets", "n", "alpha", "beta", "censor_upper",
                "band_level", "seed"):
        flag = getattr(args, key)
        if flag is not None:
            settings[key] = flag
    if args.lambdas is not None:
        settings["lambdas"] = args.lambdas

    grid_text = settings.pop("lambdas", "0.2,0.4,0.6,0.8,0.95")
    grid = _parse_lambdas(grid_text) if isinstance(grid_text, str) else grid_text
    settings.setdefault("n_datasets", 500)
    settings.setdefault("n", 200)
    try:
        cfg = SimConfig(grid=grid, **settings)
    except ValueError as exc:
        raise DataError(str(exc)) from None

    summary = run_study(cfg, workers=args.workers)
    rows = []
    for j in range(grid.k):
        rows.append(
            {
                "k": j + 1,
                "lambda": grid.lambdas[j + 1],
                "true_mu": summary.true_mu[j],
                "mean_estimate": summary.mean_estimate[j],
                "mean_lower": summary.mean_lower[j],
                "mean_upper": summary.mean_upper[j],
                "computable_share": summary.computable_share[j],
                "finite_upper_share": summary.finite_upper_share[j],
                "mean_events": summary.mean_events[j],
            }
        )
    meta = _base_metadata(
        n_datasets=cfg.n_datasets,
        n=cfg.n,
        alpha=cfg.alpha,
        beta=cfg.beta,
        censor_upper=cfg.censor_upper,
        lambdas=list(grid.lambdas),
        band_level=cfg.band_level,
        seed=cfg.seed,
        censoring_rate=summary.censoring_rate,
        band_undefined_count=summary.band_undefined_count,
    )
    cols = ["k", "lambda", "true_mu", "mean_estimate", "mean_lower",
            "mean_upper", "computable_share", "finite_upper_share", "mean_events"]
    return OutputDocument(command="simulate", metadata=meta,
                          sections=[Section(columns=cols, rows=rows)])


def _curve_rows(curve, band):
    rows = [
        {
            "time": 0.0,
            "survival": 1.0,
            "at_risk": curve.n,
            "events": 0,
            "greenwood": 0.0,
            "lower": None,
            "upper": None,
        }
    ]
    for step in curve.steps:
        lo = up = None
        if band is not None and band.range[0] <= step.time <= band.range[1]:
            lo = float(band.lower_at(step.time))
            up = float(band.upper_at(step.time))
        rows.append(
            {
                "time": step.time,
                "survival": step.survival,
                "at_risk": step.at_risk,
                "events": step.events,
                "greenwood": step.greenwood,
                "lower": lo,
                "upper": up,
            }
        )
    return rows


def cmd_km_curve(args) -> OutputDocument:
    ds = _load(args)
    if args.group_col:
        groups = split_by_group(ds)
    else:
        groups = {None: ds}

    notes = []
    sections = []
    cols = ["time", "survival", "at_risk", "events", "greenwood", "lower", "upper"]
    for label, sub in groups.items():
        curve = fit_km(sub)
        band = None
        if args.band_level is not None:
            try:
                band = ep_band(curve, args.band_level)
            except BandUndefinedError as exc:
                notes.append(
                    f"band undefined for {label or 'sample'}: {exc}"
                )
        sections.append(
            Section(label=label, columns=cols, rows=_curve_rows(curve, band))
        )

    meta = _base_metadata(
        input=str(args.input),
        band_level=args.band_level,
        groups=[s.label for s in sections] if args.group_col else None,
        notes=notes,
    )
    return OutputDocument(command="km-curve", metadata=meta, sections=sections)


def _add_io_flags(sub, group_col=False):
    sub.add_argument("--input", required=True, help="input CSV path")
    sub.add_argument("--time-col", default="time", help="time column name")
    sub.add_argument("--status-col", default="status",
                     help="event indicator column name (0/1)")
    if group_col:
        sub.add_argument("--group-col", default=None, help="group column name")
    sub.add_argument("--format", choices=FORMATS, default=None,
                     help="output format (default: $SURVFRAC_FORMAT or table)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="survfrac",
        description="Mean survival time by ordered fractions of a population "
                    "from right-censored data.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    commands = parser.add_subparsers(dest="command", required=True)

    est = commands.add_parser("estimate", help="per-fraction mean survival")
    _add_io_flags(est)
    est.add_argument("--lambdas", default=None,
                     help="comma-separated fraction endpoints "
                          "(default: deciles up to the max observed fraction)")
    est.add_argument("--band-level", type=float, default=0.95,
                     help="confidence level for band-integrated bounds")
    est.set_defaults(handler=cmd_estimate)

    cmp_ = commands.add_parser("compare", help="two-group bootstrap comparison")
    _add_io_flags(cmp_)
    cmp_.add_argument("--group-col", required=True, help="group column name")
    cmp_.add_argument("--ref-group", required=True,
                      help="reference group label (differences are other - ref)")
    cmp_.add_argument("--lambdas", default=None,
                      help="comma-separated fraction endpoints (default: deciles "
                           "up to the common max observed fraction)")
    cmp_.add_argument("--bootstrap", type=int, default=2000, metavar="B",
                      help="bootstrap replicates")
    cmp_.add_argument("--level", type=float, default=0.95,
                      help="confidence level")
    cmp_.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    cmp_.add_argument("--restricted-mean", nargs="?", const="auto", default=None,
                      metavar="HORIZON",
                      help="also compare restricted means (default horizon: "
                           "smaller of the groups' last event times)")
    cmp_.add_argument("--workers", type=int, default=1,
                      help="parallel bootstrap workers")
    cmp_.set_defaults(handler=cmd_compare)

    sim = commands.add_parser("simulate", help="Monte Carlo estimator study")
    sim.add_argument("--config", default=None,
                     help="key-value config file (flags override)")
    sim.add_argument("--n-datasets", dest="n_datasets", type=int, default=None)
    sim.add_argument("--n", type=int, default=None, help="sample size per dataset")
    sim.add_argument("--alpha", type=float, default=None, help="log-logistic scale")
    sim.add_argument("--beta", type=float, default=None, help="log-logistic shape")
    sim.add_argument("--censor-upper", dest="censor_upper", type=float,
                     default=None, help="upper end of the uniform censoring range")
    sim.add_argument("--lambdas", default=None,
                     help="comma-separated fraction endpoints")
    sim.add_argument("--band-level", dest="band_level", type=float, default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--format", choices=FORMATS, default=None)
    sim.set_defaults(handler=cmd_simulate)

    kmc = commands.add_parser("km-curve", help="export fitted curve coordinates")
    _add_io_flags(kmc, group_col=True)
    kmc.add_argument("--band-level", type=float, default=None,
                     help="attach equal-precision band columns at this level")
    kmc.set_defaults(handler=cmd_km_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc = args.handler(args)
    except (DataError, OSError, ValueError) as exc:
        print(f"survfrac {args.command}: error: {exc}", file=sys.stderr)
        return 2
    fmt = args.format if args.format else _default_format()
    sys.stdout.write(render(doc, fmt))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
