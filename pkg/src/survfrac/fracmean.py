"""Mean survival by ordered population fractions over a proportion grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .km import BandPair, KmCurve

__all__ = [
    "FractionGrid",
    "FractionMeans",
    "max_observed_fraction",
    "fraction_means",
    "fraction_mean_bounds",
    "restricted_mean",
    "truncate_grid",
    "decile_grid",
]


@dataclass(frozen=True)
class FractionGrid:
    """Ordered proportions 0 = lambda_0 < lambda_1 < ... < lambda_K <= 1.

    Fraction k covers the population slice (lambda_{k-1}, lambda_k].  On the
    survival scale the slice maps to gamma values 1 - lambda.
    """

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        if len(lams) < 2:
            raise ValueError("grid needs at least one fraction")
        if lams[0] != 0.0:
            raise ValueError(f"grid must start at 0, got {lams[0]}")
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError(f"grid proportions must strictly increase: {lams}")
        if lams[-1] > 1.0:
            raise ValueError(f"grid proportions cannot exceed 1: {lams[-1]}")

    @classmethod
    def from_uppers(cls, uppers) -> "FractionGrid":
        """Build a grid from the fraction upper endpoints (lambda_0 = 0 implied)."""
        uppers = tuple(float(x) for x in uppers)
        if uppers and uppers[0] == 0.0:
            uppers = uppers[1:]
        return cls((0.0,) + uppers)

    @property
    def gammas(self) -> tuple[float, ...]:
        return tuple(1.0 - lam for lam in self.lambdas)

    @property
    def k(self) -> int:
        return len(self.lambdas) - 1

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lambdas, self.lambdas[1:]))


@dataclass(frozen=True)
class FractionMeans:
    """Per-fraction estimates over a grid.

    ``mu[k]`` integrates the estimated quantile step function over fraction
    k+1; ``mu_bar`` divides by the fraction width.  A fraction whose upper
    gamma level is never reached by the fitted curve is reported as a
    flagged partial sum (``computable[k]`` False) rather than an error.
    ``bounds`` entries may hold ``math.inf`` uppers.
    """

    grid: FractionGrid
    mu: tuple[float, ...]
    mu_bar: tuple[float, ...]
    computable: tuple[bool, ...]
    events: tuple[int, ...]
    bounds: tuple[tuple[float, float], ...] | None = None


def max_observed_fraction(curve: KmCurve) -> float:
    """Largest proportion of the population observed to fail: 1 - S(last event)."""
    if len(curve) == 0:
        raise ValueError("curve has no steps")
    return 1.0 - float(curve.survival[-1])


def _window_masses(times, edge, gamma_hi, gamma_lo):
    """Integral of the step quantile function of ``edge`` over one window.

    ``edge`` is a decreasing survival step sequence at ``times`` with
    leading value 1; the window is the survival interval
    [gamma_lo, gamma_hi].  Returns (mass, overlap-per-step).
    """
    prev = np.concatenate(([1.0], edge[:-1]))
    overlap = np.minimum(prev, gamma_hi) - np.maximum(edge, gamma_lo)
    overlap = np.maximum(overlap, 0.0)
    return float(times @ overlap), overlap


def fraction_means(
    curve: KmCurve,
    grid: FractionGrid,
    band: BandPair | None = None,
) -> FractionMeans:
    """Estimate the mean survival contribution of each population fraction.

    For fraction k the estimate sums, over curve steps whose survival lies
    in the window [gamma_k, gamma_{k-1}],

        y_j * [ min(S(y_{j-1}), gamma_{k-1}) - max(S(y_j), gamma_k) ]

    with the leading convention S(y_0) = 1.  ``events[k]`` counts the
    observed events at steps contributing positive mass; a step straddling
    a window boundary counts in both adjacent fractions.

    When ``band`` is given, per-fraction bounds from
    :func:`fraction_mean_bounds` are attached.
    """
    gammas = grid.gammas
    widths = grid.widths
    s = curve.survival
    y = curve.times
    d = curve.events

    mu: list[float] = []
    mu_bar: list[float] = []
    computable: list[bool] = []
    events: list[int] = []
    for k in range(1, len(gammas)):
        hi, lo = gammas[k - 1], gammas[k]
        mass, overlap = _window_masses(y, s, hi, lo)
        mu.append(mass)
        mu_bar.append(mass / widths[k - 1])
        computable.append(bool(np.any(s <= lo)))
        events.append(int(d[overlap > 0.0].sum()))

    bounds = fraction_mean_bounds(curve, band, grid) if band is not None else None
    return FractionMeans(
        grid=grid,
        mu=tuple(mu),
        mu_bar=tuple(mu_bar),
        computable=tuple(computable),
        events=tuple(events),
        bounds=bounds,
    )


def fraction_mean_bounds(
    curve: KmCurve,
    band: BandPair,
    grid: FractionGrid,
) -> tuple[tuple[float, float], ...]:
    """Band-integrated bounds for each fraction mean.

    Applies the fraction-mean formula to the band's lower and upper
    survival edges (restricted to the band range, running-minimum
    monotonized so the first-crossing quantile inversion is well defined).
    When the upper edge never descends to gamma_k inside the band range no
    finite upper bound exists and +inf is reported; the lower edge
    contributes whatever mass it attains.
    """
    lower_edge = np.minimum.accumulate(band.lower)
    upper_edge = np.minimum.accumulate(band.upper)
    t = band.times
    gammas = grid.gammas

    out: list[tuple[float, float]] = []
    for k in range(1, len(gammas)):
        hi, lo = gammas[k - 1], gammas[k]
        lo_mass, _ = _window_masses(t, lower_edge, hi, lo)
        if upper_edge[-1] <= lo:
            up_mass, _ = _window_masses(t, upper_edge, hi, lo)
        else:
            up_mass = math.inf
        out.append((lo_mass, up_mass))
    return tuple(out)


def restricted_mean(curve: KmCurve, horizon: float) -> float:
    """Area under the fitted survival step function from 0 to ``horizon``."""
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    clipped = np.minimum(curve.times, horizon)
    starts = np.concatenate(([0.0], clipped))
    ends = np.concatenate((clipped, [horizon]))
    values = np.concatenate(([1.0], curve.survival))
    return float(values @ np.maximum(ends - starts, 0.0))


def truncate_grid(grid: FractionGrid, max_fraction: float,
                  tol: float = 1e-12) -> FractionGrid:
    """Drop fractions beyond ``max_fraction``.

    Used for group comparisons, which are restricted to the last fraction
    commonly observed in every group.
    """
    kept = tuple(lam for lam in grid.lambdas if lam <= max_fraction + tol)
    if len(kept) < 2:
        raise ValueError(
            f"no grid fraction lies within max observed fraction {max_fraction:.6g}"
        )
    return FractionGrid(kept)


def decile_grid(max_fraction: float) -> FractionGrid:
    """Deciles {0.1, 0.2, ...} up to ``max_fraction`` (at most 1.0)."""
    uppers = [k / 10 for k in range(1, 11) if k / 10 <= max_fraction + 1e-12]
    if not uppers:
        raise ValueError(
            f"max observed fraction {max_fraction:.6g} is below the first decile; "
            "supply explicit proportions"
        )
    return FractionGrid.from_uppers(uppers)
