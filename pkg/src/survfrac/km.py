"""Kaplan-Meier product-limit curve, quantile lookup, equal-precision bands."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dataset import Dataset, EmptyEventsError

__all__ = [
    "KmStep",
    "KmCurve",
    "BandPair",
    "BandUndefinedError",
    "fit_km",
    "survival_at",
    "quantile",
    "ep_band",
    "ep_critical_value",
]


class BandUndefinedError(ValueError):
    """The requested confidence band does not exist on the given range."""


# The default band range stops once fewer than this share of the sample
# remains at risk: the boundary-crossing approximation behind the critical
# value needs the variance weight a(t) bounded away from 1, which fails as
# the risk set dies out.
MIN_RISK_SHARE = 0.05


class KmStep(NamedTuple):
    time: float
    at_risk: int
    events: int
    survival: float
    greenwood: float


@dataclass(frozen=True)
class KmCurve:
    """Fitted product-limit step function.

    One step per distinct event time; censoring-only times never create
    steps.  ``survival`` holds the right-continuous curve value at each
    step, with the convention that the curve equals 1 before the first
    step.  ``greenwood`` is the cumulative variance sum
    sum_i d_i / (n_i (n_i - d_i)); it is +inf at a terminal step where the
    whole risk set dies.
    """

    times: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    survival: np.ndarray
    greenwood: np.ndarray
    n: int
    censored_times: np.ndarray

    def __post_init__(self):
        for name in ("times", "at_risk", "events", "survival", "greenwood",
                     "censored_times"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def steps(self) -> list[KmStep]:
        return [
            KmStep(float(t), int(n), int(d), float(s), float(g))
            for t, n, d, s, g in zip(
                self.times, self.at_risk, self.events, self.survival,
                self.greenwood,
            )
        ]

    def __len__(self) -> int:
        return int(self.times.size)


def fit_km(ds: Dataset) -> KmCurve:
    """Fit the product-limit estimator with the Greenwood accumulator.

    Ties between events and censorings at the same time are resolved
    events-first: observations censored at t are still at risk at t.
    """
    if ds.n_events == 0:
        raise EmptyEventsError("cannot fit a curve to a sample with no events")

    order = np.argsort(ds.times, kind="stable")
    times = ds.times[order]
    status = ds.status[order]
    n_total = times.size

    utimes, first_idx = np.unique(times, return_index=True)
    d = np.add.reduceat(status, first_idx)
    # at risk just before each distinct time = n - (# observations strictly earlier)
    at_risk = n_total - first_idx

    keep = d > 0
    step_times = utimes[keep]
    d = d[keep]
    n_at = at_risk[keep]

    # Survival as exact integer products, one correctly rounded division per
    # step: prod(n_i - d_i) / prod(n_i).  This keeps representable values
    # (0.75, 0.5, 0) exact instead of accumulating cumprod rounding.
    survival = np.empty(d.size)
    num = 1
    den = 1
    for j, (nj, dj) in enumerate(zip(n_at.tolist(), d.tolist())):
        num *= nj - dj
        den *= nj
        survival[j] = num / den

    with np.errstate(divide="ignore", invalid="ignore"):
        gw_terms = np.where(n_at > d, d / (n_at * (n_at - d)), np.inf)
    greenwood = np.cumsum(gw_terms)

    return KmCurve(
        times=step_times.astype(float),
        at_risk=n_at.astype(np.int64),
        events=d.astype(np.int64),
        survival=survival,
        greenwood=greenwood,
        n=int(n_total),
        censored_times=np.sort(ds.times[ds.status == 0]).astype(float),
    )


def survival_at(curve: KmCurve, t) -> float | np.ndarray:
    """Right-continuous step evaluation of the fitted curve.

    Returns 1 before the first step and holds the last step's value
    afterwards.  Accepts a scalar or an array of times.
    """
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(curve.times, t, side="right")
    padded = np.concatenate(([1.0], curve.survival))
    out = padded[idx]
    return float(out) if out.ndim == 0 else out


def quantile(curve: KmCurve, p: float) -> float | None:
    """Estimated quantile Q(p) = smallest step time with survival <= 1 - p.

    Returns None when censoring prevents the curve from reaching level
    1 - p ("not attained").
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    target = 1.0 - p
    # survival is strictly decreasing; count step values <= target
    m = curve.survival.size
    pos = np.searchsorted(curve.survival[::-1], target, side="right")
    if pos == 0:
        return None
    return float(curve.times[m - pos])


@dataclass(frozen=True)
class BandPair:
    """Equal-precision confidence band on a time range.

    ``lower`` and ``upper`` are step functions sharing ``times`` (the event
    times inside the range), each clamped into [0, 1].  The curve value 1
    applies before the first banded time.
    """

    level: float
    coefficient: float
    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    range: tuple[float, float]
    a_range: tuple[float, float] = field(default=(math.nan, math.nan), compare=False)

    def __post_init__(self):
        for name in ("times", "lower", "upper"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def lower_at(self, t) -> float | np.ndarray:
        return _edge_at(self.times, self.lower, t)

    def upper_at(self, t) -> float | np.ndarray:
        return _edge_at(self.times, self.upper, t)


def _edge_at(times, values, t):
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(times, t, side="right")
    padded = np.concatenate(([1.0], values))
    out = padded[idx]
    return float(out) if out.ndim == 0 else out


def ep_critical_value(a_lower: float, a_upper: float, level: float,
                      tol: float = 1e-6) -> float:
    """Two-sided equal-precision critical coefficient e_alpha.

    Solves the Brownian-bridge boundary-crossing approximation

        alpha = phi(e) * [ (e - 1/e) * log(a_U (1-a_L) / (a_L (1-a_U))) + 4/e ]

    for e by bisection to absolute tolerance ``tol``.  Isolated here so a
    tabulated coefficient can be substituted if preferred.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if not 0.0 < a_lower < a_upper < 1.0:
        raise BandUndefinedError(
            f"band requires 0 < a_L < a_U < 1, got ({a_lower}, {a_upper})"
        )
    alpha = 1.0 - level
    log_ratio = math.log(a_upper * (1.0 - a_lower) / (a_lower * (1.0 - a_upper)))

    def crossing(x: float) -> float:
        dens = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        return dens * ((x - 1.0 / x) * log_ratio + 4.0 / x)

    lo, hi = 1.0, 2.0
    while crossing(hi) > alpha:
        hi *= 2.0
        if hi > 1e3:
            raise BandUndefinedError("critical value solve failed to bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if crossing(mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ep_band(
    curve: KmCurve,
    level: float,
    range: tuple[float, float] | None = None,
) -> BandPair:
    """Equal-precision confidence band (linear, untransformed) for the curve.

    The band is S(t) -+ e_alpha * S(t) * sqrt(greenwood(t)), clamped to
    [0, 1], valid on ``range``.  The default range runs from the first
    event time to the last event time where survival is still positive and
    at least ``MIN_RISK_SHARE`` of the sample remains at risk (the band is
    undefined where the curve sits at 0 or 1, and unreliable once the risk
    set has nearly emptied).  An explicit ``range`` is used verbatim.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    if len(curve) == 0:
        raise BandUndefinedError("curve has no steps")

    if range is None:
        usable = (curve.survival > 0.0) & (
            curve.at_risk >= MIN_RISK_SHARE * curve.n
        )
        if not np.any(usable):
            raise BandUndefinedError("survival drops to 0 at the only step")
        t_lo = float(curve.times[0])
        t_hi = float(curve.times[np.nonzero(usable)[0][-1]])
    else:
        t_lo, t_hi = float(range[0]), float(range[1])
        if t_lo > t_hi:
            raise ValueError(f"empty band range ({t_lo}, {t_hi})")

    inside = (curve.times >= t_lo) & (curve.times <= t_hi)
    if not np.any(inside):
        raise BandUndefinedError(f"no event times inside range ({t_lo}, {t_hi})")
    times = curve.times[inside]
    surv = curve.survival[inside]
    gw = curve.greenwood[inside]
    if np.any(surv <= 0.0) or np.any(~np.isfinite(gw)):
        raise BandUndefinedError("band range includes times where survival is 0")

    n = curve.n
    a_vals = n * gw / (1.0 + n * gw)
    a_lo, a_hi = float(a_vals[0]), float(a_vals[-1])
    if not a_lo < a_hi:
        raise BandUndefinedError(
            f"degenerate range: a(t_L) = a(t_U) = {a_lo:.6g}"
        )
    coeff = ep_critical_value(a_lo, a_hi, level)

    half_width = coeff * surv * np.sqrt(gw)
    lower = np.clip(surv - half_width, 0.0, 1.0)
    upper = np.clip(surv + half_width, 0.0, 1.0)
    return BandPair(
        level=level,
        coefficient=coeff,
        times=times,
        lower=lower,
        upper=upper,
        range=(t_lo, t_hi),
        a_range=(a_lo, a_hi),
    )
