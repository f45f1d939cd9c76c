"""Stratified bootstrap comparison of fraction means between two groups."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .dataset import Dataset
from .fracmean import FractionGrid, fraction_means, restricted_mean
from .km import fit_km

__all__ = [
    "DiffEstimate",
    "bootstrap_fraction_diff",
    "bootstrap_restricted_mean_diff",
]


@dataclass(frozen=True)
class DiffEstimate:
    """A group-1-minus-group-0 difference with its percentile interval.

    ``effective_replicates`` counts the bootstrap replicates that actually
    informed the interval (both groups computable, no discarded resample);
    ``unreliable`` flags intervals built from fewer than the floor share of
    requested replicates.
    """

    point: float
    ci_lower: float
    ci_upper: float
    effective_replicates: int
    requested_replicates: int
    unreliable: bool


def _group_digest(ds: Dataset) -> int:
    """Stable 64-bit content digest; keys the group's resampling stream.

    Keying streams by content (not argument position) makes swapping the
    two groups negate every replicate difference exactly, and makes
    identical groups produce identical resamples.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(ds.times.tobytes())
    h.update(ds.status.tobytes())
    return int.from_bytes(h.digest(), "little")


def _resample(ds: Dataset, seed: int, digest: int, replicate: int) -> Dataset:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(digest)])
    counter = np.array([0, 0, 0, replicate], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key, counter=counter))
    idx = rng.integers(0, len(ds), size=len(ds))
    return Dataset(times=ds.times[idx], status=ds.status[idx])


def _replicate_diffs(g0, g1, d0, d1, seed, stat, replicate):
    """Per-replicate statistic difference vector, or None when discarded."""
    r0 = _resample(g0, seed, d0, replicate)
    r1 = _resample(g1, seed, d1, replicate)
    if r0.n_events == 0 or r1.n_events == 0:
        return None
    v0, ok0 = stat(r0)
    v1, ok1 = stat(r1)
    diffs = v1 - v0
    diffs[~(ok0 & ok1)] = np.nan
    return diffs


def _fraction_stat(grid: FractionGrid, ds: Dataset):
    fm = fraction_means(fit_km(ds), grid)
    return np.asarray(fm.mu_bar), np.asarray(fm.computable)


def _restricted_stat(horizon: float, ds: Dataset):
    value = restricted_mean(fit_km(ds), horizon)
    return np.array([value]), np.array([True])


def _percentile_ci(diffs: np.ndarray, level: float) -> tuple[float, float]:
    """Percentile interval from the order statistics of replicate diffs.

    The lower endpoint is the ceil((alpha/2) * B)-th order statistic and
    the upper its mirror B + 1 - that rank, so swapping group labels
    reflects the interval exactly.
    """
    b = diffs.size
    alpha = 1.0 - level
    lo_rank = max(1, math.ceil(alpha / 2.0 * b))
    up_rank = b + 1 - lo_rank
    ordered = np.sort(diffs)
    return float(ordered[lo_rank - 1]), float(ordered[up_rank - 1])


def _run_bootstrap(g0, g1, stat, point_values, B, level, seed, workers,
                   floor_share) -> list[DiffEstimate]:
    if B < 100:
        raise ValueError(f"need at least 100 bootstrap replicates, got {B}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")

    d0 = _group_digest(g0)
    d1 = _group_digest(g1)
    work = partial(_replicate_diffs, g0, g1, d0, d1, seed, stat)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(work, range(B), chunksize=32))
    else:
        rows = [work(r) for r in range(B)]

    kept = np.array([row for row in rows if row is not None])
    out: list[DiffEstimate] = []
    for j, point in enumerate(point_values):
        col = kept[:, j] if kept.size else np.empty(0)
        col = col[~np.isnan(col)]
        b_eff = col.size
        if b_eff:
            ci_lo, ci_up = _percentile_ci(col, level)
        else:
            ci_lo, ci_up = math.nan, math.nan
        out.append(
            DiffEstimate(
                point=float(point),
                ci_lower=ci_lo,
                ci_upper=ci_up,
                effective_replicates=int(b_eff),
                requested_replicates=B,
                unreliable=b_eff < floor_share * B,
            )
        )
    return out


def bootstrap_fraction_diff(
    g0: Dataset,
    g1: Dataset,
    grid: FractionGrid,
    B: int = 2000,
    level: float = 0.95,
    seed: int = 0,
    workers: int = 1,
    floor_share: float = 0.5,
) -> list[DiffEstimate]:
    """Bootstrap the per-fraction difference mu_bar(g1) - mu_bar(g0).

    Resampling is stratified: each replicate redraws within each group,
    with replacement, preserving group sizes.  Replicates where a group
    loses all its events are discarded; replicates where a fraction is not
    computable on either side are dropped for that fraction only.  Point
    estimates come from the original samples.  The caller is expected to
    have truncated ``grid`` to the fractions both groups support (see
    :func:`survfrac.fracmean.truncate_grid`).

    Deterministic given (inputs, B, level, seed), for any ``workers``.
    """
    fm0 = fraction_means(fit_km(g0), grid)
    fm1 = fraction_means(fit_km(g1), grid)
    points = np.asarray(fm1.mu_bar) - np.asarray(fm0.mu_bar)
    stat = partial(_fraction_stat, grid)
    return _run_bootstrap(g0, g1, stat, points, B, level, seed, workers,
                          floor_share)


def bootstrap_restricted_mean_diff(
    g0: Dataset,
    g1: Dataset,
    horizon: float,
    B: int = 2000,
    level: float = 0.95,
    seed: int = 0,
    workers: int = 1,
    floor_share: float = 0.5,
) -> DiffEstimate:
    """Bootstrap the difference of restricted means at a shared horizon."""
    point = restricted_mean(fit_km(g1), horizon) - restricted_mean(
        fit_km(g0), horizon
    )
    stat = partial(_restricted_stat, horizon)
    return _run_bootstrap(g0, g1, stat, np.array([point]), B, level, seed,
                          workers, floor_share)[0]
