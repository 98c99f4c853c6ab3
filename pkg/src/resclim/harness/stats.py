"""
stats.py -- ensemble statistics and parameter selection.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

import resclim as rc

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class MedianCI:
    median: float
    lo: float
    hi: float

    @property
    def half_width(self) -> float:
        """Larger distance from the median to an interval end."""
        return max(self.median - self.lo, self.hi - self.median)

    def scaled(self, factor: float) -> 'MedianCI':
        return MedianCI(self.median * factor, self.lo * factor, self.hi * factor)

def median_ci(samples, level: float = 0.95, dt: float | None = None) -> MedianCI:
    """
    Sample median with a distribution-free confidence interval.

    The interval runs between the order statistics x_(r) and x_(n-r+1),
    with r the largest rank such that a Binomial(n, 1/2) variable is
    below r with probability at most (1 - level) / 2.

    With `dt` given (valid times), both ends are moved outwards by one
    time step to cover the time discretization.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    if not n:
        raise ValueError("median_ci() of empty samples")

    tail = (1 - level) / 2
    rank = max(int(scipy.stats.binom.ppf(tail, n, 0.5)), 1)
    median = float(np.median(x))
    lo = float(x[rank - 1])
    hi = float(x[n - rank])

    if dt is not None:
        lo = max(lo - dt, 0.0)
        hi = hi + dt
    return MedianCI(median, lo, hi)

@dataclass(frozen=True)
class PointSummary:
    """Aggregate over every prediction made at one grid point."""

    index: int
    config: 'rc.RegularizationConfig'
    predictions: int
    stable: int
    failed: int
    valid_time: MedianCI
    mean_map_error: MedianCI
    max_map_error: MedianCI

    @property
    def fraction_stable(self) -> float:
        return self.stable / self.predictions

@dataclass(frozen=True)
class SweepResult:
    points: tuple[PointSummary, ...]
    dt: float
    lyapunov_time: float

    def __len__(self):
        return len(self.points)

def _summarize_point(index, config, rows, dt) -> PointSummary:
    ok = [row for row in rows if row['status'] == 'ok']
    stable = sum(row['verdict'] == rc.Verdict.STABLE.value for row in ok)
    # failed runs count as unstable with zero valid time
    failed = len(rows) - len(ok)
    valid = [float(row['valid_time']) for row in ok] + [0.0] * failed
    mean_errors = [float(row['mean_map_error']) for row in ok] + [math.inf] * failed
    max_errors = [float(row['max_map_error']) for row in ok] + [math.inf] * failed
    return PointSummary(
        index=index,
        config=config,
        predictions=len(rows),
        stable=stable,
        failed=failed,
        valid_time=median_ci(valid, dt=dt),
        mean_map_error=median_ci(mean_errors),
        max_map_error=median_ci(max_errors),
        )

def summarize(
        rows: list[dict],
        points: list['rc.RegularizationConfig'],
        dt: float,
        lyapunov_time: float,
        ) -> SweepResult:
    """Group result rows by grid point index and aggregate each group."""
    groups: dict[int, list[dict]] = {}
    for row in rows:
        groups.setdefault(int(row['point']), []).append(row)

    summaries = tuple(
        _summarize_point(index, points[index], group, dt)
        for index, group in sorted(groups.items())
        )
    return SweepResult(summaries, dt, lyapunov_time)

def select_parameters(result: SweepResult) -> PointSummary:
    """
    Most stable grid point; ties go to the higher median valid time,
    then to the larger total regularization.

    Raises
    ------
    EmptySweepError
        if the sweep has no points
    """
    if not result.points:
        raise rc.EmptySweepError("Cannot select parameters from an empty sweep")
    chosen = max(
        result.points,
        key=lambda point: (
            point.fraction_stable,
            point.valid_time.median,
            point.config.total,
            ),
        )
    logger.info(
        "Selected grid point %d: %d/%d stable, median VT %.3g",
        chosen.index, chosen.stable, chosen.predictions, chosen.valid_time.median)
    return chosen
