"""
report.py -- turn a finished sweep into tables and plot data.

All plot data is plain CSV: one header line, comma-separated columns.
"""

import csv
import logging
import math
from pathlib import Path

import numpy as np

import resclim as rc

logger = logging.getLogger(__name__)

def describe_point(config: 'rc.RegularizationConfig') -> str:
    """Short human-readable label of a grid point, e.g. `K=4 beta_L=10^-7.4`."""
    parts = []
    if config.method is rc.Method.LMNT_TIKHONOV:
        parts.append(f'K={config.K}')
        if config.lmnt_mode is rc.LmntMode.REDUCED:
            parts.append(f'T={config.reduced_T}')
        elif config.lmnt_mode is rc.LmntMode.MEAN_INPUT:
            parts.append('mean-input')
    for name in rc.BETA_ORDER:
        value = getattr(config, name)
        if name in config.method.betas:
            parts.append(f'{name}={_power(value)}')
    return ' '.join(parts) or '-'

def _power(value: float) -> str:
    if value <= 0:
        return '0'
    return f'10^{math.log10(value):.4g}'

def _pm(ci: 'rc.MedianCI') -> str:
    if not math.isfinite(ci.median):
        return 'inf'
    return f'{ci.median:.3g} +/- {ci.half_width:.2g}'

def table_row(point: 'rc.PointSummary', lyapunov_time: float) -> dict[str, str]:
    """
    One row in the layout of a results table:
    stable count, then medians with their largest CI half-width,
    valid time in Lyapunov times.
    """
    return {
        'method': point.config.method.value,
        'parameters': describe_point(point.config),
        'stable': f'{point.stable}/{point.predictions}',
        'valid_time': _pm(point.valid_time.scaled(1 / lyapunov_time)),
        'mean_map_error': _pm(point.mean_map_error),
        'max_map_error': _pm(point.max_map_error),
        }

@rc.join_generator('\n')
def format_table(result: 'rc.SweepResult', selected_only: bool = True):
    """Fixed-width text table of the selected (or every) grid point."""
    points = [rc.select_parameters(result)] if selected_only else result.points
    rows = [table_row(point, result.lyapunov_time) for point in points]
    headers = {
        'method': 'Method',
        'parameters': 'Parameters',
        'stable': 'Stable',
        'valid_time': 'VT (t_Lyap)',
        'mean_map_error': 'Mean map error',
        'max_map_error': 'Max map error',
        }
    widths = {
        key: max([len(title)] + [len(row[key]) for row in rows])
        for key, title in headers.items()
        }
    yield '  '.join(title.ljust(widths[key]) for key, title in headers.items())
    yield '  '.join('-' * widths[key] for key in headers)
    for row in rows:
        yield '  '.join(row[key].ljust(widths[key]) for key in headers)

def write_table_csv(dest: 'str | Path', result: 'rc.SweepResult') -> None:
    """Every grid point, with numeric medians and interval ends."""
    with open(dest, 'w', newline='') as file:
        writer = csv.writer(file)
        writer.writerow([
            'point', 'method', 'K', 'lmnt_mode', 'reduced_T',
            'beta_T', 'beta_J', 'beta_N', 'beta_L',
            'stable', 'predictions',
            'vt_median', 'vt_lo', 'vt_hi',
            'mean_map_median', 'mean_map_lo', 'mean_map_hi',
            'max_map_median', 'max_map_lo', 'max_map_hi',
            ])
        scale = 1 / result.lyapunov_time
        for point in result.points:
            c = point.config
            vt = point.valid_time.scaled(scale)
            writer.writerow([
                point.index, c.method.value, c.K, c.lmnt_mode.value,
                '' if c.reduced_T is None else c.reduced_T,
                c.beta_T, c.beta_J, c.beta_N, c.beta_L,
                point.stable, point.predictions,
                vt.median, vt.lo, vt.hi,
                point.mean_map_error.median, point.mean_map_error.lo,
                point.mean_map_error.hi,
                point.max_map_error.median, point.max_map_error.lo,
                point.max_map_error.hi,
                ])

def write_grid_csv(dest: 'str | Path', result: 'rc.SweepResult') -> None:
    """Fraction stable and median valid time per grid point."""
    with open(dest, 'w', newline='') as file:
        writer = csv.writer(file)
        writer.writerow([
            'point', 'K', 'reduced_T', 'beta_T', 'beta_J', 'beta_N', 'beta_L',
            'fraction_stable', 'median_vt_lyapunov',
            ])
        for point in result.points:
            c = point.config
            writer.writerow([
                point.index, c.K, '' if c.reduced_T is None else c.reduced_T,
                c.beta_T, c.beta_J, c.beta_N, c.beta_L,
                point.fraction_stable,
                point.valid_time.median / result.lyapunov_time,
                ])

def mean_map_histogram(
        rows: list[dict],
        point: int | None = None,
        bins: int = 40,
        ) -> tuple[np.ndarray, np.ndarray]:
    """
    Histogram of log10 mean map error over predictions that did not
    overflow, optionally restricted to one grid point.

    Returns (bin edges in log10, counts).
    """
    values = [
        float(row['mean_map_error']) for row in rows
        if row['status'] == 'ok'
        and row['verdict'] != rc.Verdict.UNSTABLE_OVERFLOW.value
        and (point is None or int(row['point']) == point)
        ]
    values = np.log10([value for value in values if 0 < value < math.inf])
    if not len(values):
        return np.zeros(bins + 1), np.zeros(bins, dtype=np.int64)
    counts, edges = np.histogram(values, bins=bins)
    return edges, counts

def write_histogram_csv(dest: 'str | Path', edges: np.ndarray, counts: np.ndarray) -> None:
    with open(dest, 'w', newline='') as file:
        writer = csv.writer(file)
        writer.writerow(['log10_lo', 'log10_hi', 'count'])
        for lo, hi, count in zip(edges[:-1], edges[1:], counts):
            writer.writerow([lo, hi, int(count)])

def psd_curves(psd_dir: 'str | Path', point: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Mean true and mean predicted spectra of `point` over all units.

    Returns (frequencies, true power, predicted power).

    Raises
    ------
    HarnessError
        if no unit recorded a stable spectrum for the point
    """
    frequencies = None
    truth_sum, truth_count = 0.0, 0
    power_sum, count = 0.0, 0
    for path in sorted(Path(psd_dir).glob('unit_*.npz')):
        with np.load(path) as unit:
            if unit['truth'].size:
                frequencies = unit['frequencies']
                truth_sum = truth_sum + unit['truth']
                truth_count += int(unit['truth_count'])
            matches = np.flatnonzero(unit['points'] == point)
            if len(matches):
                power_sum = power_sum + unit['power'][matches[0]]
                count += int(unit['counts'][matches[0]])

    if frequencies is None or not count or not truth_count:
        raise rc.HarnessError(
            f"No power spectra recorded for grid point {point} in {psd_dir}"
            )
    return frequencies, truth_sum / truth_count, power_sum / count

def write_psd_csv(dest: 'str | Path', frequencies, truth, predicted) -> None:
    with open(dest, 'w', newline='') as file:
        writer = csv.writer(file)
        writer.writerow(['frequency', 'true_power', 'predicted_power'])
        writer.writerows(zip(frequencies, truth, predicted))
