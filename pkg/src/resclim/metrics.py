"""
metrics.py -- scoring of closed-loop predictions.

Valid time: how long a prediction stays close to the true trajectory,
in units of the mean distance between training states.

Map error: how far each predicted step is from what the true dynamics
would do to the previous predicted state, in units of the mean
persistence-forecast error. A prediction whose mean map error
exceeds the cutoff (1.0) has left the attractor: unstable.
"""

import enum
import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.signal
import scipy.spatial.distance

import resclim as rc

logger = logging.getLogger(__name__)

EPSILON_VT = 0.2
STABILITY_CUTOFF = 1.0
PSD_WINDOW = 2**13
PAIR_BLOCK = 2000
SUBSAMPLED_PAIRS = 10**6

class MetricsError(Exception):
    pass

class DegenerateNormalizerError(MetricsError, ValueError):
    pass

class SeriesShorterThanWindowError(MetricsError, ValueError):
    pass

class Verdict(enum.Enum):
    STABLE = 'stable'
    UNSTABLE = 'unstable'
    UNSTABLE_OVERFLOW = 'unstable-overflow'

    @property
    def is_stable(self) -> bool:
        return self is Verdict.STABLE

@dataclass(frozen=True)
class ErrorNormalizers:
    """
    E_bar: mean distance between two training states
    E_map_bar: mean distance between consecutive training states
    """

    E_bar: float
    E_map_bar: float

    def __post_init__(self) -> None:
        for name in ('E_bar', 'E_map_bar'):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DegenerateNormalizerError(
                    f"{name} must be positive and finite, got {value}"
                    )

def mean_pair_distance(data, block: int = PAIR_BLOCK) -> float:
    """
    Exact mean of |u_j - u_k| over all pairs j < k, in blocks of rows.
    """
    data = np.asarray(data, dtype=np.float64)
    T = len(data)
    total = 0.0
    for rows in rc.blocks(T, block):
        diagonal = scipy.spatial.distance.cdist(data[rows], data[rows])
        total += float(np.sum(np.triu(diagonal, k=1)))
        if rows.stop < T:
            total += float(np.sum(
                scipy.spatial.distance.cdist(data[rows], data[rows.stop:])
                ))
    return total / (T * (T - 1) / 2)

def sampled_pair_distance(data, pairs: int = SUBSAMPLED_PAIRS, seed: int = 0) -> float:
    """Mean |u_j - u_k| over `pairs` random pairs j != k."""
    data = np.asarray(data, dtype=np.float64)
    T = len(data)
    rng = rc.substream(seed, 'pairs')
    first = rng.integers(0, T, size=pairs)
    offset = rng.integers(1, T, size=pairs)
    second = (first + offset) % T
    return float(np.mean(np.linalg.norm(data[first] - data[second], axis=1)))

def normalizers(
        training_data,
        subsample: int | None = None,
        seed: int = 0,
        ) -> ErrorNormalizers:
    """
    Error normalizers of a standardized training block (T x M).

    E_bar is exact unless `subsample` asks for that many random pairs.

    Raises
    ------
    DegenerateNormalizerError
        if there are fewer than two samples or either value is 0
    """
    data = np.asarray(training_data, dtype=np.float64)
    if len(data) < 2:
        raise DegenerateNormalizerError(
            f"Need at least 2 training samples, got {len(data)}"
            )
    if subsample:
        E_bar = sampled_pair_distance(data, subsample, seed)
    else:
        E_bar = mean_pair_distance(data)
    E_map_bar = float(np.mean(np.linalg.norm(np.diff(data, axis=0), axis=1)))
    return ErrorNormalizers(E_bar, E_map_bar)

def valid_time(
        pred,
        truth,
        E_bar: float,
        dt: float,
        epsilon_VT: float = EPSILON_VT,
        ) -> float:
    """
    Time from the start of the prediction until its normalized error
    first exceeds epsilon_VT, minus one step.

    Row n-1 of `pred` and `truth` is step n of the prediction.
    If the threshold is never exceeded the whole length counts;
    a truncated (overflowed) prediction is compared over what it produced.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)[:len(pred)]
    errors = np.linalg.norm(pred - truth, axis=1) / E_bar
    exceeded = np.flatnonzero(errors > epsilon_VT)
    if not len(exceeded):
        return len(pred) * dt
    return float(exceeded[0]) * dt

def map_error_series(
        pred,
        true_map: Callable[[np.ndarray], np.ndarray],
        E_map_bar: float,
        ) -> np.ndarray:
    """
    |u_out(t) - F(u_out(t - dt))| / E_map_bar for every step after the first.

    States too large for the true map to integrate score +inf.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if len(pred) < 2:
        return np.zeros(0)
    try:
        mapped = true_map(pred[:-1])
    except rc.NonFiniteStateError:
        mapped = np.full_like(pred[:-1], np.inf)
        with np.errstate(over='ignore', invalid='ignore'):
            for index, state in enumerate(pred[:-1]):
                try:
                    mapped[index] = true_map(state)
                except rc.NonFiniteStateError:
                    pass
    with np.errstate(invalid='ignore'):
        errors = np.linalg.norm(pred[1:] - mapped, axis=1) / E_map_bar
    errors[~np.isfinite(errors)] = np.inf
    return errors

def classify_stability(
        mean_map_error: float,
        overflowed: bool = False,
        cutoff: float = STABILITY_CUTOFF,
        ) -> Verdict:
    if overflowed:
        return Verdict.UNSTABLE_OVERFLOW
    if mean_map_error <= cutoff:
        return Verdict.STABLE
    return Verdict.UNSTABLE

@dataclass(frozen=True, eq=False)
class PredictionRecord:
    outputs: 'rc.typing.Series'
    map_errors: np.ndarray
    valid_time: float
    mean_map_error: float
    max_map_error: float
    verdict: Verdict

    @property
    def overflowed(self) -> bool:
        return self.verdict is Verdict.UNSTABLE_OVERFLOW

def score_prediction(
        prediction: 'rc.Prediction',
        truth,
        norms: ErrorNormalizers,
        true_map: Callable[[np.ndarray], np.ndarray],
        dt: float,
        epsilon_VT: float = EPSILON_VT,
        cutoff: float = STABILITY_CUTOFF,
        ) -> PredictionRecord:
    """
    Valid time, map errors and verdict of one closed-loop prediction.
    `truth` holds the true standardized states of the predicted steps.
    Overflowed predictions get infinite mean and max map error.
    """
    outputs = prediction.outputs
    vt = valid_time(outputs, truth, norms.E_bar, dt, epsilon_VT)
    errors = map_error_series(outputs, true_map, norms.E_map_bar)

    if prediction.overflowed:
        mean_error = max_error = np.inf
    elif len(errors):
        mean_error = float(np.mean(errors))
        max_error = float(np.max(errors))
    else:
        mean_error = max_error = 0.0

    verdict = classify_stability(mean_error, prediction.overflowed, cutoff)
    return PredictionRecord(outputs, errors, vt, mean_error, max_error, verdict)

@dataclass(frozen=True, eq=False)
class PSDEstimate:
    frequencies: np.ndarray
    power: np.ndarray

def welch_psd(series, dt: float, window_len: int = PSD_WINDOW) -> PSDEstimate:
    """
    One-sided power spectral density by Welch's method:
    Hann window of `window_len` samples, 50% overlap, no detrending.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise rc.DimensionMismatchError(
            f"PSD needs a 1-d series, got shape {series.shape}"
            )
    if len(series) < window_len:
        raise SeriesShorterThanWindowError(
            f"Series of {len(series)} samples is shorter than "
            f"the {window_len}-sample window"
            )
    frequencies, power = scipy.signal.welch(
        series,
        fs=1 / dt,
        window='hann',
        nperseg=window_len,
        noverlap=window_len // 2,
        detrend=False,
        return_onesided=True,
        scaling='density',
        )
    return PSDEstimate(frequencies, power)
