"""
sweep.py -- run an ensemble over a regularization grid.

The unit of work is one (reservoir i, training set j) pair:
the reservoir is driven over the training set once, the data terms and
regularization matrices are computed once, and every grid point is
trained and scored against every test set from them.

Layout of the output directory:

    config.json     the experiment that produced it
    data/           train_<j>.rcds, test_<k>.rcds (+ .json sidecars)
    rows.csv        one row per prediction, append-only
    psd/            unit_<i>_<j>.npz power spectrum sums
    summary.json    per grid point aggregates and the selected point
"""

import csv
import json
import logging
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import resclim as rc

logger = logging.getLogger(__name__)

ROWS_VERSION_LINE = '# resclim-rows v1'

ROW_FIELDS = (
    'point', 'reservoir', 'train_set', 'test_set',
    'reservoir_seed', 'train_seed', 'test_seed', 'noise_seed',
    'method', 'K', 'lmnt_mode', 'reduced_T',
    'beta_T', 'beta_J', 'beta_N', 'beta_L',
    'valid_time', 'mean_map_error', 'max_map_error',
    'verdict', 'status', 'error',
    )

# errors that fail a single run without stopping the sweep
RUN_ERRORS = (
    rc.err.LinalgError,
    rc.err.ReservoirError,
    rc.err.RegularizationError,
    rc.err.TrainingError,
    rc.err.KSError,
    rc.err.MetricsError,
    )

class RowsFormatError(rc.HarnessError):
    pass

class SweepMismatchError(rc.HarnessError):
    pass

RowKey = tuple[int, int, int, int]

def row_key(row: dict) -> RowKey:
    return (
        int(row['point']),
        int(row['reservoir']),
        int(row['train_set']),
        int(row['test_set']),
        )

# Data ---------------------------------------------------------------------

def data_dir(config: 'rc.ExperimentConfig') -> Path:
    return config.out / 'data'

def train_path(config: 'rc.ExperimentConfig', train_set: int) -> Path:
    return data_dir(config) / f'train_{train_set:03d}.rcds'

def test_path(config: 'rc.ExperimentConfig', test_set: int) -> Path:
    return data_dir(config) / f'test_{test_set:03d}.rcds'

def _generate_train(args: tuple['rc.ExperimentConfig', int]) -> Path:
    config, train_set = args
    path = train_path(config, train_set)
    if not path.exists():
        dataset = rc.generate_dataset(
            config.ks,
            config.train_seed(train_set),
            config.schedule.train_length,
            rc.Role.TRAIN,
            )
        rc.save_dataset(path, dataset, {'train_set': train_set})
    return path

def _generate_test(args: tuple['rc.ExperimentConfig', int]) -> Path:
    config, test_set = args
    path = test_path(config, test_set)
    if not path.exists():
        # stored with training set 0's transform; each unit re-pairs it
        transform = rc.load_dataset(train_path(config, 0)).transform
        dataset = rc.generate_dataset(
            config.ks,
            config.test_seed(test_set),
            config.schedule.test_length,
            rc.Role.TEST,
            transform,
            )
        rc.save_dataset(path, dataset, {'test_set': test_set})
    return path

def _map(function: Callable, tasks: Iterable, threads: int) -> Iterator:
    """Ordered map, in worker processes when threads > 1."""
    if threads <= 1:
        yield from map(function, tasks)
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(function, tasks)

def prepare_data(config: 'rc.ExperimentConfig') -> None:
    """Generate every training and test set not already on disk."""
    data_dir(config).mkdir(parents=True, exist_ok=True)
    ensemble = config.ensemble
    for path in _map(
            _generate_train,
            [(config, j) for j in range(ensemble.train_sets)],
            config.threads):
        logger.debug("Training data ready: %s", path)
    for path in _map(
            _generate_test,
            [(config, k) for k in range(ensemble.test_sets)],
            config.threads):
        logger.debug("Test data ready: %s", path)

# One (reservoir, training set) pair -----------------------------------------

class UnitContext:
    """
    A reservoir driven over one training set,
    with the cached data terms and regularization matrices.
    """

    def __init__(self, config: 'rc.ExperimentConfig', reservoir: int, train_set: int):
        self.config = config
        self.reservoir_index = reservoir
        self.train_set = train_set
        schedule = config.schedule

        self.train = rc.load_dataset(train_path(config, train_set))
        self.hyperparams = config.hyperparams(reservoir)
        self.res = rc.build_reservoir(self.hyperparams, self.train.raw.shape[1])
        self.noise_seed = config.noise_seed(reservoir, train_set)

        u = self.train.u
        self.series = rc.drive_open_loop(self.res, u, schedule.sync, schedule.train)
        self.norms = rc.normalizers(u[schedule.sync:schedule.train_length])
        self.true_map = rc.TrueMap(config.ks, self.train.transform)
        self.training_mean = u[:schedule.train_length].mean(axis=0)

        self._cache = rc.gram_cache(self.series)
        self._noisy: tuple[float, 'rc.GramCache'] | None = None
        self._matrices: dict[tuple, 'rc.RegularizationMatrix'] = {}

    def _data(self, point: 'rc.RegularizationConfig') -> 'rc.GramCache':
        if point.method is not rc.Method.NOISE_TIKHONOV or point.beta_N == 0:
            return self._cache
        if self._noisy is None or self._noisy[0] != point.beta_N:
            noisy = rc.noisy_features(
                self.res,
                self.train.u,
                point.beta_N,
                self.noise_seed,
                self.config.schedule.sync,
                self.config.schedule.train,
                )
            self._noisy = (point.beta_N, rc.gram_cache(noisy))
        return self._noisy[1]

    def _matrix(self, key: tuple, build: Callable[[], 'rc.RegularizationMatrix']):
        if key not in self._matrices:
            self._matrices[key] = build()
        return self._matrices[key]

    def regularizers(self, point: 'rc.RegularizationConfig') -> list[tuple]:
        """(beta, R) pairs of a grid point, each R built once per unit."""
        T_sync = self.config.schedule.sync
        regs = []
        if point.beta_J:
            regs.append((point.beta_J, self._matrix(
                ('jacobian',),
                lambda: rc.jacobian_matrix(self.series, self.res),
                )))
        if point.beta_L:
            mode = point.lmnt_mode
            if mode is rc.LmntMode.FULL:
                build = lambda: rc.lmnt_matrix(self.series, self.res, point.K, T_sync)
            elif mode is rc.LmntMode.REDUCED:
                build = lambda: rc.lmnt_matrix_reduced(
                    self.series, self.res, point.K, point.reduced_T, T_sync)
            else:
                build = lambda: rc.lmnt_matrix_mean_input(
                    self.res,
                    self.training_mean,
                    point.K,
                    point.mean_sync_steps or T_sync,
                    )
            regs.append((point.beta_L, self._matrix(
                (mode.value, point.K, point.reduced_T), build)))
        if point.beta_T:
            regs.append((point.beta_T, self._matrix(
                ('tikhonov',),
                lambda: rc.tikhonov_matrix(self.res.feature_dim),
                )))
        return regs

    def weights(self, point: 'rc.RegularizationConfig') -> 'rc.OutputWeights':
        return rc.train(self._data(point), self.regularizers(point))

    def test(self, test_set: int) -> 'rc.DataSet':
        return rc.load_dataset(test_path(self.config, test_set)).with_transform(
            self.train.transform)

    def predict(self, weights, test: 'rc.DataSet') -> 'rc.PredictionRecord':
        schedule = self.config.schedule
        sync_end = schedule.sync + 1
        prediction = rc.predict_closed_loop(
            self.res, weights, test.u[:sync_end], schedule.pred)
        return rc.score_prediction(
            prediction,
            test.u[sync_end:sync_end + schedule.pred],
            self.norms,
            self.true_map,
            self.config.ks.dt,
            )

@dataclass(frozen=True)
class UnitTask:
    config: 'rc.ExperimentConfig'
    reservoir: int
    train_set: int
    done: frozenset = field(default_factory=frozenset)

@dataclass
class PSDSums:
    frequencies: np.ndarray | None = None
    power: dict[int, np.ndarray] = field(default_factory=dict)
    counts: dict[int, int] = field(default_factory=dict)
    truth: np.ndarray | None = None
    truth_count: int = 0

    def add(self, point: int, estimate: 'rc.PSDEstimate') -> None:
        self.frequencies = estimate.frequencies
        if point in self.power:
            self.power[point] = self.power[point] + estimate.power
        else:
            self.power[point] = estimate.power.copy()
        self.counts[point] = self.counts.get(point, 0) + 1

    def add_truth(self, estimate: 'rc.PSDEstimate') -> None:
        self.frequencies = estimate.frequencies
        self.truth = estimate.power.copy() if self.truth is None else self.truth + estimate.power
        self.truth_count += 1

    def save(self, path: Path) -> None:
        points = sorted(self.power)
        np.savez(
            path,
            frequencies=self.frequencies if self.frequencies is not None else np.zeros(0),
            points=np.array(points, dtype=np.int64),
            power=np.array([self.power[p] for p in points]).reshape(len(points), -1),
            counts=np.array([self.counts[p] for p in points], dtype=np.int64),
            truth=self.truth if self.truth is not None else np.zeros(0),
            truth_count=self.truth_count,
            )

@dataclass
class UnitResult:
    reservoir: int
    train_set: int
    rows: list[dict]
    psd: PSDSums | None

def _base_row(task: UnitTask, point_index: int, point, test_set: int) -> dict:
    config = task.config
    return {
        'point': point_index,
        'reservoir': task.reservoir,
        'train_set': task.train_set,
        'test_set': test_set,
        'reservoir_seed': config.hyperparams(task.reservoir).seed,
        'train_seed': config.train_seed(task.train_set),
        'test_seed': config.test_seed(test_set),
        'noise_seed': config.noise_seed(task.reservoir, task.train_set),
        'method': point.method.value,
        'K': point.K,
        'lmnt_mode': point.lmnt_mode.value,
        'reduced_T': '' if point.reduced_T is None else point.reduced_T,
        'beta_T': point.beta_T,
        'beta_J': point.beta_J,
        'beta_N': point.beta_N,
        'beta_L': point.beta_L,
        'valid_time': '',
        'mean_map_error': '',
        'max_map_error': '',
        'verdict': '',
        'status': 'ok',
        'error': '',
        }

def _failed(row: dict, err: Exception) -> dict:
    row.update(status='failed', error=f'{type(err).__name__}: {err}')
    return row

def run_unit(task: UnitTask) -> UnitResult:
    """Train and score every grid point of one (reservoir, training set)."""
    config = task.config
    points = rc.grid_points(config)
    test_sets = range(config.ensemble.test_sets)
    todo = [
        (index, point) for index, point in enumerate(points)
        if any(
            (index, task.reservoir, task.train_set, k) not in task.done
            for k in test_sets)
        ]
    rows: list[dict] = []
    psd = PSDSums() if config.schedule.psd else None
    window = config.schedule.psd_window
    dt = config.ks.dt

    try:
        context = UnitContext(config, task.reservoir, task.train_set)
        tests = {k: context.test(k) for k in test_sets}
    except RUN_ERRORS as err:
        logger.warning(
            "Unit (%d, %d) failed during setup: %s", task.reservoir, task.train_set, err)
        for index, point in todo:
            for k in test_sets:
                rows.append(_failed(_base_row(task, index, point, k), err))
        return UnitResult(task.reservoir, task.train_set, rows, psd)

    if psd is not None and config.schedule.pred >= window:
        sync_end = config.schedule.sync + 1
        for test in tests.values():
            psd.add_truth(rc.welch_psd(test.u[sync_end:, 0], dt, window))

    for index, point in todo:
        try:
            weights = context.weights(point)
        except RUN_ERRORS as err:
            logger.warning("Grid point %d failed to train: %s", index, err)
            weights = err

        for k, test in tests.items():
            if (index, task.reservoir, task.train_set, k) in task.done:
                continue
            row = _base_row(task, index, point, k)
            if isinstance(weights, Exception):
                rows.append(_failed(row, weights))
                continue
            try:
                record = context.predict(weights, test)
            except RUN_ERRORS as err:
                rows.append(_failed(row, err))
                continue
            row.update(
                valid_time=record.valid_time,
                mean_map_error=record.mean_map_error,
                max_map_error=record.max_map_error,
                verdict=record.verdict.value,
                )
            rows.append(row)
            if psd is not None and record.verdict.is_stable and len(record.outputs) >= window:
                psd.add(index, rc.welch_psd(record.outputs[:, 0], dt, window))

    logger.info(
        "Unit (reservoir %d, train set %d): %d predictions",
        task.reservoir, task.train_set, len(rows))
    return UnitResult(task.reservoir, task.train_set, rows, psd)

# Rows file ----------------------------------------------------------------

def rows_path(config: 'rc.ExperimentConfig') -> Path:
    return config.out / 'rows.csv'

def read_rows(path: 'str | Path') -> list[dict]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, newline='') as file:
        first = file.readline().rstrip('\r\n')
        if first != ROWS_VERSION_LINE:
            raise RowsFormatError(
                f"{path} does not start with '{ROWS_VERSION_LINE}'"
                )
        return list(csv.DictReader(file))

def append_rows(path: 'str | Path', rows: list[dict]) -> None:
    path = Path(path)
    fresh = not path.exists()
    with open(path, 'a', newline='') as file:
        if fresh:
            file.write(ROWS_VERSION_LINE + '\n')
        writer = csv.DictWriter(file, fieldnames=ROW_FIELDS)
        if fresh:
            writer.writeheader()
        writer.writerows(rows)

# Whole sweep --------------------------------------------------------------

def _manifest(config: 'rc.ExperimentConfig') -> dict:
    return {
        'config': config.source,
        'base_seed': config.base_seed,
        'grid': [point.as_dict() for point in rc.grid_points(config)],
        }

def _check_manifest(config: 'rc.ExperimentConfig') -> None:
    path = config.out / 'config.json'
    manifest = _manifest(config)
    if path.exists():
        recorded = json.loads(path.read_text())
        if recorded != json.loads(json.dumps(manifest)):
            raise SweepMismatchError(
                f"{config.out} holds results of a different experiment; "
                "choose another --out"
                )
    else:
        path.write_text(json.dumps(manifest, indent=2) + '\n')

def _point_dict(point: 'rc.PointSummary', lyapunov_time: float) -> dict:
    return {
        'index': point.index,
        'config': point.config.as_dict(),
        'predictions': point.predictions,
        'stable': point.stable,
        'failed': point.failed,
        'fraction_stable': point.fraction_stable,
        'valid_time_lyapunov': vars(point.valid_time.scaled(1 / lyapunov_time)),
        'mean_map_error': vars(point.mean_map_error),
        'max_map_error': vars(point.max_map_error),
        }

def write_summary(config: 'rc.ExperimentConfig', result: 'rc.SweepResult') -> Path:
    chosen = rc.select_parameters(result)
    path = config.out / 'summary.json'
    path.write_text(json.dumps({
        'version': 1,
        'predictions_per_point': config.ensemble.predictions,
        'dt': result.dt,
        'lyapunov_time': result.lyapunov_time,
        'selected': chosen.index,
        'points': [_point_dict(point, result.lyapunov_time) for point in result.points],
        }, indent=2) + '\n')
    return path

def load_result(config: 'rc.ExperimentConfig') -> 'rc.SweepResult':
    return rc.summarize(
        read_rows(rows_path(config)),
        rc.grid_points(config),
        config.ks.dt,
        config.schedule.lyapunov_time,
        )

def run_sweep(config: 'rc.ExperimentConfig') -> 'rc.SweepResult':
    """
    Run every (reservoir, training set) unit that still has missing rows,
    appending rows as units finish, then aggregate.
    Re-running on the same directory resumes.
    """
    config.out.mkdir(parents=True, exist_ok=True)
    _check_manifest(config)
    prepare_data(config)

    points = rc.grid_points(config)
    ensemble = config.ensemble
    done = {row_key(row) for row in read_rows(rows_path(config))}
    expected = len(points) * ensemble.test_sets

    tasks = []
    for i in range(ensemble.reservoirs):
        for j in range(ensemble.train_sets):
            unit_done = frozenset(key for key in done if key[1:3] == (i, j))
            if len(unit_done) < expected:
                tasks.append(UnitTask(config, i, j, unit_done))

    logger.info(
        "Sweep: %d grid points, %d of %d units to run",
        len(points), len(tasks), ensemble.reservoirs * ensemble.train_sets)

    psd_dir = config.out / 'psd'
    for result in _map(run_unit, tasks, config.threads):
        append_rows(rows_path(config), result.rows)
        if result.psd is not None:
            psd_dir.mkdir(exist_ok=True)
            result.psd.save(psd_dir / f'unit_{result.reservoir:03d}_{result.train_set:03d}.npz')

    result = load_result(config)
    if not result.points:
        raise rc.EmptySweepError(f"No result rows in {rows_path(config)}")
    write_summary(config, result)
    return result
