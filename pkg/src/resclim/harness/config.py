"""
config.py -- experiment configuration files.

An experiment is a TOML file:

    version = 1
    base_seed = 0
    out = "runs/lmnt"

    [reservoir]         # hyperparameters of every reservoir
    [ks]                # the data-generating system
    [schedule]          # sync / train / prediction lengths
    [ensemble]          # reservoirs x training sets x test sets
    [regularization]    # method, K, LMNT variant
    [regularization.grid]
    beta_T = {log10_start = -20, log10_stop = -6, log10_step = 0.5}
    beta_L = [1e-7.4]   # or an explicit list

Every section declares its keys as Option descriptors.
"""

import itertools
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import resclim as rc

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1

# grid axes, outermost first
BETA_ORDER = ('beta_N', 'beta_J', 'beta_L', 'beta_T')

class HarnessError(Exception):
    pass

class ConfigError(HarnessError, ValueError):
    pass

class EmptySweepError(HarnessError):
    pass

class Section:
    """
    A TOML table whose keys are declared as Option class attributes.
    """

    @classmethod
    def options(cls) -> dict[str, 'rc.Option']:
        return {
            name: value
            for klass in reversed(cls.__mro__)
            for name, value in vars(klass).items()
            if isinstance(value, rc.Option)
            }

    @classmethod
    def parse(cls, table: Any, where: str) -> dict[str, Any]:
        if not isinstance(table, dict):
            raise ConfigError(f"`{where}` must be a table, got {table!r}.")
        options = cls.options()
        unknown = set(table) - set(options)
        if unknown:
            raise ConfigError(
                f"Unknown keys in `{where}`: {sorted(unknown)}. "
                f"Known keys: {sorted(options)}."
                )
        return {
            name: option.resolve(table, where)
            for name, option in options.items()
            }

    @classmethod
    def describe(cls) -> str:
        """One line per key, for `--help` output."""
        return '\n'.join(
            f"{name}: {option.desc}"
            + ('' if option.default is rc.Empty else f" (default {option.default!r})")
            for name, option in cls.options().items()
            )

class ReservoirSection(Section):
    N = rc.Option.Integer("Number of reservoir nodes", default=500, minimum=1)
    avg_degree = rc.Option.Real("Average number of nonzeros per row of A", default=3.0)
    spectral_radius = rc.Option.Real("Spectral radius of A", default=0.6)
    input_scaling = rc.Option.Real("Input coupling range sigma", default=0.1, minimum=0)
    input_bias = rc.Option.Real("Bias range theta", default=0.1, minimum=0)
    leak_rate = rc.Option.Real("Leak rate alpha", default=1.0)

class KSSection(Section):
    L = rc.Option.Real("Domain length", default=22.0)
    grid_points = rc.Option.Integer("Grid points (power of two)", default=64)
    dt = rc.Option.Real("Sampling time step", default=0.25)
    transient_time = rc.Option.Real("Discarded transient, time units", default=500.0, minimum=0)

class ScheduleSection(Section):
    sync = rc.Option.Integer("Synchronization steps T_sync", default=100, minimum=0)
    train = rc.Option.Integer("Training samples T_train", default=20000, minimum=2)
    pred = rc.Option.Integer("Prediction steps T_pred", default=2000, minimum=1)
    lyapunov_time = rc.Option.Real("Lyapunov time for reporting", default=20.83)
    psd = rc.Option.Flag("Accumulate power spectra of stable predictions", default=False)
    psd_window = rc.Option.Integer("Welch window length", default=8192, minimum=2)

class EnsembleSection(Section):
    reservoirs = rc.Option.Integer("Reservoir realizations", default=1, minimum=1)
    train_sets = rc.Option.Integer("Training sets per reservoir", default=1, minimum=1)
    test_sets = rc.Option.Integer("Test sets per trained model", default=1, minimum=1)

class RegularizationSection(Section):
    method = rc.Option.Text(
        "Training method",
        default='none',
        choices=tuple(method.value for method in rc.Method),
        )
    K = rc.Option.IntList("LMNT noise steps; a list sweeps K", default=[1], minimum=1)
    lmnt_mode = rc.Option.Text(
        "LMNT variant",
        default='full',
        choices=tuple(mode.value for mode in rc.LmntMode),
        )
    reduced_T = rc.Option.IntList("Subset sizes for reduced LMNT", default=None, minimum=1)
    mean_sync_steps = rc.Option.Integer(
        "Synchronization steps to the mean input (default T_sync)",
        default=None,
        minimum=1,
        )
    grid = rc.Option("Regularization parameter grids", default={})

class GridSection(Section):
    beta_T = rc.Option.Grid("Tikhonov parameter grid", default=None)
    beta_J = rc.Option.Grid("Jacobian parameter grid", default=None)
    beta_N = rc.Option.Grid("Noise variance grid", default=None)
    beta_L = rc.Option.Grid("LMNT parameter grid", default=None)

class TopLevel(Section):
    version = rc.Option.Integer("Config format version", default=CONFIG_VERSION)
    base_seed = rc.Option.Integer("Seed every random stream derives from", default=0, minimum=0)
    out = rc.Option.Text("Output directory", default='runs')
    reservoir = rc.Option("Reservoir section", default={})
    ks = rc.Option("KS section", default={})
    schedule = rc.Option("Schedule section", default={})
    ensemble = rc.Option("Ensemble section", default={})
    regularization = rc.Option("Regularization section", default={})

@dataclass(frozen=True)
class Schedule:
    sync: int = 100
    train: int = 20000
    pred: int = 2000
    lyapunov_time: float = 20.83
    psd: bool = False
    psd_window: int = 8192

    @property
    def train_length(self) -> int:
        """Samples a training set needs: T_sync + T_train + 1."""
        return self.sync + self.train + 1

    @property
    def test_length(self) -> int:
        """Samples a test set needs: T_sync + 1 to synchronize, T_pred to score."""
        return self.sync + 1 + self.pred

@dataclass(frozen=True)
class Ensemble:
    reservoirs: int = 1
    train_sets: int = 1
    test_sets: int = 1

    @property
    def predictions(self) -> int:
        return self.reservoirs * self.train_sets * self.test_sets

@dataclass(frozen=True)
class RegularizationPlan:
    method: 'rc.Method' = field(default_factory=lambda: rc.Method.NONE)
    K: tuple[int, ...] = (1,)
    lmnt_mode: 'rc.LmntMode' = field(default_factory=lambda: rc.LmntMode.FULL)
    reduced_T: tuple[int, ...] = ()
    mean_sync_steps: int | None = None
    grid: dict[str, list[float]] = field(default_factory=dict)

@dataclass(frozen=True)
class ExperimentConfig:
    reservoir: 'rc.ReservoirHyperparams' = field(
        default_factory=lambda: rc.ReservoirHyperparams())
    ks: 'rc.KSConfig' = field(default_factory=lambda: rc.KSConfig())
    schedule: Schedule = field(default_factory=Schedule)
    ensemble: Ensemble = field(default_factory=Ensemble)
    regularization: RegularizationPlan = field(default_factory=RegularizationPlan)
    base_seed: int = 0
    out: Path = Path('runs')
    threads: int = 1
    source: dict = field(default_factory=dict, compare=False)

    def hyperparams(self, reservoir: int) -> 'rc.ReservoirHyperparams':
        return replace(
            self.reservoir,
            seed=rc.derive_seed(self.base_seed, 'reservoir', reservoir),
            )

    def train_seed(self, train_set: int) -> int:
        return rc.derive_seed(self.base_seed, 'train', train_set)

    def test_seed(self, test_set: int) -> int:
        return rc.derive_seed(self.base_seed, 'test', test_set)

    def noise_seed(self, reservoir: int, train_set: int) -> int:
        return rc.derive_seed(self.base_seed, 'noise', reservoir, train_set)

def _build(constructor, values: dict, where: str):
    try:
        return constructor(**values)
    except ValueError as err:
        raise ConfigError(f"Invalid `{where}`: {err}") from err

def parse_config(document: dict) -> ExperimentConfig:
    """
    Validate a parsed TOML document.

    Raises
    ------
    ConfigError
        naming the offending key and what it means
    """
    top = TopLevel.parse(document, '')
    if top['version'] != CONFIG_VERSION:
        raise ConfigError(
            f"Config version {top['version']} is not supported "
            f"(expected {CONFIG_VERSION})."
            )

    reservoir = _build(
        rc.ReservoirHyperparams,
        ReservoirSection.parse(top['reservoir'], 'reservoir'),
        'reservoir',
        )
    ks = _build(rc.KSConfig, KSSection.parse(top['ks'], 'ks'), 'ks')
    schedule = Schedule(**ScheduleSection.parse(top['schedule'], 'schedule'))
    ensemble = Ensemble(**EnsembleSection.parse(top['ensemble'], 'ensemble'))

    reg = RegularizationSection.parse(top['regularization'], 'regularization')
    grid = {
        name: values
        for name, values in GridSection.parse(
            reg['grid'], 'regularization.grid').items()
        if values is not None
        }
    plan = RegularizationPlan(
        method=rc.Method(reg['method']),
        K=tuple(reg['K']),
        lmnt_mode=rc.LmntMode(reg['lmnt_mode']),
        reduced_T=tuple(reg['reduced_T'] or ()),
        mean_sync_steps=reg['mean_sync_steps'],
        grid=grid,
        )
    _check_plan(plan, schedule)

    return ExperimentConfig(
        reservoir=reservoir,
        ks=ks,
        schedule=schedule,
        ensemble=ensemble,
        regularization=plan,
        base_seed=top['base_seed'],
        out=Path(top['out']),
        source=document,
        )

def _check_plan(plan: RegularizationPlan, schedule: Schedule) -> None:
    used = plan.method.betas
    for name in plan.grid:
        if name not in used:
            raise ConfigError(
                f"Key `regularization.grid.{name}` is not used by "
                f"method '{plan.method.value}'."
                )
    for name in used:
        if name not in plan.grid:
            raise ConfigError(
                f"Missing required key `regularization.grid.{name}` "
                f"({GridSection.options()[name].desc}) "
                f"for method '{plan.method.value}'."
                )

    if plan.method is rc.Method.LMNT_TIKHONOV:
        for K in plan.K:
            if K > schedule.sync:
                raise ConfigError(
                    f"Key `regularization.K` (LMNT noise steps): "
                    f"{K} exceeds schedule.sync={schedule.sync}."
                    )
            if K >= schedule.train:
                raise ConfigError(
                    f"Key `regularization.K` (LMNT noise steps): "
                    f"{K} leaves no training samples."
                    )
        if plan.lmnt_mode is rc.LmntMode.REDUCED:
            if not plan.reduced_T:
                raise ConfigError(
                    "Missing required key `regularization.reduced_T` "
                    "(Subset sizes for reduced LMNT)."
                    )
            for T in plan.reduced_T:
                if T > schedule.train - max(plan.K):
                    raise ConfigError(
                        f"Key `regularization.reduced_T`: subset size {T} "
                        f"exceeds T_train - K."
                        )

def with_overrides(
        config: ExperimentConfig,
        base_seed: int | None = None,
        out: 'str | Path | None' = None,
        threads: int | None = None,
        ) -> ExperimentConfig:
    """Replace the values given on the command line; None keeps the file's."""
    changes: dict[str, Any] = {}
    if base_seed is not None:
        if base_seed < 0:
            raise ConfigError(f"--seed must be >= 0, got {base_seed}")
        changes['base_seed'] = base_seed
    if out is not None:
        changes['out'] = Path(out)
    if threads is not None:
        if threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {threads}")
        changes['threads'] = threads
    return replace(config, **changes)

def load_config(path: 'str | Path', **overrides) -> ExperimentConfig:
    """
    Read and validate a TOML experiment file.

    Keyword overrides (base_seed, out, threads) replace the file's values
    when not None.
    """
    path = Path(path)
    try:
        with open(path, 'rb') as file:
            document = tomllib.load(file)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"Cannot parse {path}: {err}") from err

    config = with_overrides(parse_config(document), **overrides)
    logger.info("Loaded config %s (method %s)", path, config.regularization.method.value)
    return config

def grid_points(config: ExperimentConfig) -> list['rc.RegularizationConfig']:
    """
    Every grid point of the sweep, in a fixed order:
    K, then subset size, then the betas with beta_T innermost.
    """
    plan = config.regularization
    method = plan.method
    lmnt = method is rc.Method.LMNT_TIKHONOV

    Ks = plan.K if lmnt else (1,)
    subsets = plan.reduced_T if lmnt and plan.lmnt_mode is rc.LmntMode.REDUCED else (None,)
    axes = [name for name in BETA_ORDER if name in method.betas]

    points = []
    for K, subset in itertools.product(Ks, subsets):
        for values in itertools.product(*(plan.grid[name] for name in axes)):
            points.append(rc.RegularizationConfig(
                method=method,
                K=K,
                lmnt_mode=plan.lmnt_mode if lmnt else rc.LmntMode.FULL,
                reduced_T=subset,
                mean_sync_steps=plan.mean_sync_steps if lmnt else None,
                **dict(zip(axes, values)),
                ))
    if not points:
        raise EmptySweepError("The regularization grid has no points")
    return points
