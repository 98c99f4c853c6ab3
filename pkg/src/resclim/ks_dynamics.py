"""
ks_dynamics.py -- Kuramoto-Sivashinsky data, its true one-step map,
and largest-Lyapunov-exponent estimation.

    y_t = -y y_x - y_xx - y_xxxx,   periodic on [0, L)

Integrated pseudo-spectrally with fourth-order exponential time
differencing Runge-Kutta (ETDRK4). In Fourier space the linear part is
diagonal, k^2 - k^4, and the nonlinear part is -(i k / 2) FFT(y^2).
The quadratic term is not dealiased.
Spectral states hold the L/2 + 1 non-negative wavenumbers of a real field.
"""

import enum
import functools
import logging
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import resclim as rc

logger = logging.getLogger(__name__)

IC_AMPLITUDE = 0.6
CONTOUR_POINTS = 32

class KSError(Exception):
    pass

class NonFiniteStateError(KSError):
    pass

class InvalidKSConfigError(KSError, ValueError):
    pass

class MissingTransformError(KSError, ValueError):
    pass

class NonPositiveLyapunovWarning(UserWarning):
    pass

@dataclass(frozen=True)
class KSConfig:
    L: float = 22.0
    grid_points: int = 64
    dt: float = 0.25
    transient_time: float = 500.0

    def __post_init__(self) -> None:
        n = self.grid_points
        if n < 2 or n & (n - 1):
            raise InvalidKSConfigError(
                f"grid_points must be a power of two >= 2, got {n}"
                )
        if not self.dt > 0:
            raise InvalidKSConfigError(f"dt must be positive, got {self.dt}")
        if not self.L > 0:
            raise InvalidKSConfigError(f"L must be positive, got {self.L}")
        if self.transient_time < 0:
            raise InvalidKSConfigError(
                f"transient_time must be >= 0, got {self.transient_time}"
                )

    @property
    def transient_steps(self) -> int:
        return int(round(self.transient_time / self.dt))

    @property
    def dx(self) -> float:
        return self.L / self.grid_points

@dataclass(frozen=True, eq=False)
class ETDRK4Tables:
    """
    Per-wavenumber ETDRK4 coefficients for a fixed dt.

    E, E2: exp(dt Lk) and exp(dt Lk / 2)
    Q, f1, f2, f3: the phi-function combinations of the scheme
    g: nonlinear factor -i k / 2, zero at the Nyquist wavenumber
    """

    E: np.ndarray
    E2: np.ndarray
    Q: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    g: np.ndarray
    n: int

def wavenumbers(cfg: KSConfig) -> np.ndarray:
    return 2 * np.pi * np.arange(cfg.grid_points // 2 + 1) / cfg.L

@functools.lru_cache(maxsize=16)
def build_tables(cfg: KSConfig, contour_points: int = CONTOUR_POINTS) -> ETDRK4Tables:
    """
    ETDRK4 coefficients, with the phi-functions evaluated as the mean
    over `contour_points` points of a unit circle centred on each dt Lk.
    """
    dt = cfg.dt
    k = wavenumbers(cfg)
    Lk = k**2 - k**4

    roots = np.exp(2j * np.pi * (np.arange(contour_points) + 0.5) / contour_points)
    LR = dt * Lk[:, None] + roots[None, :]
    LR2 = LR**2
    LR3 = LR**3
    exp_LR = np.exp(LR)

    Q = dt * ((np.exp(LR / 2) - 1) / LR).mean(axis=1).real
    f1 = dt * ((-4 - LR + exp_LR * (4 - 3 * LR + LR2)) / LR3).mean(axis=1).real
    f2 = dt * ((2 + LR + exp_LR * (LR - 2)) / LR3).mean(axis=1).real
    f3 = dt * ((-4 - 3 * LR - LR2 + exp_LR * (4 - LR)) / LR3).mean(axis=1).real

    k_odd = k.copy()
    # odd derivatives of a real field have no Nyquist component
    k_odd[-1] = 0.0

    tables = ETDRK4Tables(
        E=np.exp(dt * Lk),
        E2=np.exp(dt * Lk / 2),
        Q=Q,
        f1=f1,
        f2=f2,
        f3=f3,
        g=-0.5j * k_odd,
        n=cfg.grid_points,
        )
    for name in ('E', 'E2', 'Q', 'f1', 'f2', 'f3'):
        if not np.all(np.isfinite(getattr(tables, name))):
            raise InvalidKSConfigError(
                f"ETDRK4 coefficient {name} is not finite for {cfg}"
                )
    return tables

def _nonlinear(v: np.ndarray, tables: ETDRK4Tables) -> np.ndarray:
    y = rc.ifft_real(v, tables.n)
    return tables.g * rc.fft_real(y * y)

def ks_step(state_hat, tables: ETDRK4Tables) -> np.ndarray:
    """
    One ETDRK4 step of a spectral state (or a stack of states along
    the leading axes).

    Raises
    ------
    NonFiniteStateError
        if the state, before or after the step, is not finite
    """
    v = np.asarray(state_hat, dtype=np.complex128)
    if not np.all(np.isfinite(v)):
        raise NonFiniteStateError("KS state is not finite")

    Nv = _nonlinear(v, tables)
    a = tables.E2 * v + tables.Q * Nv
    Na = _nonlinear(a, tables)
    b = tables.E2 * v + tables.Q * Na
    Nb = _nonlinear(b, tables)
    c = tables.E2 * a + tables.Q * (2 * Nb - Nv)
    Nc = _nonlinear(c, tables)
    v_next = (
        tables.E * v
        + tables.f1 * Nv
        + 2 * tables.f2 * (Na + Nb)
        + tables.f3 * Nc
        )

    if not np.all(np.isfinite(v_next)):
        raise NonFiniteStateError("KS state became non-finite during a step")
    return v_next

def advance(y, cfg: KSConfig, steps: int = 1) -> np.ndarray:
    """Advance real field(s) y, one per row, by `steps` time steps."""
    tables = build_tables(cfg)
    v = rc.fft_real(y)
    for _ in range(steps):
        v = ks_step(v, tables)
    return rc.ifft_real(v, cfg.grid_points)

def initial_condition(cfg: KSConfig, ic_seed: int) -> np.ndarray:
    """Uniform on [-0.6, 0.6] per grid point, spatial mean removed."""
    y0 = rc.substream(ic_seed, 'ic').uniform(
        -IC_AMPLITUDE, IC_AMPLITUDE, size=cfg.grid_points)
    return y0 - y0.mean()

def integrate(cfg: KSConfig, y0, steps: int, transient: int = 0) -> np.ndarray:
    """
    Trajectory of `steps` samples, spaced dt, starting `transient` steps
    after y0. Row 0 is the state at the end of the transient.
    The k=0 mode is zeroed once at the start and is invariant after that.
    """
    tables = build_tables(cfg)
    v = rc.fft_real(y0)
    v[..., 0] = 0.0
    for _ in range(transient):
        v = ks_step(v, tables)

    trajectory = np.empty((steps, cfg.grid_points))
    for t in range(steps):
        if t:
            v = ks_step(v, tables)
        trajectory[t] = rc.ifft_real(v, cfg.grid_points)
    return trajectory

# Datasets -----------------------------------------------------------------

class Role(enum.Enum):
    TRAIN = 'train'
    TEST = 'test'

@dataclass(frozen=True, eq=False)
class DataSet:
    """
    A recorded KS trajectory.

    raw: (T x grid_points) field samples y
    u: the same samples standardized with `transform`
    Training sets carry a transform fitted to themselves,
    test sets the transform of their paired training set.
    """

    raw: 'rc.typing.Series'
    transform: 'rc.StandardizationTransform'
    ic_seed: int
    role: Role
    cfg: KSConfig = field(default_factory=KSConfig)

    @functools.cached_property
    def u(self) -> np.ndarray:
        return self.transform.standardize(self.raw)

    @property
    def length(self) -> int:
        return len(self.raw)

    def with_transform(self, transform: 'rc.StandardizationTransform') -> 'DataSet':
        """The same samples, standardized with another transform."""
        return DataSet(self.raw, transform, self.ic_seed, self.role, self.cfg)

    def __repr__(self):
        return (
            f"<DataSet {self.role.value} seed={self.ic_seed} "
            f"T={self.length} M={self.raw.shape[1]}>"
            )

def generate_dataset(
        cfg: KSConfig,
        ic_seed: int,
        duration: int,
        role: Role = Role.TRAIN,
        transform: 'rc.StandardizationTransform | None' = None,
        ) -> DataSet:
    """
    Integrate from a random initial condition, discard the transient,
    and record `duration` samples.

    Training sets fit their own standardization unless `transform`
    is given; test sets require the paired training transform.
    """
    if duration < 1:
        raise InvalidKSConfigError(f"duration must be >= 1, got {duration}")
    if role is Role.TEST and transform is None:
        raise MissingTransformError(
            "Test datasets are standardized with their training transform"
            )

    raw = integrate(
        cfg,
        initial_condition(cfg, ic_seed),
        duration,
        transient=cfg.transient_steps,
        )
    if transform is None:
        transform = rc.StandardizationTransform.fit(raw)

    logger.info(
        "Generated %s dataset: seed %d, %d samples",
        role.value, ic_seed, duration)
    return DataSet(raw, transform, ic_seed, role, cfg)

# N=T, M=grid points, dt, L, transient_time, seed, role
DATASET_HEADER = 'QQdddQ8s'

def save_dataset(path: 'str | Path', dataset: DataSet, provenance: dict | None = None) -> None:
    cfg = dataset.cfg
    rc.write_container(
        path,
        rc.MAGIC_DATASET,
        DATASET_HEADER,
        (
            dataset.length, cfg.grid_points, cfg.dt, cfg.L,
            cfg.transient_time, dataset.ic_seed,
            rc.pack_name(dataset.role.value, 8),
            ),
        [dataset.raw],
        )
    rc.write_sidecar(path, {
        'kind': 'dataset',
        'role': dataset.role.value,
        'ic_seed': dataset.ic_seed,
        'transform': dataset.transform.as_dict(),
        'provenance': provenance or {},
        })

def load_dataset(path: 'str | Path') -> DataSet:
    header, (raw,) = rc.read_container(path, rc.MAGIC_DATASET, DATASET_HEADER)
    length, grid_points, dt, L, transient_time, seed, role = header
    sidecar = rc.read_sidecar(path)
    if raw.shape != (length, grid_points):
        raise rc.ContainerError(
            f"Dataset payload {raw.shape} does not match header "
            f"({length}, {grid_points})"
            )
    return DataSet(
        raw=raw,
        transform=rc.StandardizationTransform.from_dict(sidecar['transform']),
        ic_seed=int(seed),
        role=Role(rc.unpack_name(role)),
        cfg=KSConfig(L, int(grid_points), dt, transient_time),
        )

def write_csv(dest: 'str | Path', dataset: DataSet, standardized: bool = False) -> None:
    """Plain CSV: a time column, then one column per grid point."""
    values = dataset.u if standardized else dataset.raw
    time = dataset.cfg.dt * np.arange(dataset.length)
    header = ','.join(['t'] + [f'y{i}' for i in range(values.shape[1])])
    np.savetxt(
        dest,
        np.column_stack([time, values]),
        delimiter=',',
        header=header,
        comments='',
        fmt='%.17g',
        )

# The true map -------------------------------------------------------------

class TrueMap:
    """
    F: one dt step of the true dynamics, acting on standardized states.
    De-standardize, integrate, re-standardize; rows are independent states.
    """

    def __init__(self, cfg: KSConfig, transform: 'rc.StandardizationTransform'):
        if transform.dim != cfg.grid_points:
            raise rc.DimensionMismatchError(
                f"Transform has dimension {transform.dim}, "
                f"KS grid has {cfg.grid_points} points"
                )
        self.cfg = cfg
        self.transform = transform
        self.tables = build_tables(cfg)

    def __call__(self, u_prev) -> np.ndarray:
        y = self.transform.destandardize(u_prev)
        v = ks_step(rc.fft_real(y), self.tables)
        return self.transform.standardize(rc.ifft_real(v, self.cfg.grid_points))

    def __repr__(self):
        return f"<TrueMap L={self.cfg.L} dt={self.cfg.dt}>"

def true_map_F(u_prev, transform: 'rc.StandardizationTransform', cfg: KSConfig) -> np.ndarray:
    return TrueMap(cfg, transform)(u_prev)

# Lyapunov exponent --------------------------------------------------------

def _scaled_norm(y: np.ndarray) -> float:
    scale = np.max(np.abs(y), initial=0.0)
    if scale == 0 or not np.isfinite(scale):
        return float(scale)
    return float(scale * np.linalg.norm(y / scale))

def benettin(
        step: Callable[[np.ndarray], np.ndarray],
        y0,
        dt: float,
        steps_per_renorm: int,
        renorms: int,
        perturbation: float = 1e-8,
        seed: int = 0,
        ) -> float:
    """
    Largest Lyapunov exponent of the map `step` (one dt per call).

    A reference and a perturbed trajectory are evolved together;
    every `steps_per_renorm` steps the separation is measured and a
    fresh perturbation is placed along it. Each perturbation has size
    `perturbation` times the current |y| (or `perturbation` itself
    if y is 0), so it stays resolvable while |y| grows or decays.
    Returns the mean log growth rate per unit time.
    """
    if steps_per_renorm < 1 or renorms < 1:
        raise ValueError("Need at least one step and one renormalization")

    y = np.asarray(y0, dtype=np.float64)
    direction = rc.substream(seed, 'benettin').standard_normal(y.shape)
    direction /= np.linalg.norm(direction)

    log_growth = 0.0
    for interval in range(renorms):
        size = perturbation * (_scaled_norm(y) or 1.0)
        y_pert = y + size * direction
        for _ in range(steps_per_renorm):
            y = step(y)
            y_pert = step(y_pert)
        separation = y_pert - y
        distance = _scaled_norm(separation)
        if distance == 0 or not np.isfinite(distance):
            raise NonFiniteStateError(
                f"Perturbation collapsed or diverged in interval {interval}"
                )
        log_growth += np.log(distance / size)
        direction = separation / distance

    return float(log_growth / (renorms * steps_per_renorm * dt))

def largest_lyapunov(
        cfg: KSConfig,
        horizon: float = 5000.0,
        renorm_interval: float = 1.0,
        ic_seed: int = 0,
        perturbation: float = 1e-8,
        ) -> float:
    """
    Benettin estimate of the largest Lyapunov exponent of the KS system,
    started on the attractor (after the transient).

    Warns with NonPositiveLyapunovWarning if the estimate is <= 0,
    which for a chaotic configuration means a bug or a too short horizon.
    """
    steps_per_renorm = max(1, int(round(renorm_interval / cfg.dt)))
    renorms = max(1, int(round(horizon / (steps_per_renorm * cfg.dt))))

    y0 = integrate(
        cfg,
        initial_condition(cfg, ic_seed),
        1,
        transient=cfg.transient_steps,
        )[0]
    tables = build_tables(cfg)

    def step(y):
        return rc.ifft_real(ks_step(rc.fft_real(y), tables), cfg.grid_points)

    exponent = benettin(
        step,
        y0,
        cfg.dt,
        steps_per_renorm,
        renorms,
        perturbation=perturbation,
        seed=ic_seed,
        )
    logger.info(
        "Largest Lyapunov exponent over %.0f time units: %.5f",
        renorms * steps_per_renorm * cfg.dt, exponent)

    if exponent <= 0:
        message = (
            f"Largest Lyapunov exponent estimate {exponent:.4g} is not "
            f"positive (L={cfg.L}, horizon {horizon})"
            )
        logger.warning(message)
        warnings.warn(message, NonPositiveLyapunovWarning, stacklevel=2)

    return exponent
