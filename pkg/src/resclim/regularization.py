"""
regularization.py -- the regularization matrices R_i of the penalized
readout loss, and perturbed features for noise training.

Every matrix is (1+M+2N) square, symmetric and positive semidefinite,
and is built once per (reservoir, training set).
A regularization parameter beta only rescales it.

Propagated input Jacobians are stored compactly.
The derivative of the feature s_j with respect to the input noise at
step k <= j only has three nonzero blocks:

    [0; delta_jk I_M; Y; diag(2 r_j) Y]

where Y (N x M) is its reservoir-state block. Y is created as
alpha diag(h_k) B at step k and carried forward one step at a time by

    Y <- alpha diag(h_j) A Y + (1 - alpha) Y

with h_j = sech^2(A r_{j-1} + B u_j + C).
"""

import enum
import logging
import warnings
from collections import deque
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

import resclim as rc

logger = logging.getLogger(__name__)

# Columns of propagated Jacobians collected before one rank-k update.
BATCH_COLUMNS = 2048

FIXED_POINT_TOL = 1e-10

class RegularizationError(Exception):
    pass

class InvalidNoiseStepsError(RegularizationError, ValueError):
    pass

class TrainingTooShortError(RegularizationError, ValueError):
    pass

class InvalidSubsetSizeError(RegularizationError, ValueError):
    pass

class InvalidRegularizationConfigError(RegularizationError, ValueError):
    pass

class FixedPointNotConvergedWarning(UserWarning):
    pass

class Kind(enum.Enum):
    TIKHONOV = 'tikhonov'
    JACOBIAN = 'jacobian'
    LMNT = 'lmnt'
    LMNT_REDUCED = 'lmnt_reduced'
    LMNT_MEAN_INPUT = 'lmnt_mean_input'

class Method(enum.Enum):
    """
    Training methods, with the regularization parameters each one uses.
    """
    NONE = 'none'
    TIKHONOV = 'tikhonov'
    JACOBIAN = 'jacobian'
    JACOBIAN_TIKHONOV = 'jacobian_tikhonov'
    NOISE_TIKHONOV = 'noise_tikhonov'
    LMNT_TIKHONOV = 'lmnt_tikhonov'

    @property
    def betas(self) -> frozenset[str]:
        return {
            Method.NONE: frozenset(),
            Method.TIKHONOV: frozenset({'beta_T'}),
            Method.JACOBIAN: frozenset({'beta_J'}),
            Method.JACOBIAN_TIKHONOV: frozenset({'beta_J', 'beta_T'}),
            Method.NOISE_TIKHONOV: frozenset({'beta_N', 'beta_T'}),
            Method.LMNT_TIKHONOV: frozenset({'beta_L', 'beta_T'}),
            }[self]

class LmntMode(enum.Enum):
    FULL = 'full'
    REDUCED = 'reduced'
    MEAN_INPUT = 'mean_input'

@dataclass(frozen=True)
class RegularizationConfig:
    """
    Regularization parameters of one grid point.

    Only the betas used by `method` may be nonzero.
    `reduced_T` is the subset size for LmntMode.REDUCED,
    `mean_sync_steps` the synchronization length for LmntMode.MEAN_INPUT
    (None: use T_sync).
    """

    method: Method = Method.NONE
    beta_T: float = 0.0
    beta_J: float = 0.0
    beta_N: float = 0.0
    beta_L: float = 0.0
    K: int = 1
    lmnt_mode: LmntMode = LmntMode.FULL
    reduced_T: int | None = None
    mean_sync_steps: int | None = None

    def __post_init__(self) -> None:
        for name in ('beta_T', 'beta_J', 'beta_N', 'beta_L'):
            value = getattr(self, name)
            if value < 0 or not np.isfinite(value):
                raise InvalidRegularizationConfigError(
                    f"{name} must be finite and >= 0, got {value}"
                    )
            if value and name not in self.method.betas:
                raise InvalidRegularizationConfigError(
                    f"{name}={value} is not used by method "
                    f"'{self.method.value}'"
                    )
        if self.K < 1:
            raise InvalidNoiseStepsError(f"K must be >= 1, got {self.K}")
        if self.lmnt_mode is LmntMode.REDUCED and not self.reduced_T:
            raise InvalidSubsetSizeError(
                "Reduced LMNT needs a subset size reduced_T >= 1"
                )

    @property
    def total(self) -> float:
        """Sum of all regularization parameters."""
        return self.beta_T + self.beta_J + self.beta_N + self.beta_L

    def check_sync(self, T_sync: int) -> None:
        """
        Noise older than the synchronization window cannot be tracked.

        Raises
        ------
        InvalidNoiseStepsError
            if K > T_sync for a method that uses K
        """
        if self.method is Method.LMNT_TIKHONOV and self.K > T_sync:
            raise InvalidNoiseStepsError(
                f"K={self.K} exceeds T_sync={T_sync}"
                )

    def as_dict(self) -> dict:
        return {
            'method': self.method.value,
            'beta_T': self.beta_T,
            'beta_J': self.beta_J,
            'beta_N': self.beta_N,
            'beta_L': self.beta_L,
            'K': self.K,
            'lmnt_mode': self.lmnt_mode.value,
            'reduced_T': self.reduced_T,
            'mean_sync_steps': self.mean_sync_steps,
            }

    @classmethod
    def from_dict(cls, data: dict) -> 'RegularizationConfig':
        return cls(
            method=Method(data['method']),
            beta_T=float(data.get('beta_T', 0.0)),
            beta_J=float(data.get('beta_J', 0.0)),
            beta_N=float(data.get('beta_N', 0.0)),
            beta_L=float(data.get('beta_L', 0.0)),
            K=int(data.get('K', 1)),
            lmnt_mode=LmntMode(data.get('lmnt_mode', 'full')),
            reduced_T=data.get('reduced_T'),
            mean_sync_steps=data.get('mean_sync_steps'),
            )

@dataclass(frozen=True, eq=False)
class RegularizationMatrix:
    R: 'rc.typing.Dense'
    kind: Kind

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.R
        return self.R.astype(dtype)

    @property
    def dim(self) -> int:
        return self.R.shape[0]

    def __repr__(self):
        return f"<RegularizationMatrix {self.kind.value} {self.dim}x{self.dim}>"

def _symmetric(R: np.ndarray) -> np.ndarray:
    return (R + R.T) / 2

# Regularization matrix kinds -----------------------------------------------

def tikhonov_matrix(dim: int) -> RegularizationMatrix:
    """Identity: Tr(W R W^T) is ||W||_F^2."""
    return RegularizationMatrix(np.eye(dim), Kind.TIKHONOV)

def _sech2(pre: np.ndarray) -> np.ndarray:
    return 1.0 / np.cosh(pre) ** 2

def _derivatives(res: 'rc.Reservoir', series: 'rc.FeatureSeries') -> np.ndarray:
    """
    h_j = sech^2(A r_{j-1} + B u_j + C) for every training step,
    N x T_train, evaluated on the series' own trajectory.
    """
    return _sech2(rc.preactivation(res, series.prev_states, series.inputs))

def input_jacobian(res: 'rc.Reservoir', r_prev, u_j) -> np.ndarray:
    """
    Derivative of the open-loop feature map with respect to the input,

        [0; I_M; alpha diag(h) B; alpha diag(2 r_j) diag(h) B]

    with h = sech^2(A r_prev + B u_j + C) and r_j the updated state.
    Shape (1+M+2N) x M.
    """
    r_prev = np.asarray(r_prev, dtype=np.float64)
    u_j = np.asarray(u_j, dtype=np.float64)
    h = _sech2(rc.preactivation(res, r_prev, u_j))
    r_j = rc.step(res, r_prev, u_j)
    Y = res.alpha * h[:, None] * res.B.toarray()
    return _expand(Y, r_j, res.M, identity=True)

def state_jacobian(res: 'rc.Reservoir', r_prev, u_j) -> np.ndarray:
    """
    Derivative of the open-loop feature map with respect to the previous
    feature vector. Only the reservoir-state columns are nonzero:

        r rows:     alpha diag(h) A + (1 - alpha) I
        r^2 rows:   diag(2 r_j) times the r rows

    Shape (1+M+2N) square.
    """
    r_prev = np.asarray(r_prev, dtype=np.float64)
    u_j = np.asarray(u_j, dtype=np.float64)
    N, M = res.N, res.M
    h = _sech2(rc.preactivation(res, r_prev, u_j))
    r_j = rc.step(res, r_prev, u_j)

    rows = res.alpha * h[:, None] * res.A.toarray() + (1 - res.alpha) * np.eye(N)
    J = np.zeros((res.feature_dim, res.feature_dim))
    r_cols = slice(1 + M, 1 + M + N)
    J[1 + M:1 + M + N, r_cols] = rows
    J[1 + M + N:, r_cols] = 2 * r_j[:, None] * rows
    return J

def _expand(Y: np.ndarray, r_j: np.ndarray, M: int, identity: bool) -> np.ndarray:
    """Full feature-space column block from a reservoir-state block Y."""
    N = Y.shape[0]
    full = np.zeros((1 + M + 2 * N, Y.shape[1]))
    if identity:
        full[1:1 + M] = np.eye(M)
    full[1 + M:1 + M + N] = Y
    full[1 + M + N:] = 2 * r_j[:, None] * Y
    return full

def _propagate(res: 'rc.Reservoir', h_j: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Carry a reservoir-state block one step forward."""
    alpha = res.alpha
    propagated = alpha * h_j[:, None] * np.asarray(res.A @ Y)
    if alpha != 1:
        propagated += (1 - alpha) * Y
    return propagated

class _OuterAccumulator:
    """
    Sum of Z Z^T over many column blocks Z,
    batched so that the update is one large gemm.
    """

    def __init__(self, dim: int, batch_columns: int = BATCH_COLUMNS):
        self.total = np.zeros((dim, dim))
        self.batch_columns = batch_columns
        self.pending: list[np.ndarray] = []
        self.pending_columns = 0

    def add(self, Z: np.ndarray) -> None:
        self.pending.append(Z)
        self.pending_columns += Z.shape[1]
        if self.pending_columns >= self.batch_columns:
            self.flush()

    def flush(self) -> None:
        if not self.pending:
            return
        Z = np.hstack(self.pending)
        self.total += Z @ Z.T
        self.pending.clear()
        self.pending_columns = 0

    def result(self) -> np.ndarray:
        self.flush()
        return self.total

def _window_columns(
        window: 'deque[np.ndarray]',
        r_j: np.ndarray,
        M: int,
        ) -> np.ndarray:
    """
    Stack the propagated Jacobians of the window side by side.
    The newest entry (k == j) is the one carrying the identity block.
    """
    Ys = np.hstack(window)
    full = _expand(Ys, r_j, M, identity=False)
    full[1:1 + M, -M:] = np.eye(M)
    return full

def _check_steps(K: int, T_train: int, T_sync: int | None) -> None:
    if K < 1:
        raise InvalidNoiseStepsError(f"K must be >= 1, got {K}")
    if T_sync is not None and K > T_sync:
        raise InvalidNoiseStepsError(f"K={K} exceeds T_sync={T_sync}")
    if T_train <= K:
        raise TrainingTooShortError(
            f"Need more than K={K} training samples, got {T_train}"
            )

def _windows(
        res: 'rc.Reservoir',
        series: 'rc.FeatureSeries',
        h: np.ndarray,
        K: int,
        first: int,
        last: int,
        ) -> Iterator[tuple[int, 'deque[np.ndarray]']]:
    """
    Forward accumulation of the propagated Jacobians.

    Yields (j, window) for j in first..last, where window holds the
    reservoir-state blocks of d s_j / d u_k for k = j-K+1 .. j,
    oldest first. The window is valid only until the next iteration.
    """
    N, M = res.N, res.M
    B = res.B.toarray()
    alpha = res.alpha
    window: deque[np.ndarray] = deque(maxlen=K)

    start = max(first - K + 1, 1)
    for j in range(start, last + 1):
        h_j = h[:, j]
        if len(window) == K:
            window.popleft()
        for index, Y in enumerate(window):
            window[index] = _propagate(res, h_j, Y)
        window.append(alpha * h_j[:, None] * B)
        if j >= first:
            yield j, window

def jacobian_matrix(
        series: 'rc.FeatureSeries',
        res: 'rc.Reservoir',
        ) -> RegularizationMatrix:
    """
    Average outer product of the input Jacobian over training steps
    1 .. T_train-1.

    Raises
    ------
    TrainingTooShortError
        if T_train < 2
    """
    T_train = series.T_train
    if T_train < 2:
        raise TrainingTooShortError(
            f"Jacobian regularization needs T_train >= 2, got {T_train}"
            )

    M = res.M
    h = _derivatives(res, series)
    B = res.B.toarray()
    states = series.states
    accumulator = _OuterAccumulator(res.feature_dim)
    for j in range(1, T_train):
        Y = res.alpha * h[:, j, None] * B
        accumulator.add(_expand(Y, states[:, j], M, identity=True))

    R = accumulator.result() / (T_train - 1)
    logger.info("Assembled Jacobian regularization matrix (%d steps)", T_train - 1)
    return RegularizationMatrix(_symmetric(R), Kind.JACOBIAN)

def lmnt_matrix(
        series: 'rc.FeatureSeries',
        res: 'rc.Reservoir',
        K: int,
        T_sync: int | None = None,
        ) -> RegularizationMatrix:
    """
    Linearized multi-noise training matrix.

    Sum over j = K .. T_train-1 and over the K most recent noise
    injections k = j-K+1 .. j of D(j,k) D(j,k)^T, where D(j,k) is the
    derivative of feature s_j with respect to input noise at step k,
    divided by (T_train - K). The inner sum is not averaged.

    Jacobian factors are evaluated on the series' own (noiseless)
    trajectory. K = 1 gives the Jacobian matrix.

    Raises
    ------
    InvalidNoiseStepsError
        if K < 1 or (when T_sync is given) K > T_sync
    TrainingTooShortError
        if T_train <= K
    """
    T_train = series.T_train
    _check_steps(K, T_train, T_sync)

    h = _derivatives(res, series)
    states = series.states
    accumulator = _OuterAccumulator(res.feature_dim)
    for j, window in _windows(res, series, h, K, K, T_train - 1):
        accumulator.add(_window_columns(window, states[:, j], res.M))

    R = accumulator.result() / (T_train - K)
    logger.info(
        "Assembled LMNT matrix K=%d over %d steps", K, T_train - K)
    return RegularizationMatrix(_symmetric(R), Kind.LMNT)

@rc.preload_generator(list)
def reduced_indices(T_train: int, K: int, T: int):
    """
    Training indices K + floor(j (T_train - K) / T), j = 0 .. T-1.
    """
    for j in range(T):
        yield K + (j * (T_train - K)) // T

def lmnt_matrix_reduced(
        series: 'rc.FeatureSeries',
        res: 'rc.Reservoir',
        K: int,
        T: int,
        T_sync: int | None = None,
        ) -> RegularizationMatrix:
    """
    LMNT over an evenly spaced subset of T training indices,
    divided by T. Each selected window is rebuilt from scratch
    over its K steps.

    Raises
    ------
    InvalidSubsetSizeError
        unless 1 <= T <= T_train - K
    """
    T_train = series.T_train
    _check_steps(K, T_train, T_sync)
    if not 1 <= T <= T_train - K:
        raise InvalidSubsetSizeError(
            f"Subset size must be in [1, {T_train - K}], got {T}"
            )

    h = _derivatives(res, series)
    states = series.states
    accumulator = _OuterAccumulator(res.feature_dim)
    for j in reduced_indices(T_train, K, T):
        *_, (_, window) = _windows(res, series, h, K, j, j)
        accumulator.add(_window_columns(window, states[:, j], res.M))

    R = accumulator.result() / T
    logger.info("Assembled reduced LMNT matrix K=%d on %d samples", K, T)
    return RegularizationMatrix(_symmetric(R), Kind.LMNT_REDUCED)

def mean_input_fixed_point(
        res: 'rc.Reservoir',
        training_mean,
        sync_steps: int,
        ) -> tuple[np.ndarray, float]:
    """
    Drive the reservoir from r = 0 with a constant input.

    Returns the final state and the size of its last update.
    """
    u = np.asarray(training_mean, dtype=np.float64)
    r = np.zeros(res.N)
    change = np.inf
    for _ in range(sync_steps):
        r_next = rc.step(res, r, u)
        change = float(np.linalg.norm(r_next - r))
        r = r_next
    return r, change

def lmnt_matrix_mean_input(
        res: 'rc.Reservoir',
        training_mean,
        K: int,
        sync_steps: int,
        ) -> RegularizationMatrix:
    """
    LMNT with every Jacobian factor evaluated at a single point:
    the constant input `training_mean` and the reservoir state it
    synchronizes to after `sync_steps` steps.

    Sum over k = 1 .. K of D(K,k) D(K,k)^T, not averaged.

    Warns with FixedPointNotConvergedWarning when the state is still
    moving by more than 1e-10 per step; the matrix is still returned.
    """
    if K < 1:
        raise InvalidNoiseStepsError(f"K must be >= 1, got {K}")
    if sync_steps < 1:
        raise InvalidNoiseStepsError(
            f"Mean-input synchronization needs >= 1 step, got {sync_steps}"
            )

    u = np.asarray(training_mean, dtype=np.float64)
    r_star, change = mean_input_fixed_point(res, u, sync_steps)
    if change > FIXED_POINT_TOL:
        message = (
            f"Reservoir driven by the mean input has not settled after "
            f"{sync_steps} steps (last change {change:.3e})"
            )
        logger.warning(message)
        warnings.warn(message, FixedPointNotConvergedWarning, stacklevel=2)

    h = _sech2(rc.preactivation(res, r_star, u))
    r_fixed = rc.step(res, r_star, u)
    Y = res.alpha * h[:, None] * res.B.toarray()

    # Y at lag K-k for k = K .. 1; the identity only for k = K
    blocks = [Y]
    for _ in range(K - 1):
        blocks.insert(0, _propagate(res, h, blocks[0]))
    columns = _window_columns(deque(blocks), r_fixed, res.M)

    R = columns @ columns.T
    logger.info("Assembled mean-input LMNT matrix K=%d", K)
    return RegularizationMatrix(_symmetric(R), Kind.LMNT_MEAN_INPUT)

# Noise training -----------------------------------------------------------

def noise_inputs(data, beta_N: float, noise_seed: int) -> np.ndarray:
    """
    u + sqrt(beta_N) gamma, gamma i.i.d. standard normal
    per component per time step, from the substream (noise_seed, 'noise').
    """
    if beta_N < 0:
        raise InvalidRegularizationConfigError(
            f"beta_N must be >= 0, got {beta_N}"
            )
    data = np.asarray(data, dtype=np.float64)
    if beta_N == 0:
        return data
    gamma = rc.substream(noise_seed, 'noise').standard_normal(data.shape)
    return data + np.sqrt(beta_N) * gamma

def noisy_features(
        res: 'rc.Reservoir',
        data,
        beta_N: float,
        noise_seed: int,
        T_sync: int,
        T_train: int | None = None,
        ) -> 'rc.FeatureSeries':
    """
    Open-loop features with noise added to every input the reservoir sees
    (synchronization included). Targets stay clean.
    """
    series = rc.drive_open_loop(
        res,
        data,
        T_sync,
        T_train,
        inputs=noise_inputs(data, beta_N, noise_seed),
        )
    return rc.FeatureSeries(
        S=series.S,
        V=series.V,
        r_init=series.r_init,
        noise_seed=noise_seed,
        beta_N=beta_N,
        )

def regularization_matrices(
        config: RegularizationConfig,
        series: 'rc.FeatureSeries',
        res: 'rc.Reservoir',
        T_sync: int,
        training_mean=None,
        ) -> list[tuple[float, RegularizationMatrix]]:
    """
    (beta, R) pairs for a grid point, in the order they enter the loss.

    `series` must be the noiseless series; noise training perturbs the
    features instead of adding a matrix.
    """
    config.check_sync(T_sync)
    method = config.method
    regs = []

    if method in (Method.JACOBIAN, Method.JACOBIAN_TIKHONOV):
        regs.append((config.beta_J, jacobian_matrix(series, res)))

    if method is Method.LMNT_TIKHONOV:
        if config.lmnt_mode is LmntMode.FULL:
            R = lmnt_matrix(series, res, config.K, T_sync)
        elif config.lmnt_mode is LmntMode.REDUCED:
            R = lmnt_matrix_reduced(
                series, res, config.K, config.reduced_T, T_sync)
        else:
            if training_mean is None:
                training_mean = np.zeros(res.M)
            R = lmnt_matrix_mean_input(
                res,
                training_mean,
                config.K,
                config.mean_sync_steps or T_sync,
                )
        regs.append((config.beta_L, R))

    if 'beta_T' in method.betas:
        regs.append((config.beta_T, tikhonov_matrix(res.feature_dim)))

    return regs

def save_matrix(dest, matrix: RegularizationMatrix) -> None:
    """Spill a matrix to an RCRM container (dim, kind, row-major doubles)."""
    rc.write_container(
        dest,
        rc.MAGIC_REGMAT,
        'Q16s',
        (matrix.dim, rc.pack_name(matrix.kind.value)),
        [matrix.R],
        )

def load_matrix(src) -> RegularizationMatrix:
    (dim, kind), (R,) = rc.read_container(src, rc.MAGIC_REGMAT, 'Q16s')
    if R.shape != (dim, dim):
        raise rc.ContainerError(
            f"Matrix payload {R.shape} does not match header dim {dim}"
            )
    return RegularizationMatrix(R, Kind(rc.unpack_name(kind)))
