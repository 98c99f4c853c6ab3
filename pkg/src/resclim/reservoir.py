"""
reservoir.py -- the random reservoir and its open- and closed-loop dynamics.

State update (leaky tanh network):

    r(t) = (1 - alpha) r(t - dt) + alpha tanh(A r(t - dt) + B u_in(t) + C)

Feature vector fed to the readout:

    s(t) = [1; u_in(t); r(t); r(t)**2]        length 1 + M + 2N

Series are time-major: row t of a (T x M) array is u(t).
Feature and target matrices are column-major in time,
column j of S is s_j, matching the normal equations W S S^T = V S^T.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

import resclim as rc

logger = logging.getLogger(__name__)

class ReservoirError(Exception):
    pass

class InvalidHyperparamsError(ReservoirError, ValueError):
    pass

class TooManyNonzerosError(ReservoirError, ValueError):
    pass

class DegenerateAdjacencyError(ReservoirError):
    pass

class NonFiniteInputError(ReservoirError, ValueError):
    pass

class SeriesTooShortError(ReservoirError, ValueError):
    pass

@dataclass(frozen=True)
class ReservoirHyperparams:
    """
    Everything needed to rebuild a reservoir bit for bit.

    Defaults are the values used for every prediction test
    on the Kuramoto-Sivashinsky system.
    """

    N: int = 500
    avg_degree: float = 3.0
    spectral_radius: float = 0.6
    input_scaling: float = 0.1
    input_bias: float = 0.1
    leak_rate: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.N < 1:
            raise InvalidHyperparamsError(f"N must be >= 1, got {self.N}")
        if not 0 < self.leak_rate <= 1:
            raise InvalidHyperparamsError(
                f"Leak rate must be in (0, 1], got {self.leak_rate}"
                )
        if self.spectral_radius <= 0:
            raise InvalidHyperparamsError(
                f"Spectral radius must be positive, got {self.spectral_radius}"
                )
        if not 0 < self.avg_degree <= self.N:
            raise InvalidHyperparamsError(
                f"Average degree must be in (0, N={self.N}], "
                f"got {self.avg_degree}"
                )
        if self.input_scaling < 0 or self.input_bias < 0:
            raise InvalidHyperparamsError(
                "Input scaling and input bias must be non-negative"
                )

    @property
    def nonzeros(self) -> int:
        """Number of nonzeros in A: N * <d>, rounded half up."""
        return int(np.floor(self.N * self.avg_degree + 0.5))

@dataclass(frozen=True, eq=False)
class Reservoir:
    """
    A fixed random reservoir: adjacency A (N x N), input coupling B (N x M),
    bias C (N) and leak rate alpha.

    Build with `build_reservoir`; never mutated afterwards.
    """

    hyperparams: ReservoirHyperparams
    A: 'rc.typing.Sparse'
    B: 'rc.typing.Sparse'
    C: 'rc.typing.Vector'

    @property
    def N(self) -> int:
        return self.hyperparams.N

    @property
    def M(self) -> int:
        return self.B.shape[1]

    @property
    def alpha(self) -> float:
        return self.hyperparams.leak_rate

    @property
    def feature_dim(self) -> int:
        return 1 + self.M + 2 * self.N

    def __repr__(self):
        return (
            f"<Reservoir N={self.N} M={self.M} "
            f"nnz(A)={self.A.nnz} seed={self.hyperparams.seed}>"
            )

def input_blocks(N: int, M: int) -> np.ndarray:
    """
    Input index coupled to each reservoir row.

    Inputs own contiguous row blocks of size N // M;
    the first N % M inputs get one extra row.
    """
    counts = np.full(M, N // M)
    counts[:N % M] += 1
    return np.repeat(np.arange(M), counts)

def build_reservoir(h: ReservoirHyperparams, M: int) -> Reservoir:
    """
    Build the random reservoir for an M-dimensional input.

    A gets exactly round(N <d>) nonzeros at distinct, uniformly drawn
    positions, values uniform on [-1, 1], then is rescaled to spectral
    radius rho. B has one nonzero per row, uniform on [-sigma, sigma].
    C is uniform on [-theta, theta]. Each of A, B, C draws from its own
    named substream of `h.seed`.

    Raises
    ------
    TooManyNonzerosError
        if round(N <d>) exceeds N^2
    DegenerateAdjacencyError
        if the drawn A has spectral radius 0 and cannot be rescaled
    """
    if M < 1:
        raise InvalidHyperparamsError(f"Input dimension must be >= 1, got {M}")

    N = h.N
    nonzeros = h.nonzeros
    if nonzeros > N * N:
        raise TooManyNonzerosError(
            f"Requested {nonzeros} nonzeros, but A only has {N * N} entries"
            )

    rng_a = rc.substream(h.seed, 'reservoir', 'A')
    positions = rng_a.choice(N * N, size=nonzeros, replace=False)
    rows, cols = np.divmod(positions, N)
    values = rng_a.uniform(-1.0, 1.0, size=nonzeros)
    A = rc.sparse_matrix((N, N), rows, cols, values)

    radius = rc.spectral_radius(A, seed=h.seed)
    if radius == 0:
        raise DegenerateAdjacencyError(
            f"Adjacency drawn from seed {h.seed} has spectral radius 0"
            )
    A = A * (h.spectral_radius / radius)

    rng_b = rc.substream(h.seed, 'reservoir', 'B')
    B = rc.sparse_matrix(
        (N, M),
        np.arange(N),
        input_blocks(N, M),
        rng_b.uniform(-h.input_scaling, h.input_scaling, size=N),
        )

    rng_c = rc.substream(h.seed, 'reservoir', 'C')
    C = rng_c.uniform(-h.input_bias, h.input_bias, size=N)

    logger.info(
        "Built reservoir N=%d M=%d nnz=%d rho=%.3g (seed %d)",
        N, M, A.nnz, h.spectral_radius, h.seed)

    return Reservoir(h, A, B, C)

def preactivation(res: Reservoir, r_prev, u_in) -> np.ndarray:
    """A r_prev + B u_in + C. Works column-wise on (N x T) / (M x T) too."""
    bias = res.C if np.ndim(r_prev) == 1 else res.C[:, None]
    return res.A @ r_prev + res.B @ u_in + bias

def _advance(res: Reservoir, r_prev: np.ndarray, u_in: np.ndarray) -> np.ndarray:
    alpha = res.alpha
    return (1 - alpha) * r_prev + alpha * np.tanh(preactivation(res, r_prev, u_in))

def step(res: Reservoir, r_prev, u_in) -> np.ndarray:
    """
    One reservoir update, r = (1-a) r_prev + a tanh(A r_prev + B u_in + C).

    Raises
    ------
    NonFiniteInputError
        if r_prev or u_in contains NaN or infinity
    """
    r_prev = np.asarray(r_prev, dtype=np.float64)
    u_in = np.asarray(u_in, dtype=np.float64)
    if u_in.shape != (res.M,):
        raise rc.DimensionMismatchError(
            f"Input must have shape ({res.M},), got {u_in.shape}"
            )
    if r_prev.shape != (res.N,):
        raise rc.DimensionMismatchError(
            f"State must have shape ({res.N},), got {r_prev.shape}"
            )
    if not (np.all(np.isfinite(u_in)) and np.all(np.isfinite(r_prev))):
        raise NonFiniteInputError("Reservoir input or state is not finite")
    return _advance(res, r_prev, u_in)

def feature(r, u_in) -> np.ndarray:
    """Feature vector [1; u_in; r; r**2]."""
    r = np.asarray(r, dtype=np.float64)
    return np.concatenate(([1.0], np.asarray(u_in, dtype=np.float64), r, r * r))

@dataclass(frozen=True, eq=False)
class FeatureSeries:
    """
    Open-loop training record.

    S: (1+M+2N) x T_train, column j is s_j (sample at time (T_sync + j) dt)
    V: M x T_train, column j is the target v_j = u(T_sync + j + 1)
    r_init: state r_{-1}, the last synchronization state before s_0

    The reservoir states r_j and the (possibly noisy) inputs u_j
    are read back out of S.
    """

    S: 'rc.typing.Dense'
    V: 'rc.typing.Dense'
    r_init: 'rc.typing.Vector'
    noise_seed: int | None = field(default=None)
    beta_N: float = field(default=0.0)

    @property
    def T_train(self) -> int:
        return self.S.shape[1]

    @property
    def M(self) -> int:
        return self.V.shape[0]

    @property
    def N(self) -> int:
        return len(self.r_init)

    @property
    def inputs(self) -> np.ndarray:
        """M x T_train, column j is the input u_j the reservoir received."""
        return self.S[1:1 + self.M]

    @property
    def states(self) -> np.ndarray:
        """N x T_train, column j is r_j."""
        return self.S[1 + self.M:1 + self.M + self.N]

    @property
    def prev_states(self) -> np.ndarray:
        """N x T_train, column j is r_{j-1}."""
        return np.column_stack([self.r_init, self.states[:, :-1]])

def drive_open_loop(
        res: Reservoir,
        data,
        T_sync: int,
        T_train: int | None = None,
        inputs=None,
        ) -> FeatureSeries:
    """
    Drive the reservoir with a standardized series and collect features.

    The state starts at r(-dt) = 0. The first T_sync features only
    synchronize the reservoir; the next T_train are recorded.

    Parameters
    ----------
    data:
        (T x M) standardized series, T >= T_sync + T_train + 1.
        Targets v_j are always taken from here.
    T_train:
        Number of recorded samples. Defaults to len(data) - T_sync - 1.
    inputs:
        Optional (T x M) series actually fed to the reservoir
        (noise training feeds perturbed inputs, clean targets).

    Raises
    ------
    SeriesTooShortError
        if data has fewer than T_sync + T_train + 1 rows
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != res.M:
        raise rc.DimensionMismatchError(
            f"Expected a (T x {res.M}) series, got shape {data.shape}"
            )
    if T_train is None:
        T_train = len(data) - T_sync - 1
    if T_sync < 0 or T_train < 1 or len(data) < T_sync + T_train + 1:
        raise SeriesTooShortError(
            f"Need T_sync + T_train + 1 = {T_sync + max(T_train, 1) + 1} "
            f"samples, got {len(data)}"
            )

    if inputs is None:
        inputs = data
    inputs = np.asarray(inputs, dtype=np.float64)
    if not (np.all(np.isfinite(inputs[:T_sync + T_train]))):
        raise NonFiniteInputError("Driving series contains NaN or infinity")

    N, M = res.N, res.M
    # time-major buffer; S is its transpose
    features = np.empty((T_train, res.feature_dim))

    r = np.zeros(N)
    for t in range(T_sync):
        r = _advance(res, r, inputs[t])
    r_init = r.copy()

    for j in range(T_train):
        u = inputs[T_sync + j]
        r = _advance(res, r, u)
        row = features[j]
        row[0] = 1.0
        row[1:1 + M] = u
        row[1 + M:1 + M + N] = r
        row[1 + M + N:] = r * r

    V = np.ascontiguousarray(data[T_sync + 1:T_sync + T_train + 1].T)
    logger.debug(
        "Drove reservoir open-loop: %d sync + %d training steps",
        T_sync, T_train)

    return FeatureSeries(S=features.T, V=V, r_init=r_init)

@dataclass(frozen=True, eq=False)
class Prediction:
    """
    Closed-loop output.

    outputs: (n x M), row n-1 is u_out((T_init + n) dt);
    n == requested length unless the run overflowed.
    """

    outputs: 'rc.typing.Series'
    requested: int
    overflowed: bool

    @property
    def length(self) -> int:
        return len(self.outputs)

def closed_loop_map(res: Reservoir, W, s) -> np.ndarray:
    """
    Closed-loop feature evolution s(t) = g_c(s(t - dt)):
    the open-loop update with u_in(t) = W s(t - dt) substituted,
    written with the composite coupling [0, BW, A, 0].
    """
    W = np.asarray(W)
    M, N = res.M, res.N
    r_prev = s[1 + M:1 + M + N]
    u_next = W @ s
    coupled = res.B @ W
    drive = coupled @ s + res.A @ r_prev + res.C
    r = (1 - res.alpha) * r_prev + res.alpha * np.tanh(drive)
    return np.concatenate(([1.0], u_next, r, r * r))

def predict_closed_loop(
        res: Reservoir,
        W,
        sync_data,
        T_pred: int,
        ) -> Prediction:
    """
    Resynchronize on known data, then run autonomously for T_pred steps.

    The state is reset to 0, driven by the T_sync + 1 rows of
    `sync_data`, and every output W s is fed back as the next input.
    A non-finite output or state ends the run early with
    `overflowed=True`; the finite outputs produced so far are kept.
    """
    W = np.asarray(W, dtype=np.float64)
    sync_data = np.asarray(sync_data, dtype=np.float64)
    if W.shape != (res.M, res.feature_dim):
        raise rc.DimensionMismatchError(
            f"Readout must be {res.M} x {res.feature_dim}, got {W.shape}"
            )
    if sync_data.ndim != 2 or sync_data.shape[1] != res.M or not len(sync_data):
        raise SeriesTooShortError(
            f"Need a non-empty (T_sync + 1) x {res.M} sync block, "
            f"got shape {sync_data.shape}"
            )

    r = np.zeros(res.N)
    for u in sync_data:
        r = _advance(res, r, u)
    s = feature(r, sync_data[-1])

    outputs = np.empty((T_pred, res.M))
    overflowed = False
    produced = 0
    with np.errstate(over='ignore', invalid='ignore'):
        for n in range(T_pred):
            u_out = W @ s
            if not np.all(np.isfinite(u_out)):
                overflowed = True
                break
            outputs[n] = u_out
            produced += 1
            r = _advance(res, r, u_out)
            if not np.all(np.isfinite(r)):
                overflowed = True
                break
            s = feature(r, u_out)

    if overflowed:
        logger.debug("Closed-loop run overflowed after %d steps", produced)

    return Prediction(outputs[:produced], T_pred, overflowed)

def echo_state_gap(
        res: Reservoir,
        data,
        steps: int,
        seed: int = 0,
        ) -> float:
    """
    Distance between two reservoir states driven by the same `steps`
    inputs from different starts (zero, and uniform on [-1, 1]).

    Small values indicate the echo-state property
    for this reservoir and data.
    """
    data = np.asarray(data, dtype=np.float64)
    r_zero = np.zeros(res.N)
    r_rand = rc.substream(seed, 'echo').uniform(-1.0, 1.0, size=res.N)
    for u in data[:steps]:
        r_zero = _advance(res, r_zero, u)
        r_rand = _advance(res, r_rand, u)
    return float(np.linalg.norm(r_zero - r_rand))
