"""
training.py -- solve the regularized normal equations for the readout W.

    W ((1/T) S S^T + sum_i beta_i R_i) = (1/T) V S^T

The data terms (1/T) S S^T and (1/T) V S^T are computed once per
(reservoir, training set) and kept in a GramCache,
so every further point of a regularization grid costs one dense solve.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import resclim as rc

logger = logging.getLogger(__name__)

# Columns of S per partial Gram product.
GRAM_BLOCK = 1000

class TrainingError(Exception):
    pass

class SingularTrainingSystemError(TrainingError):
    pass

class ModelFormatError(TrainingError):
    pass

@dataclass(frozen=True, eq=False)
class OutputWeights:
    """
    Readout matrix W, M x (1+M+2N).
    Column blocks follow the feature layout [1; u; r; r^2].
    """

    W: 'rc.typing.Dense'

    def __post_init__(self) -> None:
        if self.W.ndim != 2:
            raise rc.DimensionMismatchError(
                f"Readout must be a matrix, got shape {self.W.shape}"
                )
        if not np.all(np.isfinite(self.W)):
            raise SingularTrainingSystemError("Readout has non-finite entries")

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.W
        return self.W.astype(dtype)

    @property
    def M(self) -> int:
        return self.W.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.W.shape[1]

    @property
    def N(self) -> int:
        return (self.feature_dim - 1 - self.M) // 2

    def __repr__(self):
        return f"<OutputWeights {self.M}x{self.feature_dim}>"

@dataclass(frozen=True, eq=False)
class GramCache:
    """(1/T) S S^T and (1/T) V S^T of one training series."""

    gram: 'rc.typing.Dense'
    cross: 'rc.typing.Dense'
    T_train: int

    @property
    def nbytes(self) -> int:
        return self.gram.nbytes + self.cross.nbytes

def _block_products(S: np.ndarray, V: np.ndarray, block: slice):
    S_b = S[:, block]
    return S_b @ S_b.T, V[:, block] @ S_b.T

def _add_products(left, right):
    return left[0] + right[0], left[1] + right[1]

def gram_cache(series: 'rc.FeatureSeries', block_size: int = GRAM_BLOCK) -> GramCache:
    """
    Accumulate the data terms over column blocks of S.

    Blocks are combined with a fixed pairwise tree,
    so the result does not depend on how the blocks were scheduled.
    """
    S, V = series.S, series.V
    T = series.T_train
    gram, cross = rc.pairwise_reduce(
        (_block_products(S, V, block) for block in rc.blocks(T, block_size)),
        _add_products,
        )
    logger.debug("Gram cache for T_train=%d in %d-column blocks", T, block_size)
    return GramCache(gram / T, cross / T, T)

def _penalty(dim: int, regs) -> np.ndarray:
    total = np.zeros((dim, dim))
    for beta, matrix in regs:
        if beta < 0:
            raise TrainingError(f"Regularization parameter {beta} is negative")
        if beta:
            R = np.asarray(matrix)
            if R.shape != (dim, dim):
                raise rc.DimensionMismatchError(
                    f"Regularization matrix is {R.shape}, expected {dim}x{dim}"
                    )
            total += beta * R
    return total

def train(
        data: 'rc.FeatureSeries | GramCache',
        regs=(),
        ) -> OutputWeights:
    """
    Solve the regularized normal equations.

    Parameters
    ----------
    data:
        A training series, or its precomputed GramCache.
    regs:
        Iterable of (beta, R) pairs, R a RegularizationMatrix or a square
        array. Several entries of the same kind are summed.

    Raises
    ------
    SingularTrainingSystemError
        if the regularized system is numerically singular
    """
    cache = data if isinstance(data, GramCache) else gram_cache(data)
    regs = list(regs)
    system = cache.gram + _penalty(cache.gram.shape[0], regs)

    try:
        W = rc.solve_normal_equations(system, cache.cross)
    except rc.SingularSystemError as err:
        raise SingularTrainingSystemError(
            f"Cannot train readout with betas "
            f"{[beta for beta, _ in regs]}: {err}"
            ) from err

    logger.debug("Trained readout with %d regularization terms", len(regs))
    return OutputWeights(W)

def train_noisy(noisy: 'rc.FeatureSeries', beta_T: float) -> OutputWeights:
    """
    Train on features from `noisy_features` with Tikhonov regularization.
    A new noise amplitude needs a new series; beta_T can reuse
    `gram_cache(noisy)` through `train`.
    """
    return train(noisy, [(beta_T, rc.tikhonov_matrix(noisy.S.shape[0]))])

def training_residual(series: 'rc.FeatureSeries', weights) -> float:
    """(1/T) sum_j ||W s_j - v_j||^2"""
    W = np.asarray(weights)
    residual = W @ series.S - series.V
    return float(np.sum(residual * residual) / series.T_train)

# Model files --------------------------------------------------------------

# N, M, seed, avg_degree, spectral_radius, input_scaling, input_bias, leak_rate
MODEL_HEADER = 'QQQddddd'

@dataclass(frozen=True, eq=False)
class TrainedModel:
    """
    Everything needed to rerun a prediction:
    the reservoir is rebuilt from its hyperparameters.
    """

    hyperparams: 'rc.ReservoirHyperparams'
    weights: OutputWeights
    config: 'rc.RegularizationConfig'
    transform: 'rc.StandardizationTransform'
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        M = self.transform.dim
        expected = (M, 1 + M + 2 * self.hyperparams.N)
        if self.weights.W.shape != expected:
            raise ModelFormatError(
                f"Readout shape {self.weights.W.shape} does not match "
                f"N={self.hyperparams.N}, M={M}"
                )

    @property
    def M(self) -> int:
        return self.weights.M

    def reservoir(self) -> 'rc.Reservoir':
        return rc.build_reservoir(self.hyperparams, self.M)

def save_model(path: 'str | Path', model: TrainedModel) -> None:
    h = model.hyperparams
    rc.write_container(
        path,
        rc.MAGIC_MODEL,
        MODEL_HEADER,
        (
            h.N, model.M, h.seed,
            h.avg_degree, h.spectral_radius,
            h.input_scaling, h.input_bias, h.leak_rate,
            ),
        [model.weights.W, model.transform.shift, model.transform.scale],
        )
    rc.write_sidecar(path, {
        'kind': 'model',
        'regularization': model.config.as_dict(),
        'transform': model.transform.as_dict(),
        'provenance': model.provenance,
        })
    logger.info("Saved model to %s", path)

def load_model(path: 'str | Path') -> TrainedModel:
    """
    Raises
    ------
    ModelFormatError
        if the container or its sidecar is malformed
    """
    try:
        header, arrays = rc.read_container(path, rc.MAGIC_MODEL, MODEL_HEADER)
        sidecar = rc.read_sidecar(path)
    except (rc.ContainerError, OSError, ValueError) as err:
        raise ModelFormatError(f"Cannot read model {path}: {err}") from err

    if len(arrays) != 3:
        raise ModelFormatError(
            f"Model {path} holds {len(arrays)} arrays, expected 3"
            )
    N, _, seed, degree, radius, scaling, bias, leak = header
    W, shift, scale = arrays
    hyperparams = rc.ReservoirHyperparams(
        N=int(N),
        avg_degree=degree,
        spectral_radius=radius,
        input_scaling=scaling,
        input_bias=bias,
        leak_rate=leak,
        seed=int(seed),
        )
    return TrainedModel(
        hyperparams=hyperparams,
        weights=OutputWeights(W),
        config=rc.RegularizationConfig.from_dict(sidecar['regularization']),
        transform=rc.StandardizationTransform(shift, scale),
        provenance=sidecar.get('provenance', {}),
        )
