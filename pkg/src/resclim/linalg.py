"""
linalg.py -- the linear-algebra kernels the rest of resclim runs on.

Sparse matrices are `scipy.sparse.csr_matrix`,
dense matrices are C-ordered float64 `numpy.ndarray`s.
All floating point is 64-bit.
"""

import logging
import warnings

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse

import resclim as rc

logger = logging.getLogger(__name__)

# LU pivots below this fraction of the largest matrix entry
# mark the system as numerically singular.
PIVOT_RTOL = 1e-13

class LinalgError(Exception):
    pass

class DimensionMismatchError(LinalgError, ValueError):
    pass

class DuplicateEntryError(LinalgError, ValueError):
    pass

class SingularSystemError(LinalgError):
    pass

class UnsupportedLengthError(LinalgError, ValueError):
    pass

class PowerIterationNotConvergedError(LinalgError):
    """
    Power iteration ran out of iterations.

    The last estimate is kept in `.estimate`.
    """
    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate

def sparse_matrix(
        shape: tuple[int, int],
        rows,
        cols,
        values,
        ) -> 'rc.typing.Sparse':
    """
    Build a CSR matrix from coordinate entries.

    Raises
    ------
    DimensionMismatchError
        if an index is out of range or the entry arrays differ in length
    DuplicateEntryError
        if a (row, col) pair occurs twice
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    n_rows, n_cols = shape

    if not (len(rows) == len(cols) == len(values)):
        raise DimensionMismatchError(
            f"Entry arrays differ in length: "
            f"{len(rows)} rows, {len(cols)} cols, {len(values)} values"
            )

    if len(rows) and (
            rows.min() < 0 or rows.max() >= n_rows
            or cols.min() < 0 or cols.max() >= n_cols):
        raise DimensionMismatchError(
            f"Entry index out of range for a {n_rows}x{n_cols} matrix"
            )

    flat = rows * n_cols + cols
    if len(np.unique(flat)) != len(flat):
        raise DuplicateEntryError("Duplicate (row, col) entries")

    matrix = scipy.sparse.csr_matrix(
        (values, (rows, cols)),
        shape=shape,
        dtype=np.float64,
        )
    matrix.sort_indices()
    return matrix

def spmv(m: 'rc.typing.Sparse', x: 'rc.typing.Vector') -> 'rc.typing.Vector':
    """
    Sparse matrix-vector product m @ x.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) != m.shape[1]:
        raise DimensionMismatchError(
            f"Cannot multiply a {m.shape[0]}x{m.shape[1]} matrix "
            f"by a vector of shape {x.shape}"
            )
    return np.asarray(m @ x, dtype=np.float64).reshape(m.shape[0])

def _direction_gap(new: np.ndarray, old: np.ndarray) -> float:
    """Distance between two unit vectors, up to sign."""
    return float(min(
        np.linalg.norm(new - old),
        np.linalg.norm(new + old),
        ))

def _pair_estimate(m, x: np.ndarray) -> tuple[float, np.ndarray]:
    """
    Two-step Krylov fit.

    Fits A^2 x + a A x + b x = 0 by least squares;
    the roots of z^2 + a z + b approximate the dominant eigenvalue
    or the dominant complex-conjugate pair.
    Returns the largest root magnitude and A x.
    """
    y = m @ x
    z = m @ y
    (a, b), *_ = np.linalg.lstsq(np.column_stack([y, x]), -z, rcond=None)
    roots = np.roots([1.0, a, b])
    return float(np.max(np.abs(roots))), y

def spectral_radius(
        m: 'rc.typing.Sparse',
        tol: float = 1e-12,
        max_iter: int = 100_000,
        seed: int = 0,
        stall_after: int = 500,
        ) -> float:
    """
    Spectral radius |lambda_max| of a square sparse matrix.

    Plain power iteration is tried first,
    from a start vector drawn from the seeded substream `(seed, 'power')`.
    It is accepted once the norm estimate changes by less than `tol`
    (relative) and the iterate direction has settled.

    A dominant complex-conjugate pair makes the iterates rotate
    instead of settle. After `stall_after` iterations without convergence
    the iteration switches to a two-step Krylov fit,
    which recovers the modulus of a dominant real eigenvalue
    or of a dominant pair. For a purely imaginary pair this is exactly
    power iteration on A @ A followed by a square root.

    Parameters
    ----------
    m: scipy.sparse matrix
        Square matrix.
    tol: float
        Relative change below which the estimate is accepted.
    max_iter: int
        Total iteration budget, both phases combined.
    seed: int
        Seed of the start vector.

    Raises
    ------
    PowerIterationNotConvergedError
        if the budget runs out, with the last estimate attached.
    """
    n_rows, n_cols = m.shape
    if n_rows != n_cols:
        raise DimensionMismatchError(
            f"Spectral radius needs a square matrix, got {n_rows}x{n_cols}"
            )
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    m = scipy.sparse.csr_matrix(m, dtype=np.float64)
    if m.nnz == 0:
        return 0.0

    x = rc.substream(seed, 'power').standard_normal(n_rows)
    x /= np.linalg.norm(x)

    estimate = 0.0
    iteration = 0
    while iteration < min(stall_after, max_iter):
        iteration += 1
        y = m @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            # x fell into the null space of a nilpotent matrix
            return 0.0
        y /= norm
        change = abs(norm - estimate) / norm
        settled = _direction_gap(y, x) < 1e-6
        estimate, x = float(norm), y
        if change < tol and settled:
            logger.debug(
                "Power iteration converged after %d steps: %.15g",
                iteration, estimate)
            return estimate

    logger.debug(
        "Power iteration stalled after %d steps, "
        "switching to the two-step fit", iteration)

    calm_steps = 0
    while iteration < max_iter:
        iteration += 1
        new_estimate, y = _pair_estimate(m, x)
        norm = np.linalg.norm(y)
        if norm == 0 or new_estimate == 0:
            return 0.0
        change = abs(new_estimate - estimate) / new_estimate
        estimate, x = new_estimate, y / norm
        calm_steps = calm_steps + 1 if change < tol else 0
        if calm_steps >= 3:
            logger.debug(
                "Two-step fit converged after %d steps: %.15g",
                iteration, estimate)
            return estimate

    raise PowerIterationNotConvergedError(
        f"Spectral radius did not converge in {max_iter} iterations "
        f"(last estimate {estimate!r})",
        estimate,
        )

def solve_normal_equations(
        gram: 'rc.typing.Dense',
        rhs: 'rc.typing.Dense',
        pivot_rtol: float = PIVOT_RTOL,
        ) -> 'rc.typing.Dense':
    """
    Solve W @ gram = rhs for W.

    `gram` is symmetrized as (G + G^T) / 2, then factored by LU with
    partial pivoting (LAPACK getrf via scipy).

    Raises
    ------
    DimensionMismatchError
        if gram is not square or rhs has the wrong width
    SingularSystemError
        if a pivot falls below `pivot_rtol` times the largest |entry|
    """
    gram = np.asarray(gram, dtype=np.float64)
    rhs = np.atleast_2d(np.asarray(rhs, dtype=np.float64))

    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise DimensionMismatchError(
            f"Normal-equation matrix must be square, got {gram.shape}"
            )
    if rhs.shape[1] != gram.shape[0]:
        raise DimensionMismatchError(
            f"Right-hand side has {rhs.shape[1]} columns, "
            f"expected {gram.shape[0]}"
            )

    gram = (gram + gram.T) / 2
    scale = np.max(np.abs(gram))
    if not np.isfinite(scale):
        raise SingularSystemError("Normal-equation matrix is not finite")
    if scale == 0:
        raise SingularSystemError("Normal-equation matrix is all zeros")

    with warnings.catch_warnings():
        warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(gram, check_finite=False)

    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest < pivot_rtol * scale:
        raise SingularSystemError(
            f"Normal equations are numerically singular: "
            f"smallest LU pivot {smallest:.3e} < "
            f"{pivot_rtol:.0e} x max entry {scale:.3e}"
            )

    return scipy.linalg.lu_solve((lu, piv), rhs.T, check_finite=False).T

def _check_power_of_two(n: int) -> None:
    if n < 1 or n & (n - 1):
        raise UnsupportedLengthError(
            f"FFT length must be a power of two, got {n}"
            )

def fft_real(x, axis: int = -1) -> 'rc.typing.ComplexVector':
    """
    Forward real FFT along `axis`.

    Convention: the forward transform is unnormalized,
    X_k = sum_n x_n exp(-2 pi i k n / L),
    and `ifft_real` divides by L, so ifft_real(fft_real(x), L) == x.
    Only the L/2 + 1 non-negative frequencies are returned.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_power_of_two(x.shape[axis])
    return scipy.fft.rfft(x, axis=axis)

def ifft_real(x_hat, n: int, axis: int = -1) -> 'rc.typing.Vector':
    """
    Inverse of `fft_real` for a real signal of length `n`.
    """
    _check_power_of_two(n)
    return scipy.fft.irfft(x_hat, n=n, axis=axis)
