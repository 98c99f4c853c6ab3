"""
typing.py
A collection of type hints
"""

try:
    from typing import TypeAlias
except ImportError:
    # py3.9 and lower
    from typing_extensions import TypeAlias

import numpy as np
import scipy.sparse

import resclim as rc

Vector: TypeAlias = np.typing.NDArray[np.float64]
ComplexVector: TypeAlias = np.typing.NDArray[np.complex128]
# (rows x cols), C-ordered
Dense: TypeAlias = np.typing.NDArray[np.float64]
Sparse: TypeAlias = scipy.sparse.csr_matrix
# (time x component), row t is the state at t dt
Series: TypeAlias = np.typing.NDArray[np.float64]

Reservoir: TypeAlias = rc.Reservoir
FeatureSeries: TypeAlias = rc.FeatureSeries
RegularizationMatrix: TypeAlias = rc.RegularizationMatrix
Regularizer: TypeAlias = tuple[float, rc.RegularizationMatrix | Dense]
Weights: TypeAlias = rc.OutputWeights | Dense

# Well, isn't this lovely?
Bool: TypeAlias = bool | np.bool_
