"""
transform.py -- per-component affine standardization of state vectors.
"""

from dataclasses import dataclass

import numpy as np

import resclim as rc

@dataclass(frozen=True)
class StandardizationTransform:
    """
    Standardization: u = (y - shift) / scale, applied per component.

    Transforms are computed from a training block
    and then applied, unchanged, to every paired test series.
    """

    shift: 'rc.typing.Vector'
    scale: 'rc.typing.Vector'

    def __post_init__(self) -> None:
        shift = np.asarray(self.shift, dtype=np.float64)
        scale = np.asarray(self.scale, dtype=np.float64)
        if shift.shape != scale.shape or shift.ndim != 1:
            raise ValueError(
                f"shift and scale must be equal-length vectors, "
                f"got shapes {shift.shape} and {scale.shape}"
                )
        if not np.all(scale > 0):
            raise ValueError("Every scale entry must be positive.")
        object.__setattr__(self, 'shift', shift)
        object.__setattr__(self, 'scale', scale)

    @classmethod
    def fit(cls, raw: 'rc.typing.Series') -> 'StandardizationTransform':
        """
        Fit to a (time x component) block so it becomes mean 0, std 1.
        """
        raw = np.asarray(raw, dtype=np.float64)
        return cls(raw.mean(axis=0), raw.std(axis=0))

    @property
    def dim(self) -> int:
        return len(self.shift)

    def standardize(self, raw):
        return (np.asarray(raw) - self.shift) / self.scale

    def destandardize(self, standardized):
        return np.asarray(standardized) * self.scale + self.shift

    def as_dict(self) -> dict:
        return {'shift': self.shift.tolist(), 'scale': self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> 'StandardizationTransform':
        return cls(np.array(data['shift']), np.array(data['scale']))

    def __repr__(self):
        return f"<StandardizationTransform dim={self.dim}>"
