from pprint import pprint
from sys import stderr
from typing import ClassVar
import numpy as np

import resclim as rc

class PrettyEqual():
    def assertPrettyEqual(self, actual, desired):
        try:
            self.assertEqual(actual, desired)

        except AssertionError as err:
            pprint("ACTUAL: ", stream=stderr)
            pprint(actual, stream=stderr)
            pprint("DESIRED: ", stream=stderr)
            pprint(desired, stream=stderr)
            raise err


class ArrayAlmostEqual():
    decimal: ClassVar[float]

    def __init_subclass__(cls, *args, decimal=7, **kwargs) -> None:
        cls.decimal = decimal
        super().__init_subclass__(*args, **kwargs)

    def assertArrayAlmostEqual(self, actual, desired):
        # np.array forces RegularizationMatrix / OutputWeights through __array__
        self.assertIsNone(
            np.testing.assert_array_almost_equal(
                np.array(actual),
                np.array(desired),
                decimal=self.decimal
                )
            )

    def assertAlmostEqual(self, first, second):
        super().assertAlmostEqual(
            first,
            second,
            places=self.decimal
            )

class RelativeFrobenius():
    """
    Mixin comparing matrices by relative Frobenius distance,
    ||actual - desired||_F / ||desired||_F <= rtol.
    """
    def assertRelativeFrobenius(self, actual, desired, rtol: float):
        distance = rc.rel_frobenius(np.array(actual), np.array(desired))
        if distance > rtol:
            print(
                f"relative Frobenius distance {distance:.3e} > {rtol:.1e}",
                file=stderr,
                )
        self.assertLessEqual(distance, rtol)

def small_reservoir(N=20, M=4, seed=0, **kwargs) -> 'rc.Reservoir':
    return rc.build_reservoir(rc.ReservoirHyperparams(N=N, seed=seed, **kwargs), M)

def random_series(T, M, seed=0, scale=1.0) -> np.ndarray:
    """A smooth-ish standardized-looking (T x M) series."""
    rng = np.random.default_rng(seed)
    walk = np.cumsum(rng.standard_normal((T, M)), axis=0) / np.sqrt(T)
    return scale * (walk + 0.5 * rng.standard_normal((T, M)))
