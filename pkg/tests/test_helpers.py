import unittest

import numpy as np

import resclim as rc

from .utils import ArrayAlmostEqual


class TestIters(unittest.TestCase):

    def test_blocks(self):
        self.assertEqual(
            list(rc.blocks(5, 2)),
            [slice(0, 2), slice(2, 4), slice(4, 5)],
            )
        self.assertEqual(list(rc.blocks(4, 4)), [slice(0, 4)])
        self.assertEqual(list(rc.blocks(0, 3)), [])

    def test_pairwise_reduce(self):
        for n in range(1, 20):
            self.assertEqual(
                rc.pairwise_reduce(range(n), lambda a, b: a + b),
                sum(range(n)),
                )

    def test_pairwise_reduce_order(self):
        # string concatenation is not commutative: order must be kept
        self.assertEqual(
            rc.pairwise_reduce('abcdefg', lambda a, b: a + b),
            'abcdefg',
            )

    def test_pairwise_reduce_tree(self):
        self.assertEqual(
            rc.pairwise_reduce('abcde', lambda a, b: f'({a}{b})'),
            '(((ab)(cd))e)',
            )

    def test_pairwise_reduce_empty(self):
        with self.assertRaises(ValueError):
            rc.pairwise_reduce([], lambda a, b: a + b)


class TestHelpers(ArrayAlmostEqual, unittest.TestCase, decimal=12):

    def test_log_grid(self):
        grid = rc.log_grid(-8, -6, 0.2)
        self.assertEqual(len(grid), 11)
        self.assertEqual(grid[3], 10 ** -7.4)
        self.assertEqual(grid[0], 1e-8)
        self.assertEqual(grid[-1], 1e-6)

    def test_log_grid_zero(self):
        grid = rc.log_grid(-18, -4, 0.5, include_zero=True)
        self.assertEqual(len(grid), 30)
        self.assertEqual(grid[0], 0.0)
        self.assertEqual(grid[1], 1e-18)

    def test_log_grid_single(self):
        self.assertEqual(rc.log_grid(-16.5, -16.5, 1.0), [10 ** -16.5])

    def test_rel_frobenius(self):
        self.assertAlmostEqual(rc.rel_frobenius([[3.0, 4.0]], [[3.0, 4.0]]), 0.0)
        self.assertAlmostEqual(rc.rel_frobenius([[0.0, 0.0]], [[3.0, 4.0]]), 1.0)

    def test_join_generator(self):
        @rc.join_generator(', ')
        def names():
            yield 'A'
            yield 'B'

        self.assertEqual(names(), 'A, B')

    def test_preload_generator(self):
        @rc.preload_generator(list)
        def squares(n):
            for i in range(n):
                yield i * i

        self.assertEqual(squares(4), [0, 1, 4, 9])

    def test_split_docstring(self):
        heading, description = rc.split_docstring(
            """
            Run things.

            At length.
            """)
        self.assertEqual(heading, 'Run things.')
        self.assertEqual(description, 'At length.')
        self.assertEqual(rc.split_docstring(None), ('', ''))

    def test_empty(self):
        self.assertFalse(rc.Empty)
        self.assertIs(rc.Empty, type(rc.Empty)())
        self.assertEqual(repr(rc.Empty), '<Empty>')


class TestSeeding(unittest.TestCase):

    def test_reproducible(self):
        a = rc.substream(5, 'reservoir', 'A').random(10)
        b = rc.substream(5, 'reservoir', 'A').random(10)
        self.assertTrue(np.array_equal(a, b))

    def test_independent_names(self):
        a = rc.substream(5, 'reservoir', 'A').random(10)
        b = rc.substream(5, 'reservoir', 'B').random(10)
        c = rc.substream(6, 'reservoir', 'A').random(10)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_derive_seed(self):
        first = rc.derive_seed(0, 'train', 0)
        self.assertEqual(first, rc.derive_seed(0, 'train', 0))
        self.assertNotEqual(first, rc.derive_seed(0, 'train', 1))
        self.assertNotEqual(first, rc.derive_seed(0, 'test', 0))
        self.assertGreaterEqual(first, 0)
        self.assertLess(first, 2**63)

    def test_negative_index(self):
        with self.assertRaises(ValueError):
            rc.substream(0, -1)


class TestStandardization(ArrayAlmostEqual, unittest.TestCase, decimal=12):

    def test_fit(self):
        raw = np.random.default_rng(0).normal(3.0, 2.0, (500, 4))
        transform = rc.StandardizationTransform.fit(raw)
        u = transform.standardize(raw)
        self.assertArrayAlmostEqual(u.mean(axis=0), np.zeros(4))
        self.assertArrayAlmostEqual(u.std(axis=0), np.ones(4))
        self.assertArrayAlmostEqual(transform.destandardize(u), raw)
        self.assertEqual(transform.dim, 4)

    def test_dict(self):
        transform = rc.StandardizationTransform([1.0, 2.0], [0.5, 4.0])
        again = rc.StandardizationTransform.from_dict(transform.as_dict())
        self.assertArrayAlmostEqual(again.shift, transform.shift)
        self.assertArrayAlmostEqual(again.scale, transform.scale)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            rc.StandardizationTransform([0.0], [0.0])
        with self.assertRaises(ValueError):
            rc.StandardizationTransform([0.0, 1.0], [1.0])


if __name__ == '__main__':
    unittest.main()
