import unittest

import numpy as np
import scipy.sparse

import resclim as rc

from .utils import ArrayAlmostEqual, random_series, small_reservoir

def scalar_reservoir(a, b, c, alpha) -> 'rc.Reservoir':
    """N = M = 1 reservoir with hand-picked entries."""
    h = rc.ReservoirHyperparams(N=1, avg_degree=1.0, leak_rate=alpha)
    return rc.Reservoir(
        h,
        scipy.sparse.csr_matrix([[a]]),
        scipy.sparse.csr_matrix([[b]]),
        np.array([c]),
        )

class TestHyperparams(unittest.TestCase):

    def test_defaults(self):
        h = rc.ReservoirHyperparams()
        self.assertEqual(h.N, 500)
        self.assertEqual(h.nonzeros, 1500)
        self.assertEqual(h.leak_rate, 1.0)

    def test_rounding(self):
        self.assertEqual(rc.ReservoirHyperparams(N=10, avg_degree=2.25).nonzeros, 23)
        self.assertEqual(rc.ReservoirHyperparams(N=10, avg_degree=2.24).nonzeros, 22)

    def test_invalid(self):
        for kwargs in (
                {'N': 0},
                {'leak_rate': 0.0},
                {'leak_rate': 1.5},
                {'spectral_radius': 0.0},
                {'avg_degree': 0.0},
                {'input_scaling': -0.1},
                ):
            with self.subTest(**kwargs):
                with self.assertRaises(rc.err.InvalidHyperparamsError):
                    rc.ReservoirHyperparams(**kwargs)

class TestBuild(unittest.TestCase):

    def test_table_hyperparams(self):
        res = rc.build_reservoir(rc.ReservoirHyperparams(seed=3), 64)
        self.assertEqual(res.A.nnz, 1500)
        self.assertEqual(res.feature_dim, 1 + 64 + 1000)
        self.assertAlmostEqual(rc.spectral_radius(res.A), 0.6, delta=1e-6)

    def test_dense_oracle(self):
        res = rc.build_reservoir(rc.ReservoirHyperparams(N=10, avg_degree=2.0, seed=1), 2)
        eigenvalues = np.linalg.eigvals(res.A.toarray())
        self.assertAlmostEqual(np.max(np.abs(eigenvalues)), 0.6, delta=1e-6)

    def test_deterministic(self):
        h = rc.ReservoirHyperparams(N=50, seed=11)
        first = rc.build_reservoir(h, 8)
        second = rc.build_reservoir(h, 8)
        self.assertTrue(np.array_equal(first.A.toarray(), second.A.toarray()))
        self.assertTrue(np.array_equal(first.B.toarray(), second.B.toarray()))
        self.assertTrue(np.array_equal(first.C, second.C))

        other = rc.build_reservoir(rc.ReservoirHyperparams(N=50, seed=12), 8)
        self.assertFalse(np.array_equal(first.C, other.C))

    def test_input_coupling(self):
        h = rc.ReservoirHyperparams(N=50, input_scaling=0.1, input_bias=0.2, seed=2)
        res = rc.build_reservoir(h, 8)
        B = res.B.toarray()
        self.assertTrue(np.all(np.count_nonzero(B, axis=1) == 1))
        per_input = np.count_nonzero(B, axis=0)
        self.assertEqual(sorted(set(per_input)), [6, 7])
        self.assertEqual(per_input.sum(), 50)
        self.assertTrue(np.all(np.abs(B) <= 0.1))
        self.assertTrue(np.all(np.abs(res.C) <= 0.2))

    def test_input_blocks(self):
        self.assertEqual(list(rc.input_blocks(7, 3)), [0, 0, 0, 1, 1, 2, 2])

    def test_fully_dense_adjacency(self):
        h = rc.ReservoirHyperparams(N=2, avg_degree=2.0)
        # 4 nonzeros fit a 2x2 matrix exactly
        rc.build_reservoir(h, 1)
        with self.assertRaises(rc.err.InvalidHyperparamsError):
            rc.ReservoirHyperparams(N=2, avg_degree=3.0)

class TestStep(ArrayAlmostEqual, unittest.TestCase, decimal=12):

    def test_hand_example(self):
        res = scalar_reservoir(0.5, 0.1, 0.1, 0.5)
        r = rc.step(res, [0.2], [1.0])
        self.assertAlmostEqual(r[0], 0.1 + 0.5 * np.tanh(0.3))
        self.assertLess(abs(r[0] - 0.24578), 5e-4)

    def test_zero_reservoir(self):
        res = scalar_reservoir(0.0, 0.0, 0.0, 1.0)
        self.assertArrayAlmostEqual(rc.step(res, [0.7], [3.0]), [0.0])

    def test_non_finite(self):
        res = small_reservoir()
        with self.assertRaises(rc.err.NonFiniteInputError):
            rc.step(res, np.zeros(res.N), [np.nan, 0, 0, 0])
        with self.assertRaises(rc.err.DimensionMismatchError):
            rc.step(res, np.zeros(res.N), np.zeros(3))

    def test_lipschitz(self):
        res = small_reservoir(N=30, M=3, seed=4)
        rng = np.random.default_rng(0)
        B_norm = np.linalg.norm(res.B.toarray(), 2)
        for _ in range(20):
            r = rng.uniform(-1, 1, res.N)
            u = rng.standard_normal(3)
            delta = 1e-3 * rng.standard_normal(3)
            change = np.linalg.norm(rc.step(res, r, u + delta) - rc.step(res, r, u))
            self.assertLessEqual(change, res.alpha * B_norm * np.linalg.norm(delta) + 1e-15)

    def test_feature_layout(self):
        s = rc.feature([0.5, -2.0], [9.0])
        self.assertArrayAlmostEqual(s, [1.0, 9.0, 0.5, -2.0, 0.25, 4.0])

class TestOpenLoop(ArrayAlmostEqual, unittest.TestCase, decimal=12):

    def test_single_step(self):
        res = small_reservoir()
        data = random_series(2, 4)
        series = rc.drive_open_loop(res, data, T_sync=0, T_train=1)
        expected = rc.feature(rc.step(res, np.zeros(res.N), data[0]), data[0])
        self.assertEqual(series.S.shape, (res.feature_dim, 1))
        self.assertArrayAlmostEqual(series.S[:, 0], expected)
        self.assertArrayAlmostEqual(series.V[:, 0], data[1])
        self.assertArrayAlmostEqual(series.r_init, np.zeros(res.N))

    def test_zero_input(self):
        h = rc.ReservoirHyperparams(N=20, input_bias=0.0)
        res = rc.build_reservoir(h, 4)
        series = rc.drive_open_loop(res, np.zeros((30, 4)), T_sync=5)
        expected = np.zeros(res.feature_dim)
        expected[0] = 1.0
        for column in series.S.T:
            self.assertArrayAlmostEqual(column, expected)

    def test_layout_and_accessors(self):
        res = small_reservoir(N=20, M=4, seed=5)
        data = random_series(60, 4, seed=1)
        series = rc.drive_open_loop(res, data, T_sync=10)
        self.assertEqual(series.T_train, 49)
        self.assertEqual(series.S.shape, (1 + 4 + 40, 49))
        self.assertTrue(np.all(series.S[0] == 1.0))
        self.assertArrayAlmostEqual(series.S[1 + 4 + 20:], series.states**2)
        self.assertArrayAlmostEqual(series.inputs, data[10:59].T)
        self.assertArrayAlmostEqual(series.V, data[11:60].T)
        self.assertArrayAlmostEqual(series.prev_states[:, 0], series.r_init)
        self.assertArrayAlmostEqual(series.prev_states[:, 1:], series.states[:, :-1])
        self.assertArrayAlmostEqual(
            series.states[:, 3],
            rc.step(res, series.states[:, 2], data[13]),
            )

    def test_too_short(self):
        res = small_reservoir()
        with self.assertRaises(rc.err.SeriesTooShortError):
            rc.drive_open_loop(res, random_series(10, 4), T_sync=5, T_train=5)

    def test_non_finite(self):
        res = small_reservoir()
        data = random_series(10, 4)
        data[3, 1] = np.inf
        with self.assertRaises(rc.err.NonFiniteInputError):
            rc.drive_open_loop(res, data, T_sync=2)

    def test_echo_state(self):
        res = rc.build_reservoir(rc.ReservoirHyperparams(N=100, seed=0), 8)
        data = random_series(200, 8, seed=3)
        self.assertLess(rc.echo_state_gap(res, data, 100), 1e-8)

class TestClosedLoop(ArrayAlmostEqual, unittest.TestCase, decimal=14):

    def test_zero_readout(self):
        res = small_reservoir()
        prediction = rc.predict_closed_loop(
            res, np.zeros((4, res.feature_dim)), random_series(11, 4), 25)
        self.assertEqual(prediction.length, 25)
        self.assertFalse(prediction.overflowed)
        self.assertArrayAlmostEqual(prediction.outputs, np.zeros((25, 4)))

    def test_map_matches_open_loop(self):
        res = small_reservoir(N=20, M=4, seed=8)
        W = 0.05 * np.random.default_rng(1).standard_normal((4, res.feature_dim))
        rng = np.random.default_rng(2)
        r_prev = rng.uniform(-0.5, 0.5, res.N)
        u_prev = rng.standard_normal(4)
        s_prev = rc.feature(r_prev, u_prev)

        u_in = W @ s_prev
        expected = rc.feature(rc.step(res, r_prev, u_in), u_in)
        self.assertArrayAlmostEqual(rc.closed_loop_map(res, W, s_prev), expected)

    def test_prediction_follows_map(self):
        res = small_reservoir(N=20, M=4, seed=9)
        W = 0.05 * np.random.default_rng(3).standard_normal((4, res.feature_dim))
        sync = random_series(11, 4, seed=4)
        prediction = rc.predict_closed_loop(res, W, sync, 5)

        r = np.zeros(res.N)
        for u in sync:
            r = rc.step(res, r, u)
        s = rc.feature(r, sync[-1])
        for n in range(5):
            self.assertArrayAlmostEqual(prediction.outputs[n], W @ s)
            s = rc.closed_loop_map(res, W, s)

    def test_overflow(self):
        res = small_reservoir(N=20, M=4, seed=10)
        W = np.zeros((4, res.feature_dim))
        # u_out = 1e200 u_in: overflows within two steps
        W[:, 1:5] = 1e200 * np.eye(4)
        prediction = rc.predict_closed_loop(res, W, np.ones((3, 4)), 50)
        self.assertTrue(prediction.overflowed)
        self.assertLess(prediction.length, 50)
        self.assertEqual(prediction.requested, 50)
        self.assertTrue(np.all(np.isfinite(prediction.outputs)))

    def test_bad_readout(self):
        res = small_reservoir()
        with self.assertRaises(rc.err.DimensionMismatchError):
            rc.predict_closed_loop(res, np.zeros((4, 3)), random_series(5, 4), 3)


if __name__ == '__main__':
    unittest.main()
