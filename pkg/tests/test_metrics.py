import unittest

import numpy as np

import resclim as rc

def shift_map(u):
    return np.asarray(u) + 1.0

def exploding_map(u):
    u = np.asarray(u)
    if np.any(np.abs(u) > 100):
        raise rc.err.NonFiniteStateError("too large")
    return u

class TestNormalizers(unittest.TestCase):

    def test_two_points(self):
        norms = rc.normalizers([[0.0, 0.0], [3.0, 4.0]])
        self.assertAlmostEqual(norms.E_bar, 5.0)
        self.assertAlmostEqual(norms.E_map_bar, 5.0)

    def test_three_points(self):
        norms = rc.normalizers([[0.0], [1.0], [3.0]])
        # pairs 1, 3, 2; steps 1, 2
        self.assertAlmostEqual(norms.E_bar, 2.0)
        self.assertAlmostEqual(norms.E_map_bar, 1.5)

    def test_blocked_matches_direct(self):
        data = np.random.default_rng(0).standard_normal((157, 5))
        diffs = data[:, None, :] - data[None, :, :]
        distances = np.linalg.norm(diffs, axis=2)
        expected = distances[np.triu_indices(157, k=1)].mean()
        self.assertAlmostEqual(rc.mean_pair_distance(data, block=20), expected, places=10)

    def test_sampled_close_to_exact(self):
        data = np.random.default_rng(1).standard_normal((400, 3))
        exact = rc.mean_pair_distance(data)
        sampled = rc.sampled_pair_distance(data, pairs=200_000, seed=3)
        self.assertAlmostEqual(sampled, exact, delta=0.01 * exact)
        subsampled = rc.normalizers(data, subsample=200_000, seed=3)
        self.assertEqual(subsampled.E_bar, sampled)

    def test_degenerate(self):
        with self.assertRaises(rc.err.DegenerateNormalizerError):
            rc.normalizers([[1.0, 2.0]])
        with self.assertRaises(rc.err.DegenerateNormalizerError):
            rc.normalizers(np.ones((10, 3)))

class TestValidTime(unittest.TestCase):

    def test_never_exceeded(self):
        truth = np.zeros((10, 2))
        self.assertAlmostEqual(rc.valid_time(truth, truth, 1.0, 0.25), 2.5)

    def test_first_exceedance(self):
        truth = np.zeros((10, 1))
        pred = np.zeros((10, 1))
        pred[4:] = 1.0
        # error 1/E_bar = 0.5 > 0.2 from row 4 on
        self.assertAlmostEqual(rc.valid_time(pred, truth, 2.0, 0.25), 1.0)

    def test_immediate(self):
        truth = np.zeros((5, 1))
        self.assertEqual(rc.valid_time(truth + 1.0, truth, 1.0, 0.25), 0.0)

    def test_threshold_is_strict(self):
        truth = np.zeros((4, 1))
        pred = np.full((4, 1), 0.2)
        self.assertAlmostEqual(rc.valid_time(pred, truth, 1.0, 1.0), 4.0)

    def test_truncated_prediction(self):
        truth = np.zeros((10, 1))
        self.assertAlmostEqual(rc.valid_time(np.zeros((3, 1)), truth, 1.0, 0.5), 1.5)

class TestMapError(unittest.TestCase):

    def test_true_trajectory(self):
        pred = np.arange(6.0)[:, None] * np.ones((1, 3))
        errors = rc.map_error_series(pred, shift_map, 1.0)
        self.assertEqual(len(errors), 5)
        self.assertTrue(np.all(errors == 0))

    def test_normalization(self):
        pred = np.zeros((3, 1))
        errors = rc.map_error_series(pred, shift_map, 4.0)
        self.assertTrue(np.allclose(errors, 0.25))

    def test_short(self):
        self.assertEqual(len(rc.map_error_series(np.zeros((1, 2)), shift_map, 1.0)), 0)

    def test_unintegrable_states(self):
        pred = np.zeros((4, 1))
        pred[1] = 1e3
        errors = rc.map_error_series(pred, exploding_map, 1.0)
        self.assertEqual(errors[0], 1e3)
        self.assertEqual(errors[1], np.inf)
        self.assertEqual(errors[2], 0.0)

    def test_ks_true_map(self):
        cfg = rc.KSConfig(transient_time=5.0)
        raw = rc.integrate(cfg, rc.initial_condition(cfg, 0), 30, transient=20)
        transform = rc.StandardizationTransform.fit(raw)
        errors = rc.map_error_series(
            transform.standardize(raw), rc.TrueMap(cfg, transform), 1.0)
        self.assertLess(np.max(errors), 1e-10)

class TestStability(unittest.TestCase):

    def test_classify(self):
        self.assertIs(rc.classify_stability(0.3), rc.Verdict.STABLE)
        self.assertIs(rc.classify_stability(1.0), rc.Verdict.STABLE)
        self.assertIs(rc.classify_stability(1.01), rc.Verdict.UNSTABLE)
        self.assertIs(rc.classify_stability(np.inf), rc.Verdict.UNSTABLE)
        self.assertIs(
            rc.classify_stability(0.1, overflowed=True),
            rc.Verdict.UNSTABLE_OVERFLOW,
            )
        self.assertIs(rc.classify_stability(0.5, cutoff=0.4), rc.Verdict.UNSTABLE)
        self.assertTrue(rc.Verdict.STABLE.is_stable)
        self.assertFalse(rc.Verdict.UNSTABLE_OVERFLOW.is_stable)

    def test_score_prediction(self):
        outputs = np.arange(5.0)[:, None]
        prediction = rc.Prediction(outputs, requested=5, overflowed=False)
        norms = rc.ErrorNormalizers(E_bar=10.0, E_map_bar=2.0)
        record = rc.score_prediction(prediction, outputs, norms, shift_map, 0.5)
        self.assertEqual(record.valid_time, 2.5)
        self.assertEqual(record.mean_map_error, 0.0)
        self.assertIs(record.verdict, rc.Verdict.STABLE)
        self.assertFalse(record.overflowed)

    def test_score_overflow(self):
        outputs = np.zeros((2, 1))
        prediction = rc.Prediction(outputs, requested=5, overflowed=True)
        norms = rc.ErrorNormalizers(E_bar=1.0, E_map_bar=1.0)
        record = rc.score_prediction(prediction, np.zeros((5, 1)), norms, shift_map, 1.0)
        self.assertEqual(record.mean_map_error, np.inf)
        self.assertIs(record.verdict, rc.Verdict.UNSTABLE_OVERFLOW)
        self.assertTrue(record.overflowed)

class TestWelch(unittest.TestCase):

    def test_sinusoid_peak(self):
        dt = 0.25
        frequency = 0.3125
        t = dt * np.arange(8192 * 3)
        psd = rc.welch_psd(np.sin(2 * np.pi * frequency * t), dt, window_len=1024)
        self.assertEqual(len(psd.frequencies), 513)
        peak = psd.frequencies[np.argmax(psd.power)]
        self.assertAlmostEqual(peak, frequency, delta=1 / (1024 * dt))

    def test_white_noise_variance(self):
        dt = 0.5
        x = np.random.default_rng(4).standard_normal(2**16)
        psd = rc.welch_psd(x, dt, window_len=256)
        variance = np.sum(psd.power) * (psd.frequencies[1] - psd.frequencies[0])
        self.assertAlmostEqual(variance, np.var(x), delta=0.05 * np.var(x))

    def test_short_series(self):
        with self.assertRaises(rc.err.SeriesShorterThanWindowError):
            rc.welch_psd(np.zeros(100), 0.25, window_len=128)

    def test_not_one_dimensional(self):
        with self.assertRaises(rc.err.DimensionMismatchError):
            rc.welch_psd(np.zeros((200, 2)), 0.25, window_len=64)


if __name__ == '__main__':
    unittest.main()
