from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from django.test import SimpleTestCase, override_settings

from core.exceptions import InvalidInput, WindowOverflow
from core.export import read_csv
from curves.worldline import curve_lengths, is_future_pointing
from spacetime.presets import PresetSpec, make_preset

from timesep.maximize import confinement_delta, export_trace, refinement_trace, time_separation
from timesep.oracle import oracle_stencil, time_separation_oracle
from timesep.serializers import MaxPathResultSerializer, TimeSeparationQuerySerializer


def minkowski_separation(p, q) -> float:
    dt, dy = np.subtract(q, p)
    return float(np.sqrt(max(dt ** 2 - dy ** 2, 0.0))) if dt > 0 else 0.0


def causal_pairs(rng, count: int, slope: float = 0.8):
    for _ in range(count):
        p = rng.uniform(-1, 1, size=2)
        dt = rng.uniform(0.5, 2.0)
        yield p, p + np.array([dt, rng.uniform(-slope, slope) * dt])


class TimeSeparationTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))
        cls.conformal = make_preset(PresetSpec('conformal_flat', {'base': 1.0, 'amplitude': 0.5}))

    def test_flat_timelike(self):
        result = time_separation(self.flat, [0, 0], [2, 1], segments=8, restarts=16)

        self.assertAlmostEqual(result.value, np.sqrt(3), delta=0.01 * np.sqrt(3))
        self.assertTrue(is_future_pointing(self.flat, result.path).ok)
        np.testing.assert_allclose(result.path.vertices[[0, -1]], [[0, 0], [2, 1]], atol=1e-6)
        self.assertAlmostEqual(result.value, curve_lengths(self.flat, result.path).lorentzian)

    def test_flat_spacelike(self):
        result = time_separation(self.flat, [0, 0], [1, 2], segments=8, restarts=4)

        self.assertEqual(result.value, 0.0)
        self.assertTrue(result.converged)
        self.assertIsNone(result.path)

    def test_same_point(self):
        self.assertEqual(time_separation(self.flat, [0.3, 0.1], [0.3, 0.1]).value, 0.0)

    def test_invalid_input(self):
        with self.assertRaises(InvalidInput):
            time_separation(self.flat, [0, 0], [2, 1], segments=1)

        with self.assertRaises(InvalidInput):
            time_separation(self.flat, [0, np.nan], [2, 1])

        with self.assertRaises(InvalidInput):
            time_separation(self.flat, [0, 0, 0], [2, 1])

    @override_settings(TIMESEP_MAX_ITERATIONS=60)
    def test_reverse_triangle(self):
        rng = np.random.default_rng(3)

        for _ in range(100):
            p, q = next(causal_pairs(rng, 1))
            r = q + np.array([rng.uniform(0.5, 1.5), 0.0])
            r[1] += rng.uniform(-0.8, 0.8) * (r[0] - q[0])

            first = time_separation(self.flat, p, q, segments=4, restarts=2).value
            second = time_separation(self.flat, q, r, segments=4, restarts=2).value
            total = time_separation(self.flat, p, r, segments=4, restarts=2).value

            self.assertGreaterEqual(total, first + second - 1e-6)

    def test_flat_lattice_equivariance(self):
        p, q, k = np.array([0.1, 0.2]), np.array([1.9, 0.7]), np.array([1.0, -2.0])

        base = time_separation(self.flat, p, q, segments=6, restarts=4)
        shifted = time_separation(self.flat, p + k, q + k, segments=6, restarts=4)

        self.assertAlmostEqual(base.value, shifted.value, delta=1e-6)

    def test_conformal_lattice_equivariance(self):
        p, q, k = np.array([0.1, 0.2]), np.array([1.3, 0.5]), np.array([1.0, 1.0])

        base = time_separation(self.conformal, p, q, segments=6, restarts=4)
        shifted = time_separation(self.conformal, p + k, q + k, segments=6, restarts=4)

        self.assertAlmostEqual(base.value, shifted.value, delta=0.01 * base.value)

    def test_conformal_bounds(self):
        rng = np.random.default_rng(5)

        for p, q in causal_pairs(rng, 5, slope=0.6):
            flat = minkowski_separation(p, q)
            value = time_separation(self.conformal, p, q, segments=6, restarts=3).value

            self.assertGreaterEqual(value, 0.5 * flat - 1e-6)
            self.assertLessEqual(value, 1.5 * flat + 1e-6)

    def test_more_restarts_never_lose(self):
        p, q = [0.0, 0.1], [1.6, 0.4]

        few = time_separation(self.conformal, p, q, segments=6, restarts=2, seed=7)
        many = time_separation(self.conformal, p, q, segments=6, restarts=5, seed=7)

        self.assertGreaterEqual(many.value, few.value - 1e-12)
        self.assertGreaterEqual(many.restarts_used, few.restarts_used)

    def test_refinement_trace(self):
        trace = refinement_trace(self.conformal, [0.0, 0.0], [2.0, 0.5], [2, 4, 8], restarts=2)
        best = [row['best'] for row in trace]

        self.assertEqual([row['segments'] for row in trace], [2, 4, 8])
        self.assertEqual(best, sorted(best))
        self.assertEqual(best[-1], max(row['value'] for row in trace))

        with TemporaryDirectory() as directory:
            header, rows = read_csv(export_trace(trace, Path(directory) / 'trace.csv'))

        self.assertEqual(header, ['segments', 'value', 'best', 'converged'])
        self.assertEqual(len(rows), 3)

    def test_maximizer_confinement(self):
        for m in (self.flat, self.conformal):
            result = time_separation(m, [0.0, 0.0], [2.0, 0.5], segments=6, restarts=3)

            self.assertGreater(confinement_delta(result.path, m), 0.01)

    def test_serializers(self):
        query = TimeSeparationQuerySerializer(data={'pairs': [{'p': [0, 0], 'q': [2, 1]}]})
        self.assertTrue(query.is_valid(), query.errors)
        self.assertEqual(query.validated_data['segments'], 8)

        mismatch = TimeSeparationQuerySerializer(data={'pairs': [{'p': [0, 0], 'q': [2, 1, 0]}]})
        self.assertFalse(mismatch.is_valid())

        result = time_separation(self.flat, [0, 0], [2, 1], segments=2, restarts=1)
        data = MaxPathResultSerializer(result).data

        self.assertEqual(len(data['path']), 3)
        self.assertAlmostEqual(data['value'], np.sqrt(3))


class OracleTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))

    def test_stencil_advances_in_time(self):
        stencil = oracle_stencil(self.flat, 4)

        self.assertTrue(np.all(stencil[:, 0] > 0))
        self.assertIn((2, 1), {tuple(offset) for offset in stencil})

    def test_flat_value(self):
        value = time_separation_oracle(self.flat, [0, 0], [2, 1], resolution=128)
        self.assertAlmostEqual(value, np.sqrt(3), delta=0.02 * np.sqrt(3))

    def test_spacelike(self):
        self.assertEqual(time_separation_oracle(self.flat, [0, 0], [1, 2], resolution=32), 0.0)
        self.assertEqual(time_separation_oracle(self.flat, [0, 0], [-1, 0], resolution=32), 0.0)

    def test_window_overflow(self):
        with self.assertRaises(WindowOverflow) as context:
            time_separation_oracle(self.flat, [0, 0], [10, 0], resolution=16)

        self.assertEqual(context.exception.required, 11)

    def test_agrees_with_maximizer(self):
        rng = np.random.default_rng(11)

        for p, q in causal_pairs(rng, 50, slope=0.5):
            oracle = time_separation_oracle(self.flat, p, q, resolution=128)
            direct = time_separation(self.flat, p, q, segments=4, restarts=2).value

            self.assertAlmostEqual(oracle, direct, delta=0.03 * direct)

    def test_conformal_oracle_is_below_refined(self):
        m = make_preset(PresetSpec('conformal_flat', {'base': 1.0, 'amplitude': 0.3}))
        coarse = time_separation_oracle(m, [0, 0], [1, 0.25], resolution=16)
        fine = time_separation_oracle(m, [0, 0], [1, 0.25], resolution=32)

        self.assertGreater(coarse, 0.0)
        self.assertGreaterEqual(fine, coarse - 1e-4)
