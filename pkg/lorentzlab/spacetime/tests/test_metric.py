import numpy as np
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings
from hypothesis import strategies as st

from core.exceptions import ConstructionError, InvalidInput

from spacetime.metric import (
    FUTURE, NULL, TIMELIKE, MetricField, causal_character, cone_rays, epsilon_timecone_member,
    future_causal, null_directions,
)
from spacetime.presets import PresetSpec, check_signature, make_preset

coordinate = st.floats(min_value=-20, max_value=20, allow_nan=False)


class PresetTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))
        cls.conformal = make_preset(PresetSpec('conformal_flat', {'base': 1.0, 'amplitude': 0.5}))
        cls.product = make_preset(PresetSpec('product_circle', {'rho0': 2.0}))
        cls.e1 = make_preset(PresetSpec('e1_counterexample'))

    def test_flat_is_minkowski(self):
        np.testing.assert_array_equal(self.flat.metric([0.3, 0.7]), np.diag([-1.0, 1.0]))

    def test_e1_slab_metric(self):
        # -dy dz + dx^2
        expected = np.array([[1, 0, 0], [0, 0, -0.5], [0, -0.5, 0]])

        for y, z in ((0.0, 0.0), (1.3, 5.9), (-2.0, 11.0)):
            np.testing.assert_allclose(self.e1.metric([2.0, y, z]), expected, atol=1e-15)
            np.testing.assert_allclose(self.e1.metric([2.2, y, z]), expected, atol=1e-15)

    def test_e1_vertical_direction_timelike_at_origin_band(self):
        self.assertEqual(causal_character(self.e1, [0.0, 0.0, 0.0], [0, 0, 1]), (TIMELIKE, FUTURE))

    def test_periodicity(self):
        rng = np.random.default_rng(5)

        for m in (self.flat, self.conformal, self.product, self.e1):
            points = rng.uniform(-3, 3, size=(200, m.dim))
            shifts = rng.integers(-3, 4, size=(200, m.dim)) * m.periods

            np.testing.assert_allclose(m.metric(points + shifts), m.metric(points), atol=1e-10)

    def test_invalid_conformal_factor(self):
        with self.assertRaises(InvalidInput):
            make_preset(PresetSpec('conformal_flat', {'base': 0.2, 'amplitude': 0.5}))

    def test_invalid_circle_profile(self):
        with self.assertRaises(InvalidInput):
            make_preset(PresetSpec('product_circle', {'rho0': 0.5, 'rho1': 1.0}))

    def test_unknown_preset(self):
        with self.assertRaises(InvalidInput):
            make_preset({'name': 'schwarzschild'})

    def test_signature_failure_reports_point(self):
        riemannian = MetricField(
            name='riemannian', dim=2, periods=[1, 1], time_axis=0,
            metric_fn=lambda points: np.broadcast_to(np.eye(2), (len(points), 2, 2)),
            orientation_fn=lambda points: np.tile([1.0, 0.0], (len(points), 1)),
        )

        with self.assertRaises(ConstructionError) as context:
            check_signature(riemannian, np.array([[0.25, 0.5]]))

        self.assertEqual(context.exception.point, [0.25, 0.5])

    def test_riemannian_factor(self):
        m = make_preset(PresetSpec('flat', {'riemannian_amplitude': 0.5}))

        self.assertFalse(m.riemannian_identity)
        np.testing.assert_allclose(m.riemannian([0.0, 0.25]), 2.25 * np.eye(2))

    def test_perturbation_keeps_signature(self):
        m = make_preset(PresetSpec('flat', {'perturbation': {'amplitude': 0.3, 'mode': 2}}))

        self.assertTrue(m.time_dependent)
        self.assertAlmostEqual(m.metric([0.25, 0.25])[0, 1], 0.3)

    @override_settings(E1_CHECK_RESOLUTION=16)
    def test_e1_width(self):
        narrow = make_preset(PresetSpec('e1_counterexample', {'width': 0.2}))
        wide = make_preset(PresetSpec('e1_counterexample'))

        self.assertEqual(wide.metric([1.2, 0, 0])[0, 2], 0.5)
        self.assertTrue(0.45 < narrow.metric([1.2, 0, 0])[0, 2] < 0.5)

        with self.assertRaises(InvalidInput):
            make_preset(PresetSpec('e1_counterexample', {'width': 0.8}))


class CausalCharacterTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))
        cls.conformal = make_preset(PresetSpec('conformal_flat', {'base': 1.0, 'amplitude': 0.5}))
        cls.e1 = make_preset(PresetSpec('e1_counterexample'))

    def test_flat_examples(self):
        self.assertEqual(causal_character(self.flat, [0, 0], [1, 0]), (TIMELIKE, FUTURE))
        self.assertEqual(causal_character(self.flat, [0, 0], [1, 1]), (NULL, FUTURE))
        self.assertEqual(causal_character(self.flat, [0, 0], [-1, 0]), (TIMELIKE, 'past'))
        self.assertEqual(causal_character(self.flat, [0, 0], [0, 1]), ('spacelike', 'none'))

    def test_e1_slab_direction(self):
        character = causal_character(self.e1, [2.0, 0.4, 1.1], [0, 1, 0])
        self.assertEqual(character, (NULL, FUTURE))

    def test_conformal_invariance(self):
        rng = np.random.default_rng(9)
        points = rng.uniform(0, 1, size=(10000, 2))
        vectors = rng.normal(size=(10000, 2))

        flat = self.flat.quad(points, vectors)
        conformal = self.conformal.quad(points, vectors)
        clear = np.abs(flat) > 1e-9

        np.testing.assert_array_equal(np.sign(flat[clear]), np.sign(conformal[clear]))

    @given(coordinate, coordinate, st.integers(-5, 5), st.integers(-5, 5))
    def test_periodic_classification(self, t, x, k, j):
        vector = [1.0, 0.3]

        self.assertEqual(
            causal_character(self.conformal, [t, x], vector),
            causal_character(self.conformal, [t + k, x + j], vector),
        )


class ConeRaysTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))
        cls.conformal = make_preset(PresetSpec('conformal_flat', {'base': 1.0, 'amplitude': 0.5}))
        cls.product = make_preset(PresetSpec('product_circle', {'rho0': 2.0}))
        cls.e1 = make_preset(PresetSpec('e1_counterexample'))

    def test_flat_null_rays(self):
        rays = cone_rays(self.flat, [0.1, 0.2], 8)
        nulls = rays.rays[rays.null]

        np.testing.assert_allclose(np.abs(nulls[:, 1] / nulls[:, 0]), 1.0, atol=1e-9)
        self.assertEqual(len(rays.rays), 8)

    def test_product_null_rays(self):
        nulls = null_directions(self.product, [0.0, 0.3], 2)

        np.testing.assert_allclose(sorted(nulls[:, 1] / nulls[:, 0]), [-0.5, 0.5], atol=1e-9)

    def test_conformal_null_rays_match_flat(self):
        for point in ([0.1, 0.2], [0.6, 0.35], [0.9, 0.9]):
            conformal = null_directions(self.conformal, point, 2)
            flat = null_directions(self.flat, point, 2)

            np.testing.assert_allclose(
                conformal[np.argsort(conformal[:, 1])], flat[np.argsort(flat[:, 1])], atol=1e-9,
            )

    def test_rays_are_future_causal(self):
        for m, point in ((self.flat, [0, 0]), (self.product, [0.5, 0.5]), (self.e1, [1.6, 0.0, 0.0])):
            rays = cone_rays(m, point, 24)
            points = np.broadcast_to(point, rays.rays.shape)

            self.assertTrue(np.all(m.pair(points, rays.rays, m.orientation(points)) < 0))
            self.assertTrue(np.all(np.abs(m.quad(points, rays.rays[rays.null])) <= 1e-6))
            self.assertTrue(np.all(future_causal(m, points, rays.rays)))

    def test_e1_kernel_of_dz_is_spacelike_off_bands(self):
        for x in np.concatenate([np.linspace(0, 1.7, 12), np.linspace(2.3, 4.7, 12), np.linspace(5.3, 7, 12)]):
            rays = cone_rays(self.e1, [x, 0.0, 0.0], 24).rays
            self.assertTrue(np.all(rays[:, 2] > 1e-9), x)

    def test_fiberwise_convexity(self):
        point = [1.3, 2.0, 0.5]
        rays = cone_rays(self.e1, point, 30).rays
        midpoints = (rays[:, None, :] + rays[None, :, :]).reshape(-1, 3) / 2

        self.assertTrue(np.all(future_causal(self.e1, np.broadcast_to(point, midpoints.shape), midpoints)))

    def test_too_few_rays(self):
        with self.assertRaises(InvalidInput):
            cone_rays(self.flat, [0, 0], 3)


class EpsilonTimeconeTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))

    def test_examples(self):
        self.assertTrue(epsilon_timecone_member(self.flat, [0, 0], [1, 0], 0.5))
        self.assertFalse(epsilon_timecone_member(self.flat, [0, 0], [1, 0], 0.71))
        self.assertFalse(epsilon_timecone_member(self.flat, [0, 0], [1, 1], 1e-3))
        self.assertFalse(epsilon_timecone_member(self.flat, [0, 0], [-1, 0], 0.1))

    @hypothesis_settings(deadline=None)
    @given(st.floats(0.01, 10), st.floats(-10, 10), st.floats(0, 0.7))
    def test_homogeneity(self, t, x, eps):
        self.assertEqual(
            epsilon_timecone_member(self.flat, [0, 0], [t, x], eps),
            epsilon_timecone_member(self.flat, [0, 0], [2 * t, 2 * x], eps),
        )
