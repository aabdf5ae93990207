import numpy as np
from django.test import SimpleTestCase
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.exceptions import InvalidInput

from cones.norms import NormModel

vectors = arrays(float, 2, elements=st.floats(min_value=-100, max_value=100, allow_nan=False))


class NormModelTestCase(SimpleTestCase):

    def setUp(self):
        angles = np.linspace(0, np.pi, 40, endpoint=False)
        self.ellipse = NormModel.from_values(
            np.stack([np.cos(angles), np.sin(angles)], axis=1),
            np.hypot(np.cos(angles), 2 * np.sin(angles)),
        )

    def test_max_norm(self):
        square = NormModel(kind='sampled', points=[(1, 1), (1, -1)])

        self.assertAlmostEqual(square.norm((3, -2)), 3.0)
        self.assertAlmostEqual(square.dual((1, 0)), 1.0)
        self.assertAlmostEqual(square.dual((1, 1)), 2.0)

    def test_samples_are_unit(self):
        np.testing.assert_allclose(self.ellipse.norms(self.ellipse.points), 1.0, atol=1e-9)

    @given(vectors)
    def test_symmetric(self, vector):
        self.assertAlmostEqual(self.ellipse.norm(vector), self.ellipse.norm(-vector), delta=1e-9)

    @given(vectors, vectors)
    def test_triangle_inequality(self, u, w):
        self.assertLessEqual(
            self.ellipse.norm(u + w), self.ellipse.norm(u) + self.ellipse.norm(w) + 1e-9,
        )

    def test_unknown_kind(self):
        with self.assertRaises(InvalidInput):
            NormModel(kind='taxicab')

    def test_degenerate_samples(self):
        with self.assertRaises(InvalidInput):
            NormModel(kind='sampled', points=[(1, 0)])
