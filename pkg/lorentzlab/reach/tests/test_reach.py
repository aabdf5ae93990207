from itertools import product

import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy.integrate import solve_ivp

from core.exceptions import InvalidInput, Unavailable
from curves.worldline import is_future_pointing
from spacetime.metric import MetricField
from spacetime.presets import PresetSpec, make_preset

from reach.causality import fill_constant, frak_f, frak_from_source, frak_table, is_vicious, sample_sources
from reach.grid import coprime_stencil, feasible_interval, forward_reach, reach_slice


def one_way_bands() -> MetricField:
    """ -k dt^2 + e dt dx + dx^2 on R^2 / (Z x 4Z), one-way null bands at x = 1 and x = 3 """

    def coefficients(points):
        phase = np.pi * points[:, 1] / 2
        return np.cos(phase) ** 2, np.sin(phase)

    def metric(points):
        k, e = coefficients(points)
        g = np.zeros((len(points), 2, 2))
        g[:, 0, 0] = -k
        g[:, 0, 1] = g[:, 1, 0] = e / 2
        g[:, 1, 1] = 1.0
        return g

    def orientation(points):
        _, e = coefficients(points)
        return np.stack([np.ones(len(points)), -e / 2], axis=1)

    return MetricField(
        name='one_way_bands', dim=2, periods=[1, 4], time_axis=0,
        metric_fn=metric, orientation_fn=orientation, time_dependent=False,
    )


class StencilTestCase(SimpleTestCase):

    def test_one_dimensional(self):
        self.assertEqual(sorted(coprime_stencil(1, 4).ravel().tolist()), [-1, 1])

    def test_two_dimensional(self):
        stencil = {tuple(offset) for offset in coprime_stencil(2, 2)}

        self.assertIn((2, 1), stencil)
        self.assertNotIn((2, 2), stencil)
        self.assertNotIn((0, 2), stencil)
        self.assertEqual(len(stencil), 16)


class FeasibleIntervalTestCase(SimpleTestCase):

    def test_flat_step(self):
        # -dt^2 + 0.25: null at dt = 0.5
        lo, hi = feasible_interval(*(np.array([value]) for value in (-1.0, 0.0, 0.25, -1.0, 0.0)))

        self.assertAlmostEqual(lo[0], 0.5)
        self.assertEqual(hi[0], np.inf)

    def test_null_time_axis(self):
        # a = 0, b < 0, c = 0: the spatial step itself is future null
        lo, _ = feasible_interval(*(np.array([value]) for value in (0.0, -0.5, 0.0, -0.25, -0.5)))
        self.assertEqual(lo[0], 0.0)

    def test_past_step_is_infeasible(self):
        lo, _ = feasible_interval(*(np.array([value]) for value in (0.0, 0.5, 0.0, -0.25, 0.5)))
        self.assertEqual(lo[0], np.inf)


class ForwardReachTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))
        cls.product = make_preset(PresetSpec('product_circle', {'rho0': 1.5, 'rho1': 0.5}))

    def test_flat_matches_light_cone(self):
        grid = forward_reach(self.flat, np.zeros(2), window=2, resolution=64)
        points = grid.points()
        spacing = 1 / 64

        self.assertTrue(np.all(points[:, 0] >= np.abs(points[:, 1]) - 2 * spacing))

        t, y = np.meshgrid(np.arange(-128, 129) * spacing, np.arange(-128, 129) * spacing, indexing='ij')
        candidates = np.stack([t.ravel(), y.ravel()], axis=1)
        inside = candidates[candidates[:, 0] >= np.abs(candidates[:, 1]) + 2 * spacing]

        self.assertTrue(np.all(grid.reached(inside)))

    def test_product_arrival_matches_null_ode(self):
        resolution = 32
        grid = forward_reach(self.product, np.zeros(2), window=2, resolution=resolution)
        oracle = solve_ivp(
            lambda x, t: [1.5 + 0.5 * np.sin(2 * np.pi * x)], (0, 1.5), [0.0],
            dense_output=True, rtol=1e-10, atol=1e-12,
        )

        for y in np.arange(1, 48) / resolution:
            nodes, _ = grid.node_indices(np.array([[y]]))
            self.assertAlmostEqual(grid.arrival[nodes[0]], oracle.sol(y)[0], delta=2 / resolution)

    def test_refinement_nesting(self):
        coarse = forward_reach(self.product, np.zeros(2), window=1, resolution=16)
        fine = forward_reach(self.product, np.zeros(2), window=1, resolution=32)

        for y in np.arange(-16, 17) / 16:
            coarse_node, _ = coarse.node_indices(np.array([[y]]))
            fine_node, _ = fine.node_indices(np.array([[y]]))

            self.assertLessEqual(fine.arrival[fine_node[0]], coarse.arrival[coarse_node[0]] + 1 / 16)

    def test_past_reach(self):
        grid = forward_reach(self.flat, np.zeros(2), window=2, resolution=16, past=True)

        self.assertTrue(grid.reached([-1.0, 0.5])[0])
        self.assertFalse(grid.reached([1.0, 0.0])[0])

    def test_front_grows_with_time(self):
        grid = forward_reach(self.product, np.zeros(2), window=2, resolution=16)
        sizes = [len(reach_slice(grid, t)) for t in np.linspace(0, 3, 7)]

        self.assertEqual(sizes, sorted(sizes))

    def test_chains_are_future_pointing(self):
        flat = forward_reach(self.flat, np.zeros(2), window=2, resolution=16)
        self.assertTrue(is_future_pointing(self.flat, flat.chain([1.5, -0.75])).ok)

        timelike = forward_reach(self.product, np.zeros(2), window=2, resolution=16, margin=0.05)
        chain = timelike.chain([3.0, 1.0])

        self.assertTrue(is_future_pointing(self.product, chain).ok)
        np.testing.assert_allclose(chain.vertices[-1], [3.0, 1.0], atol=1e-9)

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidInput):
            forward_reach(self.flat, np.zeros(2), window=2, resolution=8)

        with self.assertRaises(InvalidInput):
            forward_reach(self.flat, np.array([5.0, 0.0]), window=2, resolution=16)

        grid = forward_reach(self.flat, np.zeros(2), window=1, resolution=16)

        with self.assertRaises(InvalidInput):
            grid.chain([0.0, 0.5])


class ViciousnessTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))
        cls.product = make_preset(PresetSpec('product_circle', {'rho0': 1.5, 'rho1': 0.5}))
        cls.e1 = make_preset(PresetSpec('e1_counterexample'))

    def test_flat_is_vicious(self):
        report = is_vicious(self.flat, resolution=16, window=2)

        self.assertTrue(report.vicious)

        for source in report.sources:
            self.assertIn((2, 1), source.classes)
            self.assertTrue(source.chain)

    def test_product_is_vicious(self):
        self.assertTrue(is_vicious(self.product, resolution=16, window=2).vicious)

    def test_e1_is_not_vicious(self):
        report = is_vicious(self.e1, resolution=16, window=2)
        origin = report.sources[0]

        self.assertFalse(report.vicious)
        self.assertEqual(origin.point, [0.0, 0.0, 0.0])
        self.assertIn((0, 0, 1), origin.classes)
        self.assertFalse(origin.coverage)

    def test_sources_cover_the_fundamental_domain(self):
        sources = sample_sources(self.e1, resolution=2)

        self.assertEqual(sources.shape, (8, 3))
        self.assertEqual(sources[0].tolist(), [0.0, 0.0, 0.0])
        self.assertEqual({tuple(point) for point in sources.tolist()}, set(product((0.0, 3.5), repeat=3)))

    @override_settings(REACH_SOURCE_RESOLUTION=4)
    def test_vicious_only_between_bands(self):
        report = is_vicious(one_way_bands(), resolution=16, window=2)

        self.assertFalse(report.vicious)
        self.assertEqual(len(report.sources), 16)

        for source in report.sources:
            x = source.point[1]

            if x == 2.0:
                self.assertEqual(source.witness, [1, 0])
                self.assertTrue(source.coverage)
            elif x == 0.0:
                self.assertEqual(source.witness, [1, 0])
                self.assertFalse(source.coverage)
            else:
                self.assertIsNone(source.witness)

    def test_fill_constant(self):
        coarse = fill_constant(self.flat, resolution=32, window=2)
        fine = fill_constant(self.flat, resolution=64, window=2)

        self.assertGreaterEqual(coarse, np.sqrt(2) / 2)
        self.assertAlmostEqual(coarse, fine, delta=0.1 * fine)

    def test_fill_constant_unavailable(self):
        with self.assertRaises(Unavailable):
            fill_constant(self.e1, resolution=16, window=2)


class FrakTestCase(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.flat = make_preset(PresetSpec('flat'))

    def test_flat_values(self):
        inside, outside = frak_table(self.flat, [(2, 1), (0, 1)], resolution=32, window=4)

        self.assertEqual(inside.f_of_h, 0.0)
        self.assertAlmostEqual(outside.f_of_h, 1 / np.sqrt(2), delta=2 / 32)
        self.assertFalse(outside.boundary_active)

    def test_lattice_invariance(self):
        base = frak_from_source(self.flat, [0.25, 0.5], (1, 2), resolution=16, window=4)
        shifted = frak_from_source(self.flat, [1.25, -0.5], (1, 2), resolution=16, window=4)

        self.assertAlmostEqual(base.f_of_h, shifted.f_of_h, places=9)

    def test_doubling_is_subadditive(self):
        rng = np.random.default_rng(2)
        hs = [tuple(rng.integers(-3, 4, size=2)) for _ in range(50)]
        results = frak_table(self.flat, hs + [tuple(2 * np.array(h)) for h in hs], resolution=16, window=8)

        for single, double in zip(results[:50], results[50:]):
            self.assertLessEqual(double.f_of_h, 2 * single.f_of_h + 2 / 16)

    def test_riemannian_factor_uses_graph_distance(self):
        m = make_preset(PresetSpec('flat', {'riemannian_amplitude': 0.25}))
        result = frak_f(m, (0, 1), resolution=16, window=4)

        self.assertTrue(0.5 < result.f_of_h < 1.0)
