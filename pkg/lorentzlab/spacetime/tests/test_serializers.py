from django.test import SimpleTestCase

from spacetime.presets import PresetSpec
from spacetime.serializers import PresetSpecSerializer


class PresetSpecSerializerTestCase(SimpleTestCase):

    def test_defaults(self):
        serializer = PresetSpecSerializer(data={'name': 'flat'})

        self.assertTrue(serializer.is_valid(), serializer.errors)
        spec = serializer.save()

        self.assertIsInstance(spec, PresetSpec)
        self.assertEqual(spec.params['dim'], 2)
        self.assertEqual(spec.params['riemannian_amplitude'], 0.0)

    def test_unknown_name(self):
        serializer = PresetSpecSerializer(data={'name': 'kerr'})

        self.assertFalse(serializer.is_valid())
        self.assertIn('name', serializer.errors)

    def test_unknown_parameter(self):
        serializer = PresetSpecSerializer(data={'name': 'flat', 'params': {'mass': 1}})

        self.assertFalse(serializer.is_valid())
        self.assertIn('mass', serializer.errors['params'])

    def test_parameter_of_another_preset(self):
        serializer = PresetSpecSerializer(data={'name': 'flat', 'params': {'rho0': 2}})

        self.assertFalse(serializer.is_valid())
        self.assertIn('rho0', serializer.errors['params'])

    def test_riemannian_amplitude_range(self):
        serializer = PresetSpecSerializer(data={'name': 'flat', 'params': {'riemannian_amplitude': 1.5}})

        self.assertFalse(serializer.is_valid())
        self.assertIn('riemannian_amplitude', serializer.errors['params'])

    def test_perturbation(self):
        data = {'name': 'product_circle', 'params': {'rho0': 1.5, 'perturbation': {'amplitude': 0.1}}}
        serializer = PresetSpecSerializer(data=data)

        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['params']['perturbation'], {'amplitude': 0.1, 'mode': 1})
