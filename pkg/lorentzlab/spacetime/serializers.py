from rest_framework import serializers

from core.export import plain

from .presets import PRESET_SIDS, PresetSpec


class PerturbationSerializer(serializers.Serializer):
    amplitude = serializers.FloatField(default=0.0)
    mode = serializers.IntegerField(min_value=1, default=1)


class PresetParamsSerializer(serializers.Serializer):
    """ Parameters shared by every preset, unknown keys are rejected """

    dim = serializers.ChoiceField(choices=[2, 3], default=2)
    scale = serializers.FloatField(min_value=1e-6, required=False)
    base = serializers.FloatField(required=False)
    amplitude = serializers.FloatField(required=False)
    rho0 = serializers.FloatField(required=False)
    rho1 = serializers.FloatField(required=False)
    width = serializers.FloatField(required=False)
    riemannian_amplitude = serializers.FloatField(min_value=-0.999, max_value=0.999, default=0.0)
    perturbation = PerturbationSerializer(required=False)

    allowed = {
        'flat': {'scale'},
        'conformal_flat': {'base', 'amplitude'},
        'product_circle': {'rho0', 'rho1'},
        'e1_counterexample': {'width'},
    }

    def validate(self, attrs: dict) -> dict:
        name = self.context.get('name')
        unknown = set(self.initial_data) - set(self.fields)

        if unknown:
            raise serializers.ValidationError({sorted(unknown)[0]: 'Unknown parameter'})

        specific = {'scale', 'base', 'amplitude', 'rho0', 'rho1', 'width'}
        misplaced = (set(attrs) & specific) - self.allowed.get(name, specific)

        if misplaced:
            key = sorted(misplaced)[0]
            raise serializers.ValidationError({key: f'Not a parameter of preset {name}'})

        return attrs


class PresetSpecSerializer(serializers.Serializer):
    name = serializers.ChoiceField(choices=PRESET_SIDS)
    params = serializers.DictField(required=False, default=dict)

    def validate(self, attrs: dict) -> dict:
        params = PresetParamsSerializer(data=attrs['params'], context={'name': attrs['name']})

        if not params.is_valid():
            raise serializers.ValidationError({'params': params.errors})

        attrs['params'] = plain(params.validated_data)
        return attrs

    def create(self, validated_data: dict) -> PresetSpec:
        return PresetSpec(validated_data['name'], validated_data['params'])
