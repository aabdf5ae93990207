from rest_framework import serializers

from .cone import conic_hull
from .norms import EUCLIDEAN, SAMPLED, NormModel


class NormSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=[EUCLIDEAN, SAMPLED], default=EUCLIDEAN)
    points = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField()), required=False,
    )

    def validate(self, attrs):
        if attrs['kind'] == SAMPLED and not attrs.get('points'):
            raise serializers.ValidationError({'points': 'Sampled norm requires unit-ball points'})

        return attrs

    def create(self, validated_data):
        if validated_data['kind'] == EUCLIDEAN:
            return NormModel.euclidean()

        return NormModel(kind=SAMPLED, points=validated_data['points'])

    def to_representation(self, instance):
        if isinstance(instance, NormModel):
            return instance.as_dict()

        return super().to_representation(instance)


class ConeSerializer(serializers.Serializer):
    """ JSON record {dim, rays, norm, basis} of a cone """

    dim = serializers.IntegerField(min_value=1)
    rays = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))
    norm = NormSerializer(required=False)
    basis = serializers.CharField(default='standard')

    def validate(self, attrs):
        if any(len(ray) != attrs['dim'] for ray in attrs['rays']):
            raise serializers.ValidationError({'rays': f'Every ray must have {attrs["dim"]} components'})

        return attrs

    def create(self, validated_data):
        norm_data = validated_data.get('norm')
        norm = NormSerializer().create(norm_data) if norm_data else NormModel.euclidean()

        return conic_hull(validated_data['rays'], norm, dim=validated_data['dim'])

    def to_representation(self, instance):
        return {
            'dim': instance.dim,
            'kind': instance.kind,
            'rays': instance.rays.tolist(),
            'norm': instance.norm.as_dict(),
            'basis': 'standard',
            'contains_line': instance.contains_line,
            'is_zero': instance.is_zero,
        }
