from django.conf import settings
from rest_framework import serializers


class BudgetSerializer(serializers.Serializer):
    """ Sampling budget of the stable cone estimate, missing entries come from settings """

    geodesics = serializers.IntegerField(min_value=0, required=False)
    geodesic_length = serializers.FloatField(min_value=0, required=False)
    geodesic_dt = serializers.FloatField(min_value=1e-6, required=False)
    walks = serializers.IntegerField(min_value=0, required=False)
    walk_steps = serializers.IntegerField(min_value=1, required=False)
    walk_step_len = serializers.FloatField(min_value=1e-6, required=False)
    min_length = serializers.FloatField(min_value=0, required=False)
    frak_radius = serializers.IntegerField(min_value=0, required=False)
    distance_samples = serializers.IntegerField(min_value=0, required=False)

    def validate(self, attrs):
        budget = {**settings.STABLE_BUDGET, **attrs}

        if budget['geodesics'] == 0 and budget['walks'] == 0 and budget['frak_radius'] == 0:
            raise serializers.ValidationError({'geodesics': 'At least one sampler must be enabled'})

        return budget


class StableNormQuerySerializer(serializers.Serializer):
    directions = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(), min_length=2, max_length=3),
        required=False,
    )
    n_max = serializers.IntegerField(min_value=8, required=False)
    resolution = serializers.IntegerField(min_value=2, required=False)

    def validate_directions(self, value):
        if any(not any(h) for h in value):
            raise serializers.ValidationError('Directions must be nonzero lattice vectors')

        return value


class ConeQuerySerializer(serializers.Serializer):
    budget = BudgetSerializer(required=False)
    seed = serializers.IntegerField(min_value=0, default=0)
    reverse = serializers.BooleanField(default=False)
    check = serializers.BooleanField(default=True)


class ConeChecksQuerySerializer(ConeQuerySerializer):
    check = serializers.BooleanField(default=False)
    pairs = serializers.IntegerField(min_value=1, default=1000)
    radius = serializers.FloatField(min_value=0, default=1.0)
    ball_pairs = serializers.IntegerField(min_value=1, default=100)
    families = serializers.IntegerField(min_value=1, default=50)
    resolution = serializers.IntegerField(min_value=16, required=False)


class BoundedDistanceQuerySerializer(ConeQuerySerializer):
    check = serializers.BooleanField(default=False)
    samples = serializers.IntegerField(min_value=1, required=False)
    h_range = serializers.ListField(child=serializers.FloatField(min_value=0), min_length=2, max_length=2,
                                    default=[1.0, 2.0])
    resolution = serializers.IntegerField(min_value=16, required=False)
    window = serializers.IntegerField(min_value=1, required=False)

    def validate_h_range(self, value):
        if value[0] >= value[1]:
            raise serializers.ValidationError('Range must be increasing')

        return value


class FrakGrowthQuerySerializer(ConeQuerySerializer):
    check = serializers.BooleanField(default=False)
    hs = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(), min_length=2, max_length=3),
        allow_empty=False,
    )
    n_max = serializers.IntegerField(min_value=2, default=8)
    resolution = serializers.IntegerField(min_value=16, required=False)


class FlowQuerySerializer(ConeQuerySerializer):
    """ vector_field is 'orientation' or a constant vector; rho is checked against a cone estimate """

    vector_field = serializers.JSONField(default='orientation')
    x0 = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=3)
    duration = serializers.FloatField(min_value=0, default=1000.0)
    check = serializers.BooleanField(default=False)
    tol = serializers.FloatField(min_value=0, default=0.02)

    def validate_vector_field(self, value):
        if value == 'orientation':
            return value

        if not isinstance(value, list) or not 2 <= len(value) <= 3:
            raise serializers.ValidationError("Expected 'orientation' or a vector")

        try:
            return [float(item) for item in value]
        except (TypeError, ValueError):
            raise serializers.ValidationError('Vector entries must be numbers')

    def validate_duration(self, value):
        if value <= 0:
            raise serializers.ValidationError('Duration must be positive')

        return value
