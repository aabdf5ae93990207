import numpy as np
from django.conf import settings
from rest_framework import serializers

from stable.serializers import BudgetSerializer


class CovectorField(serializers.ListField):
    def __init__(self, **kwargs):
        super().__init__(child=serializers.FloatField(), min_length=2, max_length=3, **kwargs)

    def to_internal_value(self, data):
        value = super().to_internal_value(data)

        if not np.any(value):
            raise serializers.ValidationError('Covector must be nonzero')

        return value


class CertifyQuerySerializer(serializers.Serializer):
    budget = BudgetSerializer(required=False)
    seed = serializers.IntegerField(min_value=0, default=0)
    resolution = serializers.IntegerField(min_value=16, required=False)
    window = serializers.IntegerField(min_value=1, required=False)
    form_resolution = serializers.IntegerField(min_value=2, required=False)
    chains = serializers.IntegerField(min_value=0, default=100)


class PerturbationQuerySerializer(CertifyQuerySerializer):
    amplitude = serializers.FloatField(min_value=0, default=0.05)
    mode = serializers.IntegerField(min_value=1, default=1)


class FormQuerySerializer(serializers.Serializer):
    alpha = CovectorField()
    resolution = serializers.IntegerField(min_value=2, required=False)
    chains = serializers.IntegerField(min_value=0, default=100)
    seed = serializers.IntegerField(min_value=0, default=0)


class SctpQuerySerializer(serializers.Serializer):
    alpha = CovectorField()
    resolution = serializers.IntegerField(min_value=16, required=False)
    window = serializers.IntegerField(min_value=2, default=3)


class LipschitzQuerySerializer(serializers.Serializer):
    eps = serializers.FloatField(min_value=0, default=0.2)
    samples = serializers.IntegerField(min_value=1, default=1000)
    seed = serializers.IntegerField(min_value=0, default=0)
    segments = serializers.IntegerField(min_value=2, required=False)
    restarts = serializers.IntegerField(min_value=1, required=False)
    budget = BudgetSerializer(required=False)

    def validate_eps(self, value):
        if value <= 0:
            raise serializers.ValidationError('eps must be positive')

        return value

    def validate(self, attrs):
        attrs.setdefault('segments', settings.LIPSCHITZ_SEGMENTS)
        attrs.setdefault('restarts', settings.LIPSCHITZ_RESTARTS)
        return attrs
