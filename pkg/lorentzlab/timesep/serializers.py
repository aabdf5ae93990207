from django.conf import settings
from rest_framework import serializers


class PointPairSerializer(serializers.Serializer):
    """ One d(p, q) query, batchable from a JSON request file """

    p = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=3)
    q = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=3)

    def validate(self, attrs):
        if len(attrs['p']) != len(attrs['q']):
            raise serializers.ValidationError({'q': 'Endpoints must have the same dimension'})

        return attrs


class TimeSeparationQuerySerializer(serializers.Serializer):
    pairs = PointPairSerializer(many=True, allow_empty=False)
    segments = serializers.IntegerField(min_value=2, required=False)
    restarts = serializers.IntegerField(min_value=1, required=False)
    seed = serializers.IntegerField(min_value=0, default=0)
    oracle_resolution = serializers.IntegerField(min_value=2, required=False, allow_null=True, default=None)
    trace = serializers.ListField(child=serializers.IntegerField(min_value=2), required=False, default=list)

    def validate(self, attrs):
        attrs.setdefault('segments', settings.TIMESEP_SEGMENTS)
        attrs.setdefault('restarts', settings.TIMESEP_RESTARTS)
        return attrs


class MaxPathResultSerializer(serializers.Serializer):
    value = serializers.FloatField()
    restarts_used = serializers.IntegerField()
    converged = serializers.BooleanField()
    projections = serializers.IntegerField()
    path = serializers.SerializerMethodField()

    @staticmethod
    def get_path(instance):
        return None if instance.path is None else instance.path.vertices.tolist()
