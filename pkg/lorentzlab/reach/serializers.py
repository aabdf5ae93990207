from rest_framework import serializers


class ReachQuerySerializer(serializers.Serializer):
    x = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=3)
    window = serializers.IntegerField(min_value=1, required=False)
    resolution = serializers.IntegerField(min_value=16, required=False)
    margin = serializers.FloatField(min_value=0, default=0.0)
    past = serializers.BooleanField(default=False)
    slice_time = serializers.FloatField(required=False, allow_null=True, default=None)


class ViciousnessQuerySerializer(serializers.Serializer):
    resolution = serializers.IntegerField(min_value=16, required=False)
    window = serializers.IntegerField(min_value=1, required=False)
    margin = serializers.FloatField(min_value=0, required=False)
    fill = serializers.BooleanField(default=False)


class FrakQuerySerializer(serializers.Serializer):
    hs = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(), min_length=2, max_length=3),
        allow_empty=False,
    )
    resolution = serializers.IntegerField(min_value=16, required=False)
    window = serializers.IntegerField(min_value=1, required=False)

    def validate_hs(self, value):
        if len({len(h) for h in value}) > 1:
            raise serializers.ValidationError('Lattice classes must share one dimension')

        return value
