from rest_framework import serializers

from manifolds.serializers import ManifoldSpecSerializer


class ExtendedRealField(serializers.Field):
    """Float or the string "inf" (the +inf sentinel)."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            if data.strip().lower() in ('inf', '+inf'):
                return float('inf')
            raise serializers.ValidationError(f"'{data}' is not a number or \"inf\"")
        try:
            value = float(data)
        except (TypeError, ValueError):
            raise serializers.ValidationError(f"'{data}' is not a number")
        if value != value or value == float('-inf'):
            raise serializers.ValidationError("NaN and -inf are not allowed")
        return value

    def to_representation(self, value):
        return "inf" if value == float('inf') else float(value)


class GraphPayloadSerializer(serializers.Serializer):
    """Graph file {points, edges, lengths, manifold, k, h, seed, method}."""
    manifold = ManifoldSpecSerializer()
    points = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), allow_empty=False)
    edges = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=2, max_length=2))
    lengths = serializers.ListField(child=serializers.FloatField(min_value=0.0))
    k = serializers.IntegerField(min_value=1)
    h = serializers.FloatField(required=False)
    seed = serializers.IntegerField(required=False, default=0)
    method = serializers.CharField(required=False, default="random")

    def validate(self, attrs):
        if len(attrs['edges']) != len(attrs['lengths']):
            raise serializers.ValidationError("edges and lengths must have the same length")
        n = len(attrs['points'])
        if any(j >= n for edge in attrs['edges'] for j in edge):
            raise serializers.ValidationError("edge endpoint out of range")
        return attrs


class FieldPayloadSerializer(serializers.Serializer):
    """JSON mirror of the field CSV: {name, values} with "inf" allowed."""
    name = serializers.CharField(required=False, default="discrete")
    values = serializers.ListField(child=ExtendedRealField(), allow_empty=False)
