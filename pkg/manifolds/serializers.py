from rest_framework import serializers

from .catalog import available_manifolds, get_manifold
from .exceptions import UnknownManifoldError


class ManifoldSpecSerializer(serializers.Serializer):
    """
    Manifold spec {name, dim, params, r_M, i_M, c_M}.

    Only name, dim and params are read on input; the radii are echoed back by
    `to_representation` from the built manifold's describe().
    """
    name = serializers.CharField()
    dim = serializers.IntegerField(required=False, min_value=1, max_value=3)
    params = serializers.DictField(required=False, default=dict)

    def validate_name(self, value):
        value = value.strip().lower()
        if value not in available_manifolds():
            raise serializers.ValidationError(
                f"Unknown manifold '{value}'. Choose one of: {', '.join(available_manifolds())}"
            )
        return value

    def validate(self, attrs):
        params = dict(attrs.get('params') or {})
        if attrs.get('dim') is not None and attrs['name'] in ('euclidean', 'torus'):
            params['dim'] = attrs['dim']
        try:
            manifold = get_manifold(attrs['name'], **params)
        except (TypeError, ValueError, UnknownManifoldError) as exc:
            raise serializers.ValidationError({'params': str(exc)})
        if attrs.get('dim') is not None and attrs['dim'] != manifold.dim:
            raise serializers.ValidationError({'dim': f"{manifold.name} has dimension {manifold.dim}"})
        attrs['params'] = params
        attrs['manifold'] = manifold
        return attrs

    def build(self):
        return self.validated_data['manifold']

    def to_representation(self, instance):
        if hasattr(instance, 'describe'):
            return instance.describe()
        return super().to_representation(instance)
