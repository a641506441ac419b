from rest_framework import serializers

from nonsmooth.fields import available_fields

from .hamiltonians import available_profiles, get_profile
from .exceptions import HamiltonianError


class NamedSpecSerializer(serializers.Serializer):
    name = serializers.CharField()
    params = serializers.DictField(required=False, default=dict)


class HamiltonianSpecSerializer(serializers.Serializer):
    """
    Hamiltonian spec {tag, H: {name, params}, f: {name, params}, A, discount}.

    H names a profile (linear | piecewise | power) and f a catalog field.
    """
    tag = serializers.ChoiceField(choices=['norm_based'], default='norm_based')
    H = NamedSpecSerializer()
    f = NamedSpecSerializer()
    A = serializers.FloatField(required=False, allow_null=True, min_value=0.0, default=None)
    discount = serializers.FloatField(required=False, default=1.0, min_value=0.0, max_value=1.0)

    def validate_H(self, value):
        if value['name'] not in available_profiles():
            raise serializers.ValidationError(
                f"Unknown profile '{value['name']}'. Choose one of: {', '.join(available_profiles())}"
            )
        try:
            get_profile(value['name'], **value.get('params', {}))
        except (TypeError, HamiltonianError) as exc:
            raise serializers.ValidationError(str(exc))
        return value

    def validate_f(self, value):
        if value['name'] not in available_fields():
            raise serializers.ValidationError(
                f"Unknown field '{value['name']}'. Choose one of: {', '.join(available_fields())}"
            )
        return value
