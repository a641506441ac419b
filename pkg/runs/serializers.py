import json
from pathlib import Path

from rest_framework import serializers

from discretize.regions import available_regions
from hj.serializers import HamiltonianSpecSerializer, NamedSpecSerializer
from hj.solvers import SWEEP_ORDERS
from manifolds.serializers import ManifoldSpecSerializer

from .suites import available_suites

FORMAT_CHOICES = ['csv', 'json']


class RunConfigSerializer(serializers.Serializer):
    """
    RunConfig {manifold, n, k, m, seed, tol, out, format, report, options}.

    `m` asks for a regular grid with m nodes per axis instead of a random
    sample of n points. `tol` stays null when the command should use its
    own default.
    """
    manifold = ManifoldSpecSerializer(required=False)
    n = serializers.IntegerField(min_value=1, required=False)
    k = serializers.IntegerField(min_value=1, required=False)
    m = serializers.IntegerField(min_value=2, required=False, allow_null=True, default=None)
    seed = serializers.IntegerField(min_value=0, required=False, default=0)
    tol = serializers.FloatField(min_value=0.0, required=False, allow_null=True, default=None)
    out = serializers.CharField(required=False, allow_blank=True, default='')
    format = serializers.ChoiceField(choices=FORMAT_CHOICES, required=False, default='csv')
    report = serializers.CharField(required=False, allow_blank=True, default='')
    options = serializers.DictField(required=False, default=dict)

    def config_json(self):
        """Validated config with the manifold reduced to its spec; JSON-safe and replayable."""
        data = dict(self.validated_data)
        spec = data.get('manifold')
        if spec is not None:
            data['manifold'] = {'name': spec['name'], 'dim': spec['manifold'].dim, 'params': spec['params']}
        return json.loads(json.dumps(data, default=str))


class GraphConfigSerializer(RunConfigSerializer):
    manifold = ManifoldSpecSerializer()


class SolveConfigSerializer(GraphConfigSerializer):
    """
    Solve config: the graph comes from `graph` (a graph JSON file) or is
    built from the manifold, n/m and k. Eikonal runs need a `boundary`
    region, stationary runs a `hamiltonian` spec.
    """
    manifold = ManifoldSpecSerializer(required=False)
    equation = serializers.ChoiceField(choices=['eikonal', 'stationary'], required=False, default='eikonal')
    graph = serializers.CharField(required=False, allow_blank=True, default='')
    boundary = NamedSpecSerializer(required=False, allow_null=True, default=None)
    hamiltonian = HamiltonianSpecSerializer(required=False, allow_null=True, default=None)
    order = serializers.ChoiceField(choices=list(SWEEP_ORDERS), required=False, default='coordinate')

    def validate_boundary(self, value):
        if value is not None and value['name'] not in available_regions():
            raise serializers.ValidationError(
                f"Unknown region '{value['name']}'. Choose one of: {', '.join(available_regions())}"
            )
        return value

    def validate_graph(self, value):
        if value and not Path(value).is_file():
            raise serializers.ValidationError(f"graph file {value} does not exist")
        return value

    def validate(self, attrs):
        if not attrs.get('graph') and attrs.get('manifold') is None:
            raise serializers.ValidationError({'manifold': "give a manifold or a graph file"})
        if attrs['equation'] == 'eikonal' and attrs.get('boundary') is None:
            raise serializers.ValidationError({'boundary': "the eikonal equation needs a boundary region"})
        if attrs['equation'] == 'stationary' and attrs.get('hamiltonian') is None:
            raise serializers.ValidationError({'hamiltonian': "the stationary equation needs a hamiltonian spec"})
        return attrs


class CheckConfigSerializer(RunConfigSerializer):
    suite = serializers.CharField()

    def validate_suite(self, value):
        value = value.strip().lower()
        choices = available_suites() + ['all']
        if value not in choices:
            raise serializers.ValidationError(f"Unknown suite '{value}'. Choose one of: {', '.join(choices)}")
        return value


class PullbackConfigSerializer(RunConfigSerializer):
    mode = serializers.ChoiceField(choices=['funnel', 'identity'], required=False, default='funnel')
    m = serializers.IntegerField(min_value=4, required=False, default=12)
