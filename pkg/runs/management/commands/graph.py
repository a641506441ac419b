"""
Management command to build the k-nearest-neighbor geodesic graph of a cloud.
Run with: python manage.py graph --manifold sphere --n 1000 --k 8 --seed 7
"""
from discretize.formats import graph_to_json, write_json
from runs.cli import RunCommand, RunOutcome, graph_from_config
from runs.serializers import GraphConfigSerializer


class Command(RunCommand):
    help = 'Samples a cloud, builds its symmetric k-NN geodesic graph and writes it as JSON'
    command_name = 'graph'
    serializer_class = GraphConfigSerializer

    def add_run_arguments(self, parser):
        self.add_graph_arguments(parser)

    def flag_config(self, options):
        return self.graph_flags(options)

    def run(self, config):
        # A disconnected graph raises DisconnectedGraphError: exit 2
        graph = graph_from_config(config)
        path = self.output_path(config, 'out', "graph.json")
        write_json(graph_to_json(graph), path)
        summary = graph.describe()
        return RunOutcome(passed=True, report_path=str(path), lines=[
            f"n={summary['n']} k={summary['k']} edges={summary['edges']} h={summary['h']:.6g} "
            f"connected={summary['connected']}",
            f"  Wrote {path}",
        ])
