"""
Management command to sample a point cloud on a catalog manifold.
Run with:
    python manage.py sample --manifold sphere --n 1000 --seed 7
    python manage.py sample --manifold sphere --n 1000 --seed 7 --with-graph --k 8
"""
from discretize.formats import cloud_to_json, graph_to_json, write_cloud_csv, write_json
from discretize.graphs import build_graph
from runs.cli import RunCommand, RunOutcome, cloud_from_config
from runs.serializers import GraphConfigSerializer


class Command(RunCommand):
    help = 'Samples a deterministic point cloud on a catalog manifold and writes it as CSV or JSON'
    command_name = 'sample'
    serializer_class = GraphConfigSerializer

    def add_run_arguments(self, parser):
        self.add_graph_arguments(parser)
        parser.add_argument('--with-graph', action='store_true',
                            help='Also build the k-NN graph, write it next to the cloud and print its summary')

    def flag_config(self, options):
        config = self.graph_flags(options)
        if options.get('with_graph'):
            config['options'] = {'with_graph': True}
        return config

    def run(self, config):
        cloud = cloud_from_config(config)
        fmt = config['format']
        path = self.output_path(config, 'out', f"sample.{fmt}")
        if fmt == 'json':
            write_json(cloud_to_json(cloud), path)
        else:
            write_cloud_csv(cloud, path)
        lines = [
            self.style.SUCCESS(f"  Sampled {len(cloud)} points on {cloud.manifold.name} ({cloud.method}, seed {cloud.seed})"),
            f"  Wrote {path}",
        ]
        if config['options'].get('with_graph'):
            graph = build_graph(cloud, k=config['k'])
            graph_path = path.with_name(f"{path.stem}_graph.json")
            write_json(graph_to_json(graph), graph_path)
            summary = graph.describe()
            lines += [
                f"n={summary['n']} k={summary['k']} edges={summary['edges']} h={summary['h']:.6g} "
                f"connected={summary['connected']}",
                f"  Wrote {graph_path}",
            ]
        return RunOutcome(passed=True, report_path=str(path), lines=lines)
