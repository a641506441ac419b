"""
Management command to solve the eikonal or a stationary Hamilton-Jacobi equation on a graph.
Run with:
    python manage.py solve --equation eikonal --manifold sphere --n 5000 --boundary northern_hemisphere
    python manage.py solve --equation stationary --manifold torus --dim 1 --grid 64 --k 2 \
        --hamiltonian '{"H": {"name": "linear"}, "f": {"name": "constant", "params": {"value": 2}}}'
"""
import numpy as np
from django.conf import settings

from discretize.formats import read_graph, write_field, write_json
from discretize.regions import get_region, partition
from hj.hamiltonians import build_hamiltonian, eikonal
from hj.solvers import eikonal_solve, stationary_solve
from hj.viscosity import verify_viscosity
from runs.cli import RunCommand, RunOutcome, graph_from_config, parse_json_option
from runs.serializers import SolveConfigSerializer


class Command(RunCommand):
    help = 'Solves ‖du‖ = 1 (eikonal) or u + H(‖du‖) = f (stationary), verifies the result and writes field + report'
    command_name = 'solve'
    serializer_class = SolveConfigSerializer

    def add_run_arguments(self, parser):
        self.add_graph_arguments(parser)
        parser.add_argument('--equation', choices=['eikonal', 'stationary'], help='Equation to solve (default eikonal)')
        parser.add_argument('--graph', help='Graph JSON written by the graph command')
        parser.add_argument('--boundary', help='Region name, or JSON {"name": ..., "params": {...}}')
        parser.add_argument('--hamiltonian', help='Hamiltonian spec as inline JSON or a JSON file')
        parser.add_argument('--order', choices=['coordinate', 'index'], help='Sweep order for stationary solves')

    def flag_config(self, options):
        config = self.graph_flags(options)
        for key in ('equation', 'graph', 'order'):
            if options.get(key):
                config[key] = options[key]
        if options.get('boundary'):
            value = options['boundary']
            config['boundary'] = parse_json_option(value, '--boundary') if value.lstrip().startswith('{') else {'name': value}
        if options.get('hamiltonian'):
            config['hamiltonian'] = parse_json_option(options['hamiltonian'], '--hamiltonian')
        return config

    def suite_label(self, config):
        return config['equation']

    def run(self, config):
        numerics = settings.NUMERICS
        graph = read_graph(config['graph']) if config['graph'] else graph_from_config(config)
        M = graph.manifold
        tol = config['tol'] if config['tol'] is not None else numerics['TOL']
        allowed = numerics['FAIL_FACTOR'] * tol + numerics['SLACK_C'] * graph.h

        region = None
        bands = None
        if config['boundary'] is not None:
            region = get_region(config['boundary']['name'], M, **config['boundary'].get('params', {}))
            bands = partition(graph, region)
        report = {'equation': config['equation'], 'graph': graph.describe(), 'tol': tol}
        failure = None

        if config['equation'] == 'eikonal':
            u = eikonal_solve(graph, bands)
            F = eikonal(M)
            report['boundary'] = bands.describe()
            report['iterations'] = 1
            if region.boundary_distance is not None:
                exact = region.boundary_distance(graph.points[bands.interior])
                error = float(np.abs(u.values[bands.interior] - exact).max())
                report['error_vs_analytic'] = error
                report['error_over_h'] = error / graph.h
        else:
            F = build_hamiltonian(M, config['hamiltonian'])
            u, solve_report = stationary_solve(F, graph, tol=tol, order=config['order'])
            report['hamiltonian'] = F.describe()
            report['solve'] = solve_report.to_json()
            report['iterations'] = solve_report.sweeps
            report['residual'] = solve_report.scheme_residual
            if not solve_report.converged:
                failure = f"stationary solve did not converge in {solve_report.sweeps} sweeps"

        verification = verify_viscosity(u, F, graph, bands=bands, tol=allowed, margin=numerics['MARGIN'])
        report['verification'] = {
            'max_sub': verification.max_sub,
            'max_super': verification.max_super,
            'threshold': allowed,
            'vertices': int(verification.vertices.size),
        }
        if not verification.passed and failure is None:
            failure = f"verification residual {verification.max_residual:.3g} exceeds {allowed:.3g}"
        report['passed'] = failure is None

        fmt = config['format']
        field_path = self.output_path(config, 'out', f"solve.{fmt}")
        report_path = self.output_path(config, 'report', "solve_report.json")
        write_field(u, field_path, fmt)
        write_json(report, report_path)

        lines = [
            f"  {config['equation']} on {M.name}: n={graph.n}, h={graph.h:.4g}",
            f"  max sub residual {verification.max_sub:.3g}, max super residual {verification.max_super:.3g} "
            f"(threshold {allowed:.3g})",
        ]
        if 'error_vs_analytic' in report:
            lines.append(f"  error vs analytic {report['error_vs_analytic']:.4g} ({report['error_over_h']:.2f}·h)")
        lines.append(f"  Wrote {field_path} and {report_path}")
        return RunOutcome(passed=failure is None, max_residual=verification.max_residual, report_path=str(report_path),
                          failure=failure, lines=lines)
