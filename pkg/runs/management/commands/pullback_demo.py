"""
Management command for the funnel-to-cusp pullback example.
Run with: python manage.py pullback_demo [--mode identity]
"""
from discretize.formats import write_json
from hj.pullback import pullback_demo
from runs.cli import RunCommand, RunOutcome
from runs.serializers import PullbackConfigSerializer

DEMO_TOL = 1e-6


class Command(RunCommand):
    help = 'Solves a pulled-back Hamiltonian on the funnel, transfers the solution to the cusp and verifies both sides'
    command_name = 'pullback_demo'
    serializer_class = PullbackConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--mode', choices=['funnel', 'identity'], help='funnel (default) or identity map on the cusp')
        parser.add_argument('--grid', type=int, dest='m', help='Radial grid nodes on the source surface (default 12)')
        parser.add_argument('--k', type=int, help='Nearest neighbors per vertex')

    def flag_config(self, options):
        return {key: options[key] for key in ('mode', 'm', 'k') if options.get(key) is not None}

    def suite_label(self, config):
        return config['mode']

    def run(self, config):
        tol = config['tol'] if config['tol'] is not None else DEMO_TOL
        report = pullback_demo(mode=config['mode'], m=config['m'], k=config['k'], tol=tol)
        path = self.output_path(config, 'report', f"pullback_{config['mode']}.json")
        write_json(report, path)

        conditions = report['jacobian_condition']
        lines = [f"  {report['hamiltonian']['name']} on {report['source']} → {report['target']}"]
        for side in ('source_side', 'target_side'):
            data = report[side]
            lines.append(
                f"  {side}: max sub {data['max_sub']:.3g}, max super {data['max_super']:.3g} "
                f"(threshold {data['threshold']:.3g}, {data['vertices']} vertices)"
            )
        lines.append(f"  Jacobian condition: min {conditions['min']:.3g}, max {conditions['max']:.3g}")
        if 'identity_gap' in report:
            lines.append(f"  identity gap {report['identity_gap']:.3g}")
        lines.append(f"  Wrote {path}")
        return RunOutcome(passed=report['passed'], max_residual=report['max_residual'], report_path=str(path),
                          failure=None if report['passed'] else "pullback verification failed", lines=lines)
