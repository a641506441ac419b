"""
Management command to run the property check suites.
Run with: python manage.py checks transport --seed 1
"""
from django.conf import settings

from discretize.formats import write_json
from runs.cli import RunCommand, RunOutcome
from runs.serializers import CheckConfigSerializer
from runs.suites import available_suites, run_suite


class Command(RunCommand):
    help = 'Runs the property check suites (transport, calculus, variational, convexity, hj or all)'
    command_name = 'checks'
    serializer_class = CheckConfigSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('suite_name', nargs='?', help=f"One of: {', '.join(available_suites() + ['all'])}")
        parser.add_argument('--suite', help='Same as the positional suite name')

    def flag_config(self, options):
        suite = options.get('suite') or options.get('suite_name')
        return {'suite': suite} if suite else {}

    def defaults(self):
        return {**super().defaults(), 'suite': 'all'}

    def suite_label(self, config):
        return config['suite']

    def run(self, config):
        report = run_suite(config['suite'], seed=config['seed'], tol=config['tol'],
                           slack=settings.NUMERICS['SLACK_C'])
        path = self.output_path(config, 'report', f"checks_{config['suite']}.json")
        write_json(report, path)

        lines = []
        for check in report['checks']:
            label = f"{check['suite']}.{check['name']}: {check['residual']:.3g} <= {check['threshold']:.3g}"
            if check['passed']:
                lines.append(self.style.SUCCESS(f"  ✅ {label}"))
            else:
                lines.append(self.style.ERROR(f"  ❌ {label}"))
        lines.append(f"  Wrote {path}")
        failure = f"first failing assertion: {report['first_failure']}" if report['first_failure'] else None
        return RunOutcome(passed=report['passed'], max_residual=report['max_residual'], report_path=str(path),
                          failure=failure, lines=lines)
