"""
Shared plumbing for the run commands.

Flags and an optional --config JSON file (whose keys win) are merged over
settings.NUMERICS defaults and validated by the command's serializer. Every
run is recorded in the ledger and ends with one machine-readable line

    STATUS=<ok|fail|error> SUITE=<name> MAX_RESIDUAL=<float>

Exit codes: 0 pass, 1 assertion or verification failure, 2 input error.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from discretize.exceptions import DiscretizationError
from discretize.graphs import build_graph
from discretize.sampling import grid, sample
from hj.exceptions import HamiltonianError
from manifolds.exceptions import GeometryError
from nonsmooth.exceptions import NonsmoothError

from .exceptions import ConfigError, RunError
from .service import RunService, record_run

logger = logging.getLogger(__name__)

INPUT_ERRORS = (GeometryError, DiscretizationError, NonsmoothError, HamiltonianError, RunError)
COMMON_FLAGS = ('seed', 'tol', 'out', 'format', 'report')


@dataclass
class RunOutcome:
    passed: bool
    max_residual: float = 0.0
    report_path: str = ''
    failure: str = None
    lines: list = field(default_factory=list)


def parse_json_option(value, flag):
    """A flag holding inline JSON or the path of a JSON file."""
    text = value.strip()
    if not text.startswith(('{', '[')):
        try:
            text = Path(value).read_text()
        except OSError as exc:
            raise ConfigError(f"{flag}: cannot read {value}: {exc}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{flag}: invalid JSON ({exc})")


def cloud_from_config(config):
    """Grid with m nodes per axis when `m` is set, otherwise a seeded random sample of n points."""
    manifold = config['manifold']['manifold']
    if config.get('m'):
        return grid(manifold, config['m'])
    return sample(manifold, config['n'], seed=config['seed'])


def graph_from_config(config):
    return build_graph(cloud_from_config(config), k=config['k'])


class RunCommand(BaseCommand):
    """Base for the run commands; subclasses set `command_name`, `serializer_class` and implement `run`."""

    command_name = None
    serializer_class = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON file with RunConfig keys; they override the flags')
        parser.add_argument('--seed', type=int, help='Random seed (default NUMERICS SEED)')
        parser.add_argument('--tol', type=float, help='Tolerance; each command documents its default')
        parser.add_argument('--out', help='Output file path')
        parser.add_argument('--format', choices=['csv', 'json'], help='Output format for clouds and fields')
        parser.add_argument('--report', help='Report JSON path')
        self.add_run_arguments(parser)

    def add_run_arguments(self, parser):
        pass

    def add_graph_arguments(self, parser, k=True):
        parser.add_argument('--manifold', help='Catalog manifold name')
        parser.add_argument('--dim', type=int, help='Dimension for euclidean and torus')
        parser.add_argument('--n', type=int, help='Number of random points (default NUMERICS N)')
        parser.add_argument('--grid', type=int, dest='m', help='Use a regular grid with this many nodes per axis')
        if k:
            parser.add_argument('--k', type=int, help='Nearest neighbors per vertex (default NUMERICS K)')

    def graph_flags(self, options):
        config = {}
        if options.get('manifold'):
            config['manifold'] = {'name': options['manifold']}
            if options.get('dim') is not None:
                config['manifold']['dim'] = options['dim']
        for key in ('n', 'm', 'k'):
            if options.get(key) is not None:
                config[key] = options[key]
        return config

    def flag_config(self, options):
        """Config keys set by the command's own flags."""
        return {}

    def defaults(self):
        numerics = settings.NUMERICS
        return {'seed': numerics['SEED'], 'format': numerics['FORMAT'], 'n': numerics['N'], 'k': numerics['K']}

    def suite_label(self, config):
        return self.command_name

    def output_path(self, config, key, filename):
        return Path(config.get(key) or Path(settings.NUMERICS['OUTPUT_DIR']) / filename)

    def run(self, config):
        raise NotImplementedError

    def handle(self, *args, **options):
        raw = {key: options[key] for key in COMMON_FLAGS if options.get(key) is not None}
        try:
            raw.update(self.flag_config(options))
            if options.get('config'):
                loaded = parse_json_option(options['config'], '--config')
                if not isinstance(loaded, dict):
                    raise ConfigError("--config must hold a JSON object")
                raw.update(loaded)
            serializer = self.serializer_class(data={**self.defaults(), **raw})
            if not serializer.is_valid():
                raise ConfigError(f"invalid config: {json.dumps(serializer.errors, default=str)}")
        except ConfigError as e:
            record_run(self.command_name, 'error', config=json.loads(json.dumps(raw, default=str)),
                       error_message=str(e))
            self.stop('error', self.command_name, float('nan'), str(e), returncode=2)

        config = serializer.validated_data
        label = self.suite_label(config)
        log = RunService.record(self.command_name, suite=label, config=serializer.config_json(), seed=config['seed'])
        try:
            outcome = self.run(config)
        except INPUT_ERRORS as e:
            message = f"{type(e).__name__}: {e}"
            logger.error(f"[Runs] {self.command_name} stopped on bad input: {message}")
            RunService.finish(log, 'error', error_message=message)
            self.stop('error', label, float('nan'), message, returncode=2)

        for line in outcome.lines:
            self.stdout.write(line)
        status = 'ok' if outcome.passed else 'fail'
        RunService.finish(log, status, max_residual=outcome.max_residual, report_path=outcome.report_path,
                          error_message=outcome.failure)
        if not outcome.passed:
            self.stop(status, label, outcome.max_residual, outcome.failure or 'verification failed', returncode=1)
        self.status_line(status, label, outcome.max_residual)
        self.stdout.write(self.style.SUCCESS(f"Done! {self.command_name} {label} passed."))

    def status_line(self, status, label, max_residual):
        self.stdout.write(f"STATUS={status} SUITE={label} MAX_RESIDUAL={float(max_residual)!r}")

    def stop(self, status, label, max_residual, message, returncode):
        self.status_line(status, label, max_residual)
        raise CommandError(message, returncode=returncode)
