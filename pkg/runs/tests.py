import json
import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.db import DatabaseError
from django.test import SimpleTestCase, TestCase, override_settings

from discretize.formats import read_field
from discretize.graphs import build_graph
from discretize.sampling import grid
from manifolds.catalog import get_manifold

from .exceptions import UnknownSuiteError
from .models import RunLog
from .serializers import CheckConfigSerializer, GraphConfigSerializer, SolveConfigSerializer
from .service import RunService, record_run
from .suites import Check, SuiteContext, available_suites, run_suite

CONSTANT_TWO = json.dumps({'H': {'name': 'linear'}, 'f': {'name': 'constant', 'params': {'value': 2.0}}})


class RunLogTests(TestCase):
    def test_str_carries_status_and_seed(self):
        log = RunLog.objects.create(command='checks', suite='transport', seed=1, status='ok')
        self.assertEqual(str(log), "✅ checks transport (seed 1)")

    def test_ordering_is_newest_first(self):
        first = RunLog.objects.create(command='sample')
        second = RunLog.objects.create(command='graph')
        self.assertEqual(list(RunLog.objects.all()), [second, first])


class RunServiceTests(TestCase):
    def test_record_and_finish(self):
        log = RunService.record('solve', suite='eikonal', config={'n': 10}, seed=3)
        self.assertEqual(log.status, 'running')
        RunService.finish(log, 'ok', max_residual=1e-3, report_path='out/report.json')
        log.refresh_from_db()
        self.assertEqual(log.status, 'ok')
        self.assertEqual(log.report_path, 'out/report.json')
        self.assertIsNotNone(log.finished_at)
        self.assertEqual(log.config, {'n': 10})

    def test_record_run_shortcut(self):
        log = record_run('graph', 'error', error_message="graph is disconnected")
        self.assertEqual(RunLog.objects.get(pk=log.pk).error_message, "graph is disconnected")

    def test_database_errors_are_logged_not_raised(self):
        with mock.patch.object(RunLog.objects, 'create', side_effect=DatabaseError("locked")):
            with self.assertLogs('runs.service', level='ERROR'):
                self.assertIsNone(RunService.record('checks'))
        self.assertIsNone(RunService.finish(None, 'ok'))


class RunConfigTests(SimpleTestCase):
    def test_manifold_is_validated(self):
        serializer = GraphConfigSerializer(data={'manifold': {'name': 'klein-bottle'}, 'n': 10})
        self.assertFalse(serializer.is_valid())
        self.assertIn('manifold', serializer.errors)

    def test_config_json_is_replayable(self):
        serializer = GraphConfigSerializer(data={'manifold': {'name': 'torus', 'dim': 1}, 'n': 10, 'seed': 4})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        config = serializer.config_json()
        self.assertEqual(config['manifold'], {'name': 'torus', 'dim': 1, 'params': {'dim': 1}})
        again = GraphConfigSerializer(data=config)
        self.assertTrue(again.is_valid(), again.errors)
        self.assertEqual(again.config_json(), config)

    def test_format_choices(self):
        serializer = GraphConfigSerializer(data={'manifold': {'name': 'sphere'}, 'format': 'xml'})
        self.assertFalse(serializer.is_valid())
        self.assertIn('format', serializer.errors)

    def test_solve_needs_its_inputs(self):
        eikonal = SolveConfigSerializer(data={'manifold': {'name': 'sphere'}, 'equation': 'eikonal'})
        self.assertFalse(eikonal.is_valid())
        self.assertIn('boundary', eikonal.errors)
        stationary = SolveConfigSerializer(data={'manifold': {'name': 'sphere'}, 'equation': 'stationary'})
        self.assertFalse(stationary.is_valid())
        self.assertIn('hamiltonian', stationary.errors)
        unknown = SolveConfigSerializer(data={'manifold': {'name': 'sphere'}, 'boundary': {'name': 'nowhere'}})
        self.assertFalse(unknown.is_valid())
        no_graph = SolveConfigSerializer(data={'boundary': {'name': 'unit_square'}})
        self.assertFalse(no_graph.is_valid())

    def test_suite_names(self):
        self.assertTrue(CheckConfigSerializer(data={'suite': 'Transport'}).is_valid())
        self.assertTrue(CheckConfigSerializer(data={'suite': 'all'}).is_valid())
        self.assertFalse(CheckConfigSerializer(data={'suite': 'geometry'}).is_valid())


class SuiteTests(SimpleTestCase):
    def test_catalog(self):
        self.assertEqual(available_suites(), ['transport', 'calculus', 'variational', 'convexity', 'hj'])

    def test_unknown_suite(self):
        with self.assertRaises(UnknownSuiteError):
            run_suite('geometry')

    def test_check_verdicts(self):
        self.assertTrue(Check('a', 0.0, 0.0).passed)
        self.assertFalse(Check('b', 1e-7, 1e-8).passed)
        self.assertFalse(Check('c', math.inf, math.inf).passed)
        self.assertFalse(Check('d', math.nan, 1.0).passed)

    def test_context_tolerance(self):
        self.assertEqual(SuiteContext().scaled(1e-6), 1e-6)
        self.assertEqual(SuiteContext(tol=0.0).scaled(1e-6), 0.0)
        a, b = SuiteContext(seed=5).rng(2), SuiteContext(seed=5).rng(2)
        self.assertEqual(a.integers(1 << 30), b.integers(1 << 30))

    def test_transport_suite_report(self):
        report = run_suite('transport', seed=1)
        self.assertTrue(report['passed'], report['failures'])
        self.assertIsNone(report['first_failure'])
        names = [check['name'] for check in report['checks']]
        self.assertIn('round_trip[sphere]', names)
        self.assertIn('holonomy_angle', names)
        self.assertLessEqual(report['max_residual'], 1e-3)

    def test_zero_tolerance_fails_transport(self):
        report = run_suite('transport', seed=1, tol=0.0)
        self.assertFalse(report['passed'])
        self.assertTrue(report['first_failure'].startswith('transport.'))


class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        numerics = {**settings.NUMERICS, 'OUTPUT_DIR': self.dir}
        patcher = override_settings(NUMERICS=numerics)
        patcher.enable()
        self.addCleanup(patcher.disable)

    def call(self, *args):
        out = StringIO()
        call_command(*args, stdout=out)
        return out.getvalue()

    def call_failing(self, *args):
        out = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command(*args, stdout=out)
        return ctx.exception, out.getvalue()


class SampleCommandTests(CommandTestCase):
    def test_sample_is_deterministic(self):
        first, second = self.dir / 'a.csv', self.dir / 'b.csv'
        out = self.call('sample', '--manifold', 'sphere', '--n', '1000', '--seed', '7', '--out', str(first))
        self.call('sample', '--manifold', 'sphere', '--n', '1000', '--seed', '7', '--out', str(second))
        self.assertIn("STATUS=ok SUITE=sample MAX_RESIDUAL=0.0", out)
        self.assertEqual(first.read_bytes(), second.read_bytes())
        lines = first.read_text().splitlines()
        self.assertEqual(lines[0], 'vertex_index,x0,x1,x2')
        self.assertEqual(len(lines), 1001)
        self.assertEqual(RunLog.objects.filter(command='sample', status='ok').count(), 2)

    def test_json_format_and_default_path(self):
        self.call('sample', '--manifold', 'torus', '--dim', '1', '--grid', '8', '--format', 'json')
        data = json.loads((self.dir / 'sample.json').read_text())
        self.assertEqual(len(data['points']), 8)
        self.assertEqual(data['method'], 'grid')

    def test_with_graph_prints_the_summary(self):
        out = self.call('sample', '--manifold', 'sphere', '--n', '300', '--seed', '7', '--with-graph', '--k', '8')
        self.assertIn("n=300 k=8", out)
        self.assertIn("connected=True", out)
        self.assertTrue((self.dir / 'sample_graph.json').is_file())

    def test_unknown_manifold_is_an_input_error(self):
        error, out = self.call_failing('sample', '--manifold', 'klein-bottle')
        self.assertEqual(error.returncode, 2)
        self.assertIn("STATUS=error SUITE=sample", out)
        self.assertEqual(RunLog.objects.get().status, 'error')

    def test_grid_on_a_curved_manifold_is_an_input_error(self):
        error, out = self.call_failing('sample', '--manifold', 'sphere', '--grid', '8')
        self.assertEqual(error.returncode, 2)
        self.assertIn("UnsupportedGridError", str(error))
        self.assertIn("STATUS=error SUITE=sample", out)
        self.assertEqual(RunLog.objects.get().status, 'error')

    def test_config_file_overrides_flags(self):
        config = self.dir / 'run.json'
        config.write_text(json.dumps({'manifold': {'name': 'hyperbolic'}, 'n': 5}))
        path = self.dir / 'cloud.csv'
        self.call('sample', '--manifold', 'sphere', '--n', '50', '--config', str(config), '--out', str(path))
        self.assertEqual(len(path.read_text().splitlines()), 6)
        log = RunLog.objects.get()
        self.assertEqual(log.config['manifold']['name'], 'hyperbolic')

    def test_malformed_config_file(self):
        config = self.dir / 'broken.json'
        config.write_text("{not json")
        error, _ = self.call_failing('sample', '--config', str(config))
        self.assertEqual(error.returncode, 2)


class GraphCommandTests(CommandTestCase):
    def test_summary(self):
        out = self.call('graph', '--manifold', 'euclidean', '--grid', '11', '--k', '8')
        self.assertIn("n=121 k=8", out)
        self.assertIn("connected=True", out)
        self.assertTrue((self.dir / 'graph.json').is_file())

    def test_sparse_cloud_is_disconnected(self):
        error, out = self.call_failing('graph', '--manifold', 'sphere', '--n', '200', '--k', '1')
        self.assertEqual(error.returncode, 2)
        self.assertIn("disconnected", str(error))
        self.assertIn("STATUS=error SUITE=graph", out)
        self.assertEqual(RunLog.objects.get().status, 'error')


class SolveCommandTests(CommandTestCase):
    def test_eikonal_on_a_stored_graph(self):
        graph_path = self.dir / 'square.json'
        self.call('graph', '--manifold', 'euclidean', '--grid', '21', '--k', '8', '--out', str(graph_path))
        report_path = self.dir / 'report.json'
        out = self.call('solve', '--graph', str(graph_path), '--boundary', 'unit_square', '--report', str(report_path))
        self.assertIn("STATUS=ok SUITE=eikonal", out)
        report = json.loads(report_path.read_text())
        self.assertLessEqual(report['error_vs_analytic'], 4.0)
        self.assertLessEqual(report['error_over_h'], 4.0)
        self.assertTrue(report['passed'])
        self.assertTrue((self.dir / 'solve.csv').is_file())

    def test_stationary_constant_source(self):
        field_path = self.dir / 'u.csv'
        out = self.call('solve', '--equation', 'stationary', '--manifold', 'torus', '--dim', '1', '--grid', '32',
                        '--k', '2', '--hamiltonian', CONSTANT_TWO, '--out', str(field_path))
        self.assertIn("STATUS=ok SUITE=stationary", out)
        graph = build_graph(grid(get_manifold('torus', dim=1), 32), k=2)
        np.testing.assert_allclose(read_field(field_path, graph).values, 2.0)
        report = json.loads((self.dir / 'solve_report.json').read_text())
        self.assertTrue(report['solve']['converged'])

    def test_missing_boundary(self):
        error, out = self.call_failing('solve', '--manifold', 'sphere', '--n', '100')
        self.assertEqual(error.returncode, 2)
        self.assertIn("boundary", str(error))
        self.assertIn("STATUS=error", out)

    def test_grid_on_the_hyperboloid_is_an_input_error(self):
        error, out = self.call_failing('solve', '--manifold', 'hyperbolic', '--grid', '10')
        self.assertEqual(error.returncode, 2)
        self.assertIn("STATUS=error", out)

    def test_malformed_hamiltonian(self):
        error, _ = self.call_failing('solve', '--equation', 'stationary', '--manifold', 'sphere',
                                     '--hamiltonian', '{"H": {"name": "linear"}')
        self.assertEqual(error.returncode, 2)
        error, _ = self.call_failing('solve', '--equation', 'stationary', '--manifold', 'sphere',
                                     '--hamiltonian', '{"H": {"name": "cubic"}, "f": {"name": "constant"}}')
        self.assertEqual(error.returncode, 2)


class ChecksCommandTests(CommandTestCase):
    def test_transport_passes(self):
        out = self.call('checks', 'transport', '--seed', '1')
        self.assertIn("STATUS=ok SUITE=transport", out)
        report = json.loads((self.dir / 'checks_transport.json').read_text())
        self.assertTrue(report['passed'])
        log = RunLog.objects.get()
        self.assertEqual((log.suite, log.seed, log.status), ('transport', 1, 'ok'))

    def test_zero_tolerance_fails_with_the_assertion_named(self):
        error, out = self.call_failing('checks', '--suite', 'transport', '--tol', '0')
        self.assertEqual(error.returncode, 1)
        self.assertIn("first failing assertion: transport.", str(error))
        self.assertIn("STATUS=fail SUITE=transport", out)

    def test_unknown_suite(self):
        error, out = self.call_failing('checks', 'geometry')
        self.assertEqual(error.returncode, 2)
        self.assertIn("STATUS=error", out)


class PullbackCommandTests(CommandTestCase):
    def test_identity_mode(self):
        out = self.call('pullback_demo', '--mode', 'identity', '--grid', '8')
        self.assertIn("STATUS=ok SUITE=identity", out)
        self.assertIn("Jacobian condition", out)
        report = json.loads((self.dir / 'pullback_identity.json').read_text())
        self.assertEqual(report['identity_gap'], 0.0)
        self.assertAlmostEqual(report['jacobian_condition']['max'], 1.0)
