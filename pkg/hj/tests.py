import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, strategies as st

import riemann_hj.testing  # noqa: F401
from discretize.fields import DiscreteField
from discretize.graphs import build_graph, graph_distance
from discretize.regions import get_region, partition
from discretize.sampling import grid, sample
from manifolds.catalog import get_manifold
from manifolds.geometry import covector_from_chart_batch
from nonsmooth.calculus import DifferentiableMap, get_map
from nonsmooth.exceptions import PreconditionError
from nonsmooth.fields import get_field

from .comparison import comparison_check, doubling_pair, max_edge_slope, regularity_check
from .exceptions import (
    EmptyBoundaryError, HamiltonianError, NonInvertibleMapError, SearchCapacityError, VerificationPreconditionError,
)
from .hamiltonians import (
    Hamiltonian, LinearProfile, PiecewiseProfile, PowerProfile, build_hamiltonian, eikonal, get_profile,
    norm_hamiltonian,
)
from .modulus import intrinsic_modulus_probe
from .perron import perron_improve, perron_iterate, sup_subsolution_check
from .pullback import funnel_to_cusp, jacobian_conditions, pullback, pullback_demo, push_covectors, transfer_graph
from .serializers import HamiltonianSpecSerializer
from .solvers import eikonal_solve, local_solve, stationary_solve
from .viscosity import vertex_candidates, verify_viscosity


def circle(m):
    return build_graph(grid(get_manifold('torus', dim=1), m), k=2)


def square(m=21):
    return build_graph(grid(get_manifold('euclidean', dim=2), m), k=8)


def stationary(M, source, name=None):
    """u + |du| = source."""
    return norm_hamiltonian(M, LinearProfile(1.0), source, name=name)


def constant(M, value):
    return get_field('constant', M, value=value)


class ProfileTests(SimpleTestCase):
    def test_linear_rejects_negative_slope(self):
        with self.assertRaises(HamiltonianError):
            LinearProfile(-1.0)

    def test_piecewise_extends_last_segment(self):
        H = PiecewiseProfile([0.0, 1.0, 2.0], [0.0, 1.0, 3.0])
        np.testing.assert_allclose(H(np.array([0.5, 1.5, 3.0])), [0.5, 2.0, 5.0])

    def test_piecewise_must_be_nondecreasing(self):
        with self.assertRaises(HamiltonianError):
            PiecewiseProfile([0.0, 1.0], [1.0, 0.0])
        with self.assertRaises(HamiltonianError):
            PiecewiseProfile([0.5, 1.0], [0.0, 1.0])

    def test_power_profile(self):
        self.assertAlmostEqual(float(PowerProfile(2.0, 0.5)(3.0)), 4.5)
        with self.assertRaises(HamiltonianError):
            PowerProfile(0.5)

    def test_unknown_profile(self):
        with self.assertRaises(HamiltonianError):
            get_profile('cubic')


class HamiltonianSpecTests(SimpleTestCase):
    def test_valid_spec_builds(self):
        serializer = HamiltonianSpecSerializer(data={
            'H': {'name': 'linear', 'params': {'slope': 2.0}},
            'f': {'name': 'constant', 'params': {'value': 1.5}},
            'A': 3.0,
        })
        self.assertTrue(serializer.is_valid(), serializer.errors)
        M = get_manifold('sphere')
        F = build_hamiltonian(M, serializer.validated_data)
        self.assertEqual(F.tag, 'norm_based')
        self.assertEqual(F.bound, 3.0)
        self.assertAlmostEqual(float(F.zero_section(np.array([[0.0, 0.0, 1.0]]))[0]), -1.5)

    def test_unknown_profile_rejected(self):
        serializer = HamiltonianSpecSerializer(data={'H': {'name': 'cubic'}, 'f': {'name': 'constant'}})
        self.assertFalse(serializer.is_valid())
        self.assertIn('H', serializer.errors)

    def test_bad_profile_params_rejected(self):
        serializer = HamiltonianSpecSerializer(data={
            'H': {'name': 'piecewise', 'params': {'knots': [1.0, 2.0], 'values': [0.0, 1.0]}},
            'f': {'name': 'constant'},
        })
        self.assertFalse(serializer.is_valid())
        self.assertIn('H', serializer.errors)

    def test_unknown_field_rejected(self):
        serializer = HamiltonianSpecSerializer(data={'H': {'name': 'linear'}, 'f': {'name': 'no-such-field'}})
        self.assertFalse(serializer.is_valid())
        self.assertIn('f', serializer.errors)


class StructureTests(SimpleTestCase):
    def setUp(self):
        self.M = get_manifold('sphere')
        self.X = sample(self.M, 20, seed=4).points

    def test_norm_based_structure_holds(self):
        F = norm_hamiltonian(self.M, PowerProfile(2.0), get_field('height_z', self.M))
        F.check_structure(self.X)

    def test_mislabeled_evaluator_detected(self):
        f = constant(self.M, 0.0)
        F = Hamiltonian(self.M, lambda X, Z: 2.0 * np.linalg.norm(Z, axis=-1), tag='norm_based',
                        profile=LinearProfile(1.0), source=f)
        with self.assertRaises(HamiltonianError):
            F.check_structure(self.X)

    def test_declared_bound_is_checked(self):
        F = stationary(self.M, constant(self.M, 2.0))
        self.assertAlmostEqual(F.zero_section_bound(self.X), 2.0)
        F = norm_hamiltonian(self.M, LinearProfile(1.0), constant(self.M, 2.0), bound=1.0)
        with self.assertRaises(HamiltonianError):
            F.zero_section_bound(self.X)

    def test_eikonal_has_no_discount(self):
        F = eikonal(self.M)
        self.assertEqual(F.discount, 0.0)
        self.assertFalse(F.solvable)


class ModulusTests(SimpleTestCase):
    def test_norm_hamiltonian_modulus_on_sphere(self):
        M = get_manifold('sphere')
        graph = build_graph(sample(M, 200, seed=2), k=6)
        F = stationary(M, constant(M, 0.0))
        table = intrinsic_modulus_probe(F, graph, [0.05, 0.2, 0.5, 2.0], seed=1)
        self.assertEqual(table.skipped, [2.0])
        self.assertEqual(table.deltas.tolist(), [0.05, 0.2, 0.5])
        self.assertTrue(np.all(np.diff(table.omega) >= 0.0))
        # ‖·‖ is 1-Lipschitz and transport is an isometry
        self.assertTrue(np.all(table.omega <= table.deltas * (1.0 + 1e-6)))
        self.assertGreater(table.samples, 0)


class EikonalTests(SimpleTestCase):
    def setUp(self):
        self.graph = square()
        self.bset = partition(self.graph, get_region('unit_square'))
        self.u = eikonal_solve(self.graph, self.bset)

    def test_all_boundary_is_zero(self):
        u = eikonal_solve(self.graph, range(self.graph.n))
        self.assertTrue(np.all(u.values == 0.0))

    def test_empty_boundary(self):
        with self.assertRaises(EmptyBoundaryError):
            eikonal_solve(self.graph, [])

    def test_matches_graph_distance_exactly(self):
        self.assertTrue(np.array_equal(self.u.values, graph_distance(self.graph, self.bset.boundary).values))

    def test_square_distance_to_boundary(self):
        X = self.graph.points[self.bset.interior]
        exact = np.minimum.reduce([X[:, 0], 1.0 - X[:, 0], X[:, 1], 1.0 - X[:, 1]])
        self.assertLessEqual(np.abs(self.u.values[self.bset.interior] - exact).max(), 4 * self.graph.h)

    def test_hemisphere_distance_to_equator(self):
        graph = build_graph(sample(get_manifold('sphere'), 2000, seed=8), k=8)
        region = get_region('northern_hemisphere')
        bset = partition(graph, region)
        u = eikonal_solve(graph, bset)
        error = np.abs(u.values[bset.interior] - region.boundary_distance(graph.points[bset.interior]))
        self.assertLessEqual(error.max(), 3 * graph.h)

    def test_exactly_one_lipschitz(self):
        report = regularity_check(self.u, 1.0)
        self.assertTrue(report['passed'])
        self.assertLessEqual(report['max_slope'], 1.0 + 1e-12)

    def test_viscosity_residuals(self):
        report = verify_viscosity(self.u, eikonal(self.graph.manifold), self.graph, bands=self.bset, tol=1e-4)
        self.assertTrue(report.passed_super)
        self.assertLessEqual(report.max_sub, 1e-4 + 3 * self.graph.h)

    def test_ridge_has_no_classical_derivative(self):
        ridge = int(np.argmin(np.linalg.norm(self.graph.points - [0.3, 0.3], axis=1)))
        candidates = vertex_candidates(self.u, ridge)
        self.assertGreater(candidates.diameter('super'), 0.5)
        smooth = int(np.argmin(np.linalg.norm(self.graph.points - [0.2, 0.5], axis=1)))
        self.assertLess(vertex_candidates(self.u, smooth).diameter('super'), 1e-3)


class ViscosityTests(SimpleTestCase):
    def test_constant_solution(self):
        graph = circle(16)
        F = stationary(graph.manifold, constant(graph.manifold, 1.0))
        u = DiscreteField(graph, np.ones(graph.n), name="one")
        report = verify_viscosity(u, F, tol=1e-5)
        self.assertTrue(report.passed)
        self.assertEqual(report.vertices.size, graph.n)

    def test_high_constant_is_not_a_subsolution(self):
        graph = circle(16)
        F = stationary(graph.manifold, constant(graph.manifold, 1.0))
        report = verify_viscosity(DiscreteField(graph, np.full(graph.n, 3.0)), F, tol=1e-5)
        self.assertFalse(report.passed_sub)
        self.assertTrue(report.passed_super)
        self.assertAlmostEqual(report.max_sub, 2.0, places=4)

    def test_infinite_values_rejected(self):
        graph = circle(8)
        F = stationary(graph.manifold, constant(graph.manifold, 1.0))
        values = np.zeros(graph.n)
        values[3] = np.inf
        with self.assertRaises(VerificationPreconditionError):
            verify_viscosity(DiscreteField(graph, values), F)

    def test_path_endpoints_have_too_few_neighbors(self):
        graph = build_graph(grid(get_manifold('euclidean', dim=1), 6), k=2)
        F = stationary(graph.manifold, constant(graph.manifold, 0.0))
        with self.assertRaises(VerificationPreconditionError):
            verify_viscosity(DiscreteField(graph, np.zeros(graph.n)), F)
        report = verify_viscosity(DiscreteField(graph, np.zeros(graph.n)), F, vertices=range(1, 5), tol=1e-5)
        self.assertTrue(report.passed)


class StationarySolveTests(SimpleTestCase):
    def sine_problem(self, m):
        graph = circle(m)
        return graph, stationary(graph.manifold, get_field('sine', graph.manifold), name="sine")

    def test_constant_source_in_one_sweep(self):
        graph = circle(32)
        u, report = stationary_solve(stationary(graph.manifold, constant(graph.manifold, 2.0)), graph)
        self.assertTrue(report.converged)
        self.assertEqual(report.sweeps, 1)
        np.testing.assert_allclose(u.values, 2.0)

    def test_grid_refinement(self):
        coarse, F = self.sine_problem(64)
        fine, G = self.sine_problem(640)
        u, _ = stationary_solve(F, coarse)
        w, _ = stationary_solve(G, fine)
        self.assertLessEqual(np.abs(u.values - w.values[::10]).max(), 5 * coarse.h)

    def test_sweep_orders_agree(self):
        graph, F = self.sine_problem(64)
        tol = 1e-9
        a, ra = stationary_solve(F, graph, tol=tol, order='coordinate')
        b, rb = stationary_solve(F, graph, tol=tol, order='index')
        self.assertTrue(ra.converged and rb.converged)
        self.assertLessEqual(a.sup_distance(b), 2 * tol)

    def test_bounded_by_source_and_zero_section(self):
        graph, F = self.sine_problem(64)
        u, report = stationary_solve(F, graph)
        self.assertLessEqual(report.sup_norm, report.bound)
        self.assertLessEqual(report.scheme_residual, 1e-8)

    def test_solution_verifies_on_the_circle(self):
        graph, F = self.sine_problem(64)
        u, _ = stationary_solve(F, graph)
        self.assertTrue(verify_viscosity(u, F, tol=1e-5).passed)

    def test_slopes_respect_their_own_bound(self):
        graph, F = self.sine_problem(64)
        u, _ = stationary_solve(F, graph)
        K = max_edge_slope(u)
        self.assertTrue(regularity_check(u, K)['passed'])
        report = regularity_check(u, 0.5 * K)
        self.assertFalse(report['passed'])
        self.assertIn('worst_edge', report)

    def test_non_convergence_is_reported(self):
        graph, F = self.sine_problem(64)
        with self.assertLogs('hj.solvers', level='WARNING'):
            _, report = stationary_solve(F, graph, max_sweeps=1, tol=1e-14)
        self.assertFalse(report.converged)
        self.assertGreater(report.residual, 1e-14)

    def test_eikonal_has_no_stationary_scheme(self):
        graph = circle(8)
        with self.assertRaises(HamiltonianError):
            stationary_solve(eikonal(graph.manifold), graph)

    def test_unknown_sweep_order(self):
        graph, F = self.sine_problem(8)
        with self.assertRaises(HamiltonianError):
            stationary_solve(F, graph, order='random')

    @given(st.integers(min_value=0, max_value=10_000))
    def test_raising_a_neighbor_never_lowers_the_update(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 7))
        u_nbrs = rng.uniform(-3.0, 3.0, k)
        lengths = rng.uniform(0.05, 1.0, k)
        c = float(rng.uniform(-3.0, 3.0))
        raised = u_nbrs.copy()
        raised[int(rng.integers(k))] += float(rng.uniform(0.0, 2.0))
        for profile in (LinearProfile(1.5, 0.2), PowerProfile(2.0)):
            before = local_solve(profile, c, u_nbrs, lengths)
            after = local_solve(profile, c, raised, lengths)
            self.assertGreaterEqual(after, before - 1e-10)


class PerronTests(SimpleTestCase):
    def setUp(self):
        self.graph = circle(12)
        self.F = stationary(self.graph.manifold, constant(self.graph.manifold, 1.0))
        self.low = DiscreteField(self.graph, np.full(self.graph.n, -2.0), name="low")

    def test_lift_on_a_low_constant(self):
        tol = 1e-3
        lifted, flag, info = perron_improve(self.low, self.F, tol=tol)
        self.assertTrue(flag)
        self.assertGreater(lifted.values[info.vertex], self.low.values[info.vertex])
        self.assertTrue(np.all(lifted.values >= self.low.values))
        self.assertTrue(verify_viscosity(lifted, self.F, tol=tol).passed_sub)

    def test_no_lift_on_solver_output(self):
        graph = circle(64)
        F = stationary(graph.manifold, get_field('sine', graph.manifold))
        u, _ = stationary_solve(F, graph)
        result, flag, info = perron_improve(u, F, tol=1e-5)
        self.assertFalse(flag)
        self.assertIs(result, u)
        self.assertTrue(info.reason)

    def test_input_must_be_a_subsolution(self):
        high = DiscreteField(self.graph, np.full(self.graph.n, 3.0))
        with self.assertRaises(VerificationPreconditionError):
            perron_improve(high, self.F, tol=1e-3)

    def test_iterated_lifts_approach_the_solution(self):
        tol = 1e-2
        reference, _ = stationary_solve(self.F, self.graph)
        run = perron_iterate(self.low, self.F, tol=tol, max_lifts=2000, reference=reference)
        self.assertGreater(run.lifts, 0)
        self.assertFalse(run.exhausted)
        self.assertLessEqual(run.reference_distance, 5 * self.graph.h)
        self.assertTrue(verify_viscosity(run.field, self.F, tol=tol).passed_sub)

    def test_sup_of_identical_fields(self):
        report = sup_subsolution_check(self.low, self.low, self.F, tol=1e-5)
        self.assertTrue(report['passed'])
        np.testing.assert_array_equal(report['field'].values, self.low.values)

    def test_sup_of_two_constants(self):
        zero = DiscreteField(self.graph, np.zeros(self.graph.n), name="zero")
        half = DiscreteField(self.graph, np.full(self.graph.n, 0.5), name="half")
        report = sup_subsolution_check(zero, half, self.F, tol=1e-5)
        self.assertTrue(report['passed'])
        np.testing.assert_allclose(report['field'].values, 0.5)

    def test_sup_with_a_lifted_field(self):
        tol = 1e-3
        lifted, _, _ = perron_improve(self.low, self.F, tol=tol)
        other, _, _ = perron_improve(self.low.with_values(self.low.values - 0.5), self.F, tol=tol)
        self.assertTrue(sup_subsolution_check(lifted, other, self.F, tol=tol)['passed'])

    def test_sup_needs_subsolutions(self):
        high = DiscreteField(self.graph, np.full(self.graph.n, 3.0))
        with self.assertRaises(VerificationPreconditionError):
            sup_subsolution_check(self.low, high, self.F)


class ComparisonTests(SimpleTestCase):
    def setUp(self):
        self.graph = circle(64)
        M = self.graph.manifold
        self.F = stationary(M, get_field('sine', M), name="f")
        self.G = stationary(M, get_field('sine', M, offset=1.0), name="f + 1")
        self.u, _ = stationary_solve(self.F, self.graph)
        self.v, _ = stationary_solve(self.G, self.graph)

    def test_same_source(self):
        report = comparison_check(self.u, self.u, self.F, self.F, tol=1e-5)
        self.assertTrue(report['passed'])
        self.assertAlmostEqual(report['min_difference'], 0.0)
        self.assertGreaterEqual(report['margin'], 0.0)

    def test_shifted_source(self):
        tol = 1e-5
        report = comparison_check(self.u, self.v, self.F, self.G, tol=tol)
        self.assertTrue(report['passed'])
        self.assertAlmostEqual(report['inf_g_minus_f'], 1.0)
        self.assertGreaterEqual(report['min_difference'], 1.0 - 2 * tol - 3 * self.graph.h)

    def test_preconditions(self):
        raised = self.u.with_values(self.u.values + 5.0)
        with self.assertRaises(VerificationPreconditionError):
            comparison_check(raised, self.v, self.F, self.G, tol=1e-5)

    def test_doubling_on_the_comparison_pair(self):
        result = doubling_pair(self.u, self.v, 0.1)
        self.assertTrue(result.report['passed'], result.report)
        self.assertEqual(result.x0, result.y0)
        self.assertLess(result.report['gap'], 1e-8)
        self.assertFalse(result.report['degenerate'])

    def test_doubling_on_identical_fields(self):
        result = doubling_pair(self.u, self.u, 0.1)
        self.assertEqual(result.x0, result.y0)
        self.assertTrue(result.report['iii'])
        self.assertAlmostEqual(result.report['inequality_slack'], 0.1)

    def test_doubling_flags_wide_epsilon(self):
        graph = build_graph(grid(get_manifold('euclidean', dim=1, lo=0.0, hi=0.5), 6), k=2)
        u = DiscreteField(graph, np.zeros(graph.n))
        result = doubling_pair(u, u, 0.8)
        self.assertTrue(result.report['degenerate'])
        self.assertTrue(result.report['i'])

    def test_doubling_limits(self):
        with self.assertRaises(SearchCapacityError):
            doubling_pair(self.u, self.v, 0.1, pair_cap=100)
        with self.assertRaises(PreconditionError):
            doubling_pair(self.u, self.v, 2.0)


class PullbackTests(SimpleTestCase):
    def setUp(self):
        self.funnel = get_manifold('funnel')
        self.cusp = get_manifold('cusp')
        self.psi = funnel_to_cusp(self.funnel, self.cusp)
        self.X = sample(self.funnel, 50, seed=6).points

    def test_heights_match(self):
        np.testing.assert_allclose(self.cusp.height(self.psi.apply(self.X)), self.funnel.height(self.X), rtol=1e-12)
        np.testing.assert_allclose(self.psi.inverse(self.psi.apply(self.X)), self.X, atol=1e-12)

    def test_jacobian_against_differences(self):
        step = 1e-6
        J = self.psi.jacobian(self.X)
        for axis in range(2):
            e = np.zeros(2)
            e[axis] = step
            column = (self.psi.apply(self.X + e) - self.psi.apply(self.X - e)) / (2 * step)
            np.testing.assert_allclose(J[:, :, axis], column, atol=1e-6)
        self.assertTrue(np.all(jacobian_conditions(self.psi, self.X) >= 1.0))

    def test_identity_pullback_is_pointwise_equal(self):
        M = get_manifold('sphere')
        F = norm_hamiltonian(M, PowerProfile(2.0), get_field('height_z', M))
        G = pullback(F, get_map('identity', M))
        X = sample(M, 30, seed=3).points
        Z = covector_from_chart_batch(M, X, np.random.default_rng(0).normal(size=(30, 2)))
        np.testing.assert_allclose(G.evaluate(X, Z), F.evaluate(X, Z), atol=1e-12)
        self.assertEqual(G.tag, 'pulled_back')
        self.assertTrue(G.solvable)

    def test_pulled_back_source_is_composed(self):
        F = stationary(self.cusp, get_field('surface_height', self.cusp))
        G = pullback(F, self.psi)
        np.testing.assert_allclose(G.zero_section(self.X), -self.funnel.height(self.X), rtol=1e-12)

    def test_transfer_keeps_edges(self):
        graph = build_graph(grid(self.funnel, 5), k=6)
        moved = transfer_graph(graph, self.psi)
        np.testing.assert_array_equal(moved.edges, graph.edges)
        self.assertEqual(moved.manifold.name, 'cusp')
        self.assertTrue(np.all(np.isfinite(moved.lengths)))

    def test_singular_differential(self):
        line = get_manifold('euclidean', dim=1)
        F = stationary(line, constant(line, 0.0))
        G = pullback(F, get_map('power', line, exponent=1.5))
        with self.assertRaises(NonInvertibleMapError):
            G.evaluate(np.array([[0.0]]), np.array([[1.0]]))

    def test_non_square_differential(self):
        line = get_manifold('euclidean', dim=1)
        plane = get_manifold('euclidean', dim=2)
        embed = DifferentiableMap(line, plane, 'embed', lambda X: np.hstack([X, X]),
                                  lambda X: np.ones((X.shape[0], 2, 1)))
        with self.assertRaises(NonInvertibleMapError):
            push_covectors(embed, np.zeros((1, 1)), np.ones((1, 2)))

    def test_map_starts_on_the_funnel(self):
        with self.assertRaises(NonInvertibleMapError):
            get_map('funnel_to_cusp', self.cusp)

    def test_identity_demo(self):
        report = pullback_demo(mode='identity', m=8)
        self.assertTrue(report['passed'], report)
        self.assertEqual(report['identity_gap'], 0.0)

    def test_funnel_demo(self):
        report = pullback_demo(mode='funnel', m=8)
        self.assertTrue(report['passed'], report)
        self.assertLessEqual(report['source_side']['max_sub'], report['source_side']['threshold'])
        self.assertLessEqual(report['target_side']['max_super'], report['target_side']['threshold'])
        self.assertGreaterEqual(report['jacobian_condition']['min'], 1.0)

    def test_unknown_demo_mode(self):
        with self.assertRaises(NonInvertibleMapError):
            pullback_demo(mode='sphere')
