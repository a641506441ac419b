"""
Property suites run by the `checks` command.

A check function takes a SuiteContext and returns Check rows: a residual
held against a threshold. Tolerance thresholds (`ctx.scaled`) give way to
the run tolerance when one is set; structural thresholds (counts, h-based
bounds, expected verdicts) never do.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from discretize.fields import DiscreteField
from discretize.graphs import build_graph
from discretize.regions import get_region, partition
from discretize.sampling import grid, sample
from hj.comparison import comparison_check, doubling_pair, regularity_check
from hj.hamiltonians import LinearProfile, eikonal, norm_hamiltonian
from hj.perron import perron_improve, sup_subsolution_check
from hj.pullback import pullback_demo
from hj.solvers import eikonal_solve, stationary_solve
from hj.viscosity import verify_viscosity
from manifolds.catalog import get_manifold
from manifolds.geometry import (
    covector_norm_batch, covector_transport, covector_transport_batch, distance_partials, exp_batch, log_batch,
    lower_batch, transport_batch,
)
from manifolds.integrators import integrate_geodesic
from manifolds.types import Point
from nonsmooth.bumps import ball_samples, bump, distances_from, fd_gradient_sup
from nonsmooth.calculus import calculus_suite, fuzzy_sum_search, get_map
from nonsmooth.estimates import estimate_subdifferential
from nonsmooth.fields import ClosedFormField, get_field, negate
from nonsmooth.meanvalue import (
    convexity_check, deville_lipschitz_check, godefroy_check, gradient_bound_check, mean_value_check,
)
from nonsmooth.probes import as_covector, test_subgradient, test_supergradient
from nonsmooth.variational import dgz_perturb, ekeland_search, rolle_search, verify_ekeland

from .exceptions import UnknownSuiteError

logger = logging.getLogger(__name__)

SLACK_C = 3.0
NORTH = np.array([0.0, 0.0, 1.0])
CLOSED_FORM = ('euclidean', 'torus', 'sphere', 'hyperbolic')
SHOOTING = ('cusp', 'funnel')

_SUITE_REGISTRY = {}


def register_check(suite):
    def decorator(func):
        _SUITE_REGISTRY.setdefault(suite, []).append(func)
        return func
    return decorator


def available_suites():
    return list(_SUITE_REGISTRY)


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    threshold: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(math.isfinite(self.residual) and self.residual <= self.threshold)

    def to_json(self):
        return {
            'name': self.name,
            'passed': self.passed,
            'residual': self.residual,
            'threshold': self.threshold,
            'details': self.details,
        }


@dataclass(frozen=True)
class SuiteContext:
    seed: int = 0
    tol: float = None
    slack: float = SLACK_C

    def rng(self, stream=0):
        return np.random.default_rng([self.seed, stream])

    def scaled(self, default):
        return default if self.tol is None else self.tol


def _tangents(M, X, rng, max_norm):
    B = M.tangent_basis(X)
    c = rng.standard_normal((X.shape[0], M.dim))
    c /= np.linalg.norm(c, axis=-1, keepdims=True)
    c *= rng.uniform(0.05, 1.0, size=(X.shape[0], 1)) * max_norm
    return np.einsum('mai,mi->ma', B, c)


def _line(lo=-1.0, hi=1.0):
    return get_manifold('euclidean', dim=1, lo=lo, hi=hi)


def _circle(m):
    return build_graph(grid(get_manifold('torus', dim=1), m), k=2)


def _stationary(M, source, name=None):
    return norm_hamiltonian(M, LinearProfile(1.0), source, name=name)


def _verdict(passed):
    return 0.0 if passed else 1.0


# transport

@register_check('transport')
def round_trip(ctx):
    rows = []
    for stream, name in enumerate(CLOSED_FORM + SHOOTING):
        M = get_manifold(name)
        rng = ctx.rng(stream)
        count = 1000 if M.closed_form else 20
        reach = 0.9 * min(M.r_M, 3.0) if M.closed_form else 0.3
        X = M.sample_points(count, rng)
        V = _tangents(M, X, rng, reach)
        back = log_batch(M, X, exp_batch(M, X, V))
        error = float(np.max(np.linalg.norm(back - V, axis=-1)))
        rows.append(Check(f'round_trip[{name}]', error, ctx.scaled(1e-6), {'samples': count, 'max_norm': reach}))
    return rows


@register_check('transport')
def transport_isometry(ctx):
    rows = []
    for stream, name in enumerate(('torus', 'sphere', 'hyperbolic')):
        M = get_manifold(name)
        rng = ctx.rng(10 + stream)
        X = M.sample_points(1000, rng)
        Y = exp_batch(M, X, _tangents(M, X, rng, 0.8 * min(M.r_M, 2.0)))
        W = _tangents(M, X, rng, 1.0)
        moved = transport_batch(M, X, W, Y)
        isometry = float(np.max(np.abs(np.sqrt(M.inner(Y, moved, moved)) - np.sqrt(M.inner(X, W, W)))))
        Xi = lower_batch(M, Y, _tangents(M, Y, rng, 1.0))
        back = covector_transport_batch(M, X, covector_transport_batch(M, Y, Xi, X), Y)
        inverse = float(np.max(covector_norm_batch(M, Y, back - Xi)))
        rows.append(Check(f'transport_isometry[{name}]', isometry, ctx.scaled(1e-8), {'samples': 1000}))
        rows.append(Check(f'covector_round_trip[{name}]', inverse, ctx.scaled(1e-8), {'samples': 1000}))
    return rows


@register_check('transport')
def octant_holonomy(ctx):
    M = get_manifold('sphere')
    s = math.sqrt(0.5)
    loop = np.array([NORTH, [s, 0.0, s], [1.0, 0.0, 0.0], [s, s, 0.0], [0.0, 1.0, 0.0], [0.0, s, s], NORTH])
    w_closed = np.array([[1.0, 0.0, 0.0]])
    w_ode = w_closed.copy()
    for a, b in zip(loop[:-1], loop[1:]):
        w_closed = transport_batch(M, a[None], w_closed, b[None])
        _, _, w_ode = integrate_geodesic(M, a[None], M.log_closed(a[None], b[None]), W=w_ode)
    angle = math.acos(float(np.clip(w_closed[0] @ [1.0, 0.0, 0.0], -1.0, 1.0)))
    return [
        Check('holonomy_angle', abs(angle - math.pi / 2), ctx.scaled(1e-3), {'angle': angle}),
        Check('holonomy_closed_vs_ode', float(np.max(np.abs(w_closed - w_ode))), ctx.scaled(1e-6)),
    ]


@register_check('transport')
def distance_antisymmetry(ctx):
    rows = []
    for stream, name in enumerate(('torus', 'sphere', 'hyperbolic')):
        M = get_manifold(name)
        rng = ctx.rng(20 + stream)
        X = M.sample_points(100, rng)
        Y = exp_batch(M, X, _tangents(M, X, rng, 0.8 * min(M.r_M, 2.0)))
        worst = 0.0
        for i in range(X.shape[0]):
            x, y = Point(M, X[i]), Point(M, Y[i])
            dx, dy = distance_partials(x, y)
            worst = max(worst, (covector_transport(dy, x) + dx).norm())
        rows.append(Check(f'antisymmetry[{name}]', worst, ctx.scaled(1e-5), {'pairs': int(X.shape[0])}))
    return rows


# calculus

@register_check('calculus')
def abs_subdifferential(ctx):
    M = _line()
    p = Point(M, [0.0])
    est = estimate_subdifferential(get_field('abs', M), p)
    hausdorff = max(abs(float(est.vertices.min()) + 1.0), abs(float(est.vertices.max()) - 1.0))
    grid_zeta = np.linspace(-2.0, 2.0, 41)
    f = get_field('neg_abs', M)
    consistent = [float(z) for z in grid_zeta if test_subgradient(f, p, as_covector(p, np.array([z]))).consistent]
    return [
        Check('abs_subdifferential_hausdorff', hausdorff, 0.02, {'vertices': est.vertices.ravel().tolist()}),
        Check('abs_estimate_nested', _verdict(est.nonempty and est.inner_within_outer()), 0.0),
        Check('neg_abs_has_no_subgradient', float(len(consistent)), 0.0, {'consistent': consistent}),
    ]


@register_check('calculus')
def verdict_antisymmetry(ctx):
    M = _line()
    p = Point(M, [0.0])
    mismatches = []
    for name in ('abs', 'neg_abs', 'sine'):
        f = get_field(name, M)
        for z in np.linspace(-2.0, 2.0, 9):
            c = np.array([z])
            sub = test_subgradient(f, p, as_covector(p, c)).status
            sup = test_supergradient(negate(f), p, as_covector(p, -c)).status
            if sub != sup:
                mismatches.append({'field': name, 'zeta': float(z)})
    return Check('sub_super_antisymmetry', float(len(mismatches)), 0.0, {'mismatches': mismatches})


@register_check('calculus')
def calculus_rules(ctx):
    M = _line()
    p = Point(M, [0.0])
    f = get_field('abs', M)
    sums = calculus_suite(f, f, None, p)
    plane = get_manifold('euclidean', dim=2)
    q = Point(plane, [0.3, 0.4])
    smooth = calculus_suite(get_field('sine', plane, axis=0), get_field('sine', plane, axis=1), get_map('identity', plane),
                            q, include_product=False)
    radii = np.geomspace(0.05, 0.05 / 128, 8)
    root = get_field('power', M, exponent=0.5)
    chain = calculus_suite(root, root, get_map('power', M, exponent=1.5), p, radii_schedule=radii,
                           extra_chain_covectors=[[2.0]])
    return [
        Check('sum_rule_abs', _verdict(sums['status'] == 'ok'), 0.0, {'status': sums['status']}),
        Check('smooth_sum_and_chain', _verdict(smooth['status'] == 'ok'), 0.0, {'status': smooth['status']}),
        Check('chain_rule_strict_inclusion', _verdict(chain['status'] == 'ok' and chain['chain']['strict'] == [[2.0]]),
              0.0, {'strict': chain['chain']['strict']}),
    ]


@register_check('calculus')
def convex_everywhere_subdifferentiable(ctx):
    M = get_manifold('hyperbolic')
    f = get_field('sq_distance', M)
    X = M.sample_points(200, ctx.rng(30))
    empty = [i for i in range(X.shape[0]) if not estimate_subdifferential(f, Point(M, X[i])).nonempty]
    return Check('convex_subdifferential_nonempty', float(len(empty)), 0.0, {'points': int(X.shape[0]), 'empty': empty})


@register_check('calculus')
def fuzzy_sum(ctx):
    M = _line()
    graph = build_graph(grid(M, 41), k=2)
    p = graph.point(20)
    f = get_field('abs', M)
    result = fuzzy_sum_search(f, f, p, as_covector(p, np.array([0.0])), graph, 0.2)
    return Check('fuzzy_sum_found', _verdict(result.status == 'found'), 0.0, result.to_json())


# variational

@register_check('variational')
def ekeland_instances(ctx):
    graph = build_graph(grid(get_manifold('euclidean', dim=2), 40), k=4)
    rng = ctx.rng(40)
    failures = []
    for instance in range(50):
        values = rng.standard_normal(graph.n)
        x0 = int(rng.integers(graph.n))
        eps = float(values.max() - values[x0]) + float(rng.uniform(0.05, 0.5))
        lam = float(rng.uniform(0.1, 3.0))
        field_ = DiscreteField(graph, values, name=f"ekeland[{instance}]")
        verdict = verify_ekeland(field_, ekeland_search(field_, x0, eps, lam))
        if not (verdict['i'] and verdict['ii'] and verdict['iii']):
            failures.append({'instance': instance, **verdict})
    return Check('ekeland_conclusions', float(len(failures)), 0.0, {'instances': 50, 'n': graph.n, 'failures': failures})


@register_check('variational')
def dgz_fixtures(ctx):
    graph = build_graph(grid(get_manifold('euclidean', dim=2), 11), k=4)
    rng = ctx.rng(41)
    failures = []
    for fixture in range(20):
        delta = float(rng.uniform(0.01, 1.0))
        values = rng.standard_normal(graph.n)
        result = dgz_perturb(DiscreteField(graph, values), delta, bump_radius=0.3, fd_samples=500,
                             seed=ctx.seed + fixture)
        if not (result.phi_sup < delta and result.phi_gradient_sup < delta and result.margin > 0.0):
            failures.append({'fixture': fixture, **result.to_json()})
    return Check('dgz_perturbation', float(len(failures)), 0.0, {'fixtures': 20, 'failures': failures})


@register_check('variational')
def bump_bounds(ctx):
    M = get_manifold('sphere')
    p = Point(M, NORTH)
    delta = 0.5
    b = bump(p, delta)
    samples = ball_samples(p, 1.5 * delta, 10_000, seed=ctx.seed)
    outside = distances_from(p, samples) >= delta
    leak = float(np.max(np.abs(b.values_at(samples[outside])), initial=0.0))
    ratio = fd_gradient_sup(b, samples) / b.lipschitz_bound
    return [
        Check('bump_center_value', abs(float(b(p)) - 1.0), 0.0),
        Check('bump_support', leak, 0.0, {'outside_samples': int(np.count_nonzero(outside))}),
        Check('bump_gradient_bound', ratio, 1.05, {'lipschitz_bound': b.lipschitz_bound}),
    ]


@register_check('variational')
def rolle_sharpness(ctx):
    M = _line()
    graph = build_graph(grid(M, 201), k=2)
    region = partition(graph, get_region('interval', M, a=-1.0, b=1.0))
    result = rolle_search(get_field('linear', M), region, 0.5, eps=1.0, R=1.0, p0=100)
    excess = max(0.99 - result.gradient_norm, result.gradient_norm - 1.0)
    return Check('rolle_sharpness', excess, 1e-12, {'case': result.case, 'gradient_norm': result.gradient_norm,
                                                   'bound': result.bound})


# convexity

@register_check('convexity')
def geodesic_convexity(ctx):
    hyperbolic = convexity_check(get_field('sq_distance', get_manifold('hyperbolic')), seed=ctx.seed)
    linear = convexity_check(get_field('linear', get_manifold('euclidean', dim=2), a=[1.0, -2.0]), seed=ctx.seed)
    sphere = convexity_check(get_field('sq_distance', get_manifold('sphere')), length=3.0, seed=ctx.seed)
    return [
        Check('convex_sq_distance_hyperbolic', _verdict(hyperbolic.passed), 0.0, hyperbolic.details),
        Check('convex_linear', _verdict(linear.passed), 0.0, linear.details),
        Check('sphere_long_geodesic_witness', _verdict(sphere.status == 'witness'), 0.0, sphere.details),
    ]


@register_check('convexity')
def mean_value_inequalities(ctx):
    S = get_manifold('sphere')
    height = get_field('height_z', S)
    graph = build_graph(sample(S, 300, seed=ctx.seed), k=8)
    deville = deville_lipschitz_check(height, 1.0, graph, seed=ctx.seed)
    plane = get_manifold('euclidean', dim=2)
    plane_graph = build_graph(grid(plane, 7), k=4)
    doubled = deville_lipschitz_check(get_field('distance', plane, scale=2.0), 1.0, plane_graph, seed=ctx.seed)
    t = np.linspace(0.1, 1.1, 101)
    radial = np.stack([np.sin(t), np.zeros_like(t), np.cos(t)], axis=1)
    godefroy = godefroy_check(get_field('distance', S), radial)
    return [
        Check('deville_height', _verdict(deville.passed), 0.0, {'status': deville.status}),
        Check('deville_doubled_distance_violated', _verdict(doubled.status == 'conclusion_violated'), 0.0,
              {'status': doubled.status}),
        Check('godefroy_radial_distance', abs(godefroy.details['measure'] - 1.0), ctx.scaled(1e-6),
              {'status': godefroy.status, 'integral': godefroy.details['integral']}),
    ]


@register_check('convexity')
def lipschitz_audits(ctx):
    S = get_manifold('sphere')
    height = get_field('height_z', S)
    rng = ctx.rng(50)
    X = S.sample_points(200, rng)
    Y = exp_batch(S, X, _tangents(S, X, rng, 1.0))
    pairs = [(Point(S, X[i]), Point(S, Y[i])) for i in range(X.shape[0])]
    mean_value = mean_value_check(height, 1.0, pairs)
    gradient = gradient_bound_check(height, 1.0, S.sample_points(500, rng))
    return [
        Check('mean_value_height', float(len(mean_value.details['violations'])), 0.0, {'pairs': len(pairs)}),
        Check('gradient_bound_height', max(0.0, gradient.details['max_norm'] - 1.0), 1e-3,
              {'max_norm': gradient.details['max_norm']}),
    ]


# hj

@register_check('hj')
def eikonal_square(ctx):
    graph = build_graph(grid(get_manifold('euclidean', dim=2), 100), k=8)
    bset = partition(graph, get_region('unit_square'))
    u = eikonal_solve(graph, bset)
    X = graph.points[bset.interior]
    exact = np.minimum.reduce([X[:, 0], 1.0 - X[:, 0], X[:, 1], 1.0 - X[:, 1]])
    error = float(np.abs(u.values[bset.interior] - exact).max())
    regularity = regularity_check(u, 1.0)
    return [
        Check('eikonal_square_error', error, 4.0 * graph.h, {'n': graph.n, 'h': graph.h}),
        Check('eikonal_one_lipschitz', float(regularity['violations']), 0.0, {'max_slope': regularity['max_slope']}),
    ]


@register_check('hj')
def eikonal_hemisphere(ctx):
    graph = build_graph(sample(get_manifold('sphere'), 5000, seed=ctx.seed), k=8)
    region = get_region('northern_hemisphere')
    bset = partition(graph, region)
    u = eikonal_solve(graph, bset)
    error = np.abs(u.values[bset.interior] - region.boundary_distance(graph.points[bset.interior]))
    return Check('eikonal_hemisphere_error', float(error.max()), 3.0 * graph.h, {'n': graph.n, 'h': graph.h})


@register_check('hj')
def eikonal_viscosity(ctx):
    graph = build_graph(grid(get_manifold('euclidean', dim=2), 41), k=8)
    bset = partition(graph, get_region('unit_square'))
    u = eikonal_solve(graph, bset)
    tol = ctx.scaled(1e-4)
    report = verify_viscosity(u, eikonal(graph.manifold), graph, bands=bset, tol=tol)
    return Check('eikonal_viscosity_residual', report.max_residual, tol + ctx.slack * graph.h,
                 {'max_sub': report.max_sub, 'max_super': report.max_super, 'h': graph.h})


@register_check('hj')
def manufactured_sphere(ctx):
    S = get_manifold('sphere')
    graph = build_graph(sample(S, 1500, seed=ctx.seed), k=8)

    def exact(X):
        return 0.5 * X[:, 2]

    def source(X):
        return exact(X) + 0.5 * np.sqrt(np.clip(1.0 - X[:, 2] ** 2, 0.0, None))

    F = _stationary(S, ClosedFormField(S, 'manufactured', source), name="manufactured")
    u, report = stationary_solve(F, graph)
    error = float(np.abs(u.values - exact(graph.points)).max())
    return Check('manufactured_sphere_error', error, 3.0 * graph.h, {'h': graph.h, 'solve': report.to_json()})


@register_check('hj')
def circle_refinement(ctx):
    coarse, fine = _circle(64), _circle(640)
    u, _ = stationary_solve(_stationary(coarse.manifold, get_field('sine', coarse.manifold)), coarse)
    w, _ = stationary_solve(_stationary(fine.manifold, get_field('sine', fine.manifold)), fine)
    gap = float(np.abs(u.values - w.values[::10]).max())
    return Check('circle_refinement', gap, 5.0 * coarse.h, {'h': coarse.h})


@register_check('hj')
def uniqueness_and_comparison(ctx):
    graph = _circle(64)
    M = graph.manifold
    F = _stationary(M, get_field('sine', M), name="f")
    G = _stationary(M, get_field('sine', M, offset=1.0), name="f + 1")
    solve_tol = 1e-9
    a, _ = stationary_solve(F, graph, tol=solve_tol, order='coordinate')
    b, _ = stationary_solve(F, graph, tol=solve_tol, order='index')
    v, _ = stationary_solve(G, graph, tol=solve_tol)
    verify_tol = ctx.scaled(1e-5)
    comparison = comparison_check(a, v, F, G, tol=verify_tol, slack=ctx.slack)

    wide = _circle(500)
    W = wide.manifold
    u_wide, _ = stationary_solve(_stationary(W, get_field('sine', W), name="f"), wide)
    v_wide, _ = stationary_solve(_stationary(W, get_field('sine', W, offset=1.0), name="f + 1"), wide)
    doubling = doubling_pair(u_wide, v_wide, 0.1, slack=ctx.slack)
    failed = [key for key in ('i', 'ii', 'iii') if not doubling.report[key]]
    return [
        Check('uniqueness_replay', a.sup_distance(b), 2.0 * ctx.scaled(solve_tol), {'orders': ['coordinate', 'index']}),
        Check('comparison_margin', -comparison['margin'], 0.0, comparison),
        Check('doubling_conclusions', float(len(failed)), 0.0, {'failed': failed, **doubling.to_json()}),
    ]


@register_check('hj')
def subsolution_stability(ctx):
    graph = _circle(12)
    F = _stationary(graph.manifold, get_field('constant', graph.manifold, value=1.0))
    low = DiscreteField(graph, np.full(graph.n, -2.0), name="low")
    tol = ctx.scaled(1e-3)
    lifted, flag, info = perron_improve(low, F, tol=tol)
    other, _, _ = perron_improve(low.with_values(low.values - 0.5), F, tol=tol)
    combined = sup_subsolution_check(lifted, other, F, tol=tol)
    return [
        Check('perron_lift', _verdict(flag and bool(np.all(lifted.values >= low.values))), 0.0, info.to_json()),
        Check('sup_of_subsolutions', combined['max_sub'], combined['tol']),
    ]


@register_check('hj')
def pullback_example(ctx):
    report = pullback_demo(mode='funnel', tol=ctx.scaled(1e-6), slack=ctx.slack)
    excess = max(
        report['source_side']['max_sub'] - report['source_side']['threshold'],
        report['source_side']['max_super'] - report['source_side']['threshold'],
        report['target_side']['max_sub'] - report['target_side']['threshold'],
        report['target_side']['max_super'] - report['target_side']['threshold'],
    )
    return Check('pullback_two_sided', excess, 0.0, {k: report[k] for k in (
        'source_side', 'target_side', 'jacobian_condition', 'h_source', 'h_target')})


def _run_check(suite, func, ctx):
    try:
        rows = func(ctx)
    except Exception as e:
        logger.error(f"[Checks] {suite}.{func.__name__} raised {type(e).__name__}: {e}")
        return [Check(func.__name__, math.inf, 0.0, {'error': f"{type(e).__name__}: {e}"})]
    return [rows] if isinstance(rows, Check) else list(rows)


def run_suite(name, seed=0, tol=None, slack=SLACK_C):
    """
    Run one suite (or 'all') and return its JSON report.

    Raises:
        UnknownSuiteError: name is neither a registered suite nor 'all'
    """
    if name == 'all':
        names = available_suites()
    elif name in _SUITE_REGISTRY:
        names = [name]
    else:
        raise UnknownSuiteError(f"Unknown suite '{name}'. Choose one of: {', '.join(available_suites() + ['all'])}")
    ctx = SuiteContext(seed=int(seed), tol=tol, slack=slack)
    checks = []
    for suite in names:
        for func in _SUITE_REGISTRY[suite]:
            for row in _run_check(suite, func, ctx):
                checks.append((suite, row))
                if not row.passed:
                    logger.warning(f"[Checks] {suite}.{row.name} failed: {row.residual:.3g} > {row.threshold:.3g}")

    failures = [f"{suite}.{row.name}" for suite, row in checks if not row.passed]
    residuals = [row.residual for _, row in checks]
    report = {
        'suite': name,
        'seed': ctx.seed,
        'tol': tol,
        'slack': slack,
        'passed': not failures,
        'first_failure': failures[0] if failures else None,
        'failures': failures,
        'max_residual': max(residuals) if residuals else 0.0,
        'checks': [{'suite': suite, **row.to_json()} for suite, row in checks],
    }
    logger.info(f"[Checks] {name} (seed {ctx.seed}): {len(checks) - len(failures)}/{len(checks)} passed")
    return report
