"""
Calculus rules for subdifferentials, checked on certified members.

The sum, product and chain inclusions are verified by building candidate
covectors for the combined function from inner-estimate members of the
parts and running test_subgradient on them; any violation is a bug in the
estimators, not a property of the field.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from discretize.graphs import graph_distance
from manifolds.geometry import covector_from_chart_batch, covector_to_chart_batch, covector_transport_batch
from manifolds.types import Point

from .estimates import estimate_subdifferential
from .exceptions import NegativeFactorError, NonsmoothError, PreconditionError
from .fields import ComposedField, ProductField, SumField
from .probes import DEFAULT_MARGIN, as_covector, test_subgradient

logger = logging.getLogger(__name__)

_MAP_REGISTRY = {}
MEMBER_SHRINK = 0.9


@dataclass(frozen=True, eq=False)
class DifferentiableMap:
    """g: N → M with a Jacobian evaluator of shape (m, M.ambient_dim, N.ambient_dim)."""
    source: object
    target: object
    name: str
    func: object
    jac: object
    inverse: object = None
    params: dict = field(default_factory=dict)

    def apply(self, X):
        return np.atleast_2d(self.func(np.atleast_2d(np.asarray(X, dtype=float))))

    def jacobian(self, X):
        return np.asarray(self.jac(np.atleast_2d(np.asarray(X, dtype=float))))

    def pull_covector(self, X, Z):
        """ζ ∘ dg(x) for covector components Z at g(x)."""
        return np.einsum('ma,mab->mb', np.atleast_2d(Z), self.jacobian(X))


def register_map(name):
    def decorator(factory):
        _MAP_REGISTRY[name] = factory
        return factory
    return decorator


def get_map(name, source, **params):
    if name not in _MAP_REGISTRY:
        raise NonsmoothError(f"Map '{name}' is not registered. Available: {sorted(_MAP_REGISTRY)}")
    return _MAP_REGISTRY[name](source, **params)


@register_map('identity')
def identity_map(source):
    n = source.ambient_dim
    return DifferentiableMap(
        source, source, 'identity', lambda X: X.copy(), lambda X: np.broadcast_to(np.eye(n), (X.shape[0], n, n)),
        inverse=lambda Y: Y.copy(),
    )


@register_map('power')
def power_map(source, exponent=1.5):
    """x ↦ |x|^exponent on the first coordinate of a line."""

    def func(X):
        return np.abs(X[:, :1]) ** exponent

    def jac(X):
        J = np.zeros((X.shape[0], 1, 1))
        J[:, 0, 0] = exponent * np.sign(X[:, 0]) * np.abs(X[:, 0]) ** (exponent - 1.0)
        return J

    return DifferentiableMap(source, source, 'power', func, jac, params={'exponent': exponent})


def _members(f, p, radii, count):
    """
    Up to `count` certified members of D⁻f(p) in chart coordinates.

    Members are pulled 10% toward the estimate's center, off the polytope
    boundary; the consistent set is convex, so they stay certified.
    """
    estimate = estimate_subdifferential(f, p, radii_schedule=radii)
    inner = estimate.inner
    if inner.shape[0] > count:
        inner = inner[np.unique(np.linspace(0, inner.shape[0] - 1, count).round().astype(int))]
    if estimate.center is None or inner.shape[0] == 0:
        return inner
    return estimate.center[None] + MEMBER_SHRINK * (inner - estimate.center[None])


def _check(combined, p, candidates, radii, label, report, slack=1.0):
    """Test each candidate for the combined field; the margin is scaled by `slack`."""
    for c in candidates:
        zeta = as_covector(p, c)
        verdict = test_subgradient(
            combined, p, zeta, radii_schedule=radii, margin=slack * DEFAULT_MARGIN,
        )
        report['checked'] += 1
        if verdict.violated:
            logger.error(f"[Calculus] {label} rule violated for {combined.name} at {p.coords}: ζ={c}")
            report['violations'].append({'covector': np.asarray(c).tolist(), 'increment': verdict.increment})


def calculus_suite(f1, f2, g, p, chain_field=None, radii_schedule=None, members=3, extra_chain_covectors=(),
                   include_product=True):
    """
    Check the sum, product and chain inclusions at p.

    The chain branch composes `chain_field` (f1 when omitted) with g. Chart
    covectors in `extra_chain_covectors` that pass for f∘g but are not of
    the form ζ∘dg(p) are reported under 'strict'.

    Raises:
        NegativeFactorError: the product branch is requested with f1(p) < 0 or f2(p) < 0
    """
    radii = radii_schedule
    report = {}
    m1, m2 = _members(f1, p, radii, members), _members(f2, p, radii, members)

    section = report['sum'] = {'checked': 0, 'violations': []}
    _check(SumField(f1, f2), p, [a + b for a in m1 for b in m2], radii, 'sum', section, slack=2.0)

    if include_product:
        a1, a2 = f1(p), f2(p)
        if a1 < 0 or a2 < 0:
            raise NegativeFactorError(f"product rule needs f1(p), f2(p) >= 0, got {a1}, {a2}")
        section = report['product'] = {'checked': 0, 'violations': []}
        _check(ProductField(f1, f2), p, [a1 * b + a2 * a for a in m1 for b in m2], radii, 'product', section,
               slack=1.0 + a1 + a2)

    if g is not None:
        outer = chain_field or f1
        q = Point(g.target, g.apply(p.coords[None])[0])
        mq = _members(outer, q, radii, members)
        at_q = covector_from_chart_batch(g.target, np.repeat(q.coords[None], len(mq), axis=0), mq) if len(mq) else mq
        pulled = g.pull_covector(np.repeat(p.coords[None], len(mq), axis=0), at_q) if len(mq) else np.zeros((0, 1))
        chart = covector_to_chart_batch(g.source, np.repeat(p.coords[None], len(pulled), axis=0), pulled) if len(mq) else []
        composite = ComposedField(outer, g)
        section = report['chain'] = {'checked': 0, 'violations': [], 'image': [np.asarray(c).tolist() for c in chart]}
        stretch = float(np.linalg.norm(g.jacobian(p.coords[None])[0], ord=2))
        _check(composite, p, chart, radii, 'chain', section, slack=1.0 + stretch)
        strict = []
        for c in extra_chain_covectors:
            c = np.atleast_1d(np.asarray(c, dtype=float))
            in_image = any(np.allclose(c, img, atol=1e-9) for img in chart)
            if not in_image and test_subgradient(composite, p, as_covector(p, c), radii_schedule=radii).consistent:
                strict.append(c.tolist())
        section['strict'] = strict

    bugs = sum(len(s['violations']) for s in report.values())
    report['status'] = 'ok' if bugs == 0 else 'bug'
    return report


@dataclass(frozen=True)
class FuzzySumResult:
    status: str
    p1: int = None
    p2: int = None
    zeta1: np.ndarray = None
    zeta2: np.ndarray = None
    gap: float = None
    searched: int = 0

    def to_json(self):
        data = {'status': self.status, 'searched': self.searched}
        if self.status == 'found':
            data.update({
                'p1': self.p1, 'p2': self.p2, 'zeta1': self.zeta1.tolist(), 'zeta2': self.zeta2.tolist(),
                'gap': self.gap,
            })
        return data


def fuzzy_sum_search(f1, f2, p, zeta, graph, eps, radii_schedule=None):
    """
    Search the graph ε-neighborhood of vertex p for (p₁, ζ₁), (p₂, ζ₂) with
    d(pᵢ, p) < ε, |fᵢ(pᵢ) - fᵢ(p)| < ε, ζᵢ certified in D⁻fᵢ(pᵢ), and
    ‖L(ζ₁) + L(ζ₂) - ζ‖ < ε after transport to p. Not finding a pair is
    inconclusive.

    Raises:
        PreconditionError: p is not a vertex, or ζ fails test_subgradient for f₁ + f₂
    """
    i = graph.vertex_index(p)
    if i is None:
        raise PreconditionError(f"{p.coords} is not a graph vertex")
    if not test_subgradient(SumField(f1, f2), p, zeta, radii_schedule=radii_schedule).consistent:
        raise PreconditionError("ζ is not a consistent subgradient of f₁ + f₂ at p")
    M = graph.manifold
    near = np.flatnonzero(graph_distance(graph, [i]).values < eps)
    pools = []
    for f in (f1, f2):
        base = f(p)
        owners, chart = [], []
        for v in near:
            q = graph.point(int(v))
            if abs(f(q) - base) >= eps:
                continue
            inner = estimate_subdifferential(f, q, radii_schedule=radii_schedule, grid_side=9).inner
            if inner.shape[0] == 0:
                continue
            Q = np.repeat(q.coords[None], inner.shape[0], axis=0)
            P = np.repeat(p.coords[None], inner.shape[0], axis=0)
            moved = covector_transport_batch(M, Q, covector_from_chart_batch(M, Q, inner), P)
            owners.append(np.full(inner.shape[0], v))
            chart.append(covector_to_chart_batch(M, P, moved))
        pools.append((np.concatenate(owners) if owners else np.zeros(0, dtype=int),
                      np.concatenate(chart) if chart else np.zeros((0, M.dim))))
    (own1, c1), (own2, c2) = pools
    target = zeta.chart_components()
    if c1.shape[0] == 0 or c2.shape[0] == 0:
        return FuzzySumResult('inconclusive', searched=int(near.size))
    dist, idx = cKDTree(c2).query(target[None] - c1, k=1)
    best = int(np.argmin(dist))
    if dist[best] >= eps:
        return FuzzySumResult('inconclusive', searched=int(near.size))
    return FuzzySumResult(
        'found', p1=int(own1[best]), p2=int(own2[idx[best]]), zeta1=c1[best], zeta2=c2[idx[best]],
        gap=float(dist[best]), searched=int(near.size),
    )
