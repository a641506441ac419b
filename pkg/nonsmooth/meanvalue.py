"""
Convexity and mean value audits.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.sparse.csgraph import dijkstra

from discretize.fields import DiscreteField
from manifolds.geometry import covector_norm_batch, distance, distance_batch, exp_batch, geodesic_eval
from manifolds.types import Geodesic, Point

from .estimates import estimate_subdifferential
from .probes import (
    DEFAULT_MARGIN, as_covector, fd_gradient_components, gradient_components, test_subgradient, test_supergradient,
)

logger = logging.getLogger(__name__)

CONVEXITY_TOL = 1e-9
LIPSCHITZ_SLACK = 1e-9


@dataclass
class AuditReport:
    """Outcome of an audit: status plus whatever evidence the audit gathered."""
    status: str
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == 'pass'

    def to_json(self):
        return {'status': self.status, **self.details}


def _unit_tangents(manifold, X, rng):
    B = manifold.tangent_basis(X)
    raw = rng.standard_normal((X.shape[0], manifold.dim))
    raw /= np.linalg.norm(raw, axis=-1, keepdims=True)
    return np.einsum('mai,mi->ma', B, raw)


def convexity_check(f, n_geodesics=50, n_points=5, lambdas=(0.25, 0.5, 0.75), length=None, seed=0,
                    base_points=None, tol=CONVEXITY_TOL):
    """
    Sample geodesics σ and check f(σ(λt₁+(1-λ)t₂)) <= λf(σ(t₁)) + (1-λ)f(σ(t₂)) + tol.

    Geodesics have length 0.9·r_M unless `length` says otherwise. The report
    also carries the largest sampled difference quotient along the geodesics
    (a local Lipschitz estimate).
    """
    M = f.manifold
    rng = np.random.default_rng(seed)
    X = M.sample_points(n_geodesics, rng) if base_points is None else np.atleast_2d(base_points)
    U = _unit_tangents(M, X, rng)
    L = 0.9 * float(np.min(M.radius_at(X))) if length is None else float(length)
    t = np.linspace(0.0, L, n_points)
    lipschitz = 0.0
    for g in range(X.shape[0]):
        base = np.repeat(X[g:g + 1], n_points, axis=0)
        values = f.values_at(exp_batch(M, base, t[:, None] * U[g][None]))
        steps = np.abs(np.diff(values)) / np.diff(t)
        lipschitz = max(lipschitz, float(np.max(steps[np.isfinite(steps)], initial=0.0)))
        for a in range(n_points):
            for b in range(a + 1, n_points):
                for lam in lambdas:
                    s = lam * t[a] + (1.0 - lam) * t[b]
                    mid = float(f.values_at(exp_batch(M, X[g:g + 1], s * U[g][None]))[0])
                    chord = lam * values[a] + (1.0 - lam) * values[b]
                    if mid > chord + tol:
                        logger.info(f"[Convexity] {f.name}: witness on geodesic {g}, gap {mid - chord:.3g}")
                        return AuditReport('witness', {
                            'base': X[g].tolist(), 'direction': U[g].tolist(), 't1': float(t[a]), 't2': float(t[b]),
                            'lambda': lam, 'gap': mid - chord, 'local_lipschitz': lipschitz,
                        })
    return AuditReport('pass', {'geodesics': int(X.shape[0]), 'length': L, 'local_lipschitz': lipschitz})


def deville_lipschitz_check(f, K, graph, n_probes=50, n_sources=5, seed=0):
    """
    Two-sided audit of "‖ζ‖ <= K on D⁻f everywhere ⇒ f is K-Lipschitz".

    (a) at probe vertices, a gradient estimate of norm > K that passes
        test_subgradient is a hypothesis violation;
    (b) |f(p) - f(q)| <= K·d_graph(p, q) on pairs from a few sources.
    A conclusion violation takes precedence in the status.
    """
    rng = np.random.default_rng(seed)
    values = f.values if isinstance(f, DiscreteField) else f.values_at(graph.points)
    probes = rng.choice(graph.n, size=min(n_probes, graph.n), replace=False)
    hypothesis = []
    components = gradient_components(f, graph.points[probes])
    for i, comp in zip(probes, components):
        p = graph.point(int(i))
        zeta = as_covector(p, p.manifold.tangent_basis(p.coords[None])[0].T @ comp)
        if zeta.norm() > K * (1.0 + 1e-6) + LIPSCHITZ_SLACK and test_subgradient(f, p, zeta).consistent:
            hypothesis.append({'vertex': int(i), 'norm': zeta.norm()})

    sources = rng.choice(graph.n, size=min(n_sources, graph.n), replace=False)
    d = dijkstra(graph.adjacency, directed=False, indices=sources)
    conclusion = []
    for row, s in zip(d, sources):
        excess = np.abs(values - values[s]) - K * row * (1.0 + LIPSCHITZ_SLACK)
        bad = np.flatnonzero(np.isfinite(excess) & (excess > LIPSCHITZ_SLACK))
        if bad.size:
            j = int(bad[np.argmax(excess[bad])])
            conclusion.append({'pair': [int(s), j], 'excess': float(excess[j]), 'quotient': float(abs(values[j] - values[s]) / row[j])})
    if conclusion:
        status = 'conclusion_violated'
    elif hypothesis:
        status = 'hypothesis_violated'
    else:
        status = 'pass'
    return AuditReport(status, {'K': K, 'hypothesis': hypothesis[:10], 'conclusion': conclusion[:10]})


def _path_points(manifold, path, n_samples):
    """Arc-length parameters and coordinates of the samples along a geodesic or a polyline of points."""
    if isinstance(path, Geodesic):
        t = np.linspace(0.0, path.length, n_samples)
        return t, np.array([geodesic_eval(path, float(s))[0].coords for s in t])
    points = np.atleast_2d(np.asarray(path, dtype=float))
    steps = distance_batch(manifold, points[:-1], points[1:])
    return np.concatenate([[0.0], np.cumsum(steps)]), points


def _minimal_gradient_norm(f, p, margin):
    """Smallest norm of a consistent sub- or supergradient found at p, or None."""
    M = p.manifold
    comp = gradient_components(f, p.coords[None])[0]
    zeta = as_covector(p, M.tangent_basis(p.coords[None])[0].T @ comp)
    if test_subgradient(f, p, zeta, margin=margin).consistent or test_supergradient(f, p, zeta, margin=margin).consistent:
        return zeta.norm()
    estimate = estimate_subdifferential(f, p, mode='general')
    if estimate.nonempty:
        return float(np.min(np.linalg.norm(estimate.inner, axis=1)))
    return None


def _union_length(values):
    """Lebesgue measure of the union of the intervals between consecutive samples."""
    if values.size < 2:
        return 0.0
    lo = np.minimum(values[:-1], values[1:])
    hi = np.maximum(values[:-1], values[1:])
    order = np.argsort(lo, kind='stable')
    total, cur_lo, cur_hi = 0.0, lo[order[0]], hi[order[0]]
    for a, b in zip(lo[order[1:]], hi[order[1:]]):
        if a > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = a, b
        else:
            cur_hi = max(cur_hi, b)
    return float(total + cur_hi - cur_lo)


def godefroy_check(f, path, n_samples=200, phi_estimator=None, tol=1e-6, margin=DEFAULT_MARGIN):
    """
    μ(f(γ(I))) <= ∫ Φ(γ(t)) dt along a geodesic or a polyline of points.

    Φ is the smallest consistent gradient norm found at each sample. The
    trapezoid rule can undershoot ∫Φ where Φ jumps between samples; that
    quadrature slack is added to tol and reported. Samples with no
    consistent gradient are hypothesis gaps, not failures.
    """
    M = f.manifold
    t, points = _path_points(M, path, n_samples)
    values = f.values_at(points)
    estimator = phi_estimator or (lambda p: _minimal_gradient_norm(f, p, margin))
    phi = np.empty(t.size)
    gaps = []
    for k, coords in enumerate(points):
        value = estimator(Point(M, coords))
        if value is None:
            gaps.append(k)
            value = 0.0
        phi[k] = value
    if gaps:
        logger.warning(f"[Godefroy] {f.name}: no consistent gradient at {len(gaps)} samples (hypothesis gap)")
    measure = _union_length(values)
    integral = float(trapezoid(phi, t))
    slack = float(np.sum(0.5 * np.abs(np.diff(phi)) * np.diff(t)))
    holds = measure <= integral + slack + tol
    status = 'pass' if holds else 'fail'
    if holds and gaps:
        status = 'gap'
    return AuditReport(status, {
        'measure': measure, 'integral': integral, 'quadrature_slack': slack, 'gaps': gaps,
    })


def mean_value_check(f, C, pairs):
    """|f(p) - f(q)| <= C·d(p, q)(1 + 1e-6) on explicit point pairs [(p, q), ...]."""
    worst = []
    for p, q in pairs:
        d = distance(p, q)
        excess = abs(f(p) - f(q)) - C * d * (1.0 + 1e-6)
        if excess > 0:
            worst.append({'p': p.to_json(), 'q': q.to_json(), 'excess': excess})
    return AuditReport('pass' if not worst else 'fail', {'C': C, 'violations': worst[:10], 'pairs': len(pairs)})


def gradient_bound_check(f, K, points):
    """Finite-difference ‖df‖ <= K + 1e-3 at the given coordinates."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    norms = covector_norm_batch(f.manifold, X, fd_gradient_components(f, X))
    bad = np.flatnonzero(norms > K + 1e-3)
    return AuditReport('pass' if bad.size == 0 else 'fail', {'K': K, 'max_norm': float(norms.max()), 'violations': bad.tolist()})
