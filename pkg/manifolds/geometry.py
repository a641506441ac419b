"""
Riemannian primitives on catalog manifolds.

The *_batch functions work on raw coordinate arrays and are what the graph,
probe and solver code call in bulk. The single-object functions below them
take Point / TangentVector / CotangentVector and enforce base points and
radii.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .exceptions import NonDifferentiableError, OutOfRadiusError
from .integrators import integrate_geodesic, shoot_log
from .types import CotangentVector, Point, TangentVector, ensure_same_base

logger = logging.getLogger(__name__)

# Central-difference step for distance partials on closed-form manifolds.
PARTIALS_FD_STEP = 1e-6
NORMAL_CHART_FRACTION = 0.9


# ---------------------------------------------------------------------------
# Batched kernels
# ---------------------------------------------------------------------------

def exp_batch(manifold, X, V):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if manifold.closed_form:
        return manifold.exp_closed(X, V)
    return integrate_geodesic(manifold, X, V)[0]


def chart_length(manifold, X, Y):
    """Metric length of the chart segment measured at its midpoint (cheap distance estimate)."""
    D = Y - X
    return np.sqrt(np.maximum(manifold.inner((X + Y) / 2.0, D, D), 0.0))


def log_batch(manifold, X, Y, check_radius=True):
    """
    Logarithm log_x(y) for each row.

    Raises OutOfRadiusError when any pair is at or beyond the working radius.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    radius = manifold.radius_at(X)
    if manifold.closed_form:
        if check_radius:
            d = manifold.distance_closed(X, Y)
            _raise_if_outside(d, radius)
        return manifold.log_closed(X, Y)
    if check_radius:
        _raise_if_outside(chart_length(manifold, X, Y), 1.5 * radius)
    V = shoot_log(manifold, X, Y)
    if check_radius:
        _raise_if_outside(np.sqrt(np.maximum(manifold.inner(X, V, V), 0.0)), radius)
    return V


def _raise_if_outside(d, radius):
    bad = np.where(d >= radius)[0]
    if bad.size:
        i = bad[0]
        raise OutOfRadiusError(d[i], radius[i])


def distance_batch(manifold, X, Y):
    """Distances for pairs known to be within r_M (or any pairs on closed-form manifolds)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if manifold.closed_form:
        return manifold.distance_closed(X, Y)
    V = log_batch(manifold, X, Y)
    return np.sqrt(np.maximum(manifold.inner(X, V, V), 0.0))


def transport_batch(manifold, X, W, Y):
    """Parallel transport of W (tangent at X) to Y along the minimal geodesic."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if manifold.closed_form:
        _raise_if_outside(manifold.distance_closed(X, Y), manifold.radius_at(X))
        return manifold.transport_closed(X, W, Y)
    V = log_batch(manifold, X, Y)
    return integrate_geodesic(manifold, X, V, W=W)[2]


def raise_batch(manifold, X, Z):
    """Musical isomorphism T*M → TM (sharp) via a g-orthonormal frame."""
    B = manifold.tangent_basis(X)
    return np.einsum('mai,mi->ma', B, np.einsum('mai,ma->mi', B, Z))


def lower_batch(manifold, X, V):
    """Musical isomorphism TM → T*M (flat)."""
    return np.einsum('mij,mj->mi', manifold.metric_matrix(X), V)


def covector_norm_batch(manifold, X, Z):
    B = manifold.tangent_basis(X)
    return np.linalg.norm(np.einsum('mai,ma->mi', B, Z), axis=-1)


def covector_transport_batch(manifold, Y, Z, X):
    """L_{yx}: transport covectors Z at Y to X (lower ∘ transport ∘ raise)."""
    moved = transport_batch(manifold, Y, raise_batch(manifold, Y, Z), X)
    return lower_batch(manifold, X, moved)


def covector_gap_batch(manifold, X, Z, Y, Xi):
    """‖ζ − L_{yx}ξ‖_x for each row."""
    return covector_norm_batch(manifold, X, Z - covector_transport_batch(manifold, Y, Xi, X))


def chart_coords_batch(manifold, P, Q):
    """Normal-chart coordinates of Q around P: Bᵀ G log_P(Q)."""
    V = log_batch(manifold, P, Q)
    B = manifold.tangent_basis(P)
    return np.einsum('mai,ma->mi', B, lower_batch(manifold, P, V))


def from_chart_batch(manifold, P, C):
    """Inverse normal chart: exp_P(B c) for each row."""
    B = manifold.tangent_basis(P)
    return exp_batch(manifold, P, np.einsum('mai,mi->ma', B, C))


def covector_from_chart_batch(manifold, P, C):
    B = manifold.tangent_basis(P)
    return lower_batch(manifold, P, np.einsum('mai,mi->ma', B, C))


def covector_to_chart_batch(manifold, P, Z):
    B = manifold.tangent_basis(P)
    return np.einsum('mai,ma->mi', B, Z)


# ---------------------------------------------------------------------------
# Object-level operations
# ---------------------------------------------------------------------------

def metric_eval(p, v, w):
    """g_p(v, w) for tangent vectors based at p."""
    ensure_same_base(p, v.base)
    ensure_same_base(p, w.base)
    return float(p.manifold.inner(p.coords[None], v.components[None], w.components[None])[0])


def exp_map(p, v):
    ensure_same_base(p, v.base)
    M = p.manifold
    return Point(M, exp_batch(M, p.coords[None], v.components[None])[0])


def log_map(p, q):
    M = p.manifold
    return TangentVector(p, log_batch(M, p.coords[None], q.coords[None])[0])


def geodesic_eval(gamma, t):
    """Position and unit velocity of the geodesic at arc length t."""
    if not 0.0 <= t <= gamma.length:
        raise ValueError(f"t = {t} outside [0, {gamma.length}]")
    M = gamma.base.manifold
    X = gamma.base.coords[None]
    U = gamma.direction.components[None]
    if M.closed_form:
        Y = M.exp_closed(X, t * U)
        velocity = M.velocity_closed(X, U, t)
    else:
        Y, velocity, _ = integrate_geodesic(M, X, U, t_final=t)
    point = Point(M, Y[0])
    return point, TangentVector(point, velocity[0])


@dataclass(frozen=True)
class DistanceMeasurement:
    value: float
    upper_bound: bool = False
    method: str = "exact"


def measure_distance(p, q, graph=None, pieces=None):
    """
    Distance with provenance.

    Closed-form kits answer directly. Otherwise the log map is used when the
    pair is inside the working radius; beyond it the result is an upper bound,
    either from the supplied graph (when both points are vertices) or from a
    chain of short geodesics along the chart segment.
    """
    M = p.manifold
    X, Y = p.coords[None], q.coords[None]
    if M.closed_form:
        return DistanceMeasurement(float(M.distance_closed(X, Y)[0]))
    radius = float(M.radius_at(X)[0])
    estimate = float(chart_length(M, X, Y)[0])
    if estimate < 0.9 * radius:
        try:
            return DistanceMeasurement(float(distance_batch(M, X, Y)[0]), method="log")
        except OutOfRadiusError:
            pass
    if graph is not None:
        i, j = graph.vertex_index(p), graph.vertex_index(q)
        if i is not None and j is not None:
            from discretize.graphs import graph_distance
            value = float(graph_distance(graph, [i]).values[j])
            return DistanceMeasurement(value, upper_bound=True, method="graph")
    pieces = pieces or max(2, int(np.ceil(estimate / (0.4 * radius))))
    knots = X + np.linspace(0.0, 1.0, pieces + 1)[:, None] * (Y - X)
    value = float(np.sum(distance_batch(M, knots[:-1], knots[1:])))
    logger.info(f"[Distance] {M.name}: beyond r_M, chained {pieces} geodesic pieces (upper bound)")
    return DistanceMeasurement(value, upper_bound=True, method="chain")


def distance(p, q, graph=None):
    return measure_distance(p, q, graph=graph).value


def parallel_transport(v, q):
    M = v.manifold
    moved = transport_batch(M, v.base.coords[None], v.components[None], q.coords[None])[0]
    return TangentVector(q, moved)


def raise_index(zeta):
    M = zeta.manifold
    return TangentVector(zeta.base, raise_batch(M, zeta.base.coords[None], zeta.components[None])[0])


def lower_index(v):
    M = v.manifold
    return CotangentVector(v.base, lower_batch(M, v.base.coords[None], v.components[None])[0])


def covector_transport(xi, x):
    """L_{yx}(ξ) for ξ based at y."""
    M = xi.manifold
    moved = covector_transport_batch(M, xi.base.coords[None], xi.components[None], x.coords[None])[0]
    return CotangentVector(x, moved)


def covector_gap(zeta, xi):
    """‖ζ − L_{yx}(ξ)‖_x with ζ at x and ξ at y."""
    M = zeta.manifold
    return float(covector_gap_batch(
        M, zeta.base.coords[None], zeta.components[None], xi.base.coords[None], xi.components[None]
    )[0])


def distance_partials(x, y):
    """
    (∂d/∂x, ∂d/∂y) as covectors at x and y.

    Closed-form manifolds differentiate the distance by central differences in
    the normal chart (step 1e-6). Shooting-based manifolds use the first
    variation formula ∂d/∂x = −flat(log_x y)/d, since finite differences of an
    iteratively solved log are noise-limited.
    """
    M = x.manifold
    X, Y = x.coords[None], y.coords[None]
    d = float(distance_batch(M, X, Y)[0])
    if d == 0.0:
        raise NonDifferentiableError("distance is not differentiable on the diagonal")
    _raise_if_outside(np.array([d]), M.radius_at(X))
    if M.closed_form:
        dx = _fd_partial(M, X, Y)
        dy = _fd_partial(M, Y, X)
    else:
        dx = -lower_batch(M, X, log_batch(M, X, Y))[0] / d
        dy = -lower_batch(M, Y, log_batch(M, Y, X))[0] / d
    return CotangentVector(x, dx), CotangentVector(y, dy)


def _fd_partial(M, X, Y, step=PARTIALS_FD_STEP):
    B = M.tangent_basis(X)[0]
    n = M.dim
    offsets = np.concatenate([step * np.eye(n), -step * np.eye(n)])
    probes = M.exp_closed(np.repeat(X, 2 * n, axis=0), offsets @ B.T)
    values = M.distance_closed(probes, np.repeat(Y, 2 * n, axis=0))
    chart_grad = (values[:n] - values[n:]) / (2.0 * step)
    return lower_batch(M, X, (B @ chart_grad)[None])[0]


@dataclass(frozen=True, eq=False)
class NormalChart:
    """
    h = exp_p⁻¹ expressed in a g-orthonormal frame, with inverse h⁻¹ = exp_p ∘ B.

    `lipschitz_eps` is the sampled distortion: both maps are (1+ε)-Lipschitz
    on B(p, radius) for the reported ε.
    """
    base: Point
    frame: np.ndarray
    radius: float
    lipschitz_eps: float

    @property
    def manifold(self):
        return self.base.manifold

    def to_chart(self, q):
        return chart_coords_batch(self.manifold, self.base.coords[None], q.coords[None])[0]

    def from_chart(self, c):
        c = np.asarray(c, dtype=float).reshape(1, -1)
        return Point(self.manifold, from_chart_batch(self.manifold, self.base.coords[None], c)[0])

    def from_chart_many(self, C):
        C = np.atleast_2d(np.asarray(C, dtype=float))
        P = np.repeat(self.base.coords[None], C.shape[0], axis=0)
        return from_chart_batch(self.manifold, P, C)

    def covector_to_chart(self, zeta):
        return self.frame.T @ zeta.components

    def covector_from_chart(self, c):
        M = self.manifold
        vec = self.frame @ np.asarray(c, dtype=float)
        return CotangentVector(self.base, lower_batch(M, self.base.coords[None], vec[None])[0])

    def differential_at_origin(self, w, step=1e-6):
        """FD derivative of h⁻¹ at 0 applied to chart vector w, in tangent components."""
        w = np.asarray(w, dtype=float)
        plus = self.from_chart_many(step * w[None])
        minus = self.from_chart_many(-step * w[None])
        return (plus[0] - minus[0]) / (2.0 * step)


def normal_chart(p, n_probe=64, seed=0):
    """Build the normal chart at p and estimate its Lipschitz distortion."""
    M = p.manifold
    X = p.coords[None]
    B = M.tangent_basis(X)[0]
    radius = NORMAL_CHART_FRACTION * float(M.radius_at(X)[0])
    eps = _chart_distortion(M, X, B, min(0.45 * radius, 1.0), n_probe, seed)
    return NormalChart(base=p, frame=B, radius=radius, lipschitz_eps=eps)


def _chart_distortion(M, X, B, radius, n_probe, seed):
    if n_probe <= 0:
        return float("nan")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((2, n_probe, M.dim))
    raw /= np.linalg.norm(raw, axis=-1, keepdims=True)
    scales = radius * rng.uniform(0.05, 1.0, size=(2, n_probe, 1)) ** (1.0 / M.dim)
    C1, C2 = raw[0] * scales[0], raw[1] * scales[1]
    base = np.repeat(X, n_probe, axis=0)
    try:
        P1 = exp_batch(M, base, C1 @ B.T)
        P2 = exp_batch(M, base, C2 @ B.T)
        d = distance_batch(M, P1, P2)
    except Exception as exc:  # chart probing is diagnostic only
        logger.warning(f"[NormalChart] distortion probe failed on {M.name}: {exc}")
        return float('nan')
    chart = np.linalg.norm(C1 - C2, axis=-1)
    ok = (chart > 1e-9) & (d > 1e-9)
    ratios = np.concatenate([d[ok] / chart[ok], chart[ok] / d[ok]])
    return float(max(np.max(ratios) - 1.0, 0.0)) if ratios.size else 0.0
