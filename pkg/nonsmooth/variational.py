"""
Constructive variational principles on geodesic graphs.

- ekeland_search: the maximization form, on a discrete field with the graph
  metric. Minimization callers pass -f.
- rolle_search: locates a point with small gradient following the case
  analysis of the approximate Rolle theorem.
- dgz_perturb: one density step of the smooth variational principle, a
  single bump perturbation that makes f - φ attain a strict minimum.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import dijkstra

from discretize.fields import DiscreteField

from .bumps import STANDARD_PROFILE, BumpField, ball_samples, distances_from, fd_gradient_sup
from .exceptions import FieldDomainError, HypothesisError, PreconditionError
from .probes import gradient_norms

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-12
EKELAND_SLACK = 1e-12
DGZ_FD_SAMPLES = 2000


def _graph_row(graph, source):
    return dijkstra(graph.adjacency, directed=False, indices=int(source))


def _allowed_mask(field, vertices):
    mask = field.finite_mask.copy()
    if vertices is not None:
        subset = np.zeros(field.graph.n, dtype=bool)
        subset[np.asarray(vertices, dtype=np.int64)] = True
        mask &= subset
    return mask


@dataclass(frozen=True)
class EkelandResult:
    z: int
    start: int
    path: list
    eps: float
    lam: float

    @property
    def steps(self):
        return len(self.path) - 1

    def to_json(self):
        return {'z': self.z, 'x0': self.start, 'path': self.path, 'eps': self.eps, 'lambda': self.lam}


def ekeland_search(f, x0, eps, lam, vertices=None):
    """
    Ekeland point of a discrete field in maximization form.

    From z = x₀, repeatedly move to the lowest-index vertex x ≠ z with
    f(x) >= f(z) + λ·d_graph(x, z). Every move raises f by at least λ times
    the distance travelled, so the walk ends; the end point z satisfies
    λd(z, x₀) <= f(z) - f(x₀), d(z, x₀) <= ε/λ, and admits no such x.

    Args:
        f: DiscreteField (vertices where f = +inf are excluded)
        vertices: optional subset to search over; distances stay those of the full graph

    Raises:
        PreconditionError: λ <= 0, ε <= 0, or f(x₀) <= sup f - ε
    """
    if lam <= 0 or eps <= 0:
        raise PreconditionError(f"ekeland_search needs ε > 0 and λ > 0, got ε={eps}, λ={lam}")
    allowed = _allowed_mask(f, vertices)
    if not allowed.any():
        raise PreconditionError(f"{f.name} is not finite on any allowed vertex")
    x0 = int(x0)
    values = f.values
    top = float(np.max(values[allowed]))
    if not allowed[x0] or not values[x0] > top - eps:
        raise PreconditionError(f"f(x₀) = {values[x0]} is not above sup f - ε = {top - eps}")

    z = x0
    path = [z]
    while True:
        d = _graph_row(f.graph, z)
        improve = allowed & (values >= values[z] + lam * d) & (values > values[z])
        improve[z] = False
        if not improve.any():
            break
        z = int(np.flatnonzero(improve)[0])
        path.append(z)
    logger.debug(f"[Ekeland] {f.name}: {len(path) - 1} moves from {x0} to {z}")
    return EkelandResult(z=z, start=x0, path=path, eps=float(eps), lam=float(lam))


def verify_ekeland(f, result, vertices=None):
    """Exhaustive check of the three Ekeland conclusions; returns {'i', 'ii', 'iii', 'violators'}."""
    allowed = _allowed_mask(f, vertices)
    values = f.values
    z, x0, lam, eps = result.z, result.start, result.lam, result.eps
    d_z = _graph_row(f.graph, z)
    gap = values[z] - values[x0]
    first = lam * d_z[x0] <= gap + EKELAND_SLACK * (1.0 + abs(values[z]))
    second = d_z[x0] <= eps / lam * (1.0 + EKELAND_SLACK)
    others = allowed.copy()
    others[z] = False
    violators = np.flatnonzero(others & (values >= values[z] + lam * d_z))
    return {'i': bool(first), 'ii': bool(second), 'iii': violators.size == 0, 'violators': violators.tolist()}


def descent_step(f, p, graph):
    """
    Move from vertex p to the neighbor with the lowest value of f.

    Returns (neighbor, decrease rate (f(p) - f(q)) / ℓ), or (None, 0.0) when
    no neighbor is lower.
    """
    values = f.values if isinstance(f, DiscreteField) else f.values_at(graph.points)
    nbrs, lengths = graph.neighbors(p)
    if nbrs.size == 0:
        return None, 0.0
    j = int(np.argmin(values[nbrs]))
    if not values[nbrs[j]] < values[p]:
        return None, 0.0
    return int(nbrs[j]), float((values[p] - values[nbrs[j]]) / lengths[j])


@dataclass(frozen=True)
class RolleResult:
    q: int
    gradient_norm: float
    case: str
    lam: float
    start: int
    interior: bool
    bound: float
    meta: dict = field(default_factory=dict)

    def to_json(self):
        return {
            'q': self.q,
            'gradient_norm': self.gradient_norm,
            'case': self.case,
            'lambda': self.lam,
            'x0': self.start,
            'interior': self.interior,
            'bound': self.bound,
            **self.meta,
        }


def rolle_search(f, region, r, eps=None, R=None, p0=None):
    """
    Approximate Rolle point of a differentiable field on a region.

    Case 1 (sup over the interior beats the boundary band) and case 2 (inf
    below it, applied to -f) use λ = min{η/8n, r} with η the gap and n the
    graph radius of the closure around the start. Case 3 (|f| <= ε on the
    closure, B(p₀, R) inside) uses λ = ε/R from p₀, after a descent step when
    f(p₀) = 0 and ‖df(p₀)‖ > ε/R.

    Returns:
        RolleResult with the located vertex and its gradient norm

    Raises:
        HypothesisError: no case applies
    """
    graph = region.graph
    values = f.values if isinstance(f, DiscreteField) else f.values_at(graph.points)
    interior, band = region.interior, region.boundary
    closure = np.union1d(interior, band)

    def finish(g_values, start, lam, ek_eps, case, bound):
        g = DiscreteField(graph, np.where(np.isin(np.arange(graph.n), closure), g_values, np.inf), name=f.name)
        result = ekeland_search(g, start, ek_eps, lam, vertices=closure)
        q = result.z
        norm = float(gradient_norms(f, graph.points[q:q + 1])[0])
        inside = bool(np.isin(q, interior))
        if not inside:
            logger.warning(f"[Rolle] {f.name}: located vertex {q} lies in the boundary band")
        logger.info(f"[Rolle] {f.name}: case {case}, λ={lam:.4g}, q={q}, ‖df(q)‖={norm:.4g}")
        return RolleResult(q, norm, case, lam, start, inside, bound, {'path': result.path})

    sup_in, sup_band = values[interior].max(), values[band].max()
    inf_in, inf_band = values[interior].min(), values[band].min()
    if sup_in > sup_band or inf_in < inf_band:
        case, g_values = ('1', values) if sup_in > sup_band else ('2', -values)
        eta = float(g_values[interior].max() - g_values[band].max())
        start = int(interior[np.argmax(g_values[interior])])
        n = max(float(np.max(_graph_row(graph, start)[closure])), graph.h)
        lam = min(eta / (8.0 * n), r)
        return finish(g_values, start, lam, eta / 2.0, case, lam)

    if eps is None or R is None or p0 is None:
        raise HypothesisError("interior and boundary extrema agree; case 3 needs ε, R and p₀")
    if np.max(np.abs(values[closure])) > eps:
        raise HypothesisError(f"|f| exceeds ε = {eps} on the closure")
    p0 = int(p0)
    if not np.isin(p0, interior):
        raise HypothesisError(f"p₀ = {p0} is not an interior vertex")
    lam = eps / R
    start = p0
    if abs(values[p0]) <= ZERO_TOL:
        grad = float(gradient_norms(f, graph.points[p0:p0 + 1])[0])
        if grad <= lam:
            return RolleResult(p0, grad, '3.2', lam, p0, True, lam, {'path': [p0]})
        step, rate = descent_step(f, p0, graph)
        if step is None:
            return RolleResult(p0, grad, '3.2', lam, p0, True, lam, {'path': [p0], 'descent': 'none'})
        start = step
    g_values = values if values[start] > 0 else -values
    ek_eps = float(np.max(g_values[closure]) - g_values[start]) + max(ZERO_TOL, 1e-9 * lam)
    return finish(g_values, start, lam, ek_eps, '3.1' if start == p0 else '3.2', lam)


@dataclass(frozen=True, eq=False)
class DGZResult:
    phi: BumpField
    x0: int
    p: int
    margin: float
    eps_prime: float
    delta: float
    delta_b: float
    phi_sup: float
    phi_gradient_sup: float
    minimum: float

    def to_json(self):
        return {
            'x0': self.x0,
            'p': self.p,
            'margin': self.margin,
            'eps_prime': self.eps_prime,
            'delta': self.delta,
            'delta_b': self.delta_b,
            'phi_sup': self.phi_sup,
            'phi_gradient_sup': self.phi_gradient_sup,
            'minimum': self.minimum,
        }


def dgz_perturb(f, delta, graph=None, bump_radius=None, x0=None, fd_samples=DGZ_FD_SAMPLES, seed=0):
    """
    Perturb a lower semicontinuous discrete field by one bump.

    With R = sup|θ′|, bump radius δ_b <= r_M(x₀)/2 and ε′ = δ·δ_b/(4R), the
    perturbation φ = ε′·b(x₀, δ_b) has ‖φ‖_∞ = ε′ < δ and ‖dφ‖_∞ <= δ/4, and
    f - φ attains its minimum within B(x₀, δ_b) with a strict margin over
    every vertex outside B(p, δ_b).

    Raises:
        FieldDomainError: f is +inf everywhere
        PreconditionError: δ <= 0, or a supplied x₀ is not ε′-optimal
    """
    graph = graph or f.graph
    if delta <= 0:
        raise PreconditionError(f"δ must be positive, got {delta}")
    values = f.values
    dom = f.dom
    if dom.size == 0:
        raise FieldDomainError(f"{f.name} is +inf at every vertex")
    lowest = float(values[dom].min())
    x0 = int(dom[np.argmin(values[dom])]) if x0 is None else int(x0)
    M = f.manifold
    half_radius = 0.5 * float(M.radius_at(graph.points[x0:x0 + 1])[0])
    delta_b = min(half_radius, bump_radius) if bump_radius else half_radius
    R = STANDARD_PROFILE.lipschitz
    eps_prime = delta * delta_b / (4.0 * R)
    if not values[x0] < lowest + eps_prime:
        raise PreconditionError(f"f(x₀) = {values[x0]} is not below inf f + ε′ = {lowest + eps_prime}")

    center = graph.point(x0)
    phi = BumpField(center, delta_b, STANDARD_PROFILE, scale=eps_prime)
    perturbed = values - phi.values_at(graph.points)
    p = int(np.argmin(perturbed))
    outside = distances_from(graph.point(p), graph.points) >= delta_b
    outside &= np.isfinite(perturbed)
    margin = float(perturbed[outside].min() - perturbed[p]) if outside.any() else float('inf')
    samples = ball_samples(center, 1.2 * delta_b, fd_samples, seed=seed)
    grad_sup = fd_gradient_sup(phi, samples)
    logger.info(
        f"[DGZ] {f.name}: x₀={x0}, p={p}, δ_b={delta_b:.4g}, ε′={eps_prime:.4g}, margin={margin:.4g}"
    )
    return DGZResult(
        phi=phi, x0=x0, p=p, margin=margin, eps_prime=eps_prime, delta=float(delta), delta_b=delta_b,
        phi_sup=eps_prime, phi_gradient_sup=grad_sup, minimum=float(perturbed[p]),
    )
