"""
Sub/superdifferential estimates.

An estimate of D⁻f(p) carries two sets in normal-chart covector coordinates:

- outer: the polytope {c : ⟨c, u_j⟩ <= b_j} over a direction fan. In convex
  mode b_j is the infimum difference quotient along u_j, which bounds every
  subgradient of a convex field. In general mode b_j cuts out exactly the
  covectors test_subgradient leaves consistent in direction u_j: it is the
  larger of the lowest quotient and the trend bound, plus the margin. So inner ⊆ outer
  holds by construction.
- inner: candidate covectors (a grid over the outer box plus its center and
  vertices) that pass test_subgradient.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import directed_hausdorff

from discretize.fields import DiscreteField
from manifolds.geometry import normal_chart

from .exceptions import EmptyFanError, FieldDomainError
from .fields import negate
from .probes import (
    DEFAULT_MARGIN, TREND_SAFETY, as_covector, base_value, check_schedule, default_radii, discrete_increments,
    gradient_components, radial_quotients, screen_covectors, trend_bounds, unit_directions,
)

logger = logging.getLogger(__name__)

GRID_SIDE = {1: 41, 2: 15, 3: 7}
LP_TOL = 1e-9
DIFFERENTIABILITY_LEVELS = 12


@dataclass(frozen=True, eq=False)
class SubdifferentialEstimate:
    base: object
    mode: str
    directions: np.ndarray
    bounds: np.ndarray
    vertices: np.ndarray
    inner: np.ndarray
    feasible: bool
    center: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def nonempty(self):
        return self.inner.shape[0] > 0

    def diameter(self):
        if not self.feasible or self.vertices.shape[0] < 2:
            return 0.0 if self.feasible else float('nan')
        V = self.vertices
        return float(np.max(np.linalg.norm(V[:, None] - V[None], axis=-1)))

    def contains(self, c, tol=LP_TOL):
        c = np.atleast_2d(c)
        return np.all(c @ self.directions.T <= self.bounds[None] + tol, axis=1)

    def inner_within_outer(self, tol=1e-7):
        return bool(np.all(self.contains(self.inner, tol))) if self.nonempty else True

    def boundary_samples(self, per_edge=50):
        """Points on the outer boundary (interval ends, or polygon edges in the plane)."""
        V = self.vertices
        if V.shape[0] <= 1 or V.shape[1] != 2:
            return V
        loop = np.concatenate([V, V[:1]])
        s = np.linspace(0.0, 1.0, per_edge, endpoint=False)[:, None, None]
        return (loop[:-1][None] + s * (loop[1:] - loop[:-1])[None]).reshape(-1, 2)

    def hausdorff_to(self, points):
        """Hausdorff distance between the outer set and a finite point set (chart coordinates)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        mine = self.boundary_samples()
        return max(directed_hausdorff(mine, points)[0], directed_hausdorff(points, mine)[0])

    def inner_covectors(self):
        return [as_covector(self.base, c) for c in self.inner]

    def to_json(self):
        return {
            'base': self.base.to_json(),
            'mode': self.mode,
            'feasible': self.feasible,
            'nonempty': self.nonempty,
            'center': None if self.center is None else self.center.tolist(),
            'vertices': self.vertices.tolist(),
            'inner_size': int(self.inner.shape[0]),
            'diameter': self.diameter(),
        }


def polytope_vertices(U, b):
    """
    (feasible, center, support points) of {c : U c <= b}.

    On the line the set is an interval; otherwise the Chebyshev center and the
    support point in every fan direction come from linear programs.
    """
    dim = U.shape[1]
    if dim == 1:
        upper = np.min(b[U[:, 0] > 0] / U[U[:, 0] > 0, 0]) if np.any(U[:, 0] > 0) else np.inf
        lower = np.max(b[U[:, 0] < 0] / U[U[:, 0] < 0, 0]) if np.any(U[:, 0] < 0) else -np.inf
        if lower > upper + LP_TOL:
            return False, None, np.zeros((0, 1))
        return True, np.array([(lower + upper) / 2.0]), np.array([[lower], [upper]])
    norms = np.linalg.norm(U, axis=1)
    cheb = linprog(
        np.r_[np.zeros(dim), -1.0], A_ub=np.c_[U, norms], b_ub=b,
        bounds=[(None, None)] * dim + [(None, 1e6)], method='highs',
    )
    if cheb.status != 0 or cheb.x[-1] < -LP_TOL:
        return False, None, np.zeros((0, dim))
    center = cheb.x[:dim]
    support = []
    for u in U:
        res = linprog(-u, A_ub=U, b_ub=b + LP_TOL, bounds=[(None, None)] * dim, method='highs')
        if res.status == 0:
            support.append(res.x)
    V = np.unique(np.round(np.array(support), 10), axis=0) if support else center[None]
    if dim == 2 and V.shape[0] > 2:
        angles = np.arctan2(V[:, 1] - center[1], V[:, 0] - center[0])
        V = V[np.argsort(angles, kind='stable')]
    return True, center, V


def _candidate_grid(vertices, dim, cap, side=None):
    side = side or GRID_SIDE.get(dim, 5)
    if vertices.shape[0]:
        lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    else:
        lo, hi = np.full(dim, -cap), np.full(dim, cap)
    lo, hi = np.maximum(lo, -cap), np.minimum(hi, cap)
    axes = [np.linspace(lo[a], hi[a], side) for a in range(dim)]
    return np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, dim)


def estimate_subdifferential(f, p, direction_fan=None, mode='auto', radii_schedule=None, margin=DEFAULT_MARGIN,
                             safety=TREND_SAFETY, covector_cap=10.0, grid_side=None):
    """
    Estimate D⁻f(p).

    Args:
        direction_fan: unit chart directions (defaults to the probe fan)
        mode: 'convex', 'general', or 'auto' (convex when the field says so)
    """
    M = p.manifold
    fp = base_value(f, p)
    U = unit_directions(M.dim) if direction_fan is None else np.atleast_2d(np.asarray(direction_fan, dtype=float))
    if U.shape[0] == 0:
        raise EmptyFanError("estimate_subdifferential needs a nonempty direction fan")
    if mode == 'auto':
        mode = 'convex' if getattr(f, 'convex', False) else 'general'
    radii = default_radii(M, p.coords) if radii_schedule is None else check_schedule(radii_schedule)
    chart = normal_chart(p, n_probe=0)

    quotients = radial_quotients(f, fp, chart, radii, U)
    if mode == 'convex':
        bounds = np.min(quotients, axis=0)
    else:
        bounds = np.maximum(np.min(quotients, axis=0), trend_bounds(radii, quotients, safety)) + margin

    feasible, center, vertices = polytope_vertices(U, bounds)
    if feasible:
        candidates = np.concatenate([center[None], vertices, _candidate_grid(vertices, M.dim, covector_cap, grid_side)])
        candidates = candidates[np.all(candidates @ U.T <= bounds[None] + LP_TOL, axis=1)]
        violated, *_ = screen_covectors(
            f, p, candidates, radii_schedule=radii, margin=margin, directions=U, chart=chart, safety=safety,
        )
        inner = candidates[~violated]
    else:
        inner = np.zeros((0, M.dim))
    logger.debug(f"[Subdifferential] {f.name} at {p.coords}: mode={mode} feasible={feasible} inner={inner.shape[0]}")
    return SubdifferentialEstimate(
        base=p, mode=mode, directions=U, bounds=bounds, vertices=vertices, inner=inner, feasible=feasible,
        center=center, meta={'radii': radii.tolist()},
    )


def estimate_superdifferential(f, p, **kwargs):
    """D⁺f(p) = -D⁻(-f)(p), returned with the signs flipped back."""
    est = estimate_subdifferential(negate(f), p, mode=kwargs.pop('mode', 'general'), **kwargs)
    return SubdifferentialEstimate(
        base=p, mode=est.mode, directions=-est.directions, bounds=est.bounds, vertices=-est.vertices,
        inner=-est.inner, feasible=est.feasible, center=None if est.center is None else -est.center,
        meta={**est.meta, 'kind': 'super'},
    )


def differentiability_probe(f, p, tol=0.01, levels=DIFFERENTIABILITY_LEVELS, **kwargs):
    """
    The gradient at p when both D⁻ and D⁺ estimates are nonempty and lie
    within tol of a common point; None otherwise.
    """
    radii = default_radii(p.manifold, p.coords, levels=levels)
    lower = estimate_subdifferential(f, p, mode='general', radii_schedule=radii, **kwargs)
    upper = estimate_superdifferential(f, p, radii_schedule=radii, **kwargs)
    if not (lower.feasible and upper.feasible):
        return None
    point = (lower.center + upper.center) / 2.0
    spread = max(
        np.max(np.linalg.norm(lower.vertices - point, axis=1)),
        np.max(np.linalg.norm(upper.vertices - point, axis=1)),
    )
    if spread > tol:
        return None
    return as_covector(p, point)


@dataclass(frozen=True)
class DensityReport:
    fraction: float
    passed: np.ndarray
    failed: np.ndarray

    def to_json(self):
        return {'fraction': self.fraction, 'passed': int(self.passed.size), 'failed': self.failed.tolist()}


def discrete_subdifferential_nonempty(field, i, margin=DEFAULT_MARGIN):
    """Whether some chart covector passes every edge-slope test of a discrete field at vertex i."""
    nbrs, _ = field.graph.neighbors(i)
    if nbrs.size == 0:
        return True
    _, _, offsets, norms = discrete_increments(field, i, np.zeros((1, field.manifold.dim)))
    slopes = (field.values[nbrs] - field.values[i]) / norms
    finite = np.isfinite(slopes)
    if not finite.any():
        return True
    units = offsets[finite] / norms[finite, None]
    b = slopes[finite] + margin
    res = linprog(np.zeros(units.shape[1]), A_ub=units, b_ub=b, bounds=[(None, None)] * units.shape[1], method='highs')
    return res.status == 0


def density_probe(f, graph, vertices=None, **estimator_params):
    """
    Fraction of dom(f) vertices with a nonempty consistent D⁻ estimate.

    Raises:
        FieldDomainError: f is +inf at every vertex
    """
    values = f.values if isinstance(f, DiscreteField) else f.values_at(graph.points)
    dom = np.flatnonzero(np.isfinite(values))
    if vertices is not None:
        dom = np.intersect1d(dom, np.asarray(vertices))
    if dom.size == 0:
        raise FieldDomainError(f"{f.name} has an empty domain on the graph")
    ok = np.zeros(dom.size, dtype=bool)
    for n, i in enumerate(dom):
        if isinstance(f, DiscreteField):
            ok[n] = discrete_subdifferential_nonempty(f, int(i), **estimator_params)
        else:
            ok[n] = estimate_subdifferential(f, graph.point(int(i)), **estimator_params).nonempty
    fraction = float(ok.mean())
    logger.info(f"[Density] {f.name}: {ok.sum()}/{dom.size} vertices with nonempty D⁻ estimate")
    return DensityReport(fraction, dom[ok], dom[~ok])


def gradient_chart(f, p):
    """Chart components of the (analytic or finite-difference) gradient at p."""
    components = gradient_components(f, p.coords[None])[0]
    B = p.manifold.tangent_basis(p.coords[None])[0]
    return B.T @ components
