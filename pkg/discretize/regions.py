"""
Regions and boundary bands.

A region Ω is given by a signed level function that is positive inside. On
a graph, Ω's boundary is the band of vertices on either side of the level
set: Ω-vertices with a neighbor outside, plus outside vertices with a
neighbor in Ω.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import PartitionError

logger = logging.getLogger(__name__)

_REGION_REGISTRY = {}


def register_region(name):
    def decorator(factory):
        _REGION_REGISTRY[name] = factory
        return factory
    return decorator


def get_region(name, manifold=None, **params):
    if name not in _REGION_REGISTRY:
        raise PartitionError(f"Region '{name}' is not registered. Available: {sorted(_REGION_REGISTRY)}")
    return _REGION_REGISTRY[name](manifold=manifold, **params)


def available_regions():
    return sorted(_REGION_REGISTRY)


@dataclass(frozen=True, eq=False)
class Region:
    """
    Open region {level > 0}.

    `boundary_distance`, when known, is the analytic distance to the
    region's boundary and feeds error-vs-analytic reports.
    """
    name: str
    level: object
    boundary_distance: object = None
    params: dict = field(default_factory=dict)

    def contains(self, X):
        return np.asarray(self.level(np.atleast_2d(X))) > 0.0


@register_region('box')
def box(manifold=None, lo=0.0, hi=1.0):
    def level(X):
        return np.min(np.minimum(X - lo, hi - X), axis=-1)

    def boundary_distance(X):
        return np.maximum(level(X), 0.0)

    return Region('box', level, boundary_distance, {'lo': lo, 'hi': hi})


@register_region('unit_square')
def unit_square(manifold=None):
    region = box(lo=0.0, hi=1.0)
    return Region('unit_square', region.level, region.boundary_distance)


@register_region('interval')
def interval(manifold=None, a=-1.0, b=1.0):
    def level(X):
        return np.minimum(X[:, 0] - a, b - X[:, 0])

    return Region('interval', level, lambda X: np.maximum(level(X), 0.0), {'a': a, 'b': b})


@register_region('northern_hemisphere')
def northern_hemisphere(manifold=None):
    def level(X):
        return X[:, 2]

    def boundary_distance(X):
        # Geodesic distance to the equator is |π/2 − polar angle|.
        return np.abs(np.arcsin(np.clip(X[:, 2], -1.0, 1.0)))

    return Region('northern_hemisphere', level, boundary_distance)


@register_region('geodesic_ball')
def geodesic_ball(manifold=None, center=None, radius=1.0):
    if manifold is None or not manifold.closed_form:
        raise PartitionError("geodesic_ball needs a manifold with closed-form distance")
    c = np.asarray(center, dtype=float).reshape(1, -1)

    def level(X):
        return radius - manifold.distance_closed(np.repeat(c, X.shape[0], axis=0), X)

    return Region('geodesic_ball', level, lambda X: np.abs(level(X)), {'center': c[0].tolist(), 'radius': radius})


@register_region('annulus')
def annulus(manifold=None, r_in=1.2, r_out=2.5):
    """Chart annulus r_in < |x| < r_out on the surfaces of revolution."""
    def level(X):
        r = np.linalg.norm(X[:, :2], axis=-1)
        return np.minimum(r - r_in, r_out - r)

    return Region('annulus', level, None, {'r_in': r_in, 'r_out': r_out})


@dataclass(frozen=True, eq=False)
class BoundarySet:
    """Vertex partition: boundary band, interior, and the remaining exterior."""
    graph: object
    boundary: np.ndarray
    interior: np.ndarray
    exterior: np.ndarray
    region: Region

    def describe(self):
        return {
            'region': self.region.name,
            'params': self.region.params,
            'boundary': int(self.boundary.size),
            'interior': int(self.interior.size),
            'exterior': int(self.exterior.size),
        }


def partition(graph, region):
    """
    Split graph vertices by a region.

    Raises:
        PartitionError: Ω misses the cloud, covers all of it (no boundary),
            or leaves no interior vertex
    """
    inside = region.contains(graph.points)
    if not inside.any():
        raise PartitionError(f"region {region.name} contains no vertex")
    if inside.all():
        raise PartitionError(f"region {region.name} contains every vertex; there is no boundary")
    src, dst, _ = graph.directed_edges
    crossing = inside[src] != inside[dst]
    band = np.zeros(graph.n, dtype=bool)
    band[src[crossing]] = True
    boundary = np.flatnonzero(band)
    interior = np.flatnonzero(inside & ~band)
    exterior = np.flatnonzero(~inside & ~band)
    if interior.size == 0:
        raise PartitionError(f"region {region.name} has no interior vertices at this resolution")
    logger.info(
        f"[Partition] {region.name}: {boundary.size} boundary, {interior.size} interior, {exterior.size} exterior"
    )
    return BoundarySet(graph, boundary, interior, exterior, region)
