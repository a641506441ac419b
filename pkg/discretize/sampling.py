"""
Point Cloud Sampling
Deterministic random and grid point clouds on catalog manifolds.
"""
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from manifolds.types import Point

from .exceptions import EmptySampleError, UnsupportedGridError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointCloud:
    manifold: object
    points: np.ndarray
    seed: int = 0
    method: str = "random"

    def __post_init__(self):
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if points.shape[0] == 0:
            raise EmptySampleError("point cloud is empty")
        inside = self.manifold.contains(points)
        if not np.all(inside):
            raise EmptySampleError(f"{np.count_nonzero(~inside)} points lie outside the domain of {self.manifold.name}")
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    def __len__(self):
        return self.points.shape[0]

    def point(self, i):
        return Point(self.manifold, self.points[i])


def sample(manifold, n, seed=0):
    """
    Draw n points with the manifold's sampling scheme.

    Args:
        manifold: Catalog manifold
        n: Number of points (>= 1)
        seed: Seed for numpy's default_rng; identical seeds give identical clouds

    Returns:
        PointCloud
    """
    n = int(n)
    if n < 1:
        raise EmptySampleError(f"need at least one point, got n = {n}")
    rng = np.random.default_rng(seed)
    points = manifold.sample_points(n, rng)
    logger.info(f"[Sample] {n} points on {manifold.name} (seed {seed})")
    return PointCloud(manifold, points, seed=int(seed), method="random")


def grid(manifold, m):
    """
    Regular grid with m nodes per axis.

    Euclidean manifolds use the closed sampling box [lo, hi]^dim (spacing
    (hi - lo)/(m - 1)); the torus uses the periodic angles 2πi/m. Surfaces of
    revolution get a polar grid over their sampling annulus: m radii and
    enough angles that cells are square at the mid radius.
    """
    m = int(m)
    if m < 2:
        raise EmptySampleError(f"grid needs at least two nodes per axis, got {m}")
    if hasattr(manifold, 'sample_annulus'):
        return PointCloud(manifold, _polar_grid(manifold, m), seed=0, method="grid")
    if manifold.name == 'euclidean':
        axis = np.linspace(manifold.lo, manifold.hi, m)
    elif manifold.name == 'torus':
        axis = 2.0 * np.pi * np.arange(m) / m
    else:
        raise UnsupportedGridError(f"grids are only defined on flat manifolds and surfaces of revolution, not {manifold.name}")
    points = np.array(list(itertools.product(axis, repeat=manifold.dim)), dtype=float)
    return PointCloud(manifold, points, seed=0, method="grid")


def _polar_grid(manifold, m):
    lo, hi = manifold.sample_annulus
    radii = np.linspace(lo, hi, m)
    step = (hi - lo) / (m - 1)
    n_theta = max(8, int(round(np.pi * (lo + hi) / step)))
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    r, t = np.meshgrid(radii, theta, indexing='ij')
    return np.stack([(r * np.cos(t)).ravel(), (r * np.sin(t)).ravel()], axis=1)
