"""
Base-pointed geometric objects: points, tangent vectors, covectors, geodesics.

Components are stored in the manifold's representation (chart frame for chart
manifolds, ambient frame for embedded ones). Covectors pair with tangent
vectors by the plain dot product of components.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BasePointMismatchError, CoordinateShapeError, DomainExitError


def _as_vector(values):
    return np.asarray(values, dtype=float).reshape(-1)


@dataclass(frozen=True, eq=False)
class Point:
    manifold: object
    coords: np.ndarray

    def __post_init__(self):
        coords = _as_vector(self.coords)
        if coords.shape[0] != self.manifold.ambient_dim:
            raise CoordinateShapeError(
                f"{self.manifold.name} points need {self.manifold.ambient_dim} coordinates, got {coords.shape[0]}"
            )
        if not self.manifold.contains(coords[None])[0]:
            raise DomainExitError(f"{coords} is outside the coordinate domain of {self.manifold.name}")
        object.__setattr__(self, 'coords', coords)

    def same_as(self, other, atol=1e-12):
        return self.manifold is other.manifold and np.allclose(self.coords, other.coords, rtol=0.0, atol=atol)

    def to_json(self):
        return self.coords.tolist()


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: Point
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'components', _as_vector(self.components))

    @property
    def manifold(self):
        return self.base.manifold

    def norm(self):
        value = self.manifold.inner(self.base.coords[None], self.components[None], self.components[None])[0]
        return float(np.sqrt(max(value, 0.0)))

    def scaled(self, factor):
        return TangentVector(self.base, factor * self.components)

    def __add__(self, other):
        ensure_same_base(self.base, other.base)
        return TangentVector(self.base, self.components + other.components)

    def __neg__(self):
        return TangentVector(self.base, -self.components)


@dataclass(frozen=True, eq=False)
class CotangentVector:
    base: Point
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'components', _as_vector(self.components))

    @property
    def manifold(self):
        return self.base.manifold

    def __call__(self, vector):
        ensure_same_base(self.base, vector.base)
        return float(np.dot(self.components, vector.components))

    def chart_components(self):
        """Components against a g-orthonormal tangent frame at the base point."""
        B = self.manifold.tangent_basis(self.base.coords[None])[0]
        return B.T @ self.components

    def norm(self):
        """Dual norm sup{ζ(v): ‖v‖ ≤ 1}, equal to the norm of the raised vector."""
        return float(np.linalg.norm(self.chart_components()))

    def __add__(self, other):
        ensure_same_base(self.base, other.base)
        return CotangentVector(self.base, self.components + other.components)

    def __sub__(self, other):
        ensure_same_base(self.base, other.base)
        return CotangentVector(self.base, self.components - other.components)

    def __neg__(self):
        return CotangentVector(self.base, -self.components)

    def scaled(self, factor):
        return CotangentVector(self.base, factor * self.components)


@dataclass(frozen=True, eq=False)
class Geodesic:
    """Unit-speed geodesic t ↦ exp_base(t·direction), 0 ≤ t ≤ length."""
    base: Point
    direction: TangentVector
    length: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ensure_same_base(self.base, self.direction.base)
        norm = self.direction.norm()
        if norm == 0.0:
            raise ValueError("geodesic direction must be nonzero")
        if abs(norm - 1.0) > 1e-12:
            object.__setattr__(self, 'direction', self.direction.scaled(1.0 / norm))
        object.__setattr__(self, 'length', float(self.length))


def ensure_same_base(p, q):
    if not p.same_as(q):
        raise BasePointMismatchError(f"base points differ: {p.coords} vs {q.coords}")
