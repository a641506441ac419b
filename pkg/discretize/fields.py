"""
Scalar fields on manifolds.

A field is extended-real valued: +inf (numpy's inf) is the sentinel for
points outside its domain and never coincides with a finite value. NaN and
-inf are rejected.
"""
from abc import ABC, abstractmethod

import numpy as np

from .exceptions import FieldFormatError, OffGraphError


def check_extended(values):
    """Validate an array of extended reals in (-inf, +inf]."""
    values = np.asarray(values, dtype=float)
    if np.isnan(values).any():
        raise FieldFormatError("field values contain NaN")
    if np.isneginf(values).any():
        raise FieldFormatError("field values contain -inf; fields take values in (-inf, +inf]")
    return values


class ScalarField(ABC):
    """
    f: M -> (-inf, +inf], evaluated on batches of coordinates.

    Subclasses with an analytic differential set `has_differential` and
    implement `differential_at`, returning covector components.
    """

    name = "field"
    has_differential = False

    def __init__(self, manifold):
        self.manifold = manifold

    @abstractmethod
    def values_at(self, X):
        """Values at the rows of X, shape (m,)."""

    def __call__(self, p):
        return float(self.values_at(p.coords[None])[0])

    def differential_at(self, X):
        raise NotImplementedError(f"{self.name} has no analytic differential")

    def on_graph(self, graph):
        """Discrete view: the field sampled at every vertex."""
        return DiscreteField(graph, self.values_at(graph.points), name=self.name)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} on {self.manifold.name}>"


class DiscreteField(ScalarField):
    """Values on the vertices of a geodesic graph; defined only at vertices."""

    def __init__(self, graph, values, name="discrete"):
        super().__init__(graph.manifold)
        values = check_extended(np.array(values, dtype=float).reshape(-1))
        if values.shape[0] != graph.n:
            raise FieldFormatError(f"field has {values.shape[0]} values for a graph with {graph.n} vertices")
        values.setflags(write=False)
        self.graph = graph
        self.values = values
        self.name = name

    def values_at(self, X):
        idx = self.graph.vertex_indices(X)
        if np.any(idx < 0):
            raise OffGraphError(f"{np.count_nonzero(idx < 0)} evaluation points are not graph vertices")
        return self.values[idx]

    def at(self, i):
        return float(self.values[i])

    @property
    def finite_mask(self):
        return np.isfinite(self.values)

    @property
    def dom(self):
        return np.flatnonzero(self.finite_mask)

    def is_finite(self):
        return bool(np.all(self.finite_mask))

    def sup_norm(self):
        finite = self.values[self.finite_mask]
        return float(np.max(np.abs(finite))) if finite.size else 0.0

    def with_values(self, values, name=None):
        return DiscreteField(self.graph, values, name=name or self.name)

    def maximum(self, other):
        return self.with_values(np.maximum(self.values, other.values), name=f"max({self.name},{other.name})")

    def sup_distance(self, other):
        """sup |u - v| over vertices where both are finite."""
        both = self.finite_mask & other.finite_mask
        return float(np.max(np.abs(self.values[both] - other.values[both]))) if both.any() else 0.0
