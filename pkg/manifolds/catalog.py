"""
Manifold Catalog
Built-in low-dimensional Riemannian manifolds with their metric, connection,
sampling scheme and (when available) closed-form geodesic kit.

All evaluators are batched: point arrays have shape (m, ambient_dim) and
tangent/covector arrays share that shape. Manifolds with ambient_dim > dim
(sphere, hyperboloid) carry tangent vectors as ambient vectors tangent to the
embedded surface; the rest use their global chart directly.
"""
import logging
import math
from abc import ABC, abstractmethod

import numpy as np

from .exceptions import UnknownManifoldError

logger = logging.getLogger(__name__)

_MANIFOLD_REGISTRY = {}

# Central-difference step for metric derivatives.
CHRISTOFFEL_FD_STEP = 1e-5


def register_manifold(name):
    """Class decorator adding a manifold to the catalog under `name`."""
    def decorator(cls):
        _MANIFOLD_REGISTRY[name] = cls
        cls.name = name
        return cls
    return decorator


def get_manifold(name, **params):
    """
    Instantiate a catalog manifold.

    Args:
        name: Registry key (e.g. 'sphere', 'hyperbolic', 'cusp')
        **params: Constructor parameters (e.g. dim for 'euclidean')

    Returns:
        Manifold: fresh instance
    """
    if name not in _MANIFOLD_REGISTRY:
        raise UnknownManifoldError(
            f"Manifold '{name}' is not registered. Available: {sorted(_MANIFOLD_REGISTRY)}"
        )
    return _MANIFOLD_REGISTRY[name](**params)


def available_manifolds():
    return sorted(_MANIFOLD_REGISTRY)


def lorentz_inner(a, b):
    """Minkowski pairing -a0 b0 + a1 b1 + ... along the last axis."""
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


def wrap_angle(theta):
    """Map angles into [0, 2π)."""
    return np.mod(theta, 2.0 * np.pi)


def shortest_angle(delta):
    """Map angle differences into (-π, π]."""
    return np.pi - np.mod(np.pi - delta, 2.0 * np.pi)


class Manifold(ABC):
    """
    A catalog manifold.

    Subclasses declare dim, ambient_dim and the radii constants. A radius of
    0.0 flags "zero or unknown"; math.inf means unbounded.
    """

    name = "abstract"
    dim = 0
    ambient_dim = 0
    injectivity_radius = 0.0
    convexity_radius = 0.0
    r_M = 0.0
    closed_form = False
    radii_are_estimates = False

    def __init__(self, **params):
        self.params = params

    def __repr__(self):
        extra = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{type(self).__name__}({extra})"

    def describe(self):
        """JSON-ready manifold spec {name, dim, params, r_M, i_M, c_M}."""
        return {
            'name': self.name,
            'dim': self.dim,
            'params': dict(self.params),
            'r_M': _json_radius(self.r_M),
            'i_M': _json_radius(self.injectivity_radius),
            'c_M': _json_radius(self.convexity_radius),
        }

    # ----- domain -------------------------------------------------------

    def contains(self, X):
        X = np.atleast_2d(X)
        return np.all(np.isfinite(X), axis=-1)

    def domain_margin(self, X):
        """Signed margin to the edge of the coordinate domain (positive inside)."""
        X = np.atleast_2d(X)
        return np.full(X.shape[0], np.inf)

    def project(self, X):
        """Snap coordinates back onto the manifold after integration."""
        return X

    def tangent_project(self, X, V):
        return V

    def radius_at(self, X):
        """Working radius at each point; constant unless the manifold says otherwise."""
        X = np.atleast_2d(X)
        return np.full(X.shape[0], self.r_M)

    # ----- metric and connection ---------------------------------------

    @abstractmethod
    def metric_matrix(self, X):
        """Gram matrices of shape (m, ambient_dim, ambient_dim)."""

    def inner(self, X, U, W):
        G = self.metric_matrix(X)
        return np.einsum('mi,mij,mj->m', U, G, W)

    def christoffel(self, X, U, W):
        """
        Contracted connection Γ(u, w)^k = Γ^k_ij u^i w^j.

        Default: central differences of the metric with step 1e-5. Only valid
        for chart manifolds (ambient_dim == dim).
        """
        X = np.atleast_2d(X)
        m, n = X.shape
        h = CHRISTOFFEL_FD_STEP
        dG = np.empty((m, n, n, n))  # dG[:, l, i, j] = ∂_l g_ij
        for l in range(n):
            e = np.zeros(n)
            e[l] = h
            dG[:, l] = (self.metric_matrix(X + e) - self.metric_matrix(X - e)) / (2.0 * h)
        # Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij), then raise l.
        first = 0.5 * (
            np.einsum('mijl,mi,mj->ml', dG, U, W)
            + np.einsum('mjil,mi,mj->ml', dG, U, W)
            - np.einsum('mlij,mi,mj->ml', dG, U, W)
        )
        G = self.metric_matrix(X)
        return np.linalg.solve(G, first[..., None])[..., 0]

    def tangent_basis(self, X):
        """
        g-orthonormal tangent frames, shape (m, ambient_dim, dim).

        Chart manifolds use the inverse transposed Cholesky factor of g.
        """
        G = self.metric_matrix(X)
        L = np.linalg.cholesky(G)
        eye = np.broadcast_to(np.eye(self.dim), G.shape)
        return np.swapaxes(np.linalg.solve(L, eye), 1, 2)

    # ----- sampling ----------------------------------------------------

    @abstractmethod
    def sample_points(self, n, rng):
        """Draw n points with the manifold's sampling scheme."""

    def prefilter_coords(self, X):
        """Coordinates handed to the k-NN tree before exact lengths are computed."""
        return X

    kdtree_boxsize = None

    # ----- closed-form kit ---------------------------------------------

    def exp_closed(self, X, V):
        raise NotImplementedError

    def log_closed(self, X, Y):
        raise NotImplementedError

    def transport_closed(self, X, W, Y):
        raise NotImplementedError

    def velocity_closed(self, X, U, t):
        """Velocity at time t of the geodesic leaving X with initial velocity U."""
        raise NotImplementedError

    def distance_closed(self, X, Y):
        raise NotImplementedError


def _json_radius(value):
    return "inf" if math.isinf(value) else float(value)


@register_manifold('euclidean')
class Euclidean(Manifold):
    """ℝⁿ with the flat metric; sampling box [lo, hi]ⁿ (default unit cube)."""

    injectivity_radius = math.inf
    convexity_radius = math.inf
    r_M = 10.0
    closed_form = True

    def __init__(self, dim=2, lo=0.0, hi=1.0, **params):
        if not 1 <= int(dim) <= 3:
            raise ValueError(f"dim must be 1..3, got {dim}")
        super().__init__(dim=int(dim), lo=float(lo), hi=float(hi), **params)
        self.dim = self.ambient_dim = int(dim)
        self.lo, self.hi = float(lo), float(hi)

    def metric_matrix(self, X):
        X = np.atleast_2d(X)
        return np.broadcast_to(np.eye(self.dim), (X.shape[0], self.dim, self.dim)).copy()

    def christoffel(self, X, U, W):
        return np.zeros_like(np.atleast_2d(U), dtype=float)

    def tangent_basis(self, X):
        X = np.atleast_2d(X)
        return np.broadcast_to(np.eye(self.dim), (X.shape[0], self.dim, self.dim)).copy()

    def sample_points(self, n, rng):
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def exp_closed(self, X, V):
        return X + V

    def log_closed(self, X, Y):
        return Y - X

    def transport_closed(self, X, W, Y):
        return np.array(W, dtype=float, copy=True)

    def velocity_closed(self, X, U, t):
        return np.array(U, dtype=float, copy=True)

    def distance_closed(self, X, Y):
        return np.linalg.norm(Y - X, axis=-1)


@register_manifold('torus')
class FlatTorus(Manifold):
    """Flat 2π-periodic torus in angle coordinates, dimension 1 (circle) to 3."""

    injectivity_radius = math.pi
    convexity_radius = math.pi / 2.0
    r_M = 1.5
    closed_form = True
    kdtree_boxsize = 2.0 * np.pi

    def __init__(self, dim=2, **params):
        if not 1 <= int(dim) <= 3:
            raise ValueError(f"dim must be 1..3, got {dim}")
        super().__init__(dim=int(dim), **params)
        self.dim = self.ambient_dim = int(dim)

    def contains(self, X):
        X = np.atleast_2d(X)
        return np.all((X >= 0.0) & (X < 2.0 * np.pi), axis=-1)

    def project(self, X):
        return wrap_angle(X)

    def metric_matrix(self, X):
        X = np.atleast_2d(X)
        return np.broadcast_to(np.eye(self.dim), (X.shape[0], self.dim, self.dim)).copy()

    def christoffel(self, X, U, W):
        return np.zeros_like(np.atleast_2d(U), dtype=float)

    def tangent_basis(self, X):
        X = np.atleast_2d(X)
        return np.broadcast_to(np.eye(self.dim), (X.shape[0], self.dim, self.dim)).copy()

    def sample_points(self, n, rng):
        return rng.uniform(0.0, 2.0 * np.pi, size=(n, self.dim))

    def exp_closed(self, X, V):
        return wrap_angle(X + V)

    def log_closed(self, X, Y):
        return shortest_angle(Y - X)

    def transport_closed(self, X, W, Y):
        return np.array(W, dtype=float, copy=True)

    def velocity_closed(self, X, U, t):
        return np.array(U, dtype=float, copy=True)

    def distance_closed(self, X, Y):
        return np.linalg.norm(shortest_angle(Y - X), axis=-1)


@register_manifold('sphere')
class Sphere(Manifold):
    """Unit sphere S² embedded in ℝ³ with the induced round metric."""

    dim = 2
    ambient_dim = 3
    injectivity_radius = math.pi
    convexity_radius = math.pi / 2.0
    r_M = 1.4
    closed_form = True

    def contains(self, X):
        X = np.atleast_2d(X)
        return np.abs(np.linalg.norm(X, axis=-1) - 1.0) < 1e-6

    def project(self, X):
        return X / np.linalg.norm(X, axis=-1, keepdims=True)

    def tangent_project(self, X, V):
        return V - np.sum(X * V, axis=-1, keepdims=True) * X

    def metric_matrix(self, X):
        X = np.atleast_2d(X)
        return np.broadcast_to(np.eye(3), (X.shape[0], 3, 3)).copy()

    def inner(self, X, U, W):
        return np.sum(U * W, axis=-1)

    def christoffel(self, X, U, W):
        # Extrinsic form: geodesics satisfy x'' = -|x'|² x.
        return np.sum(U * W, axis=-1, keepdims=True) * X

    def tangent_basis(self, X):
        X = np.atleast_2d(X)
        helper = np.zeros_like(X)
        helper[np.arange(X.shape[0]), np.argmin(np.abs(X), axis=-1)] = 1.0
        b1 = self.tangent_project(X, helper)
        b1 /= np.linalg.norm(b1, axis=-1, keepdims=True)
        b2 = np.cross(X, b1)
        return np.stack([b1, b2], axis=-1)

    def sample_points(self, n, rng):
        return self.project(rng.standard_normal((n, 3)))

    def exp_closed(self, X, V):
        norm = np.linalg.norm(V, axis=-1, keepdims=True)
        safe = np.where(norm > 0.0, norm, 1.0)
        Y = np.cos(norm) * X + np.sin(norm) * V / safe
        return self.project(np.where(norm > 0.0, Y, X))

    def log_closed(self, X, Y):
        d = self.distance_closed(X, Y)[:, None]
        U = self.tangent_project(X, Y - X)
        norm = np.linalg.norm(U, axis=-1, keepdims=True)
        safe = np.where(norm > 0.0, norm, 1.0)
        return np.where(norm > 0.0, d * U / safe, 0.0)

    def transport_closed(self, X, W, Y):
        coef = np.sum(Y * W, axis=-1, keepdims=True) / (1.0 + np.sum(X * Y, axis=-1, keepdims=True))
        return W - coef * (X + Y)

    def velocity_closed(self, X, U, t):
        norm = np.linalg.norm(U, axis=-1, keepdims=True)
        return -np.sin(t * norm) * norm * X + np.cos(t * norm) * U

    def distance_closed(self, X, Y):
        return 2.0 * np.arctan2(np.linalg.norm(X - Y, axis=-1), np.linalg.norm(X + Y, axis=-1))


@register_manifold('hyperbolic')
class Hyperbolic(Manifold):
    """Hyperbolic plane in the hyperboloid model {-x0² + x1² + x2² = -1, x0 > 0}."""

    dim = 2
    ambient_dim = 3
    injectivity_radius = math.inf
    convexity_radius = math.inf
    r_M = 5.0
    closed_form = True
    sample_radius = 3.0

    _J = np.diag([-1.0, 1.0, 1.0])

    def contains(self, X):
        X = np.atleast_2d(X)
        return (np.abs(lorentz_inner(X, X) + 1.0) < 1e-6 * np.maximum(1.0, X[:, 0] ** 2)) & (X[:, 0] > 0)

    def project(self, X):
        X = np.array(X, dtype=float, copy=True)
        X[:, 0] = np.sqrt(1.0 + np.sum(X[:, 1:] ** 2, axis=-1))
        return X

    def tangent_project(self, X, V):
        return V + lorentz_inner(X, V)[:, None] * X

    def metric_matrix(self, X):
        X = np.atleast_2d(X)
        return np.broadcast_to(self._J, (X.shape[0], 3, 3)).copy()

    def inner(self, X, U, W):
        return lorentz_inner(U, W)

    def christoffel(self, X, U, W):
        # Extrinsic form: geodesics satisfy x'' = <x', x'>_L x.
        return -lorentz_inner(U, W)[:, None] * X

    def tangent_basis(self, X):
        X = np.atleast_2d(X)
        m = X.shape[0]
        e1 = np.tile([0.0, 1.0, 0.0], (m, 1))
        e2 = np.tile([0.0, 0.0, 1.0], (m, 1))
        b1 = self.tangent_project(X, e1)
        b1 /= np.sqrt(lorentz_inner(b1, b1))[:, None]
        b2 = self.tangent_project(X, e2)
        b2 -= lorentz_inner(b2, b1)[:, None] * b1
        b2 /= np.sqrt(lorentz_inner(b2, b2))[:, None]
        return np.stack([b1, b2], axis=-1)

    def sample_points(self, n, rng):
        # Area-weighted in the geodesic disk of radius 3: cosh ρ uniform on [1, cosh 3].
        u = rng.uniform(0.0, 1.0, size=n)
        phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
        rho = np.arccosh(1.0 + u * (np.cosh(self.sample_radius) - 1.0))
        return np.stack([np.cosh(rho), np.sinh(rho) * np.cos(phi), np.sinh(rho) * np.sin(phi)], axis=-1)

    def exp_closed(self, X, V):
        norm = np.sqrt(np.maximum(lorentz_inner(V, V), 0.0))[:, None]
        safe = np.where(norm > 0.0, norm, 1.0)
        Y = np.cosh(norm) * X + np.sinh(norm) * V / safe
        return self.project(np.where(norm > 0.0, Y, X))

    def log_closed(self, X, Y):
        d = self.distance_closed(X, Y)[:, None]
        U = self.tangent_project(X, Y - X)
        norm = np.sqrt(np.maximum(lorentz_inner(U, U), 0.0))[:, None]
        safe = np.where(norm > 0.0, norm, 1.0)
        return np.where(norm > 0.0, d * U / safe, 0.0)

    def transport_closed(self, X, W, Y):
        coef = lorentz_inner(Y, W)[:, None] / (1.0 - lorentz_inner(X, Y)[:, None])
        return W + coef * (X + Y)

    def velocity_closed(self, X, U, t):
        norm = np.sqrt(np.maximum(lorentz_inner(U, U), 0.0))[:, None]
        return np.sinh(t * norm) * norm * X + np.cosh(t * norm) * U

    def distance_closed(self, X, Y):
        D = X - Y
        return 2.0 * np.arcsinh(np.sqrt(np.maximum(lorentz_inner(D, D), 0.0)) / 2.0)


class GraphSurface(Manifold):
    """
    Surface of revolution z = 1/(x² + y² + shift) in the (x, y) chart.

    Geodesics come from the ODE with closed-form Christoffel symbols
    Γ^k_ij = h_k h_ij / (1 + |∇h|²); there is no closed-form kit.
    """

    dim = 2
    ambient_dim = 2
    shift = 0.0
    domain_inner = 0.0
    sample_annulus = (0.0, 1.0)

    def _denominator(self, X):
        return np.sum(X ** 2, axis=-1) + self.shift

    def height(self, X):
        X = np.atleast_2d(X)
        return 1.0 / self._denominator(X)

    def height_gradient(self, X):
        X = np.atleast_2d(X)
        return -2.0 * X / self._denominator(X)[:, None] ** 2

    def height_hessian(self, X):
        X = np.atleast_2d(X)
        q = self._denominator(X)[:, None, None]
        eye = np.eye(2)[None]
        return -2.0 * eye / q ** 2 + 8.0 * np.einsum('mi,mj->mij', X, X) / q ** 3

    def contains(self, X):
        return self.domain_margin(X) > 0.0

    def domain_margin(self, X):
        X = np.atleast_2d(X)
        return np.linalg.norm(X, axis=-1) - self.domain_inner

    def metric_matrix(self, X):
        grad = self.height_gradient(X)
        return np.eye(2)[None] + np.einsum('mi,mj->mij', grad, grad)

    def christoffel(self, X, U, W):
        grad = self.height_gradient(X)
        hess = self.height_hessian(X)
        second = np.einsum('mi,mij,mj->m', U, hess, W)
        return grad * (second / (1.0 + np.sum(grad ** 2, axis=-1)))[:, None]

    def christoffel_from_metric(self, X, U, W):
        """Finite-difference Christoffel contraction, kept as a cross-check of the closed form."""
        return Manifold.christoffel(self, X, U, W)

    def sample_points(self, n, rng):
        lo, hi = self.sample_annulus
        chunks = []
        total = 0
        while total < n:
            batch = rng.uniform(-hi, hi, size=(2 * n, 2))
            r = np.linalg.norm(batch, axis=-1)
            batch = batch[(r > lo) & (r < hi)]
            chunks.append(batch)
            total += batch.shape[0]
        return np.concatenate(chunks)[:n]


@register_manifold('cusp')
class CuspSurface(GraphSurface):
    """
    z = 1/(x² + y²): injectivity radius zero (the neck pinches as r → 0), so
    the working radius shrinks with r and is reported per point.
    """

    shift = 0.0
    domain_inner = 0.2
    sample_annulus = (1.0, 3.0)
    injectivity_radius = 0.0
    convexity_radius = 0.0
    r_M = 0.8

    def radius_at(self, X):
        X = np.atleast_2d(X)
        return np.minimum(self.r_M, 0.45 * np.pi * np.linalg.norm(X, axis=-1))


@register_manifold('funnel')
class FunnelSurface(GraphSurface):
    """z = 1/(x² + y² − 1), z > 0: positive injectivity radius (radii are estimates)."""

    shift = -1.0
    domain_inner = 1.02
    sample_annulus = (math.sqrt(3.0), math.sqrt(10.0))
    injectivity_radius = 1.0
    convexity_radius = 1.0
    r_M = 0.8
    radii_are_estimates = True
