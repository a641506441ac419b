"""
Smooth bump functions b(y) = θ(d(y, p)/δ).

The profile θ is built from ψ(t) = exp(-1/t) (t > 0), ψ = 0 otherwise:

    θ(s) = ψ(1 - s) / (ψ(1 - s) + ψ(s - 1/3))

so θ = 1 on (-inf, 1/3], θ = 0 on [1, inf), and θ is smooth and
nonincreasing. R = sup|θ′| is computed once on a dense grid; a bump of
radius δ then has gradient norm at most R/δ.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from discretize.fields import ScalarField
from discretize.graphs import pair_lengths
from manifolds.geometry import covector_norm_batch, log_batch, lower_batch, normal_chart

from .exceptions import PreconditionError
from .probes import fd_gradient_components

logger = logging.getLogger(__name__)

PROFILE_GRID = 200_001


def _psi(t):
    t = np.asarray(t, dtype=float)
    positive = t > 0.0
    return np.where(positive, np.exp(-1.0 / np.where(positive, t, 1.0)), 0.0)


def _psi_prime(t):
    t = np.asarray(t, dtype=float)
    positive = t > 0.0
    safe = np.where(positive, t, 1.0)
    return np.where(positive, np.exp(-1.0 / safe) / safe ** 2, 0.0)


class BumpProfile:
    """θ: smooth, nonincreasing, 1 on (-inf, 1/3], 0 on [1, inf)."""

    def __call__(self, s):
        a, b = _psi(1.0 - s), _psi(np.asarray(s) - 1.0 / 3.0)
        return a / (a + b)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        a, b = _psi(1.0 - s), _psi(s - 1.0 / 3.0)
        return -(_psi_prime(1.0 - s) * b + a * _psi_prime(s - 1.0 / 3.0)) / (a + b) ** 2

    @cached_property
    def lipschitz(self):
        """R = sup|θ′|."""
        s = np.linspace(1.0 / 3.0, 1.0, PROFILE_GRID)
        return float(np.max(np.abs(self.derivative(s))))


STANDARD_PROFILE = BumpProfile()


def distances_from(point, X):
    """d(p, x) for each row of X; +inf where a shooting-based length could not be resolved."""
    M = point.manifold
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if M.closed_form:
        return M.distance_closed(np.repeat(point.coords[None], X.shape[0], axis=0), X)
    stacked = np.concatenate([point.coords[None], X])
    J = np.arange(1, stacked.shape[0])
    return pair_lengths(M, stacked, np.zeros_like(J), J)


class BumpField(ScalarField):
    """b(y) = scale·θ(d(y, p)/δ), supported in B(p, δ)."""

    has_differential = True

    def __init__(self, center, delta, profile=STANDARD_PROFILE, scale=1.0):
        super().__init__(center.manifold)
        self.center = center
        self.delta = float(delta)
        self.profile = profile
        self.scale = float(scale)
        self.name = "bump"

    @property
    def lipschitz_bound(self):
        return self.scale * self.profile.lipschitz / self.delta

    @property
    def sup_norm(self):
        return abs(self.scale)

    def scaled(self, factor):
        return BumpField(self.center, self.delta, self.profile, self.scale * factor)

    def values_at(self, X):
        d = distances_from(self.center, X)
        return self.scale * np.where(d < self.delta, self.profile(d / self.delta), 0.0)

    def differential_at(self, X):
        """scale·θ′(d/δ)/δ · ∂d/∂x with ∂d/∂x = -flat(log_x p)/d."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        M = self.manifold
        d = distances_from(self.center, X)
        out = np.zeros_like(X)
        active = (d > self.delta / 3.0) & (d < self.delta)
        if active.any():
            Xa = X[active]
            V = log_batch(M, Xa, np.repeat(self.center.coords[None], Xa.shape[0], axis=0), check_radius=False)
            grad_d = -lower_batch(M, Xa, V) / d[active, None]
            out[active] = self.scale * (self.profile.derivative(d[active] / self.delta) / self.delta)[:, None] * grad_d
        return out


def bump(p, delta, profile=STANDARD_PROFILE):
    """
    Bump of radius δ at p.

    Raises:
        PreconditionError: δ is not below the working radius at p
    """
    radius = float(p.manifold.radius_at(p.coords[None])[0])
    if not 0.0 < delta < radius:
        raise PreconditionError(f"bump radius {delta} must lie in (0, {radius}) at {p.coords}")
    return BumpField(p, delta, profile)


@dataclass(frozen=True, eq=False)
class ProductBump:
    """b₁(x₁)·b₂(x₂) on M×M; zero once the product distance reaches 2δ."""
    first: BumpField
    second: BumpField

    @property
    def delta(self):
        return self.first.delta

    @property
    def support_radius(self):
        return 2.0 * self.delta

    @property
    def lipschitz_bound(self):
        return 2.0 * np.sqrt(2.0) * self.first.profile.lipschitz / self.delta

    def values_at(self, X1, X2):
        return self.first.values_at(X1) * self.second.values_at(X2)

    def gradient_norms(self, X1, X2):
        M = self.first.manifold
        g1 = covector_norm_batch(M, np.atleast_2d(X1), self.first.differential_at(X1)) * self.second.values_at(X2)
        g2 = covector_norm_batch(M, np.atleast_2d(X2), self.second.differential_at(X2)) * self.first.values_at(X1)
        return np.sqrt(g1 ** 2 + g2 ** 2)

    def describe(self):
        return {
            'delta': self.delta,
            'support_radius': self.support_radius,
            'lipschitz_bound': self.lipschitz_bound,
            'profile_R': self.first.profile.lipschitz,
        }


def product_bump(p1, p2, delta, profile=STANDARD_PROFILE):
    return ProductBump(bump(p1, delta, profile), bump(p2, delta, profile))


def ball_samples(p, radius, n, seed=0):
    """n points h⁻¹(w) with w uniform in the chart ball of the given radius."""
    M = p.manifold
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, M.dim))
    raw /= np.linalg.norm(raw, axis=-1, keepdims=True)
    W = raw * radius * rng.uniform(0.0, 1.0, (n, 1)) ** (1.0 / M.dim)
    return normal_chart(p, n_probe=0).from_chart_many(W)


def fd_gradient_sup(field, X, step=1e-6):
    """Largest finite-difference gradient norm of a field over the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return float(np.max(covector_norm_batch(field.manifold, X, fd_gradient_components(field, X, step))))
