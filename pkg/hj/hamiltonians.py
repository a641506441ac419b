"""
Hamiltonians on the cotangent bundle.

A Hamiltonian evaluates F(x, ζ) on batches of points and covector
components. Norm-based Hamiltonians F(x, ζ) = H(‖ζ‖ₓ) - f(x) carry their
profile H and source field f, which is the structure the monotone solver
needs; anything else is `general` and gets verification only.

The equation attached to F is λ·u + F(x, du) = 0 with discount λ = 1 for the
stationary problem u + H(‖du‖) = f and λ = 0 for the eikonal equation.
"""
import logging
from abc import ABC, abstractmethod

import numpy as np

from manifolds.geometry import covector_norm_batch
from nonsmooth.fields import get_field

from .exceptions import HamiltonianError

logger = logging.getLogger(__name__)

_PROFILE_REGISTRY = {}

STRUCTURE_ATOL = 1e-10
MONOTONE_PROBE = np.linspace(0.0, 50.0, 501)


def register_profile(name):
    def decorator(cls):
        _PROFILE_REGISTRY[name] = cls
        cls.name = name
        return cls
    return decorator


def get_profile(name, **params):
    if name not in _PROFILE_REGISTRY:
        raise HamiltonianError(f"Profile '{name}' is not registered. Available: {sorted(_PROFILE_REGISTRY)}")
    return _PROFILE_REGISTRY[name](**params)


def available_profiles():
    return sorted(_PROFILE_REGISTRY)


class Profile(ABC):
    """Nondecreasing H: [0, ∞) → ℝ."""

    name = "profile"
    is_linear = False

    @abstractmethod
    def __call__(self, s):
        """H at each entry of s."""

    def describe(self):
        return {'name': self.name, 'params': self.params()}

    def params(self):
        return {}


@register_profile('linear')
class LinearProfile(Profile):
    """H(s) = slope·s + offset."""

    is_linear = True

    def __init__(self, slope=1.0, offset=0.0):
        if slope < 0.0:
            raise HamiltonianError(f"linear profile needs slope >= 0, got {slope}")
        self.slope = float(slope)
        self.offset = float(offset)

    def __call__(self, s):
        return self.slope * np.asarray(s, dtype=float) + self.offset

    def params(self):
        return {'slope': self.slope, 'offset': self.offset}


@register_profile('piecewise')
class PiecewiseProfile(Profile):
    """
    Linear interpolation of a table (knots, values) starting at s = 0,
    continued past the last knot with the last segment's slope.
    """

    def __init__(self, knots, values):
        knots = np.asarray(knots, dtype=float).reshape(-1)
        values = np.asarray(values, dtype=float).reshape(-1)
        if knots.size < 2 or knots.size != values.size:
            raise HamiltonianError("piecewise profile needs at least two (knot, value) pairs of equal length")
        if knots[0] != 0.0 or np.any(np.diff(knots) <= 0.0):
            raise HamiltonianError("piecewise knots must start at 0 and increase strictly")
        if np.any(np.diff(values) < 0.0):
            raise HamiltonianError("piecewise values must be nondecreasing")
        self.knots = knots
        self.values = values
        self.tail_slope = float((values[-1] - values[-2]) / (knots[-1] - knots[-2]))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inside = np.interp(s, self.knots, self.values)
        return np.where(s > self.knots[-1], self.values[-1] + self.tail_slope * (s - self.knots[-1]), inside)

    def params(self):
        return {'knots': self.knots.tolist(), 'values': self.values.tolist()}


@register_profile('power')
class PowerProfile(Profile):
    """H(s) = scale·s^exponent, exponent >= 1."""

    def __init__(self, exponent=2.0, scale=1.0):
        if exponent < 1.0 or scale < 0.0:
            raise HamiltonianError(f"power profile needs exponent >= 1 and scale >= 0, got {exponent}, {scale}")
        self.exponent = float(exponent)
        self.scale = float(scale)

    def __call__(self, s):
        return self.scale * np.asarray(s, dtype=float) ** self.exponent

    def params(self):
        return {'exponent': self.exponent, 'scale': self.scale}


class Hamiltonian:
    """
    F(x, ζ) on T*M.

    Attributes:
        tag: 'norm_based', 'pulled_back' or 'general'
        profile, source: H and f of a norm-based (or pulled-back norm-based) F
        bound: declared zero-section bound A with -A <= F(x, 0) <= A, or None
        modulus: declared ω(δ) callable, or None
        discount: λ in λ·u + F(x, du) = 0
    """

    def __init__(self, manifold, evaluator, tag='general', profile=None, source=None, bound=None, modulus=None,
                 discount=1.0, name="F"):
        if tag not in ('general', 'norm_based', 'pulled_back'):
            raise HamiltonianError(f"unknown Hamiltonian tag '{tag}'")
        if tag != 'general' and (profile is None or source is None):
            raise HamiltonianError(f"a {tag} Hamiltonian needs a profile and a source field")
        self.manifold = manifold
        self._evaluator = evaluator
        self.tag = tag
        self.profile = profile
        self.source = source
        self.bound = None if bound is None else float(bound)
        self.modulus = modulus
        self.discount = float(discount)
        self.name = name

    def __repr__(self):
        return f"<Hamiltonian {self.name} ({self.tag}) on {self.manifold.name}>"

    @property
    def solvable(self):
        return self.tag in ('norm_based', 'pulled_back') and self.discount == 1.0

    def evaluate(self, X, Z):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        return np.asarray(self._evaluator(X, Z), dtype=float).reshape(-1)

    def __call__(self, p, zeta):
        return float(self.evaluate(p.coords[None], zeta.components[None])[0])

    def zero_section(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.evaluate(X, np.zeros((X.shape[0], self.manifold.ambient_dim)))

    def zero_section_bound(self, X):
        """
        A with |F(x, 0)| <= A on the rows of X: the declared bound, checked.

        Raises:
            HamiltonianError: the declared bound fails at some row
        """
        observed = float(np.max(np.abs(self.zero_section(X))))
        if self.bound is None:
            return observed
        if observed > self.bound * (1.0 + 1e-12) + 1e-12:
            raise HamiltonianError(f"|F(x, 0)| reaches {observed:.6g}, above the declared bound A = {self.bound}")
        return self.bound

    def source_values(self, graph):
        values = self.source.values_at(graph.points)
        if not np.all(np.isfinite(values)):
            raise HamiltonianError(f"source field {self.source.name} is not finite on the graph")
        return values

    def scheme_lengths(self, graph):
        """Edge lengths the upwind scheme uses, aligned with graph.directed_edges."""
        return graph.directed_edges[2]

    def check_structure(self, X, count=8, seed=0):
        """
        Confirm the norm-based decomposition at the rows of X and that H is
        nondecreasing on the probe grid.

        Raises:
            HamiltonianError: either invariant fails
        """
        if self.tag != 'norm_based':
            return
        if np.any(np.diff(self.profile(MONOTONE_PROBE)) < -STRUCTURE_ATOL):
            raise HamiltonianError(f"profile {self.profile.name} decreases on the probe grid")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        rng = np.random.default_rng(seed)
        P = np.repeat(X, count, axis=0)
        Z = rng.uniform(-2.0, 2.0, (P.shape[0], self.manifold.ambient_dim))
        expected = self.profile(covector_norm_batch(self.manifold, P, Z)) - self.source.values_at(P)
        gap = float(np.max(np.abs(self.evaluate(P, Z) - expected)))
        if gap > STRUCTURE_ATOL:
            raise HamiltonianError(f"{self.name} departs from H(‖ζ‖) - f by {gap:.3g}")

    def describe(self):
        data = {'name': self.name, 'tag': self.tag, 'manifold': self.manifold.name, 'discount': self.discount, 'A': self.bound}
        if self.profile is not None:
            data['H'] = self.profile.describe()
        if self.source is not None:
            data['f'] = getattr(self.source, 'describe', lambda: {'name': self.source.name})()
        return data


def norm_hamiltonian(manifold, profile, source, bound=None, discount=1.0, name=None):
    """F(x, ζ) = H(‖ζ‖ₓ) - f(x)."""

    def evaluator(X, Z):
        return profile(covector_norm_batch(manifold, X, Z)) - source.values_at(X)

    return Hamiltonian(
        manifold, evaluator, tag='norm_based', profile=profile, source=source, bound=bound,
        discount=discount, name=name or f"{profile.name}(|ζ|) - {source.name}",
    )


def eikonal(manifold):
    """‖ζ‖ₓ - 1 with no discount: the equation ‖du‖ = 1."""
    return norm_hamiltonian(
        manifold, LinearProfile(1.0), get_field('constant', manifold, value=1.0), bound=1.0, discount=0.0,
        name="eikonal",
    )


def general_hamiltonian(manifold, func, bound=None, modulus=None, discount=1.0, name="F"):
    """Wrap an evaluator func(X, Z) -> (m,) with no solver structure."""
    return Hamiltonian(manifold, func, tag='general', bound=bound, modulus=modulus, discount=discount, name=name)


def build_hamiltonian(manifold, spec):
    """
    Hamiltonian from a validated spec {tag, H: {name, params}, f: {name, params}, A, discount}.

    Only norm-based specs can be built; general Hamiltonians are code, not JSON.
    """
    if spec.get('tag', 'norm_based') != 'norm_based':
        raise HamiltonianError("only norm_based Hamiltonians can be built from a spec")
    H = spec['H']
    f = spec['f']
    profile = get_profile(H['name'], **(H.get('params') or {}))
    source = get_field(f['name'], manifold, **(f.get('params') or {}))
    F = norm_hamiltonian(manifold, profile, source, bound=spec.get('A'), discount=spec.get('discount', 1.0))
    logger.info(f"[Hamiltonian] built {F.name} on {manifold.name}")
    return F
