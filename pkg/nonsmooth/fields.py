"""
Closed-form scalar fields and the field catalog.

Catalog fields are registered by name so run configurations can refer to
them (`get_field('sq_distance', M, center=[...])`). Covector components
follow the manifold's representation: they pair with tangent components by
the plain dot product, so the Euclidean gradient of a coordinate expression
is a valid differential on every catalog manifold.
"""
import logging

import numpy as np

from discretize.fields import DiscreteField, ScalarField
from manifolds.geometry import distance_batch, log_batch, lower_batch

from .exceptions import ExtendedRealError, NonsmoothError
from .extended import ext_add, ext_scale

logger = logging.getLogger(__name__)

_FIELD_REGISTRY = {}


def register_field(name):
    def decorator(factory):
        _FIELD_REGISTRY[name] = factory
        return factory
    return decorator


def get_field(name, manifold, **params):
    if name not in _FIELD_REGISTRY:
        raise NonsmoothError(f"Field '{name}' is not registered. Available: {sorted(_FIELD_REGISTRY)}")
    return _FIELD_REGISTRY[name](manifold, **params)


def available_fields():
    return sorted(_FIELD_REGISTRY)


class ClosedFormField(ScalarField):
    """
    Field given by a vectorized evaluator, optionally with its differential.

    `convex` declares geodesic convexity; estimators use it to pick the
    support-function mode.
    """

    def __init__(self, manifold, name, func, differential=None, convex=False, params=None):
        super().__init__(manifold)
        self.name = name
        self._func = func
        self._differential = differential
        self.has_differential = differential is not None
        self.convex = convex
        self.params = params or {}

    def values_at(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self._func(X), dtype=float).reshape(-1)

    def differential_at(self, X):
        if self._differential is None:
            return super().differential_at(X)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(self._differential(X), dtype=float).reshape(X.shape[0], -1)

    def describe(self):
        return {'name': self.name, 'manifold': self.manifold.name, 'params': self.params, 'convex': self.convex}


class NegatedField(ScalarField):
    """-f for a field that is finite wherever it is evaluated."""

    def __init__(self, field):
        super().__init__(field.manifold)
        self.inner = field
        self.name = f"-{field.name}"
        self.has_differential = field.has_differential

    def values_at(self, X):
        values = self.inner.values_at(X)
        if np.isposinf(values).any():
            raise ExtendedRealError(f"cannot negate {self.inner.name}: it is +inf at an evaluation point")
        return -values

    def differential_at(self, X):
        return -self.inner.differential_at(X)


def negate(field):
    """-f, unwrapping double negations; discrete fields stay discrete."""
    if isinstance(field, NegatedField):
        return field.inner
    if isinstance(field, DiscreteField):
        if not field.is_finite():
            raise ExtendedRealError(f"cannot negate {field.name}: it takes the value +inf")
        return field.with_values(-field.values, name=f"-{field.name}")
    return NegatedField(field)


class SumField(ScalarField):
    def __init__(self, first, second):
        super().__init__(first.manifold)
        self.first, self.second = first, second
        self.name = f"({first.name}+{second.name})"
        self.has_differential = first.has_differential and second.has_differential

    def values_at(self, X):
        return ext_add(self.first.values_at(X), self.second.values_at(X))

    def differential_at(self, X):
        return self.first.differential_at(X) + self.second.differential_at(X)


class ProductField(ScalarField):
    def __init__(self, first, second):
        super().__init__(first.manifold)
        self.first, self.second = first, second
        self.name = f"({first.name}*{second.name})"
        self.has_differential = first.has_differential and second.has_differential

    def values_at(self, X):
        return self.first.values_at(X) * self.second.values_at(X)

    def differential_at(self, X):
        a, b = self.first.values_at(X), self.second.values_at(X)
        return b[:, None] * self.first.differential_at(X) + a[:, None] * self.second.differential_at(X)


class ScaledField(ScalarField):
    def __init__(self, factor, field):
        super().__init__(field.manifold)
        self.factor = float(factor)
        self.field = field
        self.name = f"{self.factor:g}*{field.name}"
        self.has_differential = field.has_differential

    def values_at(self, X):
        return ext_scale(self.factor, self.field.values_at(X))

    def differential_at(self, X):
        return self.factor * self.field.differential_at(X)


class ComposedField(ScalarField):
    """f ∘ g for a differentiable map g: N → M and a field f on M."""

    def __init__(self, field, mapping):
        super().__init__(mapping.source)
        self.field = field
        self.mapping = mapping
        self.name = f"{field.name}∘{mapping.name}"
        self.has_differential = field.has_differential

    def values_at(self, X):
        return self.field.values_at(self.mapping.apply(X))

    def differential_at(self, X):
        Y = self.mapping.apply(X)
        return np.einsum('ma,mab->mb', self.field.differential_at(Y), self.mapping.jacobian(X))


def _point_array(manifold, point):
    return np.asarray(point, dtype=float).reshape(1, manifold.ambient_dim)


def _require_closed_form(manifold, name):
    if not manifold.closed_form:
        raise NonsmoothError(f"field '{name}' needs a manifold with closed-form distance, got {manifold.name}")


@register_field('abs')
def abs_field(manifold, center=None):
    """Euclidean norm |x - c| (|x| on ℝ)."""
    c = np.zeros((1, manifold.ambient_dim)) if center is None else _point_array(manifold, center)

    def func(X):
        return np.linalg.norm(X - c, axis=-1)

    def differential(X):
        D = X - c
        r = np.linalg.norm(D, axis=-1, keepdims=True)
        return np.divide(D, r, out=np.zeros_like(D), where=r > 0)

    return ClosedFormField(manifold, 'abs', func, differential, convex=True, params={'center': c[0].tolist()})


@register_field('neg_abs')
def neg_abs_field(manifold, center=None):
    field = abs_field(manifold, center=center)
    return ClosedFormField(
        manifold, 'neg_abs', lambda X: -field.values_at(X), lambda X: -field.differential_at(X), params=field.params
    )


@register_field('linear')
def linear_field(manifold, a=None, b=0.0):
    a = np.ones(manifold.ambient_dim) if a is None else np.asarray(a, dtype=float).reshape(-1)

    def func(X):
        return X @ a + b

    return ClosedFormField(
        manifold, 'linear', func, lambda X: np.tile(a, (X.shape[0], 1)), convex=True,
        params={'a': a.tolist(), 'b': b},
    )


@register_field('abs_linear')
def abs_linear_field(manifold, a=None):
    """|⟨a, x⟩|, convex with D⁻ at 0 equal to the segment [-a, a]."""
    a = np.ones(manifold.ambient_dim) if a is None else np.asarray(a, dtype=float).reshape(-1)

    def differential(X):
        return np.sign(X @ a)[:, None] * a[None]

    return ClosedFormField(
        manifold, 'abs_linear', lambda X: np.abs(X @ a), differential, convex=True, params={'a': a.tolist()}
    )


@register_field('power')
def power_field(manifold, exponent=0.75, scale=1.0):
    """scale·|x|^exponent on the first coordinate."""

    def func(X):
        return scale * np.abs(X[:, 0]) ** exponent

    params = {'exponent': exponent, 'scale': scale}
    if exponent <= 1.0:
        return ClosedFormField(manifold, 'power', func, convex=exponent == 1.0, params=params)

    def differential(X):
        D = np.zeros_like(X)
        D[:, 0] = scale * exponent * np.sign(X[:, 0]) * np.abs(X[:, 0]) ** (exponent - 1.0)
        return D

    return ClosedFormField(manifold, 'power', func, differential, convex=True, params=params)


@register_field('step')
def step_field(manifold, a=0.0, b=1.0, inside=0.0, outside=1.0):
    """`inside` on the closed interval [a, b] of the first coordinate, `outside` elsewhere."""

    def func(X):
        within = (X[:, 0] >= a) & (X[:, 0] <= b)
        return np.where(within, inside, outside)

    return ClosedFormField(
        manifold, 'step', func, params={'a': a, 'b': b, 'inside': inside, 'outside': outside}
    )


@register_field('sq_distance')
def sq_distance_field(manifold, center=None):
    """d(x, c)²; its differential is -2·flat(log_x c)."""
    _require_closed_form(manifold, 'sq_distance')
    c = _default_center(manifold) if center is None else _point_array(manifold, center)

    def func(X):
        return manifold.distance_closed(np.repeat(c, X.shape[0], axis=0), X) ** 2

    def differential(X):
        V = log_batch(manifold, X, np.repeat(c, X.shape[0], axis=0), check_radius=False)
        return -2.0 * lower_batch(manifold, X, V)

    convex = manifold.name in ('euclidean', 'hyperbolic')
    return ClosedFormField(manifold, 'sq_distance', func, differential, convex=convex, params={'center': c[0].tolist()})


@register_field('distance')
def distance_field(manifold, center=None, scale=1.0):
    """scale·d(x, c), nondifferentiable at c."""
    c = _default_center(manifold) if center is None else _point_array(manifold, center)

    def func(X):
        C = np.repeat(c, X.shape[0], axis=0)
        if manifold.closed_form:
            return scale * manifold.distance_closed(C, X)
        return scale * distance_batch(manifold, C, X)

    def differential(X):
        C = np.repeat(c, X.shape[0], axis=0)
        V = log_batch(manifold, X, C, check_radius=False)
        d = np.sqrt(np.maximum(manifold.inner(X, V, V), 0.0))
        flat = lower_batch(manifold, X, V)
        return -scale * np.divide(flat, d[:, None], out=np.zeros_like(flat), where=d[:, None] > 0)

    convex = manifold.name in ('euclidean', 'hyperbolic')
    return ClosedFormField(
        manifold, 'distance', func, differential, convex=convex, params={'center': c[0].tolist(), 'scale': scale}
    )


@register_field('height_z')
def height_field(manifold):
    """The ambient z coordinate on S² (the height function)."""
    e_z = np.zeros(manifold.ambient_dim)
    e_z[-1] = 1.0

    def differential(X):
        return manifold.tangent_project(X, np.tile(e_z, (X.shape[0], 1)))

    return ClosedFormField(manifold, 'height_z', lambda X: X[:, -1], differential)


@register_field('surface_height')
def surface_height_field(manifold, scale=1.0, offset=0.0):
    """offset + scale·z on the surfaces of revolution z = 1/(x² + y² + shift)."""
    if not hasattr(manifold, 'height'):
        raise NonsmoothError(f"surface_height needs a surface of revolution, not {manifold.name}")

    return ClosedFormField(
        manifold, 'surface_height', lambda X: offset + scale * manifold.height(X),
        lambda X: scale * manifold.height_gradient(X), params={'scale': scale, 'offset': offset},
    )


@register_field('sine')
def sine_field(manifold, axis=0, amplitude=1.0, frequency=1.0, offset=0.0):
    """offset + amplitude·sin(frequency·x_axis); sin θ on the circle."""

    def func(X):
        return offset + amplitude * np.sin(frequency * X[:, axis])

    def differential(X):
        D = np.zeros_like(X)
        D[:, axis] = amplitude * frequency * np.cos(frequency * X[:, axis])
        return D

    params = {'axis': axis, 'amplitude': amplitude, 'frequency': frequency, 'offset': offset}
    return ClosedFormField(manifold, 'sine', func, differential, params=params)


@register_field('quadratic')
def quadratic_field(manifold, a=None, Q=None, c=0.0):
    """c + ⟨a, x⟩ + xᵀQx in the manifold's coordinates (ambient on S² and H²)."""
    n = manifold.ambient_dim
    a = np.zeros(n) if a is None else np.asarray(a, dtype=float).reshape(n)
    Q = np.zeros((n, n)) if Q is None else np.asarray(Q, dtype=float).reshape(n, n)
    S = Q + Q.T

    def func(X):
        return c + X @ a + np.einsum('mi,ij,mj->m', X, Q, X)

    def differential(X):
        return manifold.tangent_project(X, a[None] + X @ S.T)

    return ClosedFormField(manifold, 'quadratic', func, differential, params={'a': a.tolist(), 'Q': Q.tolist(), 'c': c})


@register_field('cap')
def cap_field(manifold, center=None, rho=1.0, amplitude=0.05, waves=2):
    """
    Paraboloid cap ρ² - d(x, c)² plus a small angular ripple on S².

    The ripple is amplitude·(d/ρ)²·sin(waves·φ) with φ the azimuth around c,
    so on the circle d = ρ the field oscillates with amplitude `amplitude`.
    """
    _require_closed_form(manifold, 'cap')
    c = _default_center(manifold) if center is None else _point_array(manifold, center)
    frame = manifold.tangent_basis(c)[0]

    def func(X):
        C = np.repeat(c, X.shape[0], axis=0)
        d = manifold.distance_closed(C, X)
        V = log_batch(manifold, C, X, check_radius=False)
        coords = V @ frame
        phi = np.arctan2(coords[:, 1], coords[:, 0])
        return rho ** 2 - d ** 2 + amplitude * (d / rho) ** 2 * np.sin(waves * phi)

    params = {'center': c[0].tolist(), 'rho': rho, 'amplitude': amplitude, 'waves': waves}
    return ClosedFormField(manifold, 'cap', func, params=params)


@register_field('constant')
def constant_field(manifold, value=0.0):
    return ClosedFormField(
        manifold, 'constant', lambda X: np.full(X.shape[0], float(value)), lambda X: np.zeros_like(X),
        convex=True, params={'value': value},
    )


def _default_center(manifold):
    """A fixed reference point p₀: the north pole, the hyperboloid vertex, or the origin."""
    if manifold.name == 'sphere':
        return np.array([[0.0, 0.0, 1.0]])
    if manifold.name == 'hyperbolic':
        return np.array([[1.0, 0.0, 0.0]])
    if manifold.name in ('cusp', 'funnel'):
        return np.array([[2.0, 0.0]])
    return np.zeros((1, manifold.ambient_dim))
