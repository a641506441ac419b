"""
Directional probes and sub/supergradient tests.

Probes work in the normal chart h = exp_p⁻¹ at the base point. A covector ζ
is tested against f through the normalized increments

    [f(h⁻¹(w)) - f(p) - ⟨ζ, w⟩] / |w|

on spheres |w| = ρ of a decreasing radii schedule. A direction violates when
one of its increments is below -margin and its trend agrees: the quotients
of the two deepest radius pairs, extrapolated linearly to ρ = 0, give a limit
that stays below -margin after adding TREND_SAFETY times the change between
the two extrapolations. The trend filter keeps the remainder of smooth fields
at finite radius from counting; with a single radius only the increment rule
applies. Consistency is evidence up to the deepest radius probed, never a
proof.

Discrete fields are probed along their incident edges instead: the
increments are the one-sided edge slopes minus ⟨ζ, ĉ_j⟩, compared with
-margin.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from discretize.fields import DiscreteField
from discretize.exceptions import OffGraphError
from manifolds.geometry import (
    covector_from_chart_batch, covector_norm_batch, exp_batch, from_chart_batch, normal_chart, transport_batch,
)
from manifolds.types import CotangentVector, TangentVector

from .exceptions import EmptyFanError, FieldDomainError
from .fields import negate

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = 8
DEFAULT_MARGIN = 1e-6
TREND_SAFETY = 2.0
FD_STEP = 1e-6
PLANAR_DIRECTIONS = 32
SPATIAL_DIRECTIONS = 128


def default_radii(manifold, coords, levels=DEFAULT_LEVELS):
    """Geometric schedule from 0.5·r_M(p) down by factor 0.5."""
    start = 0.5 * float(manifold.radius_at(np.atleast_2d(coords))[0])
    return start * 0.5 ** np.arange(levels)


def unit_directions(dim, count=None):
    """
    Quasi-uniform unit vectors in ℝ^dim: ±1 on the line, equally spaced
    angles in the plane, a Fibonacci lattice in space.
    """
    if count is not None and count < 1:
        raise EmptyFanError("a direction fan needs at least one direction")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        count = count or PLANAR_DIRECTIONS
        angles = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    count = count or SPATIAL_DIRECTIONS
    k = np.arange(count) + 0.5
    polar = np.arccos(1.0 - 2.0 * k / count)
    azimuth = np.pi * (1.0 + 5.0 ** 0.5) * k
    return np.stack([np.cos(azimuth) * np.sin(polar), np.sin(azimuth) * np.sin(polar), np.cos(polar)], axis=1)


def check_schedule(radii):
    radii = np.asarray(radii, dtype=float).reshape(-1)
    if radii.size == 0 or np.any(radii <= 0.0) or np.any(np.diff(radii) >= 0.0):
        raise ValueError(f"radii schedule must be positive and strictly decreasing, got {radii}")
    return radii


def radial_quotients(f, fp, chart, radii, U):
    """(f(h⁻¹(ρu)) - f(p)) / ρ with one row per radius and one column per direction."""
    quotients = np.empty((radii.size, U.shape[0]))
    for level, rho in enumerate(radii):
        quotients[level] = (f.values_at(chart.from_chart_many(rho * U)) - fp) / rho
    return quotients


def trend_bounds(radii, quotients, safety=TREND_SAFETY):
    """
    Per-direction upper estimate of the ρ → 0 limit of the quotients.

    Consecutive radii are extrapolated linearly to ρ = 0; the deepest
    extrapolation plus `safety` times its change from the previous one is the
    bound (with two radii the change of the quotients themselves is used).
    Directions without a finite bound get -inf, which leaves them to the
    increment rule alone.
    """
    q = np.asarray(quotients, dtype=float)
    if q.shape[0] < 2:
        return np.full(q.shape[1:], -np.inf)
    r = (radii[1:] / radii[:-1])[:, None]
    with np.errstate(invalid='ignore'):
        limits = (q[1:] - r * q[:-1]) / (1.0 - r)
        error = np.abs(limits[-1] - limits[-2]) if limits.shape[0] > 1 else np.abs(q[-1] - q[-2])
        bound = limits[-1] + safety * error
    return np.where(np.isfinite(bound), bound, -np.inf)


def base_value(f, p):
    value = f(p)
    if not np.isfinite(value):
        raise FieldDomainError(f"{f.name} is +inf at {p.coords}")
    return value


def affine_fit(offsets, increments):
    """Least-squares slope c with increments ≈ offsets @ c."""
    c, *_ = np.linalg.lstsq(np.asarray(offsets, dtype=float), np.asarray(increments, dtype=float), rcond=None)
    return c


def gradient_components(f, X, step=FD_STEP):
    """
    Differential components at the rows of X: analytic when the field has
    one, central differences in the normal chart otherwise. Discrete fields
    use the least-squares affine fit over incident edges.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    M = f.manifold
    if f.has_differential:
        return f.differential_at(X)
    if isinstance(f, DiscreteField):
        idx = f.graph.vertex_indices(X)
        if np.any(idx < 0):
            raise OffGraphError("discrete gradients are only defined at graph vertices")
        chart = np.array([discrete_gradient(f, int(i)) for i in idx])
        return covector_from_chart_batch(M, X, chart)
    return fd_gradient_components(f, X, step)


def fd_gradient_components(f, X, step=FD_STEP):
    """Central differences of f in the normal chart at each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    M = f.manifold
    m, n = X.shape[0], M.dim
    E = step * np.eye(n)
    P = np.repeat(X, 2 * n, axis=0)
    C = np.tile(np.concatenate([E, -E]), (m, 1))
    values = f.values_at(from_chart_batch(M, P, C)).reshape(m, 2, n)
    chart = (values[:, 0] - values[:, 1]) / (2.0 * step)
    return covector_from_chart_batch(M, X, chart)


def gradient_norms(f, X, step=FD_STEP):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return covector_norm_batch(f.manifold, X, gradient_components(f, X, step))


def discrete_gradient(field, i):
    """Chart slope of the affine fit of a discrete field over the edges at vertex i."""
    nbrs, _ = field.graph.neighbors(i)
    offsets = field.graph.offsets(i)
    return affine_fit(offsets, field.values[nbrs] - field.values[i])


def dini_inf_quotient(f, p, v, t_grid=None):
    """inf over t in the grid of (f(exp_p(t·v)) - f(p)) / t for a unit tangent v."""
    fp = base_value(f, p)
    M = p.manifold
    t = default_radii(M, p.coords) if t_grid is None else np.asarray(t_grid, dtype=float).reshape(-1)
    V = t[:, None] * v.components[None]
    values = f.values_at(exp_batch(M, np.repeat(p.coords[None], t.size, axis=0), V))
    return float(np.min((values - fp) / t))


def generalized_directional(f, p, v, shrink_schedule=None, n_nearby=16, seed=0):
    """
    Sampled limsup of (f(exp_q(t·v_q)) - f(q)) / t over q near p and small t.

    v is parallel-transported from p to each sampled q; t is half the shrink
    radius. The value reported is the maximum at the finest shrink level.
    """
    M = p.manifold
    chart = normal_chart(p, n_probe=0)
    shrink = default_radii(M, p.coords)[-4:] if shrink_schedule is None else check_schedule(shrink_schedule)
    s = float(shrink[-1])
    if M.dim == 1:
        C = np.linspace(-s, s, n_nearby)[:, None]
    else:
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((n_nearby, M.dim))
        raw /= np.linalg.norm(raw, axis=-1, keepdims=True)
        C = raw * s * rng.uniform(0.0, 1.0, (n_nearby, 1)) ** (1.0 / M.dim)
    C = np.concatenate([np.zeros((1, M.dim)), C])
    Q = chart.from_chart_many(C)
    P = np.repeat(p.coords[None], Q.shape[0], axis=0)
    Vq = transport_batch(M, P, np.repeat(v.components[None], Q.shape[0], axis=0), Q)
    t = 0.5 * s
    values_q = f.values_at(Q)
    values_t = f.values_at(exp_batch(M, Q, t * Vq))
    finite = np.isfinite(values_q) & np.isfinite(values_t)
    return float(np.max((values_t[finite] - values_q[finite]) / t))


@dataclass(frozen=True, eq=False)
class SubgradientVerdict:
    """
    Outcome of a sub/supergradient test.

    `witness` is the probe vector (a tangent vector at p, with its chart
    coordinates in `witness_chart`) whose normalized increment fell below
    -margin; `probe_depth` is the smallest radius examined.
    """
    status: str
    covector: CotangentVector
    margin: float
    probe_depth: float
    increment: float
    witness: TangentVector = None
    witness_chart: np.ndarray = None
    witness_vertex: int = None
    kind: str = "sub"

    @property
    def violated(self):
        return self.status == 'violated'

    @property
    def consistent(self):
        return self.status == 'consistent'

    def to_json(self):
        data = {
            'status': self.status,
            'kind': self.kind,
            'covector': self.covector.components.tolist(),
            'margin': self.margin,
            'probe_depth': self.probe_depth,
            'increment': self.increment,
        }
        if self.witness is not None:
            data['witness'] = self.witness.components.tolist()
            data['witness_chart'] = self.witness_chart.tolist()
        return data


def screen_covectors(f, p, C, radii_schedule=None, margin=DEFAULT_MARGIN, directions=None, chart=None,
                     safety=TREND_SAFETY):
    """
    Batched test of chart covectors C (k, dim) against a closed-form field.

    Returns (violated mask, increment, witness chart vector, probe depth) per
    covector. A violated covector reports the lowest increment of its
    witness direction, the direction whose trend lies furthest below -margin;
    a consistent one reports its lowest increment and the deepest radius.
    """
    fp = base_value(f, p)
    M = p.manifold
    C = np.atleast_2d(np.asarray(C, dtype=float))
    radii = default_radii(M, p.coords) if radii_schedule is None else check_schedule(radii_schedule)
    U = unit_directions(M.dim) if directions is None else np.atleast_2d(np.asarray(directions, dtype=float))
    if U.shape[0] == 0:
        raise EmptyFanError("no probe directions")
    chart = chart or normal_chart(p, n_probe=0)

    quotients = radial_quotients(f, fp, chart, radii, U)
    slopes = C @ U.T
    lowest = np.min(quotients, axis=0)[None, :] - slopes
    trend = trend_bounds(radii, quotients, safety)[None, :] - slopes
    certified = (lowest < -margin) & (trend < -margin)
    violated = certified.any(axis=1)

    increment = np.min(lowest, axis=1)
    witness = np.zeros((C.shape[0], M.dim))
    depth = np.full(C.shape[0], float(radii[-1]))
    for row in np.flatnonzero(violated):
        j = int(np.argmin(np.where(certified[row], trend[row], np.inf)))
        level = int(np.argmin(quotients[:, j]))
        witness[row] = radii[level] * U[j]
        increment[row] = quotients[level, j] - slopes[row, j]
        depth[row] = radii[level]
    return violated, increment, witness, depth


def discrete_increments(field, i, C):
    """Edge-slope increments (k covectors × deg(i) edges) of a discrete field at vertex i."""
    nbrs, lengths = field.graph.neighbors(i)
    offsets = field.graph.offsets(i)
    norms = np.linalg.norm(offsets, axis=-1)
    units = offsets / norms[:, None]
    slopes = (field.values[nbrs] - field.values[i]) / norms
    C = np.atleast_2d(np.asarray(C, dtype=float))
    return slopes[None, :] - C @ units.T, nbrs, offsets, norms


def _discrete_verdict(field, p, zeta, margin):
    i = field.graph.vertex_index(p)
    if i is None:
        raise OffGraphError(f"{p.coords} is not a vertex of the field's graph")
    if not np.isfinite(field.values[i]):
        raise FieldDomainError(f"{field.name} is +inf at vertex {i}")
    c = zeta.chart_components()
    inc, nbrs, offsets, norms = discrete_increments(field, i, c)
    inc = inc[0]
    finite = np.isfinite(inc)
    bad = finite & (inc < -margin)
    depth = float(norms.min()) if norms.size else 0.0
    if bad.any():
        j = int(np.flatnonzero(bad)[np.argmin(inc[bad])])
        w = offsets[j]
        return SubgradientVerdict(
            'violated', zeta, margin=float(-inc[j]), probe_depth=float(norms[j]), increment=float(inc[j]),
            witness=_chart_tangent(p, w), witness_chart=w, witness_vertex=int(nbrs[j]),
        )
    lowest = float(inc[finite].min()) if finite.any() else float('inf')
    return SubgradientVerdict('consistent', zeta, margin=lowest, probe_depth=depth, increment=lowest)


def _chart_tangent(p, w):
    B = p.manifold.tangent_basis(p.coords[None])[0]
    return TangentVector(p, B @ w)


def test_subgradient(f, p, zeta, radii_schedule=None, margin=DEFAULT_MARGIN, directions=None, safety=TREND_SAFETY):
    """
    Test ζ ∈ D⁻f(p).

    Returns a violated verdict with a witness direction when some normalized
    increment drops below -margin and the direction's trend confirms it,
    else consistent with the probe depth. The witness increment is itself
    below -margin, so reevaluate_witness reproduces the certificate.
    """
    if isinstance(f, DiscreteField):
        return _discrete_verdict(f, p, zeta, margin)
    chart = normal_chart(p, n_probe=0)
    c = zeta.chart_components()
    violated, increment, witness, depth = screen_covectors(
        f, p, c[None], radii_schedule=radii_schedule, margin=margin, directions=directions, chart=chart,
        safety=safety,
    )
    if violated[0]:
        w = witness[0]
        return SubgradientVerdict(
            'violated', zeta, margin=float(-increment[0]), probe_depth=float(depth[0]),
            increment=float(increment[0]), witness=_chart_tangent(p, w), witness_chart=w,
        )
    return SubgradientVerdict(
        'consistent', zeta, margin=float(increment[0]), probe_depth=float(depth[0]), increment=float(increment[0]),
    )


def test_supergradient(f, p, zeta, **kwargs):
    """ζ ∈ D⁺f(p) iff -ζ ∈ D⁻(-f)(p)."""
    verdict = test_subgradient(negate(f), p, -zeta, **kwargs)
    return replace(verdict, covector=zeta, kind='super')


def reevaluate_witness(f, p, verdict):
    """Recompute the normalized increment at a verdict's witness."""
    if verdict.witness_chart is None:
        raise ValueError("only violated verdicts carry a witness")
    g, zeta = (f, verdict.covector) if verdict.kind == 'sub' else (negate(f), -verdict.covector)
    w = verdict.witness_chart
    rho = float(np.linalg.norm(w))
    if verdict.witness_vertex is not None:
        value = float(g.values[verdict.witness_vertex])
    else:
        value = float(g.values_at(normal_chart(p, n_probe=0).from_chart_many(w[None]))[0])
    return (value - g(p)) / rho - float(zeta.chart_components() @ w) / rho


def as_covector(p, chart_components):
    """CotangentVector at p from orthonormal-frame components."""
    M = p.manifold
    return CotangentVector(p, covector_from_chart_batch(M, p.coords[None], np.atleast_2d(chart_components))[0])
