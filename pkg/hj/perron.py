"""
Perron lifting of discrete subsolutions.

A lift at p₀ uses a D⁻ candidate ζ₀ with u(p₀) + F(p₀, ζ₀) < -3·tol. It
builds h, affine in the normal chart at p₀ with slope ζ₀ and h(p₀) = u(p₀),
adds a bump ε·θ(d(·, p₀)/δ) and replaces u by max{h + b, u} on the bump's
support. ε is halved until the lifted field verifies as a subsolution on
B(p₀, 2δ).
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import dijkstra

from discretize.graphs import pair_lengths
from manifolds.geometry import chart_coords_batch, covector_from_chart_batch
from nonsmooth.bumps import STANDARD_PROFILE
from nonsmooth.probes import DEFAULT_MARGIN

from .exceptions import VerificationPreconditionError
from .viscosity import checked_vertices, vertex_candidates, verify_viscosity

logger = logging.getLogger(__name__)

LIFT_FACTOR = 3.0
BUMP_REACH = 1.5
MAX_HALVINGS = 20


@dataclass(frozen=True)
class LiftInfo:
    lifted: bool
    vertex: int = None
    epsilon: float = 0.0
    delta: float = 0.0
    gap: float = 0.0
    scanned: int = 0
    reason: str = ""

    def to_json(self):
        return {
            'lifted': self.lifted, 'vertex': self.vertex, 'epsilon': self.epsilon, 'delta': self.delta,
            'gap': self.gap, 'scanned': self.scanned, 'reason': self.reason,
        }


def lift_gaps(u, F, vertices, margin=DEFAULT_MARGIN):
    """
    -max over D⁻ candidates of u + F at each vertex, with the argmax
    candidate; vertices with no D⁻ candidate get gap -inf.
    """
    graph = u.graph
    M = graph.manifold
    gaps = np.full(len(vertices), -np.inf)
    slopes = [None] * len(vertices)
    for n, i in enumerate(vertices):
        cands = vertex_candidates(u, int(i), margin=margin).sub
        if cands.shape[0] == 0:
            continue
        P = np.repeat(graph.points[i][None], cands.shape[0], axis=0)
        values = F.discount * u.values[i] + F.evaluate(P, covector_from_chart_batch(M, P, cands))
        j = int(np.argmax(values))
        gaps[n] = -float(values[j])
        slopes[n] = cands[j]
    return gaps, slopes


def _ball(graph, i, radius):
    """Vertices within geodesic distance `radius` of vertex i and their distances."""
    reach = dijkstra(graph.adjacency, directed=False, indices=int(i), limit=2.0 * radius)
    near = np.flatnonzero(np.isfinite(reach))
    near = near[near != i]
    d = pair_lengths(graph.manifold, graph.points, np.full(near.size, int(i)), near)
    inside = d < radius
    return np.concatenate([[int(i)], near[inside]]), np.concatenate([[0.0], d[inside]])


def _lift(u, i, zeta, epsilon, delta):
    graph = u.graph
    ball, d = _ball(graph, i, delta)
    offsets = np.zeros((ball.size, graph.manifold.dim))
    if ball.size > 1:
        P = np.repeat(graph.points[i][None], ball.size - 1, axis=0)
        offsets[1:] = chart_coords_batch(graph.manifold, P, graph.points[ball[1:]])
    lifted = u.values[i] + offsets @ zeta + epsilon * STANDARD_PROFILE(d / delta)
    values = np.array(u.values, dtype=float)
    values[ball] = np.maximum(values[ball], lifted)
    return u.with_values(values, name=f"lift({u.name})")


def perron_improve(u, F, graph=None, tol=1e-6, bands=None, vertices=None, margin=DEFAULT_MARGIN, check_input=True):
    """
    One Perron lift of a verified subsolution.

    Returns:
        (DiscreteField, lifted flag, LiftInfo); the field is u itself when no
        lift was found

    Raises:
        VerificationPreconditionError: u does not verify as a subsolution at tol
    """
    graph = graph or u.graph
    idx = checked_vertices(graph, bands, vertices)
    if check_input:
        report = verify_viscosity(u, F, graph, tol=tol, margin=margin, vertices=idx)
        if not report.passed_sub:
            raise VerificationPreconditionError(f"{u.name} is not a subsolution at tol {tol:g} (max {report.max_sub:.3g})")
    gaps, slopes = lift_gaps(u, F, idx, margin=margin)
    order = np.argsort(-gaps, kind='stable')
    reason = "no vertex with every D⁻ candidate below -3·tol"
    for n in order:
        if gaps[n] <= LIFT_FACTOR * tol:
            break
        i = int(idx[n])
        nbrs, lengths = graph.neighbors(i)
        delta = BUMP_REACH * float(lengths.max())
        radius = float(graph.manifold.radius_at(graph.points[i][None])[0])
        delta = min(delta, 0.5 * radius)
        epsilon = float(gaps[n])
        for _ in range(MAX_HALVINGS):
            candidate = _lift(u, i, slopes[n], epsilon, delta)
            near, _ = _ball(graph, i, 2.0 * delta)
            near = np.intersect1d(near, idx)
            check = verify_viscosity(candidate, F, graph, tol=tol, margin=margin, vertices=near)
            if check.passed_sub and candidate.values[i] > u.values[i]:
                info = LiftInfo(True, i, epsilon, delta, float(gaps[n]), int(n) + 1)
                logger.info(f"[Perron] lifted vertex {i} by {epsilon:.3g} (gap {gaps[n]:.3g}, δ={delta:.3g})")
                return candidate, True, info
            epsilon *= 0.5
        reason = f"bump sizing failed at vertex {i} after {MAX_HALVINGS} halvings"
        logger.info(f"[Perron] {reason}")
    return u, False, LiftInfo(False, scanned=int(idx.size), reason=reason)


@dataclass(frozen=True, eq=False)
class PerronRun:
    field: object
    lifts: int
    exhausted: bool
    history: list = field(default_factory=list)
    reference_distance: float = None

    def to_json(self):
        return {
            'lifts': self.lifts,
            'exhausted': self.exhausted,
            'reference_distance': self.reference_distance,
            'history': [h.to_json() for h in self.history[-20:]],
        }


def perron_iterate(u, F, graph=None, tol=1e-6, max_lifts=1000, reference=None, bands=None, vertices=None,
                   margin=DEFAULT_MARGIN):
    """
    Repeat perron_improve until no lift is found or max_lifts is reached.

    The input is verified once; each lift verifies its own neighborhood.
    """
    graph = graph or u.graph
    idx = checked_vertices(graph, bands, vertices)
    history = []
    current = u
    for n in range(max_lifts):
        current, lifted, info = perron_improve(
            current, F, graph, tol=tol, vertices=idx, margin=margin, check_input=(n == 0),
        )
        history.append(info)
        if not lifted:
            break
    lifts = sum(1 for h in history if h.lifted)
    exhausted = bool(history) and history[-1].lifted
    if exhausted:
        logger.warning(f"[Perron] stopped after {max_lifts} lifts with lifts still available")
    distance = current.sup_distance(reference) if reference is not None else None
    return PerronRun(current, lifts, exhausted, history, distance)


def sup_subsolution_check(u1, u2, F, graph=None, tol=1e-6, bands=None, vertices=None, margin=DEFAULT_MARGIN):
    """
    Verify max(u₁, u₂) as a subsolution at 2·tol.

    Raises:
        VerificationPreconditionError: u₁ or u₂ fails subsolution verification at tol
    """
    graph = graph or u1.graph
    idx = checked_vertices(graph, bands, vertices)
    for u in (u1, u2):
        report = verify_viscosity(u, F, graph, tol=tol, margin=margin, vertices=idx)
        if not report.passed_sub:
            raise VerificationPreconditionError(f"{u.name} is not a subsolution at tol {tol:g} (max {report.max_sub:.3g})")
    combined = u1.maximum(u2)
    report = verify_viscosity(combined, F, graph, tol=2.0 * tol, margin=margin, vertices=idx)
    logger.info(f"[Perron] sup of {u1.name} and {u2.name}: max sub residual {report.max_sub:.3g}")
    return {
        'passed': report.passed_sub,
        'max_sub': report.max_sub,
        'tol': 2.0 * tol,
        'field': combined,
        'report': report,
    }
