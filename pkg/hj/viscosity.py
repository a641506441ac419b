"""
Discrete viscosity verification.

A graph field has no differential, so D⁻u(p) and D⁺u(p) are replaced by
screened candidate sets in the normal chart at p. With unit edge directions
ĉ_j, edge slopes s_j and slack τ_j = margin + allowance·|c_j|:

    D⁻ candidates lie in {c : ⟨c, ĉ_j⟩ <= s_j + τ_j for every edge}
    D⁺ candidates lie in {c : ⟨c, ĉ_j⟩ >= s_j - τ_j for every edge}

These are the sets the edge-slope sub/supergradient tests accept. Both are
clipped to the box |c_i| <= 2·max|s_j| + 1. Candidates are the affine fits
over all edges and over each half fan, the one-sided slope covectors
s_j·ĉ_j, the corners of each clipped set and its least-norm point. For
norm-based Hamiltonians the corners carry the maximum of F over a set and
the least-norm point its minimum.
"""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from manifolds.geometry import covector_from_chart_batch
from nonsmooth.probes import DEFAULT_MARGIN, affine_fit, discrete_increments

from .exceptions import VerificationPreconditionError

logger = logging.getLogger(__name__)

LP_TOL = 1e-9
CAP_FACTOR = 2.0
GRAM_TOL = 1e-12


def face_points(A, b):
    """
    Feasible points of {A c <= b} that are projections of the origin onto
    the affine hull of some set of at most dim active constraints.

    Returns (points, corner mask); the rows from dim constraints are the
    corners, and the least-norm point of the set is always among the rows
    (or is the origin, when feasible).
    """
    m, dim = A.shape
    points, corner = [], []
    for size in range(1, dim + 1):
        if size > m:
            break
        S = np.array(list(itertools.combinations(range(m), size)))
        AS, bS = A[S], b[S]
        gram = np.einsum('kid,kjd->kij', AS, AS)
        ok = np.abs(np.linalg.det(gram)) > GRAM_TOL
        if not ok.any():
            continue
        weights = np.linalg.solve(gram[ok], bS[ok][..., None])[..., 0]
        P = np.einsum('kid,ki->kd', AS[ok], weights)
        points.append(P)
        corner.append(np.full(P.shape[0], size == dim))
    if not points:
        return np.zeros((0, dim)), np.zeros(0, dtype=bool)
    P, corner = np.concatenate(points), np.concatenate(corner)
    feasible = np.all(P @ A.T <= b[None] + LP_TOL, axis=1)
    return P[feasible], corner[feasible]


@dataclass(frozen=True, eq=False)
class VertexCandidates:
    """Screened D⁻ ('sub') and D⁺ ('super') chart covectors at one vertex, with their provenance."""
    vertex: int
    sub: np.ndarray
    sub_kinds: np.ndarray
    super: np.ndarray
    super_kinds: np.ndarray

    def diameter(self, side='super'):
        C = self.super if side == 'super' else self.sub
        if C.shape[0] < 2:
            return 0.0
        return float(np.max(np.linalg.norm(C[:, None] - C[None], axis=-1)))


def _fits(offsets, increments, units, dim):
    fits, kinds = [affine_fit(offsets, increments)], ['fit']
    for u in units:
        half = units @ u > 0.0
        if np.count_nonzero(half) >= dim:
            fits.append(affine_fit(offsets[half], increments[half]))
            kinds.append('half_fit')
    return np.array(fits), kinds


def _set_points(A, b, dim):
    P, corner = face_points(A, b)
    if np.all(b >= -LP_TOL):
        P, corner = np.concatenate([P, np.zeros((1, dim))]), np.append(corner, False)
    if P.shape[0] == 0:
        return P, []
    least = int(np.argmin(np.linalg.norm(P, axis=1)))
    keep = corner.copy()
    keep[least] = True
    kinds = ['least_norm' if j == least else 'corner' for j in np.flatnonzero(keep)]
    return P[keep], kinds


def vertex_candidates(u, i, margin=DEFAULT_MARGIN, allowance=0.0):
    """
    Screened D⁻/D⁺ candidates of a discrete field at vertex i.

    Edges to vertices where u is +inf impose nothing.
    """
    graph = u.graph
    dim = graph.manifold.dim
    nbrs, _ = graph.neighbors(i)
    offsets = graph.offsets(i)
    finite = np.isfinite(u.values[nbrs])
    nbrs, offsets = nbrs[finite], offsets[finite]
    norms = np.linalg.norm(offsets, axis=-1)
    units = offsets / norms[:, None]
    increments = u.values[nbrs] - u.values[i]
    slopes = increments / norms
    tau = margin + allowance * norms

    cap = CAP_FACTOR * float(np.max(np.abs(slopes))) + 1.0 if slopes.size else 1.0
    box = np.concatenate([np.eye(dim), -np.eye(dim)])
    fits, fit_kinds = _fits(offsets, increments, units, dim)
    shared = np.concatenate([fits, slopes[:, None] * units])
    shared_kinds = fit_kinds + ['slope'] * slopes.size

    sub_pts, sub_kinds = _set_points(np.concatenate([units, box]), np.concatenate([slopes + tau, np.full(2 * dim, cap)]), dim)
    super_pts, super_kinds = _set_points(
        np.concatenate([-units, box]), np.concatenate([tau - slopes, np.full(2 * dim, cap)]), dim,
    )

    def screen(C, kinds, side):
        inc = discrete_increments(u, i, C)[0][:, finite]
        ok = np.all(inc >= -(tau + LP_TOL), axis=1) if side == 'sub' else np.all(inc <= tau + LP_TOL, axis=1)
        return C[ok], np.asarray(kinds, dtype=object)[ok]

    sub, sk = screen(np.concatenate([shared, sub_pts]), shared_kinds + sub_kinds, 'sub')
    sup, pk = screen(np.concatenate([shared, super_pts]), shared_kinds + super_kinds, 'super')
    return VertexCandidates(int(i), sub, sk, sup, pk)


@dataclass(frozen=True, eq=False)
class ViscosityReport:
    """
    Per-vertex residuals of λ·u + F = 0.

    sub_residual = max(0, max over D⁺ candidates of λu + F) and
    super_residual = max(0, -min over D⁻ candidates of λu + F); a vertex
    with no candidates on a side has residual 0 there.
    """
    hamiltonian: str
    vertices: np.ndarray
    sub_residual: np.ndarray
    super_residual: np.ndarray
    tol: float
    sub_provenance: list = field(default_factory=list)
    super_provenance: list = field(default_factory=list)
    sub_counts: np.ndarray = None
    super_counts: np.ndarray = None

    @property
    def max_sub(self):
        return float(self.sub_residual.max()) if self.sub_residual.size else 0.0

    @property
    def max_super(self):
        return float(self.super_residual.max()) if self.super_residual.size else 0.0

    @property
    def max_residual(self):
        return max(self.max_sub, self.max_super)

    @property
    def passed_sub(self):
        return self.max_sub <= self.tol

    @property
    def passed_super(self):
        return self.max_super <= self.tol

    @property
    def passed(self):
        return self.passed_sub and self.passed_super

    def to_json(self):
        return {
            'hamiltonian': self.hamiltonian,
            'tol': self.tol,
            'max_sub': self.max_sub,
            'max_super': self.max_super,
            'passed_sub': self.passed_sub,
            'passed_super': self.passed_super,
            'vertices': self.vertices.tolist(),
            'sub_residual': self.sub_residual.tolist(),
            'super_residual': self.super_residual.tolist(),
            'sub_provenance': list(self.sub_provenance),
            'super_provenance': list(self.super_provenance),
        }


def checked_vertices(graph, bands=None, vertices=None):
    if vertices is not None:
        return np.asarray(vertices, dtype=np.int64).reshape(-1)
    if bands is not None:
        return bands.interior
    return np.arange(graph.n)


def _side(u_values, F, M, points, candidates, side, discount):
    owners, chart = [], []
    for c in candidates:
        C = c.super if side == 'super' else c.sub
        owners.append(np.full(C.shape[0], c.vertex))
        chart.append(C)
    owners = np.concatenate(owners)
    chart = np.concatenate(chart) if owners.size else np.zeros((0, M.dim))
    if owners.size == 0:
        return np.zeros(len(candidates)), ['none'] * len(candidates), np.zeros(len(candidates), dtype=int)
    P = points[owners]
    values = discount * u_values[owners] + F.evaluate(P, covector_from_chart_batch(M, P, chart))
    residual = np.zeros(len(candidates))
    provenance = []
    counts = np.zeros(len(candidates), dtype=int)
    start = 0
    for n, c in enumerate(candidates):
        kinds = c.super_kinds if side == 'super' else c.sub_kinds
        stop = start + len(kinds)
        counts[n] = stop - start
        if stop == start:
            provenance.append('none')
            continue
        block = values[start:stop]
        j = int(np.argmax(block)) if side == 'super' else int(np.argmin(block))
        residual[n] = max(0.0, float(block[j])) if side == 'super' else max(0.0, -float(block[j]))
        provenance.append(str(kinds[j]))
        start = stop
    return residual, provenance, counts


def verify_viscosity(u, F, graph=None, bands=None, tol=1e-6, margin=DEFAULT_MARGIN, allowance=0.0, vertices=None):
    """
    Check λ·u + F(p, ζ) <= tol over D⁺ candidates and >= -tol over D⁻
    candidates at the interior vertices of `bands` (every vertex when no
    bands are given, or the explicit `vertices`).

    Raises:
        VerificationPreconditionError: u is +inf at a checked vertex, or a
            checked vertex has fewer than dim + 1 neighbors
    """
    graph = graph or u.graph
    M = graph.manifold
    idx = checked_vertices(graph, bands, vertices)
    if not np.all(np.isfinite(u.values[idx])):
        raise VerificationPreconditionError(f"{u.name} is +inf at {np.count_nonzero(~np.isfinite(u.values[idx]))} checked vertices")
    degrees = graph.degrees()[idx]
    short = idx[degrees < M.dim + 1]
    if short.size:
        raise VerificationPreconditionError(
            f"vertex {int(short[0])} has {int(graph.degrees()[short[0]])} neighbors; verification needs at least {M.dim + 1}"
        )
    candidates = [vertex_candidates(u, int(i), margin=margin, allowance=allowance) for i in idx]
    sub, sub_prov, sub_counts = _side(u.values, F, M, graph.points, candidates, 'super', F.discount)
    sup, sup_prov, sup_counts = _side(u.values, F, M, graph.points, candidates, 'sub', F.discount)
    report = ViscosityReport(F.name, idx, sub, sup, float(tol), sub_prov, sup_prov, sub_counts, sup_counts)
    logger.info(
        f"[Viscosity] {F.name} on {u.name}: {idx.size} vertices, max sub {report.max_sub:.3g}, "
        f"max super {report.max_super:.3g} (tol {tol:g})"
    )
    return report
