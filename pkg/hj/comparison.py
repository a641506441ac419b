"""
Comparison, doubling and Lipschitz checks for discrete solutions.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra

from manifolds.geometry import covector_from_chart_batch, covector_gap_batch, covector_norm_batch
from nonsmooth.bumps import STANDARD_PROFILE, product_bump
from nonsmooth.exceptions import PreconditionError
from nonsmooth.probes import DEFAULT_MARGIN, discrete_gradient

from .exceptions import SearchCapacityError, VerificationPreconditionError
from .viscosity import checked_vertices, verify_viscosity

logger = logging.getLogger(__name__)

SLACK_C = 3.0
PAIR_CAP = 4_000_000
LIPSCHITZ_RTOL = 1e-9


def comparison_check(u, v, F_u, F_v, graph=None, tol=1e-6, bands=None, vertices=None, slack=SLACK_C,
                     margin=DEFAULT_MARGIN):
    """
    Maximum principle on the graph: u a subsolution for F_u, v a
    supersolution for F_v, then min(v - u) >= inf(g - f) - 2·tol - C·h,
    where g - f = F_u(x, 0) - F_v(x, 0) for F = H(‖ζ‖) - source.

    Raises:
        VerificationPreconditionError: u or v fails its verification at tol
    """
    graph = graph or u.graph
    idx = checked_vertices(graph, bands, vertices)
    sub = verify_viscosity(u, F_u, graph, tol=tol, margin=margin, vertices=idx)
    if not sub.passed_sub:
        raise VerificationPreconditionError(f"{u.name} is not a subsolution at tol {tol:g} (max {sub.max_sub:.3g})")
    sup = verify_viscosity(v, F_v, graph, tol=tol, margin=margin, vertices=idx)
    if not sup.passed_super:
        raise VerificationPreconditionError(f"{v.name} is not a supersolution at tol {tol:g} (max {sup.max_super:.3g})")
    inf_gap = float(np.min(F_u.zero_section(graph.points) - F_v.zero_section(graph.points)))
    difference = float(np.min(v.values - u.values))
    bound = inf_gap - 2.0 * tol - slack * graph.h
    margin_left = difference - bound
    logger.info(f"[Comparison] min(v - u) = {difference:.6g}, inf(g - f) = {inf_gap:.6g}, margin {margin_left:.3g}")
    return {
        'passed': margin_left >= 0.0,
        'min_difference': difference,
        'inf_g_minus_f': inf_gap,
        'bound': bound,
        'margin': margin_left,
        'h': graph.h,
        'C': slack,
        'tol': tol,
    }


@dataclass(frozen=True, eq=False)
class DoublingResult:
    x0: int
    y0: int
    zeta: np.ndarray
    xi: np.ndarray
    report: dict

    def to_json(self):
        return {'x0': self.x0, 'y0': self.y0, 'zeta': self.zeta.tolist(), 'xi': self.xi.tolist(), **self.report}


def doubling_profile(eps, height):
    """Nonincreasing b with b(0) = height and b = 0 from eps on."""
    return lambda t: height * STANDARD_PROFILE(np.asarray(t, dtype=float) / eps)


def doubling_pair(u, v, eps, graph=None, pair_cap=PAIR_CAP, slack=SLACK_C):
    """
    Minimize w(x, y) = v(y) - u(x) - b(d(x, y)) over all vertex pairs, with
    d the graph distance and b(0) = 2(‖u‖ + ‖v‖) + ε + 1.

    The report checks (i) d(x₀, y₀) < ε, (ii) the gap between the affine-fit
    covectors ζ at x₀ (for u) and ξ at y₀ (for v) below ε + C·h, and
    (iii) v(z) - u(z) >= v(y₀) - u(x₀) - ε at every vertex z.

    Raises:
        SearchCapacityError: n² exceeds pair_cap
        PreconditionError: ε is not below the working radius
    """
    graph = graph or u.graph
    M = graph.manifold
    n = graph.n
    if n * n > pair_cap:
        raise SearchCapacityError(f"{n}² = {n * n} pairs exceed the cap of {pair_cap:g}")
    radius = float(M.radius_at(graph.points).min())
    if not 0.0 < eps < radius:
        raise PreconditionError(f"ε = {eps} must lie in (0, r_M = {radius:.3g})")
    height = 2.0 * (u.sup_norm() + v.sup_norm()) + eps + 1.0
    b = doubling_profile(eps, height)
    D = dijkstra(graph.adjacency, directed=False)
    W = v.values[None, :] - u.values[:, None] - b(D)
    x0, y0 = (int(k) for k in np.unravel_index(int(np.argmin(W)), W.shape))

    zeta_chart = discrete_gradient(u, x0)
    xi_chart = discrete_gradient(v, y0)
    X0, Y0 = graph.points[x0][None], graph.points[y0][None]
    zeta = covector_from_chart_batch(M, X0, zeta_chart[None])
    xi = covector_from_chart_batch(M, Y0, xi_chart[None])
    if x0 == y0:
        gap = float(covector_norm_batch(M, X0, zeta - xi)[0])
    else:
        gap = float(covector_gap_batch(M, X0, zeta, Y0, xi)[0])
    distance = float(D[x0, y0])
    floor = v.values[y0] - u.values[x0] - eps
    slack_iii = float(np.min(v.values - u.values) - floor)
    finite = D[np.isfinite(D)]
    degenerate = eps > float(finite.max())
    bump_delta = min(0.5 * eps, 0.49 * radius)
    report = {
        'w_min': float(W[x0, y0]),
        'b0': height,
        'distance': distance,
        'gap': gap,
        'gap_bound': eps + slack * graph.h,
        'inequality_slack': slack_iii,
        'i': distance < eps,
        'ii': gap < eps + slack * graph.h,
        'iii': slack_iii >= -1e-12,
        'degenerate': degenerate,
        'product_bump': product_bump(graph.point(x0), graph.point(y0), bump_delta).describe(),
    }
    report['passed'] = bool(report['i'] and report['ii'] and report['iii'])
    logger.info(f"[Doubling] pair ({x0}, {y0}) at distance {distance:.3g}, gap {gap:.3g}, passed={report['passed']}")
    return DoublingResult(x0, y0, zeta[0], xi[0], report)


def max_edge_slope(u, graph=None):
    """Largest |u(x) - u(y)| / ℓ_xy over the edges."""
    graph = graph or u.graph
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    both = np.isfinite(u.values[i]) & np.isfinite(u.values[j])
    if not both.any():
        return 0.0
    return float(np.max(np.abs(u.values[j[both]] - u.values[i[both]]) / graph.lengths[both]))


def regularity_check(u, K, graph=None):
    """|u(x) - u(y)| <= K·ℓ_xy·(1 + 1e-9) on every edge."""
    graph = graph or u.graph
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    both = np.isfinite(u.values[i]) & np.isfinite(u.values[j])
    change = np.abs(u.values[j[both]] - u.values[i[both]])
    allowed = K * graph.lengths[both] * (1.0 + LIPSCHITZ_RTOL)
    bad = np.flatnonzero(change > allowed)
    report = {
        'passed': bad.size == 0,
        'K': float(K),
        'max_slope': max_edge_slope(u, graph),
        'violations': int(bad.size),
    }
    if bad.size:
        k = int(bad[np.argmax(change[bad] - allowed[bad])])
        report['worst_edge'] = [int(i[both][k]), int(j[both][k])]
        logger.warning(f"[Regularity] {u.name} breaks the {K:g}-Lipschitz bound on {bad.size} edges")
    return report
