"""
Monotone solvers on geodesic graphs.

eikonal_solve is the shortest-path distance to the boundary band.
stationary_solve runs Gauss-Seidel sweeps of the upwind scheme for
u + H(‖du‖) = f: at vertex x the new value w solves

    w + H(s(w)) = f(x),   s(w) = max over neighbors y of (w - u(y))⁺ / ℓ_xy

whose left side is strictly increasing in w. Linear profiles have the
closed form w = min(t, min_y (t·ℓ_xy + a·u(y)) / (ℓ_xy + a)) with
t = f(x) - H(0); other profiles are solved with brentq.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from discretize.fields import DiscreteField
from discretize.graphs import graph_distance
from discretize.regions import BoundarySet

from .exceptions import EmptyBoundaryError, HamiltonianError

logger = logging.getLogger(__name__)

BRENT_XTOL = 1e-12
DEFAULT_SWEEP_TOL = 1e-9
SWEEP_ORDERS = ('coordinate', 'index')


def eikonal_solve(graph, boundary):
    """
    Viscosity solution of ‖du‖ = 1 vanishing on the boundary band.

    Args:
        boundary: BoundarySet or iterable of vertex indices

    Raises:
        EmptyBoundaryError: no boundary vertex
    """
    sources = boundary.boundary if isinstance(boundary, BoundarySet) else np.asarray(list(boundary), dtype=np.int64)
    if sources.size == 0:
        raise EmptyBoundaryError("eikonal_solve needs at least one boundary vertex")
    field = graph_distance(graph, sources)
    logger.info(f"[Eikonal] {graph.manifold.name}: {sources.size} boundary vertices, max distance {field.values.max():.4g}")
    return field.with_values(field.values, name="eikonal")


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    sweeps: int
    residual: float
    tol: float
    order: str
    bound: float
    sup_norm: float
    scheme_residual: float

    def to_json(self):
        return {
            'converged': self.converged,
            'sweeps': self.sweeps,
            'residual': self.residual,
            'tol': self.tol,
            'order': self.order,
            'bound': self.bound,
            'sup_norm': self.sup_norm,
            'scheme_residual': self.scheme_residual,
        }


def sweep_orders(graph, order='coordinate'):
    """
    Vertex orders cycled by the sweeps: ascending and descending along each
    ambient coordinate, or forward and backward by index.
    """
    if order == 'index':
        forward = np.arange(graph.n)
        return [forward, forward[::-1]]
    if order == 'coordinate':
        orders = []
        for axis in range(graph.points.shape[1]):
            ascending = np.argsort(graph.points[:, axis], kind='stable')
            orders.extend([ascending, ascending[::-1]])
        return orders
    raise HamiltonianError(f"unknown sweep order '{order}'. Choose one of: {', '.join(SWEEP_ORDERS)}")


def local_solve(profile, c, u_nbrs, lengths):
    """
    Root w of w + H(s(w)) = c, the local upwind update, for finite neighbor
    values u_nbrs at distances `lengths`.
    """
    h0 = float(profile(0.0))
    top = c - h0
    if u_nbrs.size == 0:
        return top
    if profile.is_linear:
        a = profile.slope
        return float(min(top, np.min((top * lengths + a * u_nbrs) / (lengths + a))))

    def phi(w):
        s = max(0.0, float(np.max((w - u_nbrs) / lengths)))
        return w + float(profile(s)) - c

    low = min(top, float(u_nbrs.min()))
    if low >= top or phi(top) == 0.0:
        return top
    return brentq(phi, low, top, xtol=BRENT_XTOL)


def local_update(F, graph, values, i, f_values=None, lengths=None):
    """The scheme's new value at vertex i given the current field values."""
    lengths = F.scheme_lengths(graph) if lengths is None else lengths
    f_values = F.source_values(graph) if f_values is None else f_values
    start, end = graph.adjacency.indptr[i], graph.adjacency.indptr[i + 1]
    nbrs = graph.adjacency.indices[start:end]
    ell = lengths[start:end]
    finite = np.isfinite(values[nbrs])
    return local_solve(F.profile, f_values[i], values[nbrs][finite], ell[finite])


def scheme_residual(F, graph, values, f_values=None, lengths=None):
    """max over vertices of |u + H(s) - f| with s the upwind slope of u itself."""
    lengths = F.scheme_lengths(graph) if lengths is None else lengths
    f_values = F.source_values(graph) if f_values is None else f_values
    src, dst, _ = graph.directed_edges
    drop = np.maximum(values[src] - values[dst], 0.0) / lengths
    s = np.zeros(graph.n)
    np.maximum.at(s, src, drop)
    return float(np.max(np.abs(values + F.profile(s) - f_values)))


def stationary_solve(F, graph, tol=DEFAULT_SWEEP_TOL, max_sweeps=None, order='coordinate', initial=None):
    """
    Solve u + H(‖du‖) = f on the graph.

    Sweeps start from f - H(0), a supersolution of the scheme, and stop when
    the largest change in a sweep drops below tol. A run that exhausts
    max_sweeps (default 10·n) is returned with converged=False and a warning.

    Returns:
        (DiscreteField, SolveReport)

    Raises:
        HamiltonianError: F has no norm-based structure or no discount
    """
    if not F.solvable:
        raise HamiltonianError(f"{F.name} ({F.tag}, discount {F.discount}) has no monotone scheme; verify it instead")
    max_sweeps = 10 * graph.n if max_sweeps is None else int(max_sweeps)
    f_values = F.source_values(graph)
    lengths = np.asarray(F.scheme_lengths(graph), dtype=float)
    orders = sweep_orders(graph, order)
    A = F.zero_section_bound(graph.points)
    h0 = float(F.profile(0.0))
    values = f_values - h0 if initial is None else np.array(initial.values, dtype=float)
    indptr, indices = graph.adjacency.indptr, graph.adjacency.indices

    change = np.inf
    sweeps = 0
    while sweeps < max_sweeps:
        change = 0.0
        for i in orders[sweeps % len(orders)]:
            start, end = indptr[i], indptr[i + 1]
            w = local_solve(F.profile, f_values[i], values[indices[start:end]], lengths[start:end])
            change = max(change, abs(w - values[i]))
            values[i] = w
        sweeps += 1
        if change < tol:
            break
    converged = change < tol
    if not converged:
        logger.warning(f"[Solver] {F.name}: no convergence after {sweeps} sweeps (last change {change:.3g})")
    report = SolveReport(
        converged=converged, sweeps=sweeps, residual=float(change), tol=float(tol), order=order,
        bound=float(np.max(np.abs(f_values)) + A), sup_norm=float(np.max(np.abs(values))),
        scheme_residual=scheme_residual(F, graph, values, f_values, lengths),
    )
    logger.info(f"[Solver] {F.name} on {graph.manifold.name}: {sweeps} sweeps, change {change:.3g}")
    return DiscreteField(graph, values, name=f"solve:{F.name}"), report
