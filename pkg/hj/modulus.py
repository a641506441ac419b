"""
Empirical intrinsic modulus of continuity of a Hamiltonian.

Pairs (x, ζ), (y, ξ) are sampled with x = y or xy a graph edge, ‖ζ‖ <= cap,
and ξ = L_xy(ζ) + η for a random η at y. The table entry for δ is the
largest |F(x, ζ) - F(y, ξ)| over samples with d(x, y) <= δ and
‖ζ - L_yx(ξ)‖ <= δ, so it is nondecreasing in δ by construction.
"""
import logging
from dataclasses import dataclass

import numpy as np

from manifolds.geometry import covector_from_chart_batch, covector_gap_batch, covector_norm_batch, covector_transport_batch

logger = logging.getLogger(__name__)

DEFAULT_COVECTOR_CAP = 5.0


@dataclass(frozen=True)
class ModulusTable:
    deltas: np.ndarray
    omega: np.ndarray
    skipped: list
    samples: int
    covector_cap: float

    def to_json(self):
        return {
            'deltas': self.deltas.tolist(),
            'omega': self.omega.tolist(),
            'skipped': list(self.skipped),
            'samples': self.samples,
            'covector_cap': self.covector_cap,
        }


def _ball(rng, count, dim, radius):
    raw = rng.standard_normal((count, dim))
    raw /= np.linalg.norm(raw, axis=-1, keepdims=True)
    return raw * radius * rng.uniform(0.0, 1.0, (count, 1)) ** (1.0 / dim)


def intrinsic_modulus_probe(F, graph, delta_grid, covector_cap=DEFAULT_COVECTOR_CAP, samples_per_pair=4,
                            max_pairs=2000, seed=0):
    """
    Table δ ↦ ω̂(δ) for F on the graph.

    δ values at or beyond the smallest working radius over the vertices are
    skipped and reported in `skipped`.
    """
    M = graph.manifold
    rng = np.random.default_rng(seed)
    deltas = np.sort(np.asarray(delta_grid, dtype=float).reshape(-1))
    radius = float(M.radius_at(graph.points).min())
    usable = deltas < radius
    skipped = deltas[~usable].tolist()
    if skipped:
        logger.warning(f"[Modulus] skipped δ >= r_M = {radius:.3g}: {skipped}")
    deltas = deltas[usable]
    if deltas.size == 0:
        return ModulusTable(deltas, deltas.copy(), skipped, 0, float(covector_cap))
    reach = float(deltas[-1])

    edges = graph.edges[graph.lengths <= reach]
    pairs = np.concatenate([np.repeat(np.arange(graph.n)[:, None], 2, axis=1), edges, edges[:, ::-1]])
    if pairs.shape[0] > max_pairs:
        pairs = pairs[np.sort(rng.choice(pairs.shape[0], max_pairs, replace=False))]
    pairs = np.repeat(pairs, samples_per_pair, axis=0)
    I, J = pairs[:, 0], pairs[:, 1]
    X, Y = graph.points[I], graph.points[J]
    same = I == J

    Z = covector_from_chart_batch(M, X, _ball(rng, I.size, M.dim, covector_cap))
    Eta = covector_from_chart_batch(M, Y, _ball(rng, I.size, M.dim, reach))
    Xi = Z + Eta
    dist = np.zeros(I.size)
    gap = covector_norm_batch(M, Y, Eta)
    moved = ~same
    if moved.any():
        lengths = dict(zip(map(tuple, graph.edges.tolist()), graph.lengths.tolist()))
        dist[moved] = [lengths[(min(i, j), max(i, j))] for i, j in zip(I[moved], J[moved])]
        Xi[moved] = covector_transport_batch(M, X[moved], Z[moved], Y[moved]) + Eta[moved]
        gap[moved] = covector_gap_batch(M, X[moved], Z[moved], Y[moved], Xi[moved])

    diff = np.abs(F.evaluate(X, Z) - F.evaluate(Y, Xi))
    omega = np.array([
        float(diff[(dist <= d) & (gap <= d)].max(initial=0.0)) for d in deltas
    ])
    logger.info(f"[Modulus] {F.name}: {I.size} samples, ω̂ at δ={deltas[-1]:.3g} is {omega[-1]:.4g}")
    return ModulusTable(deltas, omega, skipped, int(I.size), float(covector_cap))
