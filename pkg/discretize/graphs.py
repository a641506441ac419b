"""
Geodesic Graphs
Symmetric k-nearest-neighbor graphs with exact geodesic edge lengths, and
shortest-path distance fields on them.
"""
import logging
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from manifolds.exceptions import DomainExitError, GeometryError
from manifolds.geometry import chart_coords_batch, chart_length
from manifolds.integrators import SHOOT_ACCEPT, shoot_log
from manifolds.types import Point

from .exceptions import DiscretizationError, DisconnectedGraphError
from .fields import DiscreteField

logger = logging.getLogger(__name__)

# Candidates per vertex handed from the k-d tree to the exact length pass.
CANDIDATE_FACTOR = 3
VERTEX_ATOL = 1e-12


class GeodesicGraph:
    """
    Undirected graph on a point cloud.

    `edges` holds unordered pairs (i < j) sorted lexicographically and
    `lengths` their geodesic lengths. The graph is immutable once built.
    """

    def __init__(self, cloud, edges, lengths, k):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        lengths = np.asarray(lengths, dtype=float).reshape(-1)
        if edges.shape[0] != lengths.shape[0]:
            raise DiscretizationError("edges and lengths differ in size")
        if np.any(edges[:, 0] >= edges[:, 1]):
            raise DiscretizationError("edges must be stored as pairs i < j")
        if np.any(lengths <= 0.0):
            raise DiscretizationError("edge lengths must be positive")
        edges.setflags(write=False)
        lengths.setflags(write=False)
        self.cloud = cloud
        self.edges = edges
        self.lengths = lengths
        self.k = int(k)
        self.h = float(lengths.max()) if lengths.size else 0.0

        n = len(cloud)
        rows = np.concatenate([edges[:, 0], edges[:, 1]])
        cols = np.concatenate([edges[:, 1], edges[:, 0]])
        data = np.concatenate([lengths, lengths])
        self.adjacency = coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
        self.adjacency.sort_indices()

    def __repr__(self):
        return f"<GeodesicGraph {self.manifold.name} n={self.n} edges={self.n_edges} k={self.k} h={self.h:.4g}>"

    @property
    def manifold(self):
        return self.cloud.manifold

    @property
    def points(self):
        return self.cloud.points

    @property
    def n(self):
        return len(self.cloud)

    @property
    def n_edges(self):
        return self.edges.shape[0]

    def point(self, i):
        return Point(self.manifold, self.points[i])

    def neighbors(self, i):
        """(neighbor indices, edge lengths) of vertex i, in increasing index order."""
        start, end = self.adjacency.indptr[i], self.adjacency.indptr[i + 1]
        return self.adjacency.indices[start:end], self.adjacency.data[start:end]

    def degrees(self):
        return np.diff(self.adjacency.indptr)

    @cached_property
    def _vertex_tree(self):
        return cKDTree(self.points)

    def vertex_indices(self, X, atol=VERTEX_ATOL):
        """Index of the vertex at each row of X, or -1 where no vertex matches."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        dist, idx = self._vertex_tree.query(X, k=1)
        return np.where(dist <= atol, idx, -1)

    def vertex_index(self, point):
        idx = int(self.vertex_indices(point.coords[None])[0])
        return None if idx < 0 else idx

    @cached_property
    def directed_edges(self):
        """(source, target, length) for both orientations, in CSR order."""
        src = np.repeat(np.arange(self.n), self.degrees())
        return src, self.adjacency.indices, self.adjacency.data

    @cached_property
    def neighbor_offsets(self):
        """Normal-chart coordinates of every neighbor, aligned with `directed_edges`."""
        src, dst, _ = self.directed_edges
        if src.size == 0:
            return np.zeros((0, self.manifold.dim))
        return chart_coords_batch(self.manifold, self.points[src], self.points[dst])

    def offsets(self, i):
        start, end = self.adjacency.indptr[i], self.adjacency.indptr[i + 1]
        return self.neighbor_offsets[start:end]

    def is_connected(self):
        return connected_components(self.adjacency, directed=False)[0] <= 1

    def describe(self):
        return {
            'manifold': self.manifold.describe(),
            'n': self.n,
            'k': self.k,
            'edges': self.n_edges,
            'h': self.h,
            'seed': self.cloud.seed,
            'method': self.cloud.method,
            'connected': self.is_connected(),
        }


def pair_lengths(manifold, X, I, J):
    """
    Geodesic lengths between X[I] and X[J].

    Closed-form manifolds answer exactly. Elsewhere the log is shot for pairs
    whose chart estimate is within reach; the rest (and any pair whose
    shooting fails) get +inf so the caller drops them.
    """
    A, B = X[I], X[J]
    if manifold.closed_form:
        return manifold.distance_closed(A, B)
    lengths = np.full(len(I), np.inf)
    near = np.flatnonzero(chart_length(manifold, A, B) < 1.5 * manifold.radius_at(A))
    if near.size == 0:
        return lengths
    try:
        V, residual = shoot_log(manifold, A[near], B[near], return_residual=True)
    except DomainExitError:
        logger.info(f"[Graph] batched shooting left the domain of {manifold.name}; retrying {near.size} pairs one by one")
        for idx in near:
            try:
                V = shoot_log(manifold, A[idx:idx + 1], B[idx:idx + 1])
            except GeometryError:
                continue
            lengths[idx] = float(np.sqrt(max(manifold.inner(A[idx:idx + 1], V, V)[0], 0.0)))
        return lengths
    converged = residual <= SHOOT_ACCEPT
    if not converged.all():
        logger.info(f"[Graph] shooting did not converge for {np.count_nonzero(~converged)} candidate pairs")
    good = near[converged]
    lengths[good] = np.sqrt(np.maximum(manifold.inner(A[good], V[converged], V[converged]), 0.0))
    return lengths


def build_graph(cloud, k=8):
    """
    Build the symmetric k-NN graph of a cloud.

    Candidates come from a k-d tree on the manifold's prefilter coordinates
    (periodic on the torus); the k nearest by exact geodesic length are kept,
    ties broken by vertex index, and the relation is symmetrized. Edges at or
    beyond the working radius are dropped with a warning.

    Raises:
        DisconnectedGraphError: the result has more than one component
    """
    k = int(k)
    if k < 1:
        raise DiscretizationError(f"k must be positive, got {k}")
    if k < 3:
        logger.warning(f"[Graph] k = {k} is below 3; connectivity is unlikely on random clouds")
    M = cloud.manifold
    X = cloud.points
    n = len(cloud)
    if n == 1:
        return GeodesicGraph(cloud, np.zeros((0, 2), dtype=np.int64), np.zeros(0), k)

    m = min(n - 1, CANDIDATE_FACTOR * k)
    coords = M.prefilter_coords(X)
    tree = cKDTree(coords, boxsize=M.kdtree_boxsize)
    _, cand = tree.query(coords, k=m + 1)
    I = np.repeat(np.arange(n), m + 1)
    J = np.asarray(cand).reshape(-1)
    keep = I != J
    I, J = I[keep], J[keep]
    L = pair_lengths(M, X, I, J)

    duplicates = np.count_nonzero(L == 0.0)
    if duplicates:
        logger.warning(f"[Graph] Ignored {duplicates // 2 or 1} coincident point pair(s)")
    usable = np.isfinite(L) & (L > 0.0)
    I, J, L = I[usable], J[usable], L[usable]

    order = np.lexsort((J, L, I))
    I, J, L = I[order], J[order], L[order]
    rank = np.arange(I.size) - np.searchsorted(I, I, side='left')
    chosen = rank < k
    I, J, L = I[chosen], J[chosen], L[chosen]

    pairs = np.stack([np.minimum(I, J), np.maximum(I, J)], axis=1)
    pairs, first = np.unique(pairs, axis=0, return_index=True)
    L = L[first]

    radius = np.minimum(M.radius_at(X[pairs[:, 0]]), M.radius_at(X[pairs[:, 1]]))
    too_long = L >= radius
    if too_long.any():
        logger.warning(f"[Graph] Dropped {np.count_nonzero(too_long)} edges at or beyond r_M on {M.name}")
        pairs, L = pairs[~too_long], L[~too_long]

    graph = GeodesicGraph(cloud, pairs, L, k)
    n_components, labels = connected_components(graph.adjacency, directed=False)
    if n_components > 1:
        sizes = np.bincount(labels)
        logger.warning(f"[Graph] {M.name} graph with n={n}, k={k} has {n_components} components")
        raise DisconnectedGraphError(sizes)
    logger.info(f"[Graph] {M.name}: n={n}, k={k}, {graph.n_edges} edges, h={graph.h:.4g}")
    return graph


def graph_distance(graph, sources):
    """
    Shortest-path distance to the nearest source vertex.

    Args:
        graph: GeodesicGraph
        sources: Iterable of vertex indices (nonempty)

    Returns:
        DiscreteField: 0 on the sources, 1-Lipschitz along every edge
    """
    sources = np.unique(np.asarray(list(sources), dtype=np.int64))
    if sources.size == 0:
        raise DiscretizationError("graph_distance needs at least one source vertex")
    if sources.min() < 0 or sources.max() >= graph.n:
        raise DiscretizationError(f"source index out of range for a graph with {graph.n} vertices")
    values = dijkstra(graph.adjacency, directed=False, indices=sources, min_only=True)
    return DiscreteField(graph, values, name="graph_distance")
