import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, strategies as st

import riemann_hj.testing  # noqa: F401
from manifolds.catalog import get_manifold

from .exceptions import (
    DisconnectedGraphError, EmptySampleError, FieldFormatError, OffGraphError, PartitionError, UnsupportedGridError,
)
from .fields import DiscreteField
from .formats import graph_from_json, graph_to_json, read_field, read_field_csv, write_field, write_field_csv
from .graphs import build_graph, graph_distance
from .regions import get_region, partition
from .sampling import PointCloud, grid, sample


class SampleTests(SimpleTestCase):
    def test_single_point_in_domain(self):
        for name in ('sphere', 'hyperbolic', 'torus', 'cusp', 'funnel', 'euclidean'):
            M = get_manifold(name)
            cloud = sample(M, 1, seed=3)
            self.assertEqual(len(cloud), 1)
            self.assertTrue(M.contains(cloud.points)[0], name)

    def test_empty_sample_rejected(self):
        with self.assertRaises(EmptySampleError):
            sample(get_manifold('sphere'), 0)

    @given(st.integers(0, 2**31 - 1))
    def test_same_seed_same_cloud(self, seed):
        M = get_manifold('hyperbolic')
        np.testing.assert_array_equal(sample(M, 50, seed).points, sample(M, 50, seed).points)

    def test_sphere_hemisphere_fraction(self):
        cloud = sample(get_manifold('sphere'), 10_000, seed=7)
        self.assertAlmostEqual(float(np.mean(cloud.points[:, 2] > 0)), 0.5, delta=0.02)

    def test_hyperbolic_samples_stay_in_disk(self):
        M = get_manifold('hyperbolic')
        cloud = sample(M, 500, seed=1)
        origin = np.tile([1.0, 0.0, 0.0], (500, 1))
        self.assertLessEqual(M.distance_closed(origin, cloud.points).max(), 3.0 + 1e-9)

    def test_torus_grid(self):
        cloud = grid(get_manifold('torus', dim=1), 8)
        np.testing.assert_allclose(cloud.points[:, 0], 2 * np.pi * np.arange(8) / 8)

    def test_grid_needs_a_flat_or_revolution_manifold(self):
        for name in ('sphere', 'hyperbolic'):
            with self.assertRaises(UnsupportedGridError):
                grid(get_manifold(name), 8)


class BuildGraphTests(SimpleTestCase):
    def test_two_points_one_edge(self):
        M = get_manifold('sphere')
        cloud = PointCloud(M, [[0.0, 0.0, 1.0], [np.sin(0.5), 0.0, np.cos(0.5)]])
        graph = build_graph(cloud, k=1)
        self.assertEqual(graph.n_edges, 1)
        self.assertAlmostEqual(graph.lengths[0], 0.5, places=12)

    def test_grid_axis_edges(self):
        m = 11
        graph = build_graph(grid(get_manifold('euclidean', dim=2), m), k=4)
        h = 1.0 / (m - 1)
        axis = np.abs(graph.lengths - h) < 1e-9
        self.assertEqual(int(axis.sum()), 2 * m * (m - 1))
        self.assertAlmostEqual(graph.lengths[axis].max(), h, places=12)

    def test_sphere_graph_matches_brute_force(self):
        M = get_manifold('sphere')
        cloud = sample(M, 600, seed=2)
        graph = build_graph(cloud, k=8)
        self.assertTrue(graph.is_connected())
        X = cloud.points
        all_pairs = M.distance_closed(np.repeat(X, len(X), axis=0), np.tile(X, (len(X), 1))).reshape(len(X), len(X))
        for i in range(0, len(X), 37):
            nearest = np.argsort(all_pairs[i], kind='stable')[1:9]
            nbrs, lengths = graph.neighbors(i)
            self.assertTrue(set(nearest.tolist()) <= set(nbrs.tolist()))
            np.testing.assert_allclose(lengths, all_pairs[i, nbrs], atol=1e-12)

    def test_graph_distance_dominates_manifold_distance(self):
        M = get_manifold('sphere')
        graph = build_graph(sample(M, 5000, seed=4), k=8)
        X = graph.points
        ratios = []
        for source in (0, 1000, 2000, 3000, 4000):
            d_graph = graph_distance(graph, [source]).values
            d = M.distance_closed(np.repeat(X[source:source + 1], graph.n, axis=0), X)
            self.assertTrue(np.all(d_graph >= d - 1e-9))
            far = d > 0.5
            ratios.append(np.mean(d_graph[far] / d[far]))
        self.assertLessEqual(float(np.mean(ratios)), 1.1)

    def test_long_edges_dropped(self):
        M = get_manifold('sphere')
        with self.assertLogs('discretize.graphs', level='WARNING'):
            graph = build_graph(sample(M, 40, seed=0), k=20)
        self.assertTrue(np.all(graph.lengths < M.r_M))

    def test_disconnected_clusters(self):
        M = get_manifold('euclidean', dim=2)
        points = np.concatenate([np.random.default_rng(0).uniform(0, 1, (10, 2)), np.random.default_rng(1).uniform(5, 6, (6, 2))])
        with self.assertRaises(DisconnectedGraphError) as ctx:
            build_graph(PointCloud(M, points), k=5)
        self.assertEqual(ctx.exception.component_sizes, [10, 6])

    def test_deterministic(self):
        M = get_manifold('torus', dim=2)
        a = build_graph(sample(M, 300, seed=9), k=6)
        b = build_graph(sample(M, 300, seed=9), k=6)
        np.testing.assert_array_equal(a.edges, b.edges)
        np.testing.assert_array_equal(a.lengths, b.lengths)

    def test_torus_edges_wrap(self):
        M = get_manifold('torus', dim=1)
        graph = build_graph(grid(M, 16), k=2)
        self.assertEqual(graph.n_edges, 16)
        np.testing.assert_allclose(graph.lengths, 2 * np.pi / 16)

    def test_shooting_manifold_graph(self):
        M = get_manifold('funnel')
        graph = build_graph(sample(M, 300, seed=5), k=8)
        self.assertTrue(np.all(graph.lengths < M.r_M))
        self.assertTrue(np.all(graph.lengths > 0))

    def test_neighbor_offsets_are_chart_coordinates(self):
        graph = build_graph(grid(get_manifold('euclidean', dim=2), 5), k=4)
        nbrs, _ = graph.neighbors(12)
        np.testing.assert_allclose(graph.offsets(12), graph.points[nbrs] - graph.points[12], atol=1e-12)

    def test_vertex_lookup(self):
        graph = build_graph(grid(get_manifold('euclidean', dim=2), 4), k=4)
        self.assertEqual(graph.vertex_index(graph.point(5)), 5)
        field = DiscreteField(graph, np.arange(16.0))
        with self.assertRaises(OffGraphError):
            field.values_at([[0.123, 0.456]])


class PartitionTests(SimpleTestCase):
    def setUp(self):
        self.graph = build_graph(grid(get_manifold('euclidean', dim=2), 11), k=4)

    def test_square_band_and_interior(self):
        bset = partition(self.graph, get_region('unit_square'))
        self.assertEqual(bset.interior.size, 7 * 7)
        self.assertEqual(bset.boundary.size, 121 - 49)
        self.assertEqual(bset.exterior.size, 0)

    def test_everything_inside_has_no_boundary(self):
        with self.assertRaises(PartitionError):
            partition(self.graph, get_region('box', lo=-1.0, hi=2.0))

    def test_no_interior(self):
        with self.assertRaises(PartitionError):
            partition(self.graph, get_region('box', lo=0.05, hi=0.15))

    def test_hemisphere_band(self):
        graph = build_graph(sample(get_manifold('sphere'), 1500, seed=1), k=8)
        bset = partition(graph, get_region('northern_hemisphere'))
        z = graph.points[:, 2]
        self.assertTrue(np.all(z[bset.interior] > 0))
        self.assertTrue(np.all(z[bset.exterior] <= 0))
        self.assertTrue((z[bset.boundary] > 0).any() and (z[bset.boundary] <= 0).any())
        self.assertLessEqual(np.abs(z[bset.boundary]).max(), np.sin(graph.h) + 1e-12)


class GraphDistanceTests(SimpleTestCase):
    def test_path_graph(self):
        M = get_manifold('euclidean', dim=1, lo=0.0, hi=4.0)
        graph = build_graph(grid(M, 5), k=2)
        np.testing.assert_allclose(graph_distance(graph, [0]).values, [0, 1, 2, 3, 4])

    def test_lipschitz_along_edges(self):
        graph = build_graph(sample(get_manifold('hyperbolic'), 400, seed=3), k=6)
        u = graph_distance(graph, [0, 17]).values
        self.assertEqual(u[0], 0.0)
        a, b = graph.edges.T
        self.assertTrue(np.all(np.abs(u[a] - u[b]) <= graph.lengths * (1 + 1e-12)))

    def test_hemisphere_distance_to_equator(self):
        graph = build_graph(sample(get_manifold('sphere'), 2000, seed=8), k=8)
        region = get_region('northern_hemisphere')
        bset = partition(graph, region)
        u = graph_distance(graph, bset.boundary).values
        inside = bset.interior
        error = np.abs(u[inside] - region.boundary_distance(graph.points[inside]))
        self.assertLessEqual(error.max(), 3 * graph.h)


class FieldFormatTests(SimpleTestCase):
    def setUp(self):
        self.graph = build_graph(grid(get_manifold('euclidean', dim=1, lo=0.0, hi=1.0), 6), k=2)
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_csv_keeps_infinity_sentinel(self):
        field = DiscreteField(self.graph, [0.0, 0.2, np.inf, 0.6, 0.8, 1.0], name="u")
        path = write_field_csv(field, self.dir / "u.csv")
        self.assertIn("2,inf", path.read_text())
        back = read_field_csv(path, self.graph)
        np.testing.assert_array_equal(back.values, field.values)
        np.testing.assert_array_equal(back.dom, [0, 1, 3, 4, 5])

    def test_json_mirror(self):
        field = DiscreteField(self.graph, [1.0, np.inf, 2.0, 3.0, 4.0, 5.0], name="v")
        back = read_field(write_field(field, self.dir / "v.json", fmt="json"), self.graph)
        np.testing.assert_array_equal(back.values, field.values)

    def test_rejects_bad_csv(self):
        bad_header = self.dir / "bad.csv"
        bad_header.write_text("index,value\n0,1\n")
        with self.assertRaises(FieldFormatError):
            read_field_csv(bad_header, self.graph)
        missing = self.dir / "missing.csv"
        missing.write_text("vertex_index,value\n0,1\n1,2\n")
        with self.assertRaises(FieldFormatError):
            read_field_csv(missing, self.graph)
        with self.assertRaises(FieldFormatError):
            DiscreteField(self.graph, [0, 1, 2, 3, 4, -np.inf])

    def test_graph_json_rebuild(self):
        data = json.loads(json.dumps(graph_to_json(self.graph)))
        rebuilt = graph_from_json(data)
        np.testing.assert_array_equal(rebuilt.edges, self.graph.edges)
        self.assertEqual(rebuilt.manifold.name, 'euclidean')
        self.assertEqual(rebuilt.h, self.graph.h)
        with self.assertRaises(FieldFormatError):
            graph_from_json({**data, 'lengths': data['lengths'][:-1]})
