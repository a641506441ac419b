"""
File formats for clouds, graphs and fields.

- cloud / graph: JSON {points, edges, lengths, manifold, k, h, seed, method}
- cloud: CSV with header `vertex_index,x0,...` as a flat alternative
- field: CSV with header `vertex_index,value` ("inf" for the +inf sentinel)
  and a JSON mirror {name, values}
"""
import csv
import json
import logging
import math
from pathlib import Path

import numpy as np

from .exceptions import FieldFormatError
from .fields import DiscreteField
from .graphs import GeodesicGraph
from .sampling import PointCloud
from .serializers import FieldPayloadSerializer, GraphPayloadSerializer

logger = logging.getLogger(__name__)

FIELD_HEADER = ['vertex_index', 'value']


def _format_value(value):
    return "inf" if math.isinf(value) else repr(float(value))


def cloud_to_json(cloud):
    return {
        'manifold': cloud.manifold.describe(),
        'points': cloud.points.tolist(),
        'seed': cloud.seed,
        'method': cloud.method,
    }


def graph_to_json(graph):
    data = cloud_to_json(graph.cloud)
    data.update({
        'edges': graph.edges.tolist(),
        'lengths': graph.lengths.tolist(),
        'k': graph.k,
        'h': graph.h,
    })
    return data


def graph_from_json(data):
    """Rebuild a graph from its JSON payload without recomputing edges."""
    serializer = GraphPayloadSerializer(data=data)
    if not serializer.is_valid():
        raise FieldFormatError(f"invalid graph payload: {serializer.errors}")
    payload = serializer.validated_data
    manifold = payload['manifold']['manifold']
    cloud = PointCloud(manifold, np.array(payload['points']), seed=payload['seed'], method=payload['method'])
    edges = np.array(payload['edges'], dtype=np.int64).reshape(-1, 2)
    return GeodesicGraph(cloud, edges, np.array(payload['lengths']), payload['k'])


def _builtin(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=_builtin))
    logger.info(f"[Formats] wrote {path}")
    return path


def write_cloud_csv(cloud, path):
    """Cloud CSV with header `vertex_index,x0,...,x{D-1}` in chart coordinates."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['vertex_index'] + [f"x{j}" for j in range(cloud.points.shape[1])])
        for i, row in enumerate(cloud.points):
            writer.writerow([i] + [repr(float(x)) for x in row])
    logger.info(f"[Formats] wrote {len(cloud)} points to {path}")
    return path


def read_graph(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FieldFormatError(f"cannot read graph file {path}: {exc}")
    return graph_from_json(data)


def field_to_json(field):
    return {
        'name': field.name,
        'values': ["inf" if math.isinf(v) else float(v) for v in field.values],
    }


def field_from_json(data, graph):
    serializer = FieldPayloadSerializer(data=data)
    if not serializer.is_valid():
        raise FieldFormatError(f"invalid field payload: {serializer.errors}")
    return DiscreteField(graph, serializer.validated_data['values'], name=serializer.validated_data['name'])


def write_field_csv(field, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(FIELD_HEADER)
        for i, value in enumerate(field.values):
            writer.writerow([i, _format_value(value)])
    logger.info(f"[Formats] wrote {field.graph.n} values to {path}")
    return path


def read_field_csv(path, graph, name=None):
    """
    Read a field CSV against a graph; every vertex must appear exactly once.

    Raises:
        FieldFormatError: bad header, unknown or repeated indices, NaN / -inf values
    """
    values = np.full(graph.n, np.nan)
    try:
        with Path(path).open(newline='') as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if [h.strip() for h in header or []] != FIELD_HEADER:
                raise FieldFormatError(f"{path}: expected header {','.join(FIELD_HEADER)}, got {header}")
            for line, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    i, value = int(row[0]), float(row[1])
                except (ValueError, IndexError):
                    raise FieldFormatError(f"{path}:{line}: cannot parse {row}")
                if not 0 <= i < graph.n:
                    raise FieldFormatError(f"{path}:{line}: vertex index {i} out of range")
                if not np.isnan(values[i]):
                    raise FieldFormatError(f"{path}:{line}: vertex {i} listed twice")
                if np.isnan(value) or value == -np.inf:
                    raise FieldFormatError(f"{path}:{line}: value {row[1]} is not allowed")
                values[i] = value
    except OSError as exc:
        raise FieldFormatError(f"cannot read field file {path}: {exc}")
    missing = np.flatnonzero(np.isnan(values))
    if missing.size:
        raise FieldFormatError(f"{path}: {missing.size} vertices have no value (first: {missing[0]})")
    return DiscreteField(graph, values, name=name or Path(path).stem)


def write_field(field, path, fmt="csv"):
    if fmt == "json":
        return write_json(field_to_json(field), path)
    return write_field_csv(field, path)


def read_field(path, graph):
    path = Path(path)
    if path.suffix.lower() == '.json':
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise FieldFormatError(f"cannot read field file {path}: {exc}")
        return field_from_json(data, graph)
    return read_field_csv(path, graph)
