"""
Errors raised while sampling, building graphs and reading fields.
"""


class DiscretizationError(Exception):
    """Base class for discretization failures"""
    pass


class EmptySampleError(DiscretizationError):
    """A point cloud with no points was requested"""
    pass


class DisconnectedGraphError(DiscretizationError):
    """The k-nearest-neighbor graph splits into several components"""

    def __init__(self, component_sizes):
        self.component_sizes = sorted((int(s) for s in component_sizes), reverse=True)
        super().__init__(
            f"graph is disconnected: {len(self.component_sizes)} components of sizes {self.component_sizes}"
        )


class PartitionError(DiscretizationError):
    """A region does not split the graph into boundary and interior vertices"""
    pass


class FieldFormatError(DiscretizationError):
    """A field or graph file is malformed"""
    pass


class OffGraphError(DiscretizationError):
    """A discrete field was evaluated away from the graph vertices"""
    pass


class UnsupportedGridError(DiscretizationError):
    """Regular grids are not defined on this manifold"""
    pass
