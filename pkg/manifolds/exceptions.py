"""
Geometry errors raised by the manifold kernels.
"""


class GeometryError(Exception):
    """Base class for manifold-core failures"""
    pass


class BasePointMismatchError(GeometryError):
    """Vectors or covectors that must share a base point do not"""
    pass


class OutOfRadiusError(GeometryError):
    """Two points are at or beyond the working radius r_M"""

    def __init__(self, distance, radius, message=None):
        self.distance = float(distance)
        self.radius = float(radius)
        super().__init__(message or f"distance {self.distance:.6g} is not below r_M = {self.radius:.6g}")


class DomainExitError(GeometryError):
    """Geodesic integration left the coordinate domain"""
    pass


class ShootingError(GeometryError):
    """Shooting for the logarithm did not converge"""

    def __init__(self, residual, iterations):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(f"shooting stalled at residual {self.residual:.3e} after {self.iterations} iterations")


class NonDifferentiableError(GeometryError):
    """Derivative requested at a point where it does not exist"""
    pass


class UnknownManifoldError(GeometryError):
    """Name not present in the manifold registry"""
    pass


class CoordinateShapeError(GeometryError):
    """Coordinates do not match the manifold's representation"""
    pass
