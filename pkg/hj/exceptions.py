"""
Errors raised by the Hamiltonian builders, verifiers and solvers.
"""


class HamiltonianError(Exception):
    """A Hamiltonian spec is malformed or breaks its structural invariants"""
    pass


class VerificationPreconditionError(HamiltonianError):
    """A field or vertex set does not meet a verification's preconditions"""
    pass


class SearchCapacityError(HamiltonianError):
    """An exhaustive search would exceed its pair budget"""
    pass


class EmptyBoundaryError(HamiltonianError):
    """A boundary-driven solve was given no boundary vertices"""
    pass


class NonInvertibleMapError(HamiltonianError):
    """A map's differential is singular at a sampled point"""
    pass
