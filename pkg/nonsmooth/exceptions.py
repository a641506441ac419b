"""
Errors raised by the nonsmooth probes, estimators and searches.
"""


class NonsmoothError(Exception):
    """Base class for nonsmooth-analysis failures"""
    pass


class FieldDomainError(NonsmoothError):
    """A field is +inf where a finite value is required"""
    pass


class EmptyFanError(NonsmoothError):
    """A direction fan with no directions was supplied"""
    pass


class NegativeFactorError(NonsmoothError):
    """The product rule was applied to a negative factor"""
    pass


class PreconditionError(NonsmoothError):
    """A search was started outside its stated preconditions"""
    pass


class HypothesisError(NonsmoothError):
    """None of the theorem's cases holds for the given data"""
    pass


class ExtendedRealError(NonsmoothError):
    """An undefined extended-real operation such as (+inf) - (+inf)"""
    pass
