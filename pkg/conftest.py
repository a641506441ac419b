import inspect


def pytest_pycollect_makeitem(collector, name, obj):
    """Do not collect library functions imported into test modules (e.g. nonsmooth.probes.test_subgradient)."""
    if inspect.isfunction(obj) and getattr(collector, "module", None) is not None:
        if obj.__module__ != collector.module.__name__:
            return []
    return None
