"""
Shared hypothesis profiles for the app test modules.

Numerical properties are slow to shrink and some probes take tens of
milliseconds, so the default profile disables the deadline.
"""
import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile(
    "thorough",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("RHJ_HYPOTHESIS_PROFILE", "default"))
