"""
Errors raised while configuring and running commands.
"""


class RunError(Exception):
    """Base class for run failures"""
    pass


class ConfigError(RunError):
    """A run config or one of its files is malformed"""
    pass


class UnknownSuiteError(RunError):
    """A check suite name is not registered"""
    pass
