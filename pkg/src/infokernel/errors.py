"""Exception types shared by all pricing modules."""


class InfoKernelError(Exception):
    """Base class for all library errors."""


class ConfigError(InfoKernelError):
    """A model configuration file is malformed or inconsistent."""


class DomainError(InfoKernelError):
    """An operation was called outside its numeric domain (e.g. a maturity
    at or beyond the first factor release, or a time past the horizon)."""


class NumericalError(InfoKernelError):
    """A computation produced a non-finite or otherwise unusable value."""
