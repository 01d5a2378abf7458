"""Exception hierarchy shared by every module."""


class VKGError(Exception):
    """Base class for all library errors."""


class DimensionError(VKGError, ValueError):
    pass


class SingularSymbolError(VKGError, ValueError):
    pass


class ResolutionError(VKGError, ValueError):
    pass


class DegenerateInputError(VKGError, ValueError):
    pass


class SupportViolationError(VKGError, RuntimeError):
    pass


class MissingHistoryError(VKGError, LookupError):
    pass


class StencilError(VKGError, ValueError):
    pass


class OrderingError(VKGError, ValueError):
    pass


class DependencyError(VKGError, RuntimeError):
    pass


class InsufficientDataError(VKGError, ValueError):
    pass


class DomainError(VKGError, ValueError):
    pass


class WrapError(VKGError, RuntimeError):
    pass


class ConfigError(VKGError, ValueError):
    pass


class ArchiveError(VKGError, RuntimeError):
    pass


class UnknownQuantityError(VKGError, LookupError):
    pass
