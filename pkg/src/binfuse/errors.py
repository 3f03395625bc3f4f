"""Exception hierarchy shared by every filter kind."""


class FilterError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(FilterError, ValueError):
    """Unsupported parameter, e.g. a fingerprint width other than 8 or 16."""


class ConstructionError(FilterError):
    """Peeling did not succeed within the allowed number of attempts."""


class DuplicateKeyError(ConstructionError):
    """The input set contains repeated keys."""


class FormatError(FilterError):
    """Serialized data does not start with a recognized magic tag."""


class UnsupportedFormatError(FormatError):
    """Recognized envelope, but unknown format version or filter kind."""


class CorruptDataError(FormatError):
    """Header and payload disagree (truncated, trailing or inconsistent data)."""
