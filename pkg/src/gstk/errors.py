"""Shared exception types."""


class GstkError(Exception):
    """Base class for all toolkit errors."""


class FileFormatError(GstkError, ValueError):
    """A file or text payload does not conform to its documented format."""


class DomainError(GstkError, ValueError):
    """Inputs are well formed but violate a precondition of the operation."""
