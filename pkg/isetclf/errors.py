"""Exceptions raised by the library."""

from typing import Optional


class IsetclfError(Exception):
    """Base class for every error raised by isetclf."""

    def __init__(self, message: str, class_id: Optional[str] = None) -> None:
        if class_id is not None:
            message = f'class {class_id}: {message}'
        super().__init__(message)
        self.class_id = class_id


class InvalidInputError(IsetclfError, ValueError):
    """An argument violates a precondition."""


class GalleryConstraintError(IsetclfError, ValueError):
    """A regressor would have more columns than rows."""


class ConditioningError(IsetclfError, ArithmeticError):
    """A regressor is (still) rank deficient."""


class ConfigurationError(IsetclfError):
    """The run configuration is inconsistent with the data."""


class ManifestError(IsetclfError):
    """A dataset manifest could not be loaded."""


class ProtocolError(IsetclfError):
    """A split protocol cannot be applied to a dataset."""


class GalleryFormatError(IsetclfError):
    """A gallery file is corrupt or of an unknown format."""


class BenchmarkError(IsetclfError):
    """The online and fast paths disagree, timings would be meaningless."""
