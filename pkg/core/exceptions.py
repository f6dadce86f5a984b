"""
Exception hierarchy for the benchmark toolkit.

Every error raised on purpose by the package derives from ErpBenchError so
callers (and the CLI) can catch the whole family in one place. Value-type
errors also subclass ValueError and storage errors subclass OSError, which
keeps ``except ValueError`` style handling in calling code working.
"""

from typing import Optional


class ErpBenchError(Exception):
    """Base class for all toolkit errors."""


class BandSpecificationError(ErpBenchError, ValueError):
    """Filter band or notch frequency outside (0, fs/2) or inverted."""


class BandError(ErpBenchError, ValueError):
    """Spectral band outside the frequency range of a PSD."""


class DataError(ErpBenchError, ValueError):
    """Signal data that cannot be processed (non-finite, no usable channels)."""


class DegenerateInputError(ErpBenchError, ValueError):
    """Input whose result would be identically zero unless the caller opts in."""


class ArgumentError(ErpBenchError, ValueError):
    """Invalid argument value, e.g. an out-of-range channel index."""


class EmptySetError(ErpBenchError, ValueError):
    """An operation produced or received zero trials."""


class LengthError(ErpBenchError, ValueError):
    """Vector too short for the requested computation."""


class ShapeError(ErpBenchError, ValueError):
    """Dimension mismatch between arrays, models, or configs."""


class DegenerateLabelError(ErpBenchError, ValueError):
    """Training split contains fewer than two classes."""


class MetricError(ErpBenchError, ValueError):
    """Metric undefined for the given labels (fewer than two classes)."""


class SizeError(ErpBenchError, ValueError):
    """Too few subjects for a split, or an empty split."""


class CoverageError(ErpBenchError, ValueError):
    """Missing or inconsistent cells in a results table."""


class StorageError(ErpBenchError, OSError):
    """Failure reading or writing toolkit files."""


class CorruptionError(StorageError):
    """Data file size does not match what the manifest describes."""

    def __init__(self, message: str, expected: Optional[int] = None, actual: Optional[int] = None):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class VersionError(StorageError):
    """Unsupported on-disk format version."""

    def __init__(self, message: str, version: Optional[int] = None):
        super().__init__(message)
        self.version = version
