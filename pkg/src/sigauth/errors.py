"""Exception hierarchy. Every error carries a stable machine-readable code."""

from __future__ import annotations


class SigAuthError(Exception):
    """Base class for all package errors."""

    code = "ERROR"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class SampleFormatError(SigAuthError):
    """Sample file problems. Codes: MISSING_FILE, MALFORMED_ROW, CHANNEL_COUNT."""

    code = "MALFORMED_ROW"

    def __init__(self, message, *, code=None, line: int | None = None):
        super().__init__(message, code=code)
        self.line = line


class QualityError(SigAuthError):
    """A sample (or batch of samples) failed the capture-quality gate."""

    code = "QUALITY_FAILED"

    def __init__(self, message, *, indices=(), reasons=()):
        super().__init__(message)
        self.indices = tuple(indices)
        self.reasons = tuple(reasons)


class SplitTooFineError(SigAuthError):
    code = "SPLIT_TOO_FINE"


class EmptyPartitionError(SigAuthError):
    code = "EMPTY_PARTITION"


class DimensionMismatchError(SigAuthError):
    code = "DIMENSION_MISMATCH"


class MapReduceError(SigAuthError):
    """A mapper or reducer failed; carries the lowest failing partition index."""

    code = "MAPREDUCE_FAILED"

    def __init__(self, message, *, partition_index: int):
        super().__init__(message)
        self.partition_index = partition_index


class InsufficientSamplesError(SigAuthError):
    code = "INSUFFICIENT_SAMPLES"


class DegenerateFeatureError(SigAuthError):
    """A feature column has (near-)zero variance; carries the column index."""

    code = "DEGENERATE_FEATURE"

    def __init__(self, message, *, column: int):
        super().__init__(message)
        self.column = column


class OneClassError(SigAuthError):
    code = "ONE_CLASS"


class UnknownUserError(SigAuthError):
    code = "UNKNOWN_USER"


class CorruptRecordError(SigAuthError):
    code = "CORRUPT_RECORD"


class PcaMismatchError(SigAuthError):
    code = "PCA_MISMATCH"


class MetricUndefinedError(SigAuthError):
    """Metric denominator empty. Codes: NO_GENUINE_PROBES, NO_FORGED_PROBES."""

    code = "METRIC_UNDEFINED"


class OverlappingSplitError(SigAuthError):
    code = "OVERLAPPING_SPLIT"


class WorkloadMismatchError(SigAuthError):
    code = "WORKLOAD_MISMATCH"
