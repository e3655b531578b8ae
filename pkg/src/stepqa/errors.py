"""Exception types raised across the package.

Every error that callers are expected to catch has a named class here;
operations document which ones they raise.
"""


class StepQAError(Exception):
    """Base class for all package errors."""


# --- script parsing / segmentation ---------------------------------------


class MalformedScript(StepQAError):
    """Script file is structurally invalid (bad JSON, missing field,
    start > end, negative start, empty text, or overlap beyond tolerance)."""


class EmptyScript(StepQAError):
    """Script contains no lines."""


class EmptySublist(StepQAError):
    """Clip alignment called on an empty line sublist."""


# --- grounding ------------------------------------------------------------


class EmptyCorpus(StepQAError):
    """TF-IDF build called with no documents."""


class EmptyFunctionSet(StepQAError):
    """Grounding called with no function units."""


class DimensionMismatch(StepQAError):
    """Vectors, tensors, or tables have incompatible dimensions."""


# --- embedding tables and binary formats ----------------------------------


class BadMagic(StepQAError):
    """File does not start with the expected magic bytes."""


class TruncatedFile(StepQAError):
    """File length disagrees with its declared layout (short or trailing
    bytes)."""


class DuplicateId(StepQAError):
    """Embedding file declares the same id twice."""


class NonFiniteValue(StepQAError):
    """A vector or parameter tensor contains NaN or infinity."""


class MissingId(StepQAError, KeyError):
    """Requested embedding id is absent from the table."""

    def __str__(self) -> str:  # KeyError quotes its arg; keep a plain message
        return Exception.__str__(self)


class EmptyList(StepQAError):
    """Pooling called with no vectors."""


# --- qa model / training ---------------------------------------------------


class ConfigError(StepQAError):
    """Model, training, or run configuration violates an invariant."""


class IndexOutOfRange(StepQAError):
    """Ground-truth index outside the candidate list."""


class EmptyDataset(StepQAError):
    """Training or evaluation called with no samples."""


class MalformedDataset(StepQAError):
    """QA dataset file is structurally invalid."""


# --- metrics ----------------------------------------------------------------


class EmptyRecords(StepQAError):
    """Metric computation called with no rank records."""


class CoverageGap(StepQAError):
    """A step of the dataset has no prediction (or the ground truth is
    missing from a ranking)."""
