"""Exception types for manifest handling and extraction."""


class ExtractorError(Exception):
    """Base class for all extractor errors."""


class MalformedManifest(ExtractorError):
    """Manifest file is structurally invalid (bad JSON, bad id, duplicate
    id, or an entry payload that does not match its kind)."""


class SourceMissing(ExtractorError):
    """An image or frame path named by the manifest does not exist."""


class EmptyClip(ExtractorError):
    """A clip entry has no frames to pool."""


class EncoderLoadError(ExtractorError):
    """A pretrained encoder could not be loaded from its name or path."""


class DimensionMismatch(ExtractorError):
    """Text and image encoders disagree on dimension in a merged output."""
