"""Offline embedding extractor emitting EMB1 tables from pretrained encoders."""

from .emb1 import write_emb1
from .encoders import ImageEncoder, TextEncoder
from .extract import extract_all, extract_text, extract_visual
from .manifest import ExtractionManifest, ManifestEntry, load_manifest, manifest_from_dict

__version__ = "0.1.0"
