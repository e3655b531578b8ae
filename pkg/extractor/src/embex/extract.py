"""Run the encoders over a manifest and emit EMB1 files.

Text entries (kinds ft/q/at) go through the text encoder one vector per
id. Button images (av) are encoded individually; clips (fv) encode every
pre-extracted frame and mean-pool them into one vector per clip id.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .emb1 import write_emb1
from .encoders import ImageEncoder, TextEncoder
from .errors import DimensionMismatch, EmptyClip
from .manifest import CLIP_KINDS, IMAGE_KINDS, TEXT_KINDS, ExtractionManifest


def text_vectors(manifest: ExtractionManifest) -> tuple[dict[str, np.ndarray], int]:
    encoder = TextEncoder(manifest.text_encoder, pooling=manifest.text_pooling)
    entries = manifest.of_kinds(TEXT_KINDS)
    vectors = encoder.encode([e.text for e in entries])
    return {e.emb_id: vectors[i] for i, e in enumerate(entries)}, encoder.dim


def visual_vectors(manifest: ExtractionManifest) -> tuple[dict[str, np.ndarray], int]:
    encoder = ImageEncoder(manifest.image_encoder, pooling=manifest.image_pooling)
    out: dict[str, np.ndarray] = {}
    for entry in manifest.of_kinds(IMAGE_KINDS):
        out[entry.emb_id] = encoder.encode_paths([entry.image])[0]
    for entry in manifest.of_kinds(CLIP_KINDS):
        if not entry.frames:
            raise EmptyClip(f"{entry.emb_id}: clip has no frames")
        frames = encoder.encode_paths(entry.frames)
        out[entry.emb_id] = frames.astype(np.float64).mean(axis=0).astype(np.float32)
    return out, encoder.dim


def extract_text(manifest: ExtractionManifest, out_path: str | Path) -> Path:
    """Embed the manifest's text entries into one EMB1 file."""
    vectors, dim = text_vectors(manifest)
    return write_emb1(vectors, dim, out_path)


def extract_visual(manifest: ExtractionManifest, out_path: str | Path) -> Path:
    """Embed the manifest's image and clip entries into one EMB1 file."""
    vectors, dim = visual_vectors(manifest)
    return write_emb1(vectors, dim, out_path)


def extract_all(manifest: ExtractionManifest, out_path: str | Path) -> Path:
    """Embed every entry into one EMB1 file; encoder dims must agree."""
    has_text = bool(manifest.of_kinds(TEXT_KINDS))
    has_visual = bool(
        manifest.of_kinds(IMAGE_KINDS) or manifest.of_kinds(CLIP_KINDS)
    )
    vectors: dict[str, np.ndarray] = {}
    dims = []
    if has_text or not has_visual:
        text, dim_t = text_vectors(manifest)
        vectors.update(text)
        dims.append(dim_t)
    if has_visual:
        visual, dim_v = visual_vectors(manifest)
        vectors.update(visual)
        dims.append(dim_v)
    if len(set(dims)) > 1:
        raise DimensionMismatch(
            f"text encoder dim {dims[0]} != image encoder dim {dims[1]}; "
            "write separate files with extract_text/extract_visual"
        )
    return write_emb1(vectors, dims[0], out_path)
