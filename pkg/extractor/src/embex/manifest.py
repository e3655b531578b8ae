"""Extraction manifest: what to embed, with which encoders.

JSON schema:

    {
      "text_encoder": "<hub id or local path>",
      "image_encoder": "<hub id or local path>",
      "text_pooling": "last",      # optional; "last" or "first"
      "image_pooling": "first",    # optional
      "fps": 1,                    # frame sampling rate the clips were cut at
      "entries": [
        {"id": "q:v1:0",    "text": "How to ...?"},
        {"id": "at:v1:a0",  "text": "Press the start button"},
        {"id": "av:v1:b0",  "image": "buttons/b0.png"},
        {"id": "fv:v1:f0",  "frames": ["frames/000.png", "frames/001.png"]}
      ]
    }

`frames` may also name a directory, in which case its image files are
taken in sorted order. Relative paths resolve against the manifest file's
directory. Ids must be unique and of the form `<kind>:<video>:<local>`
with kind in {ft, fv, q, at, av}; text kinds (ft, q, at) carry "text",
av carries "image", fv carries "frames".
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedManifest, SourceMissing

KINDS = frozenset({"ft", "fv", "q", "at", "av"})
TEXT_KINDS = frozenset({"ft", "q", "at"})
IMAGE_KINDS = frozenset({"av"})
CLIP_KINDS = frozenset({"fv"})

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}

DEFAULT_TEXT_ENCODER = "xlnet-base-cased"
DEFAULT_IMAGE_ENCODER = "google/vit-base-patch16-224-in21k"


def _id_kind(emb_id: str) -> str:
    parts = emb_id.split(":")
    if len(parts) != 3 or parts[0] not in KINDS or not all(parts[1:]):
        raise MalformedManifest(f"bad embedding id {emb_id!r}")
    return parts[0]


@dataclass(frozen=True)
class ManifestEntry:
    emb_id: str
    kind: str
    text: str | None = None
    image: Path | None = None
    frames: tuple[Path, ...] | None = None


@dataclass
class ExtractionManifest:
    text_encoder: str = DEFAULT_TEXT_ENCODER
    image_encoder: str = DEFAULT_IMAGE_ENCODER
    text_pooling: str = "last"
    image_pooling: str = "first"
    fps: float = 1.0
    entries: list[ManifestEntry] = field(default_factory=list)

    def of_kinds(self, kinds: frozenset[str]) -> list[ManifestEntry]:
        return [e for e in self.entries if e.kind in kinds]


def _frame_paths(raw, base: Path) -> tuple[Path, ...]:
    if isinstance(raw, str):
        folder = base / raw
        if not folder.is_dir():
            raise SourceMissing(f"frame directory {folder} does not exist")
        return tuple(
            sorted(
                p for p in folder.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
            )
        )
    if isinstance(raw, list):
        return tuple(base / p for p in raw)
    raise MalformedManifest("frames must be a directory path or a list of paths")


def manifest_from_dict(doc: dict, base_dir: str | Path = ".") -> ExtractionManifest:
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise MalformedManifest("manifest must be an object with an entries array")
    base = Path(base_dir)
    fps = float(doc.get("fps", 1.0))
    if fps <= 0:
        raise MalformedManifest(f"fps must be positive, got {fps}")
    for key in ("text_pooling", "image_pooling"):
        if doc.get(key, "last") not in ("last", "first"):
            raise MalformedManifest(f"{key} must be 'last' or 'first'")

    entries = []
    seen = set()
    for i, rec in enumerate(doc["entries"]):
        if not isinstance(rec, dict) or not isinstance(rec.get("id"), str):
            raise MalformedManifest(f"entry {i} lacks an id")
        emb_id = rec["id"]
        kind = _id_kind(emb_id)
        if emb_id in seen:
            raise MalformedManifest(f"duplicate id {emb_id!r}")
        seen.add(emb_id)

        if kind in TEXT_KINDS:
            if not isinstance(rec.get("text"), str):
                raise MalformedManifest(f"{emb_id}: kind {kind} needs a text field")
            entries.append(ManifestEntry(emb_id=emb_id, kind=kind, text=rec["text"]))
        elif kind in IMAGE_KINDS:
            if not isinstance(rec.get("image"), str):
                raise MalformedManifest(f"{emb_id}: kind {kind} needs an image field")
            image = base / rec["image"]
            if not image.is_file():
                raise SourceMissing(f"{emb_id}: image {image} does not exist")
            entries.append(ManifestEntry(emb_id=emb_id, kind=kind, image=image))
        else:  # clip
            if "frames" not in rec:
                raise MalformedManifest(f"{emb_id}: kind {kind} needs a frames field")
            frames = _frame_paths(rec["frames"], base)
            for frame in frames:
                if not frame.is_file():
                    raise SourceMissing(f"{emb_id}: frame {frame} does not exist")
            entries.append(ManifestEntry(emb_id=emb_id, kind=kind, frames=frames))

    return ExtractionManifest(
        text_encoder=doc.get("text_encoder", DEFAULT_TEXT_ENCODER),
        image_encoder=doc.get("image_encoder", DEFAULT_IMAGE_ENCODER),
        text_pooling=doc.get("text_pooling", "last"),
        image_pooling=doc.get("image_pooling", "first"),
        fps=fps,
        entries=entries,
    )


def load_manifest(path: str | Path) -> ExtractionManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedManifest(f"bad manifest JSON: {exc}") from exc
    return manifest_from_dict(doc, base_dir=path.parent)
