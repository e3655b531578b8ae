"""Embedding table storage: the EMB1 binary format and pooling.

EMB1 layout (all integers little-endian):

    magic  "EMB1"                      4 bytes
    entry_count                        u32
    dim                                u32
    entry_count times:
        id_len                         u16
        id                             id_len UTF-8 bytes
        vector                         dim x f32

Entries are written sorted by id, so saving the same table twice is
byte-identical. Vectors are widened to float64 on load.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    DuplicateId,
    EmptyList,
    MissingId,
    NonFiniteValue,
    TruncatedFile,
)

MAGIC = b"EMB1"
HEADER = struct.Struct("<4sII")

KINDS = frozenset({"ft", "fv", "q", "at", "av"})


def make_id(kind: str, video_id: str, local_id: str) -> str:
    """Compose a `<kind>:<video_id>:<local_id>` embedding id."""
    if kind not in KINDS:
        raise ValueError(f"unknown embedding kind {kind!r}")
    if ":" in video_id or ":" in local_id:
        raise ValueError("video_id and local_id must not contain ':'")
    if not video_id or not local_id:
        raise ValueError("video_id and local_id must be non-empty")
    return f"{kind}:{video_id}:{local_id}"


def is_valid_id(emb_id: str) -> bool:
    parts = emb_id.split(":")
    return len(parts) == 3 and parts[0] in KINDS and all(parts[1:])


@dataclass
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def get(self, emb_id: str) -> np.ndarray:
        try:
            return self.entries[emb_id]
        except KeyError:
            raise MissingId(f"embedding id {emb_id!r} not in table") from None

    def __getitem__(self, emb_id: str) -> np.ndarray:
        return self.get(emb_id)

    def __contains__(self, emb_id: str) -> bool:
        return emb_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def put(self, emb_id: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise DimensionMismatch(
                f"vector for {emb_id!r} has shape {vec.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(vec)):
            raise NonFiniteValue(f"vector for {emb_id!r} is not finite")
        self.entries[emb_id] = vec


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read and fully validate an EMB1 file."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"{path}: not an EMB1 file")
    if len(data) < HEADER.size:
        raise TruncatedFile(f"{path}: header cut short")
    _, count, dim = HEADER.unpack_from(data, 0)
    offset = HEADER.size
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + 2 > len(data):
            raise TruncatedFile(f"{path}: entry header cut short")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 4 * dim > len(data):
            raise TruncatedFile(f"{path}: entry body cut short")
        emb_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        if emb_id in entries:
            raise DuplicateId(f"{path}: id {emb_id!r} appears twice")
        if not np.all(np.isfinite(vec)):
            raise NonFiniteValue(f"{path}: vector for {emb_id!r} is not finite")
        entries[emb_id] = vec.astype(np.float64)
    if offset != len(data):
        raise TruncatedFile(
            f"{path}: {len(data) - offset} trailing bytes after declared entries"
        )
    return EmbeddingTable(dim=dim, entries=entries)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write a table as EMB1, entries sorted by id. Byte-deterministic."""
    chunks = [HEADER.pack(MAGIC, len(table.entries), table.dim)]
    for emb_id in sorted(table.entries):
        vec = np.asarray(table.entries[emb_id], dtype=np.float64)
        if vec.shape != (table.dim,):
            raise DimensionMismatch(
                f"vector for {emb_id!r} has shape {vec.shape}, expected ({table.dim},)"
            )
        if not np.all(np.isfinite(vec)):
            raise NonFiniteValue(f"vector for {emb_id!r} is not finite")
        id_bytes = emb_id.encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise ValueError(f"embedding id too long ({len(id_bytes)} bytes)")
        chunks.append(struct.pack("<H", len(id_bytes)))
        chunks.append(id_bytes)
        chunks.append(vec.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def mean_pool(vectors: list[np.ndarray]) -> np.ndarray:
    """Componentwise arithmetic mean of equal-dimension vectors."""
    if not vectors:
        raise EmptyList("cannot pool zero vectors")
    first = np.asarray(vectors[0], dtype=np.float64)
    stacked = []
    for v in vectors:
        arr = np.asarray(v, dtype=np.float64)
        if arr.shape != first.shape:
            raise DimensionMismatch(
                f"pooled vectors have shapes {first.shape} and {arr.shape}"
            )
        stacked.append(arr)
    return np.mean(np.stack(stacked), axis=0)
