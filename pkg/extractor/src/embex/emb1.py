"""Writer for the EMB1 embedding table format consumed downstream.

Layout (little-endian): magic "EMB1" | u32 entry_count | u32 dim | per
entry u16 id_len | id UTF-8 | dim x f32. Entries sorted by id. The write
is atomic: a temp file in the target directory is renamed into place.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"


def write_emb1(entries: dict[str, np.ndarray], dim: int, path: str | Path) -> Path:
    path = Path(path)
    chunks = [struct.pack("<4sII", MAGIC, len(entries), dim)]
    for emb_id in sorted(entries):
        vec = np.asarray(entries[emb_id], dtype=np.float32)
        if vec.shape != (dim,):
            raise ValueError(
                f"vector for {emb_id!r} has shape {vec.shape}, expected ({dim},)"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"vector for {emb_id!r} is not finite")
        id_bytes = emb_id.encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise ValueError(f"embedding id too long ({len(id_bytes)} bytes)")
        chunks.append(struct.pack("<H", len(id_bytes)))
        chunks.append(id_bytes)
        chunks.append(vec.astype("<f4").tobytes())

    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(b"".join(chunks))
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path
