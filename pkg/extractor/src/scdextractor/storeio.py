"""Writers for the embedding-store file pair consumed by the analysis side.

The format is a public contract shared with the analysis package:

- ``<stem>.vec``: 16-byte header — magic ``SCDE``, u16 version (1), u32 dim,
  u32 count, 2 zero pad bytes — followed by count x dim little-endian
  float32 values in row-major order.
- ``<stem>.meta.jsonl``: one compact JSON object per row, in row order, with
  keys ``occurrence_id`` (unique u64), ``doc_id``, ``year`` (1000-9999),
  ``journal``, ``token``.

This package writes the format; it never imports the analysis package.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"SCDE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHII2x")


@dataclass(frozen=True)
class OccurrenceMeta:
    """Metadata for one stored embedding row."""

    occurrence_id: int
    doc_id: str
    year: int
    journal: str
    token: str


def write_embedding_store(
    matrix: np.ndarray, meta: Sequence[OccurrenceMeta], path_stem
) -> list[Path]:
    """Write ``<stem>.vec`` + ``<stem>.meta.jsonl``; returns both paths."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {matrix.shape}")
    count, dim = matrix.shape
    if len(meta) != count:
        raise ValueError(f"{len(meta)} metadata rows for {count} vectors")
    if count and not np.isfinite(matrix).all():
        raise ValueError("matrix contains non-finite values")
    ids = [m.occurrence_id for m in meta]
    if len(set(ids)) != len(ids):
        raise ValueError("occurrence_id values must be unique")
    stem = Path(path_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    vec_path = stem.with_name(stem.name + ".vec")
    meta_path = stem.with_name(stem.name + ".meta.jsonl")
    with vec_path.open("wb") as handle:
        handle.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim, count))
        handle.write(matrix.tobytes())
    with meta_path.open("w", encoding="utf-8") as handle:
        for m in meta:
            handle.write(
                json.dumps(
                    {
                        "occurrence_id": m.occurrence_id,
                        "doc_id": m.doc_id,
                        "year": m.year,
                        "journal": m.journal,
                        "token": m.token,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
    return [vec_path, meta_path]
