"""Immutable embedding stores with bit-exact on-disk serialization.

A store couples a ``count x dim`` float32 matrix of per-occurrence embedding
vectors with one metadata record per row (occurrence id, document, year,
journal, surface token). On disk a store is a pair of files sharing a stem:

``<stem>.vec``
    16-byte header (magic ``SCDE``, u16 LE format version, u32 LE dim,
    u32 LE row count, zero padding) followed by the matrix as little-endian
    float32, row-major.

``<stem>.meta.jsonl``
    One JSON object per row, in row order, with keys
    ``occurrence_id, doc_id, year, journal, token``.

Vectors are stored as 32-bit floats; metric arithmetic upstream promotes to
64-bit after load. Stores are immutable once constructed and safe to share
across threads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAGIC = b"SCDE"
FORMAT_VERSION = 1
# magic, version, dim, count, padded to 16 bytes
_HEADER = struct.Struct("<4sHII2x")
HEADER_SIZE = _HEADER.size

YEAR_MIN = 1000
YEAR_MAX = 9999

_META_KEYS = ("occurrence_id", "doc_id", "year", "journal", "token")


class StoreFormatError(ValueError):
    """A store file failed structural validation (magic, version, sizes, JSON)."""


@dataclass(frozen=True)
class EmbeddingRecord:
    """Metadata for one occurrence of the target word; ``row`` indexes the matrix."""

    occurrence_id: int
    doc_id: str
    year: int
    journal: str
    token: str
    row: int


@dataclass(frozen=True)
class TimeSlice:
    """Row indices of all occurrences in one calendar year (may be empty)."""

    year: int
    indices: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.indices, dtype=np.int64)
        if arr.size > 1 and not (np.diff(arr) > 0).all():
            raise ValueError("slice indices must be strictly increasing")
        arr.flags.writeable = False
        object.__setattr__(self, "indices", arr)

    def __len__(self) -> int:
        return int(self.indices.size)


class EmbeddingStore:
    """Immutable collection of contextualized embeddings with per-row metadata.

    Invariants (enforced at construction): matrix is 2-D float32 with no
    NaN/inf entries, exactly one record per row in row order, occurrence ids
    unique, years within [1000, 9999].
    """

    def __init__(self, matrix, records: Sequence[EmbeddingRecord]):
        mat = np.ascontiguousarray(matrix, dtype=np.float32)
        if mat is matrix and mat.flags.writeable:
            mat = mat.copy()  # never alias a caller-mutable buffer
        recs = tuple(records)
        _check_invariants(mat, recs)
        if mat.flags.writeable:
            mat.flags.writeable = False
        self._matrix = mat
        self._records = recs
        years = np.fromiter((r.year for r in recs), dtype=np.int32, count=len(recs))
        years.flags.writeable = False
        self._years = years

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def records(self) -> tuple[EmbeddingRecord, ...]:
        return self._records

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def count(self) -> int:
        return int(self._matrix.shape[0])

    @property
    def year_of_row(self) -> np.ndarray:
        return self._years

    def years(self) -> list[int]:
        """Distinct years present, ascending."""
        return [int(y) for y in np.unique(self._years)]

    def take(self, indices) -> "EmbeddingStore":
        """New compacted store containing the given rows; row indices rewritten."""
        idx = np.asarray(indices, dtype=np.int64)
        new_records = [
            EmbeddingRecord(
                occurrence_id=r.occurrence_id,
                doc_id=r.doc_id,
                year=r.year,
                journal=r.journal,
                token=r.token,
                row=new_row,
            )
            for new_row, r in enumerate(self._records[i] for i in idx)
        ]
        return EmbeddingStore(self._matrix[idx], new_records)

    def __len__(self) -> int:
        return self.count

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        return (
            self._matrix.shape == other._matrix.shape
            and self._matrix.tobytes() == other._matrix.tobytes()
            and self._records == other._records
        )

    def __repr__(self) -> str:
        return f"EmbeddingStore(count={self.count}, dim={self.dim})"


def _check_invariants(matrix: np.ndarray, records: tuple[EmbeddingRecord, ...]) -> None:
    if matrix.ndim != 2:
        raise ValueError(f"matrix must be 2-dimensional, got ndim={matrix.ndim}")
    if matrix.shape[1] < 1:
        raise ValueError("matrix must have positive dimensionality")
    if not np.isfinite(matrix).all():
        raise ValueError("matrix contains NaN or infinite components")
    if len(records) != matrix.shape[0]:
        raise ValueError(
            f"record count {len(records)} != matrix row count {matrix.shape[0]}"
        )
    seen_ids = set()
    for i, rec in enumerate(records):
        if rec.row != i:
            raise ValueError(f"record {i} has row={rec.row}, expected {i}")
        if not (0 <= rec.occurrence_id < 2**64):
            raise ValueError(
                f"record {i} occurrence_id {rec.occurrence_id} outside unsigned 64-bit range"
            )
        if rec.occurrence_id in seen_ids:
            raise ValueError(f"duplicate occurrence_id {rec.occurrence_id}")
        seen_ids.add(rec.occurrence_id)
        if not (YEAR_MIN <= rec.year <= YEAR_MAX):
            raise ValueError(f"record {i} year {rec.year} outside [{YEAR_MIN}, {YEAR_MAX}]")


def write_store(store: EmbeddingStore, path_stem) -> None:
    """Write ``<stem>.vec`` and ``<stem>.meta.jsonl``; rejects invalid stores first."""
    _check_invariants(store.matrix, store.records)
    stem = Path(path_stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, store.dim, store.count)
    payload = np.ascontiguousarray(store.matrix, dtype="<f4").tobytes()
    with open(_vec_path(stem), "wb") as fh:
        fh.write(header)
        fh.write(payload)
    with open(_meta_path(stem), "w", encoding="utf-8") as fh:
        for rec in store.records:
            obj = {
                "occurrence_id": rec.occurrence_id,
                "doc_id": rec.doc_id,
                "year": rec.year,
                "journal": rec.journal,
                "token": rec.token,
            }
            fh.write(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")


def read_store(path_stem) -> EmbeddingStore:
    """Read a store pair back; validates header, payload size, and metadata."""
    stem = Path(path_stem)
    raw = _vec_path(stem).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise StoreFormatError(f"{_vec_path(stem)}: file shorter than header")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise StoreFormatError(f"{_vec_path(stem)}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StoreFormatError(f"{_vec_path(stem)}: unsupported version {version}")
    expected = count * dim * 4
    payload = raw[HEADER_SIZE:]
    if len(payload) != expected:
        raise StoreFormatError(
            f"{_vec_path(stem)}: payload is {len(payload)} bytes, "
            f"expected {expected} for {count}x{dim} float32"
        )
    matrix = np.frombuffer(payload, dtype="<f4").reshape(count, dim)

    records = []
    with open(_meta_path(stem), encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            if i >= count:
                raise StoreFormatError(
                    f"{_meta_path(stem)}: more metadata lines than rows ({count})"
                )
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreFormatError(f"{_meta_path(stem)}:{i + 1}: malformed JSON") from exc
            missing = [k for k in _META_KEYS if k not in obj]
            if missing:
                raise StoreFormatError(
                    f"{_meta_path(stem)}:{i + 1}: missing keys {missing}"
                )
            records.append(
                EmbeddingRecord(
                    occurrence_id=int(obj["occurrence_id"]),
                    doc_id=str(obj["doc_id"]),
                    year=int(obj["year"]),
                    journal=str(obj["journal"]),
                    token=str(obj["token"]),
                    row=i,
                )
            )
    if len(records) != count:
        raise StoreFormatError(
            f"{_meta_path(stem)}: {len(records)} metadata lines, expected {count}"
        )
    try:
        return EmbeddingStore(matrix, records)
    except ValueError as exc:
        raise StoreFormatError(f"{stem}: invalid store content: {exc}") from exc


def write_vec_matrix(path, matrix) -> None:
    """Write a bare ``.vec`` file (header + little-endian float32 rows).

    Same binary layout as a store's vector file, without a metadata sidecar;
    used for cluster centers and other derived matrices.
    """
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    if mat.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {mat.shape}")
    count, dim = mat.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim, count))
        fh.write(mat.tobytes())


def read_vec_matrix(path) -> np.ndarray:
    """Read a bare ``.vec`` file back as a read-only float32 matrix."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise StoreFormatError(f"{path}: file shorter than header")
    magic, version, dim, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise StoreFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StoreFormatError(f"{path}: unsupported version {version}")
    payload = raw[HEADER_SIZE:]
    if len(payload) != count * dim * 4:
        raise StoreFormatError(
            f"{path}: payload is {len(payload)} bytes, expected {count * dim * 4} "
            f"for {count}x{dim} float32"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(count, dim)


def slice_by_year(store: EmbeddingStore, year: int) -> TimeSlice:
    """Indices of all rows with the given year; empty slices are valid."""
    idx = np.flatnonzero(store.year_of_row == year).astype(np.int64)
    return TimeSlice(year=int(year), indices=idx)


def filter_store(
    store: EmbeddingStore,
    journal_set: Iterable[str] | None = None,
    year_range: tuple[int, int] | None = None,
) -> EmbeddingStore:
    """New store with only the matching rows, compacted; the input is unchanged."""
    mask = np.ones(store.count, dtype=bool)
    if journal_set is not None:
        journals = frozenset(journal_set)
        mask &= np.fromiter(
            (r.journal in journals for r in store.records), dtype=bool, count=store.count
        )
    if year_range is not None:
        lo, hi = year_range
        if lo > hi:
            raise ValueError(f"year_range lo {lo} > hi {hi}")
        mask &= (store.year_of_row >= lo) & (store.year_of_row <= hi)
    return store.take(np.flatnonzero(mask))


def _vec_path(stem: Path) -> Path:
    return stem.with_name(stem.name + ".vec")


def _meta_path(stem: Path) -> Path:
    return stem.with_name(stem.name + ".meta.jsonl")
