"""Exact cosine-similarity index over global visual embeddings.

Vectors are L2-normalized at build time and then rounded to float32, so that an
index written to disk and read back answers queries identically.

Index file layout (little endian)::

    b"FSEIDX1\\0" | u32 dim | u32 count |
    count x (u16 id_len | id utf-8 | u8 split | dim x f32)
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"FSEIDX1\0"
SPLITS = ("train", "val", "test")
_HEADER = struct.Struct("<8sII")
MAX_DIM = 1 << 16


class IndexBuildError(ValueError):
    pass


class IndexFormatError(ValueError):
    pass


class RetrievalDomainError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingRecord:
    record_id: str
    vector: np.ndarray
    split_tag: str = "train"

    def __post_init__(self):
        if self.split_tag not in SPLITS:
            raise IndexBuildError(f"record {self.record_id!r}: unknown split {self.split_tag!r}")


@dataclass(frozen=True)
class RetrievalResult:
    record_id: str
    similarity: float
    rank: int


@dataclass(frozen=True, eq=False)
class EmbeddingIndex:
    dim: int
    record_ids: tuple[str, ...]
    splits: tuple[str, ...]
    vectors: np.ndarray  # count x dim, float32, unit rows
    id_to_pos: dict[str, int] = field(repr=False)
    _id_order: np.ndarray = field(repr=False)  # rank of each record_id in sorted order
    _train: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.record_ids)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingIndex):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.record_ids == other.record_ids
            and self.splits == other.splits
            and np.array_equal(self.vectors, other.vectors)
        )

    @property
    def records(self) -> list[EmbeddingRecord]:
        return [EmbeddingRecord(i, v, s) for i, v, s in zip(self.record_ids, self.vectors, self.splits)]


def _assemble(dim, ids, splits, vectors) -> EmbeddingIndex:
    order = np.empty(len(ids), dtype=np.int64)
    order[sorted(range(len(ids)), key=ids.__getitem__)] = np.arange(len(ids))
    return EmbeddingIndex(
        dim=dim,
        record_ids=tuple(ids),
        splits=tuple(splits),
        vectors=vectors,
        id_to_pos={rid: i for i, rid in enumerate(ids)},
        _id_order=order,
        _train=np.array([s == "train" for s in splits], dtype=bool),
    )


def build_index(records) -> EmbeddingIndex:
    records = list(records)
    if not records:
        raise IndexBuildError("cannot build an index from zero records")
    dim = len(np.ravel(records[0].vector))
    if not 1 <= dim < MAX_DIM:
        raise IndexBuildError(f"dimension {dim} out of range")
    seen = set()
    rows = []
    for r in records:
        if r.record_id in seen:
            raise IndexBuildError(f"duplicate record id {r.record_id!r}")
        seen.add(r.record_id)
        v = np.asarray(r.vector, dtype=np.float64).ravel()
        if v.size != dim:
            raise IndexBuildError(f"record {r.record_id!r} has dimension {v.size}, expected {dim}")
        norm = np.linalg.norm(v)
        if not np.isfinite(norm) or norm == 0:
            raise IndexBuildError(f"record {r.record_id!r} has a zero or non-finite vector")
        rows.append(v / norm)
    vectors = np.vstack(rows).astype(np.float32)
    vectors.setflags(write=False)
    return _assemble(dim, [r.record_id for r in records], [r.split_tag for r in records], vectors)


def query(index: EmbeddingIndex, probe, k: int, exclude_id: str | None = None) -> list[RetrievalResult]:
    """Top-``k`` train records by cosine similarity; ties go to the smaller record id."""
    if k < 1:
        raise RetrievalDomainError("k must be >= 1")
    p = np.asarray(probe, dtype=np.float64).ravel()
    if p.size != index.dim:
        raise RetrievalDomainError(f"probe has dimension {p.size}, index has {index.dim}")
    norm = np.linalg.norm(p)
    if not np.isfinite(norm) or norm == 0:
        raise RetrievalDomainError("probe vector must be non-zero and finite")
    sims = index.vectors.astype(np.float64) @ (p / norm)
    candidates = index._train.copy()
    if exclude_id is not None and exclude_id in index.id_to_pos:
        candidates[index.id_to_pos[exclude_id]] = False
    pos = np.flatnonzero(candidates)
    order = pos[np.lexsort((index._id_order[pos], -sims[pos]))][:k]
    return [
        RetrievalResult(index.record_ids[i], float(np.clip(sims[i], -1.0, 1.0)), rank)
        for rank, i in enumerate(order, start=1)
    ]


def to_bytes(index: EmbeddingIndex) -> bytes:
    parts = [_HEADER.pack(MAGIC, index.dim, len(index))]
    for rid, split, vec in zip(index.record_ids, index.splits, index.vectors):
        raw_id = rid.encode("utf-8")
        if len(raw_id) > 0xFFFF:
            raise IndexFormatError(f"record id {rid[:20]!r}... too long")
        parts.append(struct.pack("<H", len(raw_id)) + raw_id + bytes([SPLITS.index(split)]))
        parts.append(np.asarray(vec, dtype="<f4").tobytes())
    return b"".join(parts)


def from_bytes(data: bytes) -> EmbeddingIndex:
    if len(data) < _HEADER.size:
        raise IndexFormatError("truncated header")
    magic, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic {magic!r}")
    if not 1 <= dim < MAX_DIM:
        raise IndexFormatError(f"dimension {dim} out of range")
    vec_bytes = 4 * dim
    # every record takes at least 2 + 1 + vec_bytes bytes
    if count > (len(data) - _HEADER.size) // (3 + vec_bytes):
        raise IndexFormatError(f"record count {count} exceeds file size")
    off = _HEADER.size
    ids, splits, rows = [], [], []
    try:
        for _ in range(count):
            (n,) = struct.unpack_from("<H", data, off)
            off += 2
            if off + n + 1 + vec_bytes > len(data):
                raise IndexFormatError("truncated record")
            ids.append(data[off:off + n].decode("utf-8"))
            off += n
            tag = data[off]
            off += 1
            if tag >= len(SPLITS):
                raise IndexFormatError(f"bad split tag {tag}")
            splits.append(SPLITS[tag])
            rows.append(np.frombuffer(data, dtype="<f4", count=dim, offset=off))
            off += vec_bytes
    except (struct.error, UnicodeDecodeError) as err:
        raise IndexFormatError(f"corrupt record: {err}") from None
    if off != len(data):
        raise IndexFormatError(f"{len(data) - off} trailing bytes")
    if len(set(ids)) != len(ids):
        raise IndexFormatError("duplicate record ids")
    vectors = np.vstack(rows).astype(np.float32) if rows else np.zeros((0, dim), np.float32)
    if not np.all(np.isfinite(vectors)):
        raise IndexFormatError("non-finite vector components")
    vectors.setflags(write=False)
    return _assemble(dim, ids, splits, vectors)


def save_index(index: EmbeddingIndex, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(index))


def load_index(path) -> EmbeddingIndex:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def read_embeddings_jsonl(path) -> list[EmbeddingRecord]:
    """Read ``{"record_id", "split", "vector"}`` lines."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            try:
                out.append(EmbeddingRecord(obj["record_id"], np.asarray(obj["vector"], dtype=np.float64),
                                           obj.get("split", "train")))
            except KeyError as err:
                raise IndexBuildError(f"{path}:{lineno}: missing field {err}") from None
    return out
