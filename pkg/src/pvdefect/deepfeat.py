"""Deep-embedding ingestion via the PVEM v1 binary format, plus a synthetic
Gaussian-blob provider so the classification stack is testable without any
neural network runtime.

PVEM v1 layout (all integers little-endian):
    magic   4 bytes  b"PVEM"
    version u16      1
    dim     u32      vector length
    count   u64      number of records
    records, sorted by id:
        id_len  u16
        id      UTF-8 bytes
        values  dim * f32
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import ClassLabel
from .errors import (
    BadMagicError,
    DimMismatchError,
    DuplicateIdError,
    TruncatedFileError,
    UnsupportedVersionError,
)

PVEM_MAGIC = b"PVEM"
PVEM_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")


@dataclass
class EmbeddingSet:
    dim: int
    entries: dict[str, np.ndarray]

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        clean = {}
        for sid, vec in self.entries.items():
            if not sid:
                raise ValueError("empty sample id")
            v = np.asarray(vec, dtype=np.float32).ravel()
            if v.size != self.dim:
                raise DimMismatchError(f"{sid}: vector length {v.size} != dim {self.dim}")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{sid}: non-finite embedding values")
            clean[sid] = v
        self.entries = clean

    def __len__(self) -> int:
        return len(self.entries)


def write_embeddings(embeddings: EmbeddingSet, path) -> None:
    """Canonical (id-sorted) PVEM write; identical sets give identical bytes."""
    chunks = [_HEADER.pack(PVEM_MAGIC, PVEM_VERSION, embeddings.dim, len(embeddings))]
    for sid in sorted(embeddings.entries):
        raw = sid.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(embeddings.entries[sid].astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_embeddings(path) -> EmbeddingSet:
    buf = Path(path).read_bytes()
    if len(buf) < _HEADER.size:
        raise TruncatedFileError("file shorter than the PVEM header")
    magic, version, dim, count = _HEADER.unpack_from(buf, 0)
    if magic != PVEM_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != PVEM_VERSION:
        raise UnsupportedVersionError(f"unsupported PVEM version {version}")
    if dim < 1:
        raise DimMismatchError("header dim must be >= 1")
    pos = _HEADER.size
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        if pos + 2 > len(buf):
            raise TruncatedFileError("truncated record header")
        (id_len,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        end = pos + id_len + dim * 4
        if end > len(buf):
            raise TruncatedFileError("record extends past end of file")
        sid = buf[pos : pos + id_len].decode("utf-8")
        pos += id_len
        vec = np.frombuffer(buf, dtype="<f4", count=dim, offset=pos).copy()
        pos += dim * 4
        if sid in entries:
            raise DuplicateIdError(f"duplicate id {sid!r}")
        entries[sid] = vec
    if pos != len(buf):
        raise TruncatedFileError(f"{len(buf) - pos} trailing bytes after {count} records")
    return EmbeddingSet(dim=dim, entries=entries)


def _id_key(sample_id: str) -> int:
    digest = hashlib.blake2b(sample_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def synthetic_embeddings(
    labels: dict[str, ClassLabel], dim: int, seed: int, separation: float
) -> EmbeddingSet:
    """Gaussian class blobs: class c has mean separation * e_c (axis c mod dim)
    and unit isotropic noise drawn from a stream keyed by (seed, sample id)."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if separation < 0:
        raise ValueError("separation must be >= 0")
    if not labels:
        raise ValueError("empty label map")
    entries = {}
    for sid, label in labels.items():
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, _id_key(sid)])))
        vec = rng.standard_normal(dim)
        vec[int(label) % dim] += separation
        entries[sid] = vec.astype(np.float32)
    return EmbeddingSet(dim=dim, entries=entries)
