"""Feature-level fusion: concatenating named blocks into one vector per
sample, z-score standardization fitted on the training split, and the PVFS
feature-store file format.

PVFS v1 layout (little-endian, same conventions as PVEM):
    magic    4 bytes  b"PVFS"
    version  u16      1
    n_blocks u16
    per block: name_len u16, name UTF-8, dim u32
    count    u64
    records sorted by id: id_len u16, id UTF-8, total_dim * f32
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    DimMismatchError,
    DuplicateIdError,
    SignatureMismatchError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .handcrafted import DEEP_NAME, GABOR_NAME, HOG_NAME, LBP_NAME, FeatureBlock

BLOCK_ORDER = (DEEP_NAME, LBP_NAME, HOG_NAME, GABOR_NAME)

PVFS_MAGIC = b"PVFS"
PVFS_VERSION = 1

Signature = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class FeatureVector:
    sample_id: str
    values: np.ndarray
    signature: Signature

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        total = sum(d for _, d in self.signature)
        if v.size != total:
            raise DimMismatchError(f"{self.sample_id}: {v.size} values vs signature {total}")
        object.__setattr__(self, "values", v)


def fuse_blocks(blocks: list[FeatureBlock], sample_id: str = "") -> FeatureVector:
    """Concatenate blocks in canonical DEEP, LBP, HOG, GABOR order.

    Out-of-order or duplicated blocks are rejected so persisted signatures
    stay portable.
    """
    if not blocks:
        raise ValueError("no blocks to fuse")
    names = [b.name for b in blocks]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate blocks: {names}")
    ranks = []
    for name in names:
        if name not in BLOCK_ORDER:
            raise ValueError(f"unknown block name {name!r}")
        ranks.append(BLOCK_ORDER.index(name))
    if ranks != sorted(ranks):
        raise ValueError(f"blocks out of canonical order: {names}")
    signature = tuple((b.name, b.dim) for b in blocks)
    return FeatureVector(sample_id, np.concatenate([b.values for b in blocks]), signature)


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Standardizer:
    """Per-dimension z-score parameters learned from the training split.
    Zero-variance dimensions carry sigma = 1 so they pass through as zeros."""

    mean: np.ndarray
    std: np.ndarray
    signature: Signature

    def transform(self, values: np.ndarray) -> np.ndarray:
        v = np.asarray(values, dtype=np.float64)
        if v.shape[-1] != self.mean.size:
            raise SignatureMismatchError(
                f"vector dim {v.shape[-1]} != standardizer dim {self.mean.size}"
            )
        return (v - self.mean) / self.std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.std + self.mean


def fit_standardizer(matrix: np.ndarray, signature: Signature) -> Standardizer:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("need a non-empty 2-D training matrix")
    total = sum(d for _, d in signature)
    if m.shape[1] != total:
        raise SignatureMismatchError(f"matrix dim {m.shape[1]} != signature {total}")
    mean = m.mean(axis=0)
    std = m.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return Standardizer(mean=mean, std=std, signature=signature)


def apply_standardizer(std: Standardizer, vector: FeatureVector) -> FeatureVector:
    if vector.signature != std.signature:
        raise SignatureMismatchError(
            f"vector signature {vector.signature} != standardizer {std.signature}"
        )
    return FeatureVector(vector.sample_id, std.transform(vector.values), vector.signature)


# ---------------------------------------------------------------------------
# Feature store IO
# ---------------------------------------------------------------------------

@dataclass
class FeatureStore:
    """id -> concatenated block values, with the block signature recording
    how to slice individual blocks back out."""

    signature: Signature
    entries: dict[str, np.ndarray]

    def __post_init__(self):
        total = sum(d for _, d in self.signature)
        for sid, vec in self.entries.items():
            if vec.size != total:
                raise DimMismatchError(f"{sid}: {vec.size} values vs signature {total}")

    def __len__(self) -> int:
        return len(self.entries)

    def block_slice(self, name: str) -> slice:
        start = 0
        for bname, dim in self.signature:
            if bname == name:
                return slice(start, start + dim)
            start += dim
        raise KeyError(f"block {name!r} not in store signature {self.signature}")

    def block(self, sample_id: str, name: str) -> FeatureBlock:
        return FeatureBlock(name, self.entries[sample_id][self.block_slice(name)])


def write_feature_store(store: FeatureStore, path) -> None:
    total = sum(d for _, d in store.signature)
    chunks = [struct.pack("<4sHH", PVFS_MAGIC, PVFS_VERSION, len(store.signature))]
    for name, dim in store.signature:
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<I", dim))
    chunks.append(struct.pack("<Q", len(store.entries)))
    for sid in sorted(store.entries):
        raw = sid.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        vec = np.asarray(store.entries[sid], dtype="<f4")
        if vec.size != total:
            raise DimMismatchError(f"{sid}: {vec.size} values vs signature {total}")
        chunks.append(vec.tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_feature_store(path) -> FeatureStore:
    buf = Path(path).read_bytes()
    if len(buf) < 8:
        raise TruncatedFileError("file shorter than the PVFS header")
    magic, version, n_blocks = struct.unpack_from("<4sHH", buf, 0)
    if magic != PVFS_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != PVFS_VERSION:
        raise UnsupportedVersionError(f"unsupported PVFS version {version}")
    pos = 8
    signature = []
    for _ in range(n_blocks):
        if pos + 2 > len(buf):
            raise TruncatedFileError("truncated block header")
        (name_len,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        if pos + name_len + 4 > len(buf):
            raise TruncatedFileError("truncated block header")
        name = buf[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (dim,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        signature.append((name, dim))
    if pos + 8 > len(buf):
        raise TruncatedFileError("missing record count")
    (count,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    total = sum(d for _, d in signature)
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        if pos + 2 > len(buf):
            raise TruncatedFileError("truncated record header")
        (id_len,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        end = pos + id_len + total * 4
        if end > len(buf):
            raise TruncatedFileError("record extends past end of file")
        sid = buf[pos : pos + id_len].decode("utf-8")
        pos += id_len
        vec = np.frombuffer(buf, dtype="<f4", count=total, offset=pos).copy()
        pos += total * 4
        if sid in entries:
            raise DuplicateIdError(f"duplicate id {sid!r}")
        entries[sid] = vec
    if pos != len(buf):
        raise TruncatedFileError(f"{len(buf) - pos} trailing bytes")
    return FeatureStore(signature=tuple(signature), entries=entries)
