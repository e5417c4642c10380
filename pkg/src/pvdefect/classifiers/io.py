"""Versioned binary container ("PVML") for trained models. All floats are
stored as raw little-endian f64, so a save/load round trip reproduces
predictions bit for bit."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import (
    BadMagicError,
    ModelKindError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from ..fusion import Standardizer
from .gbdt import GbdtModel, Tree
from .params import TrainParams
from .svm import SvmModel, _BinarySvm

PVML_MAGIC = b"PVML"
PVML_VERSION = 1
_KIND_CODE = {"svm": 1, "gbdt": 2}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


class _Writer:
    def __init__(self):
        self.chunks: list[bytes] = []

    def pack(self, fmt: str, *vals):
        self.chunks.append(struct.pack("<" + fmt, *vals))

    def raw(self, data: bytes):
        self.chunks.append(data)

    def text(self, s: str):
        raw = s.encode("utf-8")
        self.pack("I", len(raw))
        self.raw(raw)

    def array(self, arr: np.ndarray, dtype: str):
        a = np.ascontiguousarray(arr, dtype=dtype)
        self.pack("I", a.size)
        self.raw(a.tobytes())

    def bytes_out(self) -> bytes:
        return b"".join(self.chunks)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def unpack(self, fmt: str):
        fmt = "<" + fmt
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise TruncatedFileError("model file ends mid-field")
        vals = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return vals if len(vals) > 1 else vals[0]

    def text(self) -> str:
        n = self.unpack("I")
        if self.pos + n > len(self.buf):
            raise TruncatedFileError("model file ends mid-string")
        s = self.buf[self.pos : self.pos + n].decode("utf-8")
        self.pos += n
        return s

    def array(self, dtype: str) -> np.ndarray:
        n = self.unpack("I")
        size = n * np.dtype(dtype).itemsize
        if self.pos + size > len(self.buf):
            raise TruncatedFileError("model file ends mid-array")
        a = np.frombuffer(self.buf, dtype=dtype, count=n, offset=self.pos).copy()
        self.pos += size
        return a

    def done(self):
        if self.pos != len(self.buf):
            raise TruncatedFileError(f"{len(self.buf) - self.pos} trailing bytes")


def _write_common(w: _Writer, model):
    w.text(model.params.to_json() if hasattr(model, "params") else "{}")
    sig = model.signature
    w.pack("B", 1 if sig is not None else 0)
    if sig is not None:
        w.pack("H", len(sig))
        for name, dim in sig:
            w.text(name)
            w.pack("I", dim)
    std = model.standardizer
    w.pack("B", 1 if std is not None else 0)
    if std is not None:
        w.array(std.mean, "<f8")
        w.array(std.std, "<f8")
    w.array(model.classes, "<i4")


def _read_common(r: _Reader):
    params_json = r.text()
    signature = None
    if r.unpack("B"):
        n = r.unpack("H")
        signature = tuple((r.text(), r.unpack("I")) for _ in range(n))
    standardizer = None
    if r.unpack("B"):
        mean = r.array("<f8")
        std = r.array("<f8")
        standardizer = Standardizer(mean=mean, std=std, signature=signature or ())
    classes = r.array("<i4").astype(np.int64)
    return params_json, signature, standardizer, classes


def save_model(model, path) -> None:
    w = _Writer()
    w.pack("4sHB", PVML_MAGIC, PVML_VERSION, _KIND_CODE[model.kind])
    _write_common(w, model)
    if model.kind == "svm":
        w.pack("B", 1 if model.kernel == "rbf" else 0)
        w.pack("dd", model.gamma, model.c)
        w.pack("H", len(model.pairs))
        for p in model.pairs:
            w.pack("iiId", p.pos, p.neg, p.sv.shape[1], p.b)
            w.array(p.alpha_y, "<f8")
            w.array(p.sv.ravel(), "<f8")
    else:
        w.pack("d", model.eta)
        w.pack("B", 0 if model.growth == "levelwise" else 1)
        w.pack("IH", len(model.trees), len(model.classes))
        for round_trees in model.trees:
            for tree in round_trees:
                w.array(tree.feature, "<i4")
                w.array(tree.threshold, "<f8")
                w.array(tree.left, "<i4")
                w.array(tree.right, "<i4")
                w.array(tree.value, "<f8")
        w.array(np.asarray(model.train_loss), "<f8")
    Path(path).write_bytes(w.bytes_out())


def load_model(path, expect: str | None = None):
    buf = Path(path).read_bytes()
    if len(buf) < 7:
        raise TruncatedFileError("file shorter than the PVML header")
    r = _Reader(buf)
    magic, version, kind_code = r.unpack("4sHB")
    if magic != PVML_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != PVML_VERSION:
        raise UnsupportedVersionError(f"unsupported PVML version {version}")
    kind = _CODE_KIND.get(kind_code)
    if kind is None:
        raise ModelKindError(f"unknown model kind code {kind_code}")
    if expect is not None and kind != expect:
        raise ModelKindError(f"expected a {expect} model, file holds {kind}")
    params_json, signature, standardizer, classes = _read_common(r)
    params = TrainParams.from_dict(json.loads(params_json)) if params_json != "{}" else TrainParams()
    if kind == "svm":
        kernel = "rbf" if r.unpack("B") else "linear"
        gamma, c = r.unpack("dd")
        n_pairs = r.unpack("H")
        pairs = []
        for _ in range(n_pairs):
            pos, neg, dim, b = r.unpack("iiId")
            alpha_y = r.array("<f8")
            sv = r.array("<f8").reshape(len(alpha_y), dim) if dim else np.zeros((0, 0))
            pairs.append(_BinarySvm(pos=pos, neg=neg, alpha_y=alpha_y, sv=sv, b=b))
        r.done()
        return SvmModel(
            classes=classes, pairs=pairs, kernel=kernel, gamma=gamma, c=c,
            signature=signature, standardizer=standardizer,
        )
    eta = r.unpack("d")
    growth = "levelwise" if r.unpack("B") == 0 else "leafwise"
    n_rounds, k = r.unpack("IH")
    trees = []
    for _ in range(n_rounds):
        round_trees = []
        for _ in range(k):
            feature = r.array("<i4")
            threshold = r.array("<f8")
            left = r.array("<i4")
            right = r.array("<i4")
            value = r.array("<f8")
            round_trees.append(Tree(feature, threshold, left, right, value))
        trees.append(round_trees)
    train_loss = list(r.array("<f8"))
    r.done()
    return GbdtModel(
        classes=classes, trees=trees, eta=eta, growth=growth, params=params,
        train_loss=train_loss, signature=signature, standardizer=standardizer,
    )
