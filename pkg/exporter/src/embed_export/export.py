"""Batch DenseNet-169 feature export.

Reads a JSON-lines dataset manifest ({id, path, ...} per line), pushes each
image through a frozen DenseNet-169 (224x224, standard pretrained-model
normalization), global-average-pools the final feature map to a 1664-dim
vector, and writes a canonical PVEM v1 file.

Weight sources:
  pretrained  ImageNet weights via torchvision (needs download access;
              failure is reported, not silently substituted)
  seeded      deterministic random initialization from --seed, for offline
              pipelines and format/determinism testing
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from torchvision.models import densenet169

log = logging.getLogger("embed_export")

EMBED_DIM = 1664  # channel width of DenseNet-169's final feature map
PVEM_MAGIC = b"PVEM"
PVEM_VERSION = 1

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class ExportConfig:
    manifest: Path
    output: Path
    batch_size: int = 16
    device: str = "cpu"
    input_size: int = 224
    weights: str = "pretrained"  # "pretrained" | "seeded"
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.weights not in ("pretrained", "seeded"):
            raise ValueError("weights must be 'pretrained' or 'seeded'")


class WeightDownloadError(RuntimeError):
    """Pretrained weights could not be fetched."""


def _read_manifest(path: Path) -> list[tuple[str, str]]:
    entries = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            entries.append((rec["id"], rec["path"]))
        except (KeyError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}:{lineno}: bad manifest line ({exc})") from exc
    return entries


def _build_model(cfg: ExportConfig) -> torch.nn.Module:
    if cfg.weights == "pretrained":
        try:
            from torchvision.models import DenseNet169_Weights

            model = densenet169(weights=DenseNet169_Weights.IMAGENET1K_V1)
        except Exception as exc:  # download or cache failure
            raise WeightDownloadError(
                f"could not obtain pretrained weights ({exc}); "
                "rerun with --weights seeded for an offline deterministic export"
            ) from exc
    else:
        torch.manual_seed(cfg.seed)
        model = densenet169(weights=None)
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model.to(cfg.device)


def _load_tensor(path: str, input_size: int) -> torch.Tensor:
    with Image.open(path) as im:
        rgb = im.convert("RGB").resize((input_size, input_size), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.asarray(IMAGENET_MEAN, dtype=np.float32)) / np.asarray(
        IMAGENET_STD, dtype=np.float32
    )
    return torch.from_numpy(arr.transpose(2, 0, 1))


@torch.no_grad()
def _embed_batch(model: torch.nn.Module, batch: torch.Tensor) -> np.ndarray:
    fmap = model.features(batch)
    pooled = F.adaptive_avg_pool2d(F.relu(fmap), 1).flatten(1)
    return pooled.cpu().numpy().astype(np.float32)


def write_pvem(entries: dict[str, np.ndarray], dim: int, path: Path) -> None:
    """Canonical PVEM v1: header then id-sorted records."""
    chunks = [struct.pack("<4sHIQ", PVEM_MAGIC, PVEM_VERSION, dim, len(entries))]
    for sid in sorted(entries):
        raw = sid.encode("utf-8")
        vec = np.ascontiguousarray(entries[sid], dtype="<f4")
        if vec.size != dim:
            raise ValueError(f"{sid}: vector length {vec.size} != {dim}")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(vec.tobytes())
    path.write_bytes(b"".join(chunks))


def export_embeddings(cfg: ExportConfig) -> dict[str, np.ndarray]:
    """Run the export end to end; returns the embeddings that were written.

    Unreadable images are skipped with a warning and listed in a
    '<output>.skipped' sidecar; the PVEM count reflects written records only.
    """
    torch.set_num_threads(max(1, torch.get_num_threads()))
    records = _read_manifest(cfg.manifest)
    model = _build_model(cfg)

    embeddings: dict[str, np.ndarray] = {}
    skipped: list[str] = []
    pending_ids: list[str] = []
    pending: list[torch.Tensor] = []

    def flush():
        if not pending:
            return
        batch = torch.stack(pending).to(cfg.device)
        for sid, vec in zip(pending_ids, _embed_batch(model, batch)):
            embeddings[sid] = vec
        pending.clear()
        pending_ids.clear()

    for sid, path in records:
        try:
            tensor = _load_tensor(path, cfg.input_size)
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", sid, exc)
            skipped.append(f"{sid}\t{path}\t{exc}")
            continue
        pending_ids.append(sid)
        pending.append(tensor)
        if len(pending) >= cfg.batch_size:
            flush()
    flush()

    write_pvem(embeddings, EMBED_DIM, cfg.output)
    sidecar = Path(str(cfg.output) + ".skipped")
    if skipped:
        sidecar.write_text("\n".join(skipped) + "\n")
    elif sidecar.exists():
        sidecar.unlink()
    log.info("wrote %d embeddings (%d skipped) to %s", len(embeddings), len(skipped), cfg.output)
    return embeddings
