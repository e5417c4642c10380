"""Seeded geometric augmentation: each original contributes one rotation,
one flip and one translation, for an exact fourfold corpus expansion.

Randomness is keyed per sample (seed + sample id -> independent stream), so
results do not depend on iteration order or parallel scheduling.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset, Sample
from .image import ImageU8


@dataclass(frozen=True)
class AugmentConfig:
    seed: int = 0
    rotation_angles: tuple[int, ...] = (90, 180, 270)
    flip_modes: tuple[str, ...] = ("horizontal", "vertical")
    max_translate_frac: float = 0.10
    translate_fill: str = "reflect"

    def __post_init__(self):
        if not (0.0 < self.max_translate_frac <= 0.25):
            raise ValueError("max_translate_frac must be in (0, 0.25]")
        if not self.rotation_angles or not self.flip_modes:
            raise ValueError("rotation_angles and flip_modes must be non-empty")
        if any(a not in (90, 180, 270) for a in self.rotation_angles):
            raise ValueError("rotation angles must be multiples of 90 in (0, 360)")
        if any(m not in ("horizontal", "vertical") for m in self.flip_modes):
            raise ValueError("flip modes are 'horizontal' or 'vertical'")
        if self.translate_fill not in ("reflect", "edge", "zero"):
            raise ValueError("translate_fill must be reflect, edge or zero")


def rotate90(img: ImageU8, quarter_turns: int) -> ImageU8:
    """Lossless counter-clockwise rotation by quarter_turns * 90 degrees."""
    if quarter_turns not in (1, 2, 3):
        raise ValueError("quarter_turns must be 1, 2 or 3")
    return ImageU8(np.ascontiguousarray(np.rot90(img.data, k=quarter_turns, axes=(0, 1))))


def flip(img: ImageU8, axis: str) -> ImageU8:
    """Mirror along the given axis; applying twice restores the original."""
    if axis == "horizontal":
        return ImageU8(np.ascontiguousarray(img.data[:, ::-1, :]))
    if axis == "vertical":
        return ImageU8(np.ascontiguousarray(img.data[::-1, :, :]))
    raise ValueError(f"bad flip axis {axis!r}")


def translate(img: ImageU8, dx: int, dy: int, fill: str = "reflect") -> ImageU8:
    """Shift content by (dx, dy) pixels (positive = right/down), filling the
    vacated band. 'reflect' mirrors across the original edge (edge pixel
    included), 'edge' repeats it, 'zero' fills black."""
    h, w = img.height, img.width
    if abs(dx) >= w or abs(dy) >= h:
        raise ValueError("shift magnitude must be smaller than the image")
    if (dx, dy) == (0, 0):
        return ImageU8(img.data.copy())
    pads = ((max(dy, 0), max(-dy, 0)), (max(dx, 0), max(-dx, 0)), (0, 0))
    if fill == "zero":
        padded = np.pad(img.data, pads, mode="constant")
    elif fill == "edge":
        padded = np.pad(img.data, pads, mode="edge")
    elif fill == "reflect":
        padded = np.pad(img.data, pads, mode="symmetric")
    else:
        raise ValueError(f"bad fill policy {fill!r}")
    y0 = 0 if dy >= 0 else -dy
    x0 = 0 if dx >= 0 else -dx
    return ImageU8(np.ascontiguousarray(padded[y0 : y0 + h, x0 : x0 + w, :]))


# ---------------------------------------------------------------------------
# Per-sample variant planning
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariantPlan:
    """One planned variant: `kind` in {rotate, flip, translate} plus its
    parameters. Translation magnitudes are stored as fractions so planning
    needs no pixel data."""

    variant_id: str
    kind: str
    turns: int = 0
    axis: str = ""
    fx: float = 0.0
    fy: float = 0.0


def _sample_rng(seed: int, sample_id: str) -> np.random.Generator:
    digest = hashlib.blake2b(sample_id.encode("utf-8"), digest_size=8).digest()
    key = int.from_bytes(digest, "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, key])))


def plan_variants(sample_id: str, cfg: AugmentConfig) -> list[VariantPlan]:
    """Deterministic three-variant plan for one sample."""
    rng = _sample_rng(cfg.seed, sample_id)
    angle = int(rng.choice(np.asarray(cfg.rotation_angles)))
    axis = str(rng.choice(np.asarray(cfg.flip_modes)))
    m = cfg.max_translate_frac
    fx = float(rng.uniform(-m, m))
    fy = float(rng.uniform(-m, m))
    turns = angle // 90
    return [
        VariantPlan(f"{sample_id}__rot{angle}", "rotate", turns=turns),
        VariantPlan(f"{sample_id}__flip{axis[0]}", "flip", axis=axis),
        VariantPlan(f"{sample_id}__shift", "translate", fx=fx, fy=fy),
    ]


def apply_variant(img: ImageU8, plan: VariantPlan, fill: str = "reflect") -> ImageU8:
    if plan.kind == "rotate":
        return rotate90(img, plan.turns)
    if plan.kind == "flip":
        return flip(img, plan.axis)
    if plan.kind == "translate":
        dx = int(np.floor(plan.fx * img.width + 0.5))
        dy = int(np.floor(plan.fy * img.height + 0.5))
        if (dx, dy) == (0, 0):
            dx = 1 if img.width > 1 else 0
            dy = 0 if img.width > 1 else (1 if img.height > 1 else 0)
        return translate(img, dx, dy, fill)
    raise ValueError(f"unknown variant kind {plan.kind!r}")


def augment_dataset(
    ds: LabeledDataset, cfg: AugmentConfig, path_for=None
) -> tuple[LabeledDataset, dict[str, VariantPlan]]:
    """Expand a manifest exactly fourfold: originals plus three planned
    variants each, labels inherited, lineage recorded.

    `path_for(variant_id)` supplies the output path for each new entry
    (defaults to '<variant_id>.png'). Returns the expanded dataset and the
    variant plans keyed by variant id, for materialization.
    """
    if len(ds) == 0:
        raise ValueError("empty dataset")
    samples: list[Sample] = []
    plans: dict[str, VariantPlan] = {}
    if path_for is None:
        path_for = lambda vid: f"{vid}.png"
    for s in ds:
        samples.append(s)
        for plan in plan_variants(s.id, cfg):
            plans[plan.variant_id] = plan
            samples.append(
                Sample(
                    id=plan.variant_id,
                    path=path_for(plan.variant_id),
                    label=s.label,
                    split=s.split,
                    parent=s.id,
                )
            )
    return LabeledDataset(samples), plans
