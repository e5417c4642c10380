"""Labeled sample manifests: the six panel-condition classes, JSON-lines IO,
and lineage bookkeeping for augmented corpora."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import DuplicateIdError, PvdefectError


class ClassLabel(IntEnum):
    """Panel surface condition; codes are stable and ordered."""

    CLEAN = 0
    SNOW_COVERED = 1
    DUSTY = 2
    ELECTRICAL_FAULT = 3
    PHYSICAL_DAMAGE = 4
    BIRD_DROPPINGS = 5

    @property
    def canonical_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_name(cls, name: str) -> "ClassLabel":
        """Map a directory or manifest name to a label, tolerating common spellings."""
        key = "".join(c for c in name.lower() if c.isalnum())
        try:
            return _NAME_TO_LABEL[key]
        except KeyError:
            raise PvdefectError(f"unknown class name: {name!r}") from None


_NAME_TO_LABEL = {
    "clean": ClassLabel.CLEAN,
    "snowcovered": ClassLabel.SNOW_COVERED,
    "snow": ClassLabel.SNOW_COVERED,
    "dusty": ClassLabel.DUSTY,
    "dust": ClassLabel.DUSTY,
    "electricalfault": ClassLabel.ELECTRICAL_FAULT,
    "electricaldamage": ClassLabel.ELECTRICAL_FAULT,
    "physicaldamage": ClassLabel.PHYSICAL_DAMAGE,
    "physicaldamaged": ClassLabel.PHYSICAL_DAMAGE,
    "birddroppings": ClassLabel.BIRD_DROPPINGS,
    "birddropping": ClassLabel.BIRD_DROPPINGS,
    "birddrop": ClassLabel.BIRD_DROPPINGS,
}

SPLIT_TAGS = ("train", "test", "unassigned")


@dataclass(frozen=True)
class Sample:
    """One manifest entry. `parent` is the originating sample id for
    augmented variants, None for originals."""

    id: str
    path: str
    label: ClassLabel
    split: str = "unassigned"
    parent: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("empty sample id")
        if self.split not in SPLIT_TAGS:
            raise ValueError(f"bad split tag {self.split!r}")


@dataclass
class LabeledDataset:
    samples: list[Sample] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for s in self.samples:
            if s.id in seen:
                raise DuplicateIdError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def by_id(self) -> dict[str, Sample]:
        return {s.id: s for s in self.samples}

    def parents(self) -> list[Sample]:
        return [s for s in self.samples if s.parent is None]

    def subset(self, split: str) -> "LabeledDataset":
        return LabeledDataset([s for s in self.samples if s.split == split])

    def class_counts(self) -> dict[ClassLabel, int]:
        counts = {label: 0 for label in ClassLabel}
        for s in self.samples:
            counts[s.label] += 1
        return counts

    def with_splits(self, assignment: dict[str, str]) -> "LabeledDataset":
        return LabeledDataset(
            [replace(s, split=assignment.get(s.id, s.split)) for s in self.samples]
        )


def write_manifest(ds: LabeledDataset, path) -> None:
    """One JSON object per line: {id, path, label, split, parent}."""
    lines = []
    for s in ds.samples:
        lines.append(
            json.dumps(
                {
                    "id": s.id,
                    "path": s.path,
                    "label": s.label.canonical_name,
                    "split": s.split,
                    "parent": s.parent,
                },
                sort_keys=True,
            )
        )
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_manifest(path) -> LabeledDataset:
    samples = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            samples.append(
                Sample(
                    id=rec["id"],
                    path=rec["path"],
                    label=ClassLabel.from_name(rec["label"]),
                    split=rec.get("split", "unassigned"),
                    parent=rec.get("parent"),
                )
            )
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise PvdefectError(f"{path}:{lineno}: bad manifest line ({exc})") from exc
    return LabeledDataset(samples)


def ingest_directory(root, extensions: Iterable[str] = (".png", ".ppm", ".pgm")) -> LabeledDataset:
    """Build a manifest from a directory of class-named subdirectories."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(root)
    samples = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        label = ClassLabel.from_name(sub.name)
        for f in sorted(sub.iterdir()):
            if f.suffix.lower() in extensions:
                samples.append(Sample(id=f"{sub.name}/{f.stem}", path=str(f), label=label))
    if not samples:
        raise PvdefectError(f"no images found under {root}")
    return LabeledDataset(samples)
