"""Stratified splitting, confusion-matrix metrics (accuracy, macro precision,
recall, F1) and the feature-combination x classifier experiment grid."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import ClassLabel, LabeledDataset
from .deepfeat import EmbeddingSet
from .errors import PvdefectError
from .fusion import BLOCK_ORDER, FeatureStore, fit_standardizer
from .handcrafted import DEEP_NAME
from .classifiers import TrainParams, gbdt_train, svm_train
from .classifiers.gbdt import gbdt_predict_many
from .classifiers.svm import svm_predict_many

log = logging.getLogger(__name__)

CLASSIFIER_NAMES = ("SVM", "GBDT-levelwise", "GBDT-leafwise")

DEFAULT_COMBOS: tuple[tuple[str, ...], ...] = (
    ("LBP",),
    ("GABOR",),
    ("HOG",),
    ("LBP", "HOG"),
    ("HOG", "GABOR"),
    ("LBP", "GABOR"),
    ("LBP", "HOG", "GABOR"),
    ("DEEP",),
    ("DEEP", "LBP"),
    ("DEEP", "GABOR"),
    ("DEEP", "HOG"),
    ("DEEP", "LBP", "HOG"),
    ("DEEP", "HOG", "GABOR"),
    ("DEEP", "LBP", "HOG", "GABOR"),
)


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------

def stratified_split(ds: LabeledDataset, test_frac: float = 0.2, seed: int = 0) -> LabeledDataset:
    """Per-class split of the *original* samples, round(test_frac * n_c) of
    each class to test; augmented variants always follow their parent so no
    lineage ever straddles the split."""
    if not (0.0 <= test_frac < 1.0):
        raise ValueError("test_frac must be in [0, 1)")
    parents = ds.parents()
    by_class: dict[ClassLabel, list[str]] = {}
    for s in parents:
        by_class.setdefault(s.label, []).append(s.id)
    assignment: dict[str, str] = {}
    for label in sorted(by_class, key=int):
        ids = sorted(by_class[label])
        if len(ids) < 2:
            raise ValueError(f"class {label.canonical_name} has fewer than 2 originals")
        n_test = int(np.floor(test_frac * len(ids) + 0.5))
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, int(label)])))
        order = rng.permutation(len(ids))
        for rank, idx in enumerate(order):
            assignment[ids[idx]] = "test" if rank < n_test else "train"
    for s in ds:
        if s.parent is not None:
            if s.parent not in assignment:
                raise PvdefectError(f"augmented sample {s.id} has unknown parent {s.parent}")
            assignment[s.id] = assignment[s.parent]
    return ds.with_splits(assignment)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """k x k counts; rows are true classes, columns predicted."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("confusion matrix must be square")
        if (c < 0).any():
            raise ValueError("negative counts")
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def per_class(self, c: int) -> tuple[int, int, int, int]:
        """One-vs-rest (TP, FP, FN, TN) for class c."""
        tp = int(self.counts[c, c])
        fp = int(self.counts[:, c].sum()) - tp
        fn = int(self.counts[c, :].sum()) - tp
        tn = self.total - tp - fp - fn
        return tp, fp, fn, tn


def confusion_matrix(y_true, y_pred, k: int = 6) -> ConfusionMatrix:
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError("label vectors differ in length")
    if t.size and (t.min() < 0 or t.max() >= k or p.min() < 0 or p.max() >= k):
        raise ValueError(f"labels outside 0..{k - 1}")
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class Metrics:
    """Fractions in [0, 1]; precision/recall/F1 are macro averages with
    undefined (0/0) per-class terms counted as zero and listed in
    `undefined`."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    undefined: tuple[str, ...] = ()


def compute_metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    k = cm.counts.shape[0]
    accuracy = float(np.trace(cm.counts)) / cm.total
    precisions, recalls, f1s = [], [], []
    undefined = []
    for c in range(k):
        tp, fp, fn, _tn = cm.per_class(c)
        if tp + fp == 0:
            precisions.append(0.0)
            undefined.append(f"precision[{c}]")
        else:
            precisions.append(tp / (tp + fp))
        if tp + fn == 0:
            recalls.append(0.0)
            undefined.append(f"recall[{c}]")
        else:
            recalls.append(tp / (tp + fn))
        if precisions[-1] + recalls[-1] == 0.0:
            f1s.append(0.0)
        else:
            f1s.append(2.0 * precisions[-1] * recalls[-1] / (precisions[-1] + recalls[-1]))
    return Metrics(
        accuracy=accuracy,
        precision=float(np.mean(precisions)),
        recall=float(np.mean(recalls)),
        f1=float(np.mean(f1s)),
        undefined=tuple(undefined),
    )


# ---------------------------------------------------------------------------
# Experiment grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricsRow:
    feature_combo: tuple[str, ...]
    classifier: str
    accuracy: float = 0.0  # percentages
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    error: Optional[str] = None

    @property
    def combo_name(self) -> str:
        return "+".join(self.feature_combo)


@dataclass(frozen=True)
class GridConfig:
    combos: tuple[tuple[str, ...], ...] = DEFAULT_COMBOS
    classifiers: tuple[str, ...] = CLASSIFIER_NAMES
    params: TrainParams = field(default_factory=TrainParams)
    seed: int = 0
    test_frac: float = 0.2
    standardize: bool = True

    def __post_init__(self):
        for combo in self.combos:
            ranks = [BLOCK_ORDER.index(b) for b in combo]
            if ranks != sorted(ranks) or len(set(combo)) != len(combo):
                raise ValueError(f"combo {combo} not in canonical block order")
        unknown = set(self.classifiers) - set(CLASSIFIER_NAMES)
        if unknown:
            raise ValueError(f"unknown classifiers: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, d: dict) -> "GridConfig":
        kwargs = dict(d)
        if "combos" in kwargs:
            kwargs["combos"] = tuple(tuple(c) for c in kwargs["combos"])
        if "classifiers" in kwargs:
            kwargs["classifiers"] = tuple(kwargs["classifiers"])
        if "params" in kwargs:
            kwargs["params"] = TrainParams.from_dict(kwargs["params"])
        return cls(**kwargs)


def assemble_matrix(
    ids: list[str],
    combo: tuple[str, ...],
    features: Optional[FeatureStore],
    embeddings: Optional[EmbeddingSet],
):
    """Fused (n, dim) matrix for the given ids and block combination."""
    parts = []
    signature = []
    for name in combo:
        if name == DEEP_NAME:
            if embeddings is None:
                raise PvdefectError("combo needs DEEP but no embeddings were provided")
            missing = [i for i in ids if i not in embeddings.entries]
            if missing:
                raise PvdefectError(f"embeddings missing for {len(missing)} ids, e.g. {missing[0]!r}")
            parts.append(np.stack([embeddings.entries[i] for i in ids]).astype(np.float64))
            signature.append((DEEP_NAME, embeddings.dim))
        else:
            if features is None:
                raise PvdefectError(f"combo needs {name} but no feature store was provided")
            sl = features.block_slice(name)
            missing = [i for i in ids if i not in features.entries]
            if missing:
                raise PvdefectError(f"features missing for {len(missing)} ids, e.g. {missing[0]!r}")
            parts.append(np.stack([features.entries[i][sl] for i in ids]).astype(np.float64))
            signature.append((name, sl.stop - sl.start))
    return np.concatenate(parts, axis=1), tuple(signature)


def _train_and_eval(
    classifier: str,
    Xtr: np.ndarray,
    ytr: np.ndarray,
    Xte: np.ndarray,
    yte: np.ndarray,
    params: TrainParams,
    signature,
    standardize: bool,
) -> ConfusionMatrix:
    std = fit_standardizer(Xtr, signature) if standardize else None
    Xtr_in = std.transform(Xtr) if std else Xtr
    if classifier == "SVM":
        model = svm_train(Xtr_in, ytr, params, signature=signature, standardizer=std)
        y_pred = svm_predict_many(model, Xte)
    else:
        growth = "levelwise" if classifier.endswith("levelwise") else "leafwise"
        model = gbdt_train(Xtr_in, ytr, params, growth=growth, signature=signature, standardizer=std)
        y_pred = gbdt_predict_many(model, Xte)
    return confusion_matrix(yte, y_pred, k=len(ClassLabel))


def run_experiment_grid(
    cfg: GridConfig,
    dataset: LabeledDataset,
    features: Optional[FeatureStore] = None,
    embeddings: Optional[EmbeddingSet] = None,
) -> list[MetricsRow]:
    """One row per (combo, classifier) cell, in grid order. A failing cell
    yields a row with `error` set; the grid keeps going."""
    if any(s.split == "unassigned" for s in dataset):
        dataset = stratified_split(dataset, cfg.test_frac, cfg.seed)
    train = dataset.subset("train")
    test = dataset.subset("test")
    tr_ids = [s.id for s in train]
    te_ids = [s.id for s in test]
    ytr = np.array([int(s.label) for s in train], dtype=np.int64)
    yte = np.array([int(s.label) for s in test], dtype=np.int64)
    rows: list[MetricsRow] = []
    for combo in cfg.combos:
        for clf in cfg.classifiers:
            try:
                Xtr, signature = assemble_matrix(tr_ids, combo, features, embeddings)
                Xte, _ = assemble_matrix(te_ids, combo, features, embeddings)
                cm = _train_and_eval(clf, Xtr, ytr, Xte, yte, cfg.params, signature, cfg.standardize)
                m = compute_metrics(cm)
                rows.append(
                    MetricsRow(
                        feature_combo=combo,
                        classifier=clf,
                        accuracy=100.0 * m.accuracy,
                        precision=100.0 * m.precision,
                        recall=100.0 * m.recall,
                        f1=100.0 * m.f1,
                    )
                )
            except (PvdefectError, ValueError) as exc:
                log.warning("grid cell %s x %s failed: %s", "+".join(combo), clf, exc)
                rows.append(MetricsRow(feature_combo=combo, classifier=clf, error=str(exc)))
    return rows


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

_SECTION_TITLES = {
    ("handcrafted", 1): "Single handcrafted features",
    ("handcrafted", 2): "Dual handcrafted combinations",
    ("handcrafted", 3): "Triple handcrafted combination",
    ("deep", 1): "Deep features",
    ("deep", 2): "Deep + one handcrafted (dual hybrid)",
    ("deep", 3): "Deep + two handcrafted (triple hybrid)",
    ("deep", 4): "Deep + all handcrafted",
}


def _row_section(row: MetricsRow) -> tuple[str, int]:
    kind = "deep" if DEEP_NAME in row.feature_combo else "handcrafted"
    return kind, len(row.feature_combo)


def render_report(rows: list[MetricsRow], fmt: str = "csv") -> bytes:
    if not rows:
        raise ValueError("no rows to render")
    if fmt == "csv":
        lines = ["feature_combo,classifier,accuracy,precision,recall,f1"]
        for r in rows:
            if r.error is not None:
                lines.append(f"{r.combo_name},{r.classifier},,,,")
            else:
                lines.append(
                    f"{r.combo_name},{r.classifier},"
                    f"{r.accuracy:.2f},{r.precision:.2f},{r.recall:.2f},{r.f1:.2f}"
                )
        return ("\n".join(lines) + "\n").encode()
    if fmt == "json":
        payload = [
            {
                "feature_combo": list(r.feature_combo),
                "classifier": r.classifier,
                "accuracy": r.accuracy,
                "precision": r.precision,
                "recall": r.recall,
                "f1": r.f1,
                "error": r.error,
            }
            for r in rows
        ]
        return json.dumps({"averaging": "macro", "rows": payload}, indent=2).encode()
    if fmt == "markdown":
        out = []
        current = None
        for r in rows:
            section = _row_section(r)
            if section != current:
                title = _SECTION_TITLES.get(section, "Other combinations")
                out.append(f"\n## {title}\n")
                out.append("| Features | Classifier | Accuracy (%) | Precision (%) | Recall (%) | F1 (%) |")
                out.append("|---|---|---|---|---|---|")
                current = section
            if r.error is not None:
                out.append(f"| {r.combo_name} | {r.classifier} | failed | | | |")
            else:
                out.append(
                    f"| {r.combo_name} | {r.classifier} | {r.accuracy:.2f} "
                    f"| {r.precision:.2f} | {r.recall:.2f} | {r.f1:.2f} |"
                )
        return ("\n".join(out).strip() + "\n").encode()
    raise ValueError(f"unknown report format {fmt!r}")


def rows_from_json(payload: bytes | str) -> list[MetricsRow]:
    doc = json.loads(payload)
    rows = []
    for r in doc["rows"]:
        rows.append(
            MetricsRow(
                feature_combo=tuple(r["feature_combo"]),
                classifier=r["classifier"],
                accuracy=r["accuracy"],
                precision=r["precision"],
                recall=r["recall"],
                f1=r["f1"],
                error=r.get("error"),
            )
        )
    return rows
