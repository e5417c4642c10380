"""Shared training hyperparameters for both classifier families."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class TrainParams:
    # SVM
    svm_c: float = 1.0
    svm_kernel: str = "rbf"  # "rbf" | "linear"
    svm_gamma: float | None = None  # None -> 1 / (dim * feature variance)
    svm_tol: float = 1e-3
    # GBDT
    gbdt_rounds: int = 200
    gbdt_eta: float = 0.1
    gbdt_max_depth: int = 6  # levelwise budget
    gbdt_max_leaves: int = 31  # leafwise budget
    gbdt_min_samples_leaf: int = 5
    gbdt_histogram_bins: int = 64
    gbdt_lambda: float = 1.0

    def __post_init__(self):
        if self.svm_c <= 0:
            raise ValueError("svm_c must be positive")
        if self.svm_kernel not in ("rbf", "linear"):
            raise ValueError("svm_kernel must be 'rbf' or 'linear'")
        if self.svm_gamma is not None and self.svm_gamma <= 0:
            raise ValueError("svm_gamma must be positive")
        # rounds == 0 and eta == 0 are permitted: they give the uniform model,
        # which the degenerate-case tests rely on
        if self.gbdt_rounds < 0:
            raise ValueError("gbdt_rounds must be >= 0")
        if not (0.0 <= self.gbdt_eta <= 1.0):
            raise ValueError("gbdt_eta must be in [0, 1]")
        if self.gbdt_max_depth < 1 or self.gbdt_max_leaves < 2:
            raise ValueError("tree growth budgets too small")
        if self.gbdt_min_samples_leaf < 1:
            raise ValueError("gbdt_min_samples_leaf must be >= 1")
        if self.gbdt_histogram_bins < 2:
            raise ValueError("gbdt_histogram_bins must be >= 2")
        if self.gbdt_lambda < 0:
            raise ValueError("gbdt_lambda must be >= 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainParams":
        return cls(**d)
