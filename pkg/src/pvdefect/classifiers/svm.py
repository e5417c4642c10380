"""Kernel SVM trained with sequential minimal optimization; multiclass via
one-vs-one voting over all class pairs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import SignatureMismatchError
from ..fusion import Signature, Standardizer
from .params import TrainParams

_EPS = 1e-12


def _kernel_matrix(kind: str, gamma: float, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if kind == "linear":
        return A @ B.T
    sq = (
        np.sum(A * A, axis=1)[:, None]
        + np.sum(B * B, axis=1)[None, :]
        - 2.0 * (A @ B.T)
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class _BinarySvm:
    """One pairwise problem: decision f(x) = sum_i alpha_i y_i K(x_i, x) + b,
    positive class = the lower class code."""

    pos: int
    neg: int
    alpha_y: np.ndarray
    sv: np.ndarray
    b: float

    def decision(self, kind: str, gamma: float, X: np.ndarray) -> np.ndarray:
        K = _kernel_matrix(kind, gamma, X, self.sv)
        return K @ self.alpha_y + self.b


def _smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_sweeps: int = 1000):
    """Platt-style SMO on a precomputed kernel matrix; deterministic because
    every candidate loop runs in fixed index order."""
    n = len(y)
    alpha = np.zeros(n)
    b = 0.0
    err = -y.astype(np.float64)  # f(x_i) - y_i with f = 0

    def take_step(i1: int, i2: int) -> bool:
        nonlocal b
        if i1 == i2:
            return False
        a1o, a2o = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        e1, e2 = err[i1], err[i2]
        s = y1 * y2
        if s < 0:
            lo, hi = max(0.0, a2o - a1o), min(C, C + a2o - a1o)
        else:
            lo, hi = max(0.0, a1o + a2o - C), min(C, a1o + a2o)
        if lo >= hi:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = 2.0 * k12 - k11 - k22
        if eta < 0.0:
            a2 = a2o - y2 * (e1 - e2) / eta
            a2 = min(max(a2, lo), hi)
        else:
            # flat direction: evaluate the objective at both clip ends
            f1 = y1 * (e1 + b) - a1o * k11 - s * a2o * k12
            f2 = y2 * (e2 + b) - s * a1o * k12 - a2o * k22
            l1 = a1o + s * (a2o - lo)
            h1 = a1o + s * (a2o - hi)
            obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 + s * lo * l1 * k12
            obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 + s * hi * h1 * k12
            if obj_lo < obj_hi - _EPS:
                a2 = lo
            elif obj_hi < obj_lo - _EPS:
                a2 = hi
            else:
                return False
        if abs(a2 - a2o) < _EPS * (a2 + a2o + _EPS):
            return False
        a1 = a1o + s * (a2o - a2)
        if a1 < 0.0:
            a1 = 0.0
        elif a1 > C:
            a1 = C
        d1, d2 = a1 - a1o, a2 - a2o
        b_old = b
        b1 = b_old - (e1 + y1 * d1 * k11 + y2 * d2 * k12)
        b2 = b_old - (e2 + y1 * d1 * k12 + y2 * d2 * k22)
        if 0.0 < a1 < C:
            b = b1
        elif 0.0 < a2 < C:
            b = b2
        else:
            b = 0.5 * (b1 + b2)
        alpha[i1], alpha[i2] = a1, a2
        err[:] += y1 * d1 * K[i1] + y2 * d2 * K[i2] + (b - b_old)
        return True

    def examine(i2: int) -> int:
        y2, a2, e2 = y[i2], alpha[i2], err[i2]
        r2 = e2 * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
            return 0
        nonbound = np.flatnonzero((alpha > 0) & (alpha < C))
        if len(nonbound) > 1:
            i1 = int(nonbound[np.argmax(np.abs(err[nonbound] - e2))])
            if take_step(i1, i2):
                return 1
        for i1 in nonbound:
            if take_step(int(i1), i2):
                return 1
        for i1 in range(n):
            if take_step(i1, i2):
                return 1
        return 0

    examine_all = True
    changed = 0
    for _ in range(max_sweeps):
        changed = 0
        targets = range(n) if examine_all else np.flatnonzero((alpha > 0) & (alpha < C))
        for i2 in targets:
            changed += examine(int(i2))
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    return alpha, b


def kkt_residual(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, b: float, C: float) -> float:
    """Largest KKT violation of a solved binary problem (0 when optimal)."""
    f = K @ (alpha * y) + b
    yf = y * f
    v_zero = np.maximum(0.0, 1.0 - yf[alpha <= _EPS]) if np.any(alpha <= _EPS) else np.array([0.0])
    at_c = alpha >= C - _EPS
    v_c = np.maximum(0.0, yf[at_c] - 1.0) if np.any(at_c) else np.array([0.0])
    free = (~at_c) & (alpha > _EPS)
    v_free = np.abs(yf[free] - 1.0) if np.any(free) else np.array([0.0])
    return float(max(v_zero.max(), v_c.max(), v_free.max()))


@dataclass
class SvmModel:
    classes: np.ndarray  # sorted class codes
    pairs: list[_BinarySvm]
    kernel: str
    gamma: float
    c: float
    signature: Optional[Signature] = None
    standardizer: Optional[Standardizer] = None
    kind: str = field(default="svm", init=False)

    def n_pairs(self) -> int:
        k = len(self.classes)
        return k * (k - 1) // 2


def svm_train(
    X: np.ndarray,
    y: np.ndarray,
    params: TrainParams = TrainParams(),
    signature: Optional[Signature] = None,
    standardizer: Optional[Standardizer] = None,
) -> SvmModel:
    """One-vs-one kernel SVM. X rows must already be standardized if a
    standardizer is attached (prediction re-applies it to raw inputs)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite features")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    if params.svm_gamma is not None:
        gamma = params.svm_gamma
    else:
        var = float(X.var())
        gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0 / X.shape[1]
    pairs = []
    for a_idx in range(len(classes)):
        for b_idx in range(a_idx + 1, len(classes)):
            ca, cb = int(classes[a_idx]), int(classes[b_idx])
            mask = (y == ca) | (y == cb)
            Xp = X[mask]
            yp = np.where(y[mask] == ca, 1.0, -1.0)
            K = _kernel_matrix(params.svm_kernel, gamma, Xp, Xp)
            alpha, b = _smo_solve(K, yp, params.svm_c, params.svm_tol)
            assert np.all(alpha >= -1e-9) and np.all(alpha <= params.svm_c + 1e-9)
            assert abs(np.sum(alpha * yp)) <= 1e-6
            keep = alpha > _EPS
            pairs.append(
                _BinarySvm(
                    pos=ca,
                    neg=cb,
                    alpha_y=(alpha * yp)[keep],
                    sv=Xp[keep].copy(),
                    b=float(b),
                )
            )
    return SvmModel(
        classes=classes,
        pairs=pairs,
        kernel=params.svm_kernel,
        gamma=gamma,
        c=params.svm_c,
        signature=signature,
        standardizer=standardizer,
    )


def svm_decision_values(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Per-pair decision values, shape (n, n_pairs), pair order (i<j)."""
    X = np.asarray(X, dtype=np.float64)
    return np.stack(
        [p.decision(model.kernel, model.gamma, X) for p in model.pairs], axis=1
    )


def svm_votes(model: SvmModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vote counts and summed winning-decision magnitudes per class."""
    dec = svm_decision_values(model, X)
    k = len(model.classes)
    code_to_col = {int(c): i for i, c in enumerate(model.classes)}
    votes = np.zeros((X.shape[0], k))
    magnitude = np.zeros((X.shape[0], k))
    for j, p in enumerate(model.pairs):
        win_pos = dec[:, j] > 0
        col_pos, col_neg = code_to_col[p.pos], code_to_col[p.neg]
        votes[win_pos, col_pos] += 1
        votes[~win_pos, col_neg] += 1
        magnitude[win_pos, col_pos] += np.abs(dec[win_pos, j])
        magnitude[~win_pos, col_neg] += np.abs(dec[~win_pos, j])
    return votes, magnitude


def _check_and_standardize(model, values: np.ndarray, signature) -> np.ndarray:
    if signature is not None and model.signature is not None and signature != model.signature:
        raise SignatureMismatchError(
            f"input signature {signature} != model signature {model.signature}"
        )
    X = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if model.standardizer is not None:
        X = model.standardizer.transform(X)
    return X


def svm_predict(model: SvmModel, values: np.ndarray, signature=None) -> tuple[int, np.ndarray]:
    """Majority vote over all pairwise decisions; ties break on summed
    decision magnitude, then on the lowest class code."""
    X = _check_and_standardize(model, values, signature)
    votes, magnitude = svm_votes(model, X)
    v, m = votes[0], magnitude[0]
    best = np.flatnonzero(v == v.max())
    if len(best) > 1:
        best = best[m[best] == m[best].max()]
    return int(model.classes[best[0]]), v


def svm_predict_many(model: SvmModel, X: np.ndarray) -> np.ndarray:
    X = _check_and_standardize(model, X, None)
    votes, magnitude = svm_votes(model, X)
    labels = np.zeros(X.shape[0], dtype=np.int64)
    for i in range(X.shape[0]):
        v, m = votes[i], magnitude[i]
        best = np.flatnonzero(v == v.max())
        if len(best) > 1:
            best = best[m[best] == m[best].max()]
        labels[i] = model.classes[best[0]]
    return labels
