"""Gradient-boosted decision trees with histogram split finding and a
softmax multiclass objective. `levelwise` growth fills trees breadth-first
to a depth budget; `leafwise` always expands the highest-gain leaf up to a
leaf budget."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import SignatureMismatchError
from ..fusion import Signature, Standardizer
from .params import TrainParams

log = logging.getLogger(__name__)


@dataclass
class Tree:
    """Flat node arrays; feature < 0 marks a leaf. `value` holds the leaf
    contribution already scaled by the learning rate."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        n = X.shape[0]
        idx = np.zeros(n, dtype=np.int64)
        while True:
            feat = self.feature[idx]
            active = feat >= 0
            if not np.any(active):
                return self.value[idx]
            rows = np.flatnonzero(active)
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[idx[rows]]
            idx[rows] = np.where(go_left, self.left[idx[rows]], self.right[idx[rows]])


class _TreeBuilder:
    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def finish(self) -> Tree:
        return Tree(
            feature=np.array(self.feature, dtype=np.int32),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int32),
            right=np.array(self.right, dtype=np.int32),
            value=np.array(self.value, dtype=np.float64),
        )


def _bin_features(X: np.ndarray, max_bins: int):
    """Per-feature quantile bin edges and the binned matrix. Bin b holds
    values x with edges[b-1] < x <= edges[b]; splitting at edge e sends
    x <= e left."""
    n, f = X.shape
    edges_list = []
    binned = np.zeros((n, f), dtype=np.int16)
    qs = np.linspace(0.0, 1.0, max_bins + 1)[1:-1]
    for j in range(f):
        col = X[:, j]
        edges = np.unique(np.quantile(col, qs))
        edges = edges[edges < col.max()] if edges.size else edges
        edges_list.append(edges)
        binned[:, j] = np.searchsorted(edges, col, side="left").astype(np.int16)
    return edges_list, binned


@dataclass
class _NodeStats:
    rows: np.ndarray
    grad: float
    hess: float


class _SplitFinder:
    def __init__(self, binned, edges_list, g, h, lam, min_leaf, max_bins):
        self.binned = binned
        self.edges_list = edges_list
        self.g = g
        self.h = h
        self.lam = lam
        self.min_leaf = min_leaf
        self.nb = max_bins
        f = binned.shape[1]
        self.offsets = (np.arange(f, dtype=np.int64) * self.nb)[None, :]
        self.n_edges = np.array([len(e) for e in edges_list])

    def best_split(self, rows: np.ndarray):
        """Returns (gain, feature, bin, threshold, left_rows, right_rows) or
        None when no positive-gain split satisfies the leaf-size floor."""
        f = self.binned.shape[1]
        flat = (self.binned[rows].astype(np.int64) + self.offsets).ravel()
        size = f * self.nb
        gh = np.bincount(flat, weights=np.repeat(self.g[rows], f), minlength=size).reshape(f, self.nb)
        hh = np.bincount(flat, weights=np.repeat(self.h[rows], f), minlength=size).reshape(f, self.nb)
        ch = np.bincount(flat, minlength=size).reshape(f, self.nb)
        gl = np.cumsum(gh, axis=1)
        hl = np.cumsum(hh, axis=1)
        cl = np.cumsum(ch, axis=1)
        gt, ht, ct = gl[:, -1:], hl[:, -1:], cl[:, -1:]
        gr = gt - gl
        hr = ht - hl
        cr = ct - cl
        lam = self.lam
        parent = (gt * gt) / np.maximum(ht + lam, 1e-12)
        gain = 0.5 * (
            (gl * gl) / np.maximum(hl + lam, 1e-12)
            + (gr * gr) / np.maximum(hr + lam, 1e-12)
            - parent
        )
        valid = (cl >= self.min_leaf) & (cr >= self.min_leaf)
        valid &= np.arange(self.nb)[None, :] < self.n_edges[:, None]
        gain = np.where(valid, gain, -np.inf)
        pick = int(np.argmax(gain))
        best_gain = gain.ravel()[pick]
        if not np.isfinite(best_gain) or best_gain <= 0.0:
            return None
        feat, b = pick // self.nb, pick % self.nb
        threshold = float(self.edges_list[feat][b])
        go_left = self.binned[rows, feat] <= b
        return float(best_gain), feat, b, threshold, rows[go_left], rows[~go_left]


def _leaf_weight(g: float, h: float, lam: float) -> float:
    return -g / max(h + lam, 1e-12)


def _grow_tree(finder: _SplitFinder, rows: np.ndarray, eta: float, lam: float,
               growth: str, max_depth: int, max_leaves: int):
    """Returns the tree plus (rows, value) leaf assignments for fast logit
    updates on the training set."""
    builder = _TreeBuilder()
    root = builder.add()
    leaf_updates = []

    def make_leaf(node: int, node_rows: np.ndarray):
        w = eta * _leaf_weight(finder.g[node_rows].sum(), finder.h[node_rows].sum(), lam)
        builder.value[node] = w
        leaf_updates.append((node_rows, w))

    if growth == "levelwise":
        frontier = [(root, rows, 0)]
        split_any = False
        while frontier:
            node, node_rows, depth = frontier.pop(0)
            split = finder.best_split(node_rows) if depth < max_depth else None
            if split is None:
                make_leaf(node, node_rows)
                continue
            split_any = True
            _gain, feat, _b, thr, left_rows, right_rows = split
            builder.feature[node] = feat
            builder.threshold[node] = thr
            builder.left[node] = builder.add()
            builder.right[node] = builder.add()
            frontier.append((builder.left[node], left_rows, depth + 1))
            frontier.append((builder.right[node], right_rows, depth + 1))
        if not split_any:
            log.debug("degenerate tree: no positive-gain split at the root")
    elif growth == "leafwise":
        heap = []
        counter = 0
        split = finder.best_split(rows)
        if split is None:
            make_leaf(root, rows)
            log.debug("degenerate tree: no positive-gain split at the root")
        else:
            heapq.heappush(heap, (-split[0], counter, root, rows, split))
            counter += 1
            n_leaves = 1
            while heap and n_leaves < max_leaves:
                _neg, _cnt, node, node_rows, split = heapq.heappop(heap)
                _gain, feat, _b, thr, left_rows, right_rows = split
                builder.feature[node] = feat
                builder.threshold[node] = thr
                lnode = builder.add()
                rnode = builder.add()
                builder.left[node] = lnode
                builder.right[node] = rnode
                n_leaves += 1
                for child, child_rows in ((lnode, left_rows), (rnode, right_rows)):
                    child_split = finder.best_split(child_rows)
                    if child_split is None:
                        make_leaf(child, child_rows)
                    else:
                        heapq.heappush(heap, (-child_split[0], counter, child, child_rows, child_split))
                        counter += 1
            # leaf budget reached: remaining queued nodes become leaves
            while heap:
                _neg, _cnt, node, node_rows, _split = heapq.heappop(heap)
                make_leaf(node, node_rows)
    else:
        raise ValueError(f"unknown growth mode {growth!r}")
    return builder.finish(), leaf_updates


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class GbdtModel:
    classes: np.ndarray
    trees: list[list[Tree]]  # trees[round][class_index]
    eta: float
    growth: str
    params: TrainParams
    train_loss: list[float] = field(default_factory=list)
    signature: Optional[Signature] = None
    standardizer: Optional[Standardizer] = None
    kind: str = field(default="gbdt", init=False)

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], len(self.classes)))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                out[:, k] += tree.apply(X)
        return out


def gbdt_train(
    X: np.ndarray,
    y: np.ndarray,
    params: TrainParams = TrainParams(),
    growth: str = "levelwise",
    signature: Optional[Signature] = None,
    standardizer: Optional[Standardizer] = None,
) -> GbdtModel:
    """Boosted softmax ensemble: one tree per class per round, fitted to the
    per-class gradients/hessians with second-order histogram split gains.
    The training log-loss after every round is recorded on the model."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite features")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    k = len(classes)
    n = X.shape[0]
    y_idx = np.searchsorted(classes, y)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y_idx] = 1.0

    edges_list, binned = _bin_features(X, params.gbdt_histogram_bins)
    max_bins = max(len(e) for e in edges_list) + 1 if edges_list else 1

    logits = np.zeros((n, k))
    trees: list[list[Tree]] = []
    losses: list[float] = []
    p = _softmax(logits)
    losses.append(float(-np.mean(np.log(np.maximum(p[np.arange(n), y_idx], 1e-300)))))
    for _ in range(params.gbdt_rounds):
        p = _softmax(logits)
        round_trees = []
        for j in range(k):
            g = p[:, j] - onehot[:, j]
            h = np.maximum(p[:, j] * (1.0 - p[:, j]), 1e-16)
            finder = _SplitFinder(
                binned, edges_list, g, h,
                params.gbdt_lambda, params.gbdt_min_samples_leaf, max_bins,
            )
            tree, leaf_updates = _grow_tree(
                finder, np.arange(n, dtype=np.int64), params.gbdt_eta,
                params.gbdt_lambda, growth, params.gbdt_max_depth, params.gbdt_max_leaves,
            )
            for rows, w in leaf_updates:
                logits[rows, j] += w
            round_trees.append(tree)
        trees.append(round_trees)
        p = _softmax(logits)
        losses.append(float(-np.mean(np.log(np.maximum(p[np.arange(n), y_idx], 1e-300)))))
    return GbdtModel(
        classes=classes,
        trees=trees,
        eta=params.gbdt_eta,
        growth=growth,
        params=params,
        train_loss=losses,
        signature=signature,
        standardizer=standardizer,
    )


def _prepare(model: GbdtModel, values: np.ndarray, signature) -> np.ndarray:
    if signature is not None and model.signature is not None and signature != model.signature:
        raise SignatureMismatchError(
            f"input signature {signature} != model signature {model.signature}"
        )
    X = np.atleast_2d(np.asarray(values, dtype=np.float64))
    if model.standardizer is not None:
        X = model.standardizer.transform(X)
    return X


def gbdt_predict(model: GbdtModel, values: np.ndarray, signature=None) -> tuple[int, np.ndarray]:
    """Softmax over summed per-class logits; ties go to the lowest class code."""
    X = _prepare(model, values, signature)
    probs = _softmax(model.logits(X))[0]
    return int(model.classes[int(np.argmax(probs))]), probs


def gbdt_predict_many(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    X = _prepare(model, X, None)
    probs = _softmax(model.logits(X))
    return model.classes[np.argmax(probs, axis=1)]
