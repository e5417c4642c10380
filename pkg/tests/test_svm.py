import numpy as np
import pytest

from pvdefect.classifiers import TrainParams, svm_predict, svm_train
from pvdefect.classifiers.svm import (
    _kernel_matrix,
    kkt_residual,
    svm_decision_values,
    svm_predict_many,
)
from pvdefect.fusion import fit_standardizer

from oracles import svm_decision_oracle


def _blobs(seed: int, n_per: int, centers, spread: float = 0.5):
    rng = np.random.default_rng(seed)
    X, y = [], []
    for c, center in enumerate(centers):
        X.append(rng.standard_normal((n_per, len(center))) * spread + np.asarray(center))
        y.extend([c] * n_per)
    return np.concatenate(X), np.array(y, dtype=np.int64)


class TestBinary:
    def test_separable_blobs_perfect_and_kkt(self):
        X, y = _blobs(0, 30, [(-3.0, -3.0), (3.0, 3.0)])
        params = TrainParams(svm_kernel="rbf")
        model = svm_train(X, y, params)
        assert np.array_equal(svm_predict_many(model, X), y)
        # KKT residual of each binary problem
        for pair in model.pairs:
            mask = (y == pair.pos) | (y == pair.neg)
            Xp = X[mask]
            yp = np.where(y[mask] == pair.pos, 1.0, -1.0)
            K = _kernel_matrix(model.kernel, model.gamma, Xp, Xp)
            # reconstruct full alpha over the pair subset
            alpha = np.zeros(len(yp))
            sv_rows = {tuple(r): i for i, r in enumerate(Xp)}
            for ay, sv in zip(pair.alpha_y, pair.sv):
                alpha[sv_rows[tuple(sv)]] = abs(ay)
            assert kkt_residual(K, yp, alpha, pair.b, model.c) < 1e-3

    def test_xor_rbf(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        y = np.array([0, 0, 1, 1], dtype=np.int64)
        model = svm_train(X, y, TrainParams(svm_kernel="rbf", svm_gamma=1.0))
        assert np.array_equal(svm_predict_many(model, X), y)

    def test_alpha_bounds_and_balance(self):
        X, y = _blobs(1, 25, [(-1.0, 0.0), (1.0, 0.0)], spread=0.8)
        model = svm_train(X, y, TrainParams(svm_c=2.0))
        for pair in model.pairs:
            alphas = np.abs(pair.alpha_y)
            assert np.all(alphas > 0)
            assert np.all(alphas <= 2.0 + 1e-9)
            assert abs(pair.alpha_y.sum()) <= 1e-6

    def test_decision_matches_kernel_sum_oracle(self):
        X, y = _blobs(2, 15, [(-2.0, 1.0), (2.0, -1.0)], spread=1.0)
        model = svm_train(X, y)
        rng = np.random.default_rng(3)
        probes = rng.standard_normal((10, 2))
        dec = svm_decision_values(model, probes)
        pair = model.pairs[0]
        for i, x in enumerate(probes):
            ref = svm_decision_oracle(pair.alpha_y, pair.sv, pair.b, model.gamma, model.kernel, x)
            assert abs(dec[i, 0] - ref) < 1e-9


class TestMulticlass:
    def test_six_class_votes_sum_to_15(self):
        centers = [(i * 3.0, (i % 2) * 3.0) for i in range(6)]
        X, y = _blobs(4, 12, centers, spread=0.3)
        model = svm_train(X, y)
        label, votes = svm_predict(model, X[0])
        assert votes.sum() == 15
        assert len(votes) == 6

    def test_training_point_predicts_own_label(self):
        centers = [(i * 4.0, 0.0) for i in range(4)]
        X, y = _blobs(5, 10, centers, spread=0.2)
        model = svm_train(X, y)
        for i in (0, 11, 23, 39):
            label, _ = svm_predict(model, X[i])
            assert label == y[i]

    def test_duplicate_points_merge_invariance(self):
        X, y = _blobs(6, 8, [(-2.0, 0.0), (2.0, 0.0)], spread=0.4)
        X_dup = np.concatenate([X, X[:4]])
        y_dup = np.concatenate([y, y[:4]])
        model = svm_train(X_dup, y_dup)
        pair = model.pairs[0]
        # merge duplicate support vectors by summing their coefficients
        merged: dict[tuple, float] = {}
        for ay, sv in zip(pair.alpha_y, pair.sv):
            key = tuple(sv)
            merged[key] = merged.get(key, 0.0) + ay
        probe = np.array([0.3, -0.1])
        direct = svm_decision_values(model, probe[None, :])[0, 0]
        via_merged = (
            sum(
                ay * np.exp(-model.gamma * np.sum((np.array(k) - probe) ** 2))
                for k, ay in merged.items()
            )
            + pair.b
        )
        assert abs(direct - via_merged) < 1e-9

    def test_rescaling_invariance_through_standardizer(self):
        centers = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]
        X, y = _blobs(7, 15, centers, spread=0.5)
        sig = (("DEEP", 2),)
        preds = []
        for scale in (1.0, 37.5):
            Xs = X * scale
            std = fit_standardizer(Xs, sig)
            model = svm_train(std.transform(Xs), y, signature=sig, standardizer=std)
            preds.append(svm_predict_many(model, Xs))
        assert np.array_equal(preds[0], preds[1])

    def test_deterministic(self):
        X, y = _blobs(8, 10, [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)], spread=0.6)
        m1 = svm_train(X, y)
        m2 = svm_train(X, y)
        for p1, p2 in zip(m1.pairs, m2.pairs):
            assert np.array_equal(p1.alpha_y, p2.alpha_y)
            assert p1.b == p2.b

    def test_single_class_rejected(self):
        X = np.zeros((5, 2))
        y = np.zeros(5, dtype=np.int64)
        with pytest.raises(ValueError):
            svm_train(X, y)

    def test_nonfinite_rejected(self):
        X = np.zeros((4, 2))
        X[0, 0] = np.inf
        with pytest.raises(ValueError):
            svm_train(X, np.array([0, 0, 1, 1]))

    def test_linear_kernel_works(self):
        X, y = _blobs(9, 20, [(-2.0, -2.0), (2.0, 2.0)], spread=0.5)
        model = svm_train(X, y, TrainParams(svm_kernel="linear"))
        assert np.array_equal(svm_predict_many(model, X), y)
