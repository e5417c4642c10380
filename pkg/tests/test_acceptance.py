"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s`. The final integration
criterion needs the public panel dataset plus a real embedding file and is
skipped unless PVDEFECT_DATA_DIR / PVDEFECT_PVEM point at them.
"""

import os
import time

import numpy as np
import pytest

from pvdefect.augment import AugmentConfig, augment_dataset
from pvdefect.classifiers import TrainParams, gbdt_train, load_model, save_model, svm_train
from pvdefect.classifiers.svm import _kernel_matrix, kkt_residual, svm_predict_many
from pvdefect.dataset import ClassLabel, LabeledDataset, Sample
from pvdefect.deepfeat import synthetic_embeddings
from pvdefect.evaluate import (
    GridConfig,
    compute_metrics,
    confusion_matrix,
    render_report,
    run_experiment_grid,
    stratified_split,
)
from pvdefect.fusion import FeatureStore
from pvdefect.handcrafted import (
    HandcraftedConfig,
    extract_handcrafted,
    gabor_features,
    gabor_kernel,
    hog_descriptor,
    lbp_histogram,
    uniform_bin_of_code,
    _convolve_same_symmetric,
)
from pvdefect.image import ImageU8, rgb_to_lab
from pvdefect.preprocess import (
    bilateral_filter,
    clahe_luminance,
    equalize_l_plane,
    gamma_correct,
    gamma_lut,
    nlm_denoise,
    preprocess_pipeline,
    PreprocessConfig,
)

from conftest import const_image, rand_image
from oracles import (
    bilateral_oracle,
    clahe_plane_oracle,
    gabor_response_oracle,
    hog_oracle,
    lbp_oracle,
    metrics_oracle,
    nlm_oracle,
)

N_ORACLE_IMAGES = 20


def _report(name: str):
    print(f"ACCEPTANCE PASS: {name}")


def test_c1_kernel_oracle_suite():
    t0 = time.monotonic()

    for i in range(N_ORACLE_IMAGES):
        img = rand_image(1000 + i, 14, 13, 3 if i % 2 else 1)
        got = bilateral_filter(img, 9, 75.0, 75.0).data.astype(int)
        ref = bilateral_oracle(img.data, 9, 75.0, 75.0).astype(int)
        assert np.max(np.abs(got - ref)) <= 1

    for i in range(N_ORACLE_IMAGES):
        img = rand_image(2000 + i, 12, 12, 3 if i % 2 else 1)
        got = nlm_denoise(img, 10.0, 10.0, 7, 21).data.astype(int)
        ref = nlm_oracle(img.data, 10.0, 10.0, 7, 21).astype(int)
        assert np.max(np.abs(got - ref)) <= 1

    for i in range(N_ORACLE_IMAGES):
        img = rand_image(3000 + i, 32, 32, 3)
        lab = rgb_to_lab(img)
        plane = np.clip(
            np.floor(lab.data[:, :, 0].astype(np.float64) * 255.0 / 100.0 + 0.5), 0, 255
        ).astype(np.int64)
        ref, _ = clahe_plane_oracle(plane, 2.0, (8, 8))
        eq = equalize_l_plane(lab, 2.0, (8, 8))
        got = np.clip(
            np.floor(eq.data[:, :, 0].astype(np.float64) * 255.0 / 100.0 + 0.5), 0, 255
        ).astype(np.int64)
        assert np.max(np.abs(got - ref)) <= 1

    for i in range(N_ORACLE_IMAGES):
        img = rand_image(4000 + i, 24, 21, 1)
        assert np.array_equal(lbp_histogram(img).values, lbp_oracle(img.data[:, :, 0]))

    hog_cfg = HandcraftedConfig(hog_input=32)
    for i in range(N_ORACLE_IMAGES):
        img = rand_image(5000 + i, 32, 32, 1)
        got = hog_descriptor(img, hog_cfg).values
        ref = hog_oracle(img.data[:, :, 0])
        assert np.allclose(got, ref, rtol=1e-5, atol=1e-8)

    kernels = [gabor_kernel(theta, lam) for theta in (0.0, 45.0) for lam in (3.0, 5.0)]
    for i in range(N_ORACLE_IMAGES):
        img = rand_image(6000 + i, 20, 20, 1)
        plane = img.data[:, :, 0].astype(np.float64)
        for k in kernels:
            got = _convolve_same_symmetric(plane, k)
            ref = gabor_response_oracle(plane, k)
            assert np.allclose(got, ref, rtol=1e-5, atol=1e-6)

    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"oracle suite took {elapsed:.1f}s"
    _report(f"kernel oracle suite ({N_ORACLE_IMAGES} images per kernel, {elapsed:.1f}s)")


def test_c2_analytic_fixpoints():
    # constant-image invariance for every preprocessing stage
    const_rgb = const_image(77, 24, 24, 3)
    for fn in (
        lambda im: bilateral_filter(im),
        lambda im: nlm_denoise(im),
        lambda im: clahe_luminance(im),
        lambda im: gamma_correct(im, 1.5),
        lambda im: preprocess_pipeline(im, PreprocessConfig(target_size=(24, 24))),
    ):
        out = fn(const_rgb).data.reshape(-1, 3)
        assert np.all(out == out[0])

    # gamma LUT endpoints and midpoint
    for g in (0.4, 1.0, 1.5, 3.0):
        lut = gamma_lut(g)
        assert lut[0] == 0 and lut[255] == 255
    assert gamma_lut(1.5)[128] == 161

    # LBP normalization and remap invariance
    img = rand_image(1, 20, 20, 1)
    hist = lbp_histogram(img).values
    assert abs(hist.sum() - 1.0) < 1e-9
    shifted = ImageU8((img.data // 2) + 60)  # affine remap stays exact
    assert np.array_equal(
        lbp_histogram(ImageU8(img.data // 2)).values, lbp_histogram(shifted).values
    )
    rng = np.random.default_rng(2)
    binary = ImageU8(np.where(rng.random((20, 20)) < 0.5, 20, 200).astype(np.uint8)[:, :, None])
    lut = np.sort(rng.choice(256, size=256, replace=False)).astype(np.uint8)
    assert np.array_equal(
        lbp_histogram(binary).values, lbp_histogram(ImageU8(lut[binary.data])).values
    )
    assert lbp_histogram(const_image(9, 10, 10)).values[uniform_bin_of_code(255)] == 1.0

    # descriptor dimensions under defaults
    assert hog_descriptor(rand_image(3, 50, 50)).dim == 8100
    assert gabor_features(rand_image(4, 24, 24)).dim == 32

    _report("analytic fixpoints (constants, gamma LUT, LBP, HOG 8100, Gabor 32)")


def test_c3_classifier_correctness(tmp_path):
    # separable blobs
    rng = np.random.default_rng(5)
    X = np.concatenate([rng.standard_normal((40, 2)) * 0.5 + mu for mu in ((-3, -3), (3, 3))])
    y = np.array([0] * 40 + [1] * 40, dtype=np.int64)
    model = svm_train(X, y)
    assert np.mean(svm_predict_many(model, X) == y) == 1.0
    pair = model.pairs[0]
    mask = np.ones(len(y), dtype=bool)
    K = _kernel_matrix(model.kernel, model.gamma, X, X)
    alpha = np.zeros(len(y))
    rows = {tuple(r): i for i, r in enumerate(X)}
    for ay, sv in zip(pair.alpha_y, pair.sv):
        alpha[rows[tuple(sv)]] = abs(ay)
    yp = np.where(y == pair.pos, 1.0, -1.0)
    assert kkt_residual(K, yp, alpha, pair.b, model.c) < 1e-3

    # XOR with an RBF kernel
    X_xor = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y_xor = np.array([0, 0, 1, 1], dtype=np.int64)
    m_xor = svm_train(X_xor, y_xor, TrainParams(svm_gamma=1.0))
    assert np.array_equal(svm_predict_many(m_xor, X_xor), y_xor)
    p_xor = m_xor.pairs[0]
    K_xor = _kernel_matrix("rbf", 1.0, X_xor, X_xor)
    a_xor = np.zeros(4)
    rows_xor = {tuple(r): i for i, r in enumerate(X_xor)}
    for ay, sv in zip(p_xor.alpha_y, p_xor.sv):
        a_xor[rows_xor[tuple(sv)]] = abs(ay)
    assert kkt_residual(K_xor, np.where(y_xor == 0, 1.0, -1.0), a_xor, p_xor.b, m_xor.c) < 1e-3

    # GBDT: 200 rounds, non-increasing training log-loss on 6 classes
    X6, y6 = [], []
    for c in range(6):
        mu = np.zeros(6)
        mu[c] = 2.5
        X6.append(rng.standard_normal((20, 6)) + mu)
        y6.extend([c] * 20)
    X6 = np.concatenate(X6)
    y6 = np.array(y6, dtype=np.int64)
    gb = gbdt_train(X6, y6, TrainParams(gbdt_rounds=200, gbdt_max_depth=3))
    losses = np.array(gb.train_loss)
    assert len(losses) == 201
    assert np.all(np.diff(losses) <= 1e-9)

    # save/load round trips give bit-identical predictions
    probes = rng.standard_normal((100, 2)) * 3
    save_model(model, tmp_path / "svm.pvml")
    svm_back = load_model(tmp_path / "svm.pvml")
    assert np.array_equal(svm_predict_many(model, probes), svm_predict_many(svm_back, probes))
    probes6 = rng.standard_normal((100, 6)) * 2
    save_model(gb, tmp_path / "gbdt.pvml")
    gb_back = load_model(tmp_path / "gbdt.pvml")
    assert np.array_equal(gb.logits(probes6), gb_back.logits(probes6))

    _report("classifier correctness (blobs, XOR, KKT, 200-round log-loss, IO round trip)")


def test_c4_metrics_against_oracle():
    rng = np.random.default_rng(6)
    for _ in range(100):
        k = int(rng.integers(2, 8))
        n = int(rng.integers(1, 80))
        t = rng.integers(0, k, n)
        p = rng.integers(0, k, n)
        m = compute_metrics(confusion_matrix(t, p, k=k))
        acc, prec, rec, f1 = metrics_oracle(t.tolist(), p.tolist(), k)
        assert abs(m.accuracy - acc) < 1e-12
        assert abs(m.precision - prec) < 1e-12
        assert abs(m.recall - rec) < 1e-12
        assert abs(m.f1 - f1) < 1e-12

    cm = confusion_matrix([0] * 5 + [1] * 5, [0] * 4 + [1] + [0] + [1] * 4, k=2)
    assert cm.per_class(0) == (4, 1, 1, 4)
    m = compute_metrics(cm)
    for value in (m.accuracy, m.precision, m.recall, m.f1):
        assert abs(value - 0.8) < 1e-12

    _report("metrics match naive oracle on 100 random matrices; binary fixture = 0.8")


def _synthetic_corpus(n_per_class: int, size: int = 48, seed: int = 100):
    """Orientation-coded gratings, one orientation per class."""
    rng = np.random.default_rng(seed)
    cfg = HandcraftedConfig(hog_input=32, gabor_wavelengths=(4.0, 8.0))
    samples, entries = [], {}
    signature = None
    for c in range(6):
        label = ClassLabel(c)
        theta = np.deg2rad(c * 30.0)
        yy, xx = np.mgrid[0:size, 0:size]
        proj = xx * np.cos(theta) + yy * np.sin(theta)
        for i in range(n_per_class):
            sid = f"{label.canonical_name}/{i:03d}"
            phase = rng.uniform(0, 2 * np.pi)
            wave = 127.5 + 90 * np.cos(2 * np.pi * proj / 6.0 + phase)
            noise = rng.normal(0, 12, size=(size, size))
            arr = np.clip(np.floor(wave + noise + 0.5), 0, 255).astype(np.uint8)
            blocks = extract_handcrafted(ImageU8(arr[:, :, None]), cfg=cfg)
            signature = tuple((b.name, b.dim) for b in blocks)
            entries[sid] = np.concatenate([b.values for b in blocks]).astype(np.float32)
            samples.append(Sample(id=sid, path=sid, label=label))
    ds = LabeledDataset(samples)
    return ds, FeatureStore(signature=signature, entries=entries)


def test_c5_end_to_end_synthetic_grid():
    t0 = time.monotonic()
    ds, store = _synthetic_corpus(100)
    assert len(ds) == 600
    emb = synthetic_embeddings({s.id: s.label for s in ds}, dim=64, seed=7, separation=6.0)

    params = TrainParams(gbdt_rounds=25, gbdt_max_depth=3)
    cfg = GridConfig(params=params, seed=11)
    rows = run_experiment_grid(cfg, ds, store, emb)
    assert len(rows) == 42
    assert all(r.error is None for r in rows)

    by_cell = {(r.combo_name, r.classifier): r for r in rows}
    assert by_cell[("DEEP+GABOR", "SVM")].accuracy >= 95.0

    # cell-level determinism: re-running a sub-grid reproduces the same rows
    sub = GridConfig(combos=(("DEEP",), ("DEEP", "GABOR")), params=params, seed=11)
    sub_rows = run_experiment_grid(sub, ds, store, emb)
    for r in sub_rows:
        assert r == by_cell[(r.combo_name, r.classifier)]
    # and the rendered report is byte-stable
    assert render_report(sub_rows, "csv") == render_report(
        run_experiment_grid(sub, ds, store, emb), "csv"
    )

    elapsed = time.monotonic() - t0
    assert elapsed < 300.0, f"end-to-end run took {elapsed:.1f}s"
    _report(
        f"end-to-end synthetic grid (42 rows, DEEP+GABOR SVM "
        f"{by_cell[('DEEP+GABOR', 'SVM')].accuracy:.2f}%, {elapsed:.1f}s)"
    )


def test_c6_augmentation_scale_and_leakage():
    counts = {
        ClassLabel.CLEAN: 289,
        ClassLabel.SNOW_COVERED: 262,
        ClassLabel.DUSTY: 275,
        ClassLabel.ELECTRICAL_FAULT: 225,
        ClassLabel.PHYSICAL_DAMAGE: 225,
        ClassLabel.BIRD_DROPPINGS: 298,
    }
    samples = [
        Sample(id=f"{label.canonical_name}/{i:04d}", path="x", label=label)
        for label, n in counts.items()
        for i in range(n)
    ]
    ds = LabeledDataset(samples)
    assert len(ds) == 1574
    expanded, _ = augment_dataset(ds, AugmentConfig(seed=0))
    assert len(expanded) == 6296
    base = ds.class_counts()
    for label, n in expanded.class_counts().items():
        assert n == 4 * base[label]

    split = stratified_split(expanded, test_frac=0.2, seed=1)
    by_id = split.by_id()
    leaks = sum(
        1 for s in split if s.parent is not None and s.split != by_id[s.parent].split
    )
    assert leaks == 0
    _report("augmentation: 1574 -> 6296, proportions preserved, zero split leakage")


@pytest.mark.skipif(
    not (os.environ.get("PVDEFECT_DATA_DIR") and os.environ.get("PVDEFECT_PVEM")),
    reason="optional integration data not present (set PVDEFECT_DATA_DIR and PVDEFECT_PVEM)",
)
def test_c7_integration_real_dataset():
    from pvdefect.dataset import ingest_directory
    from pvdefect.deepfeat import load_embeddings

    data_dir = os.environ["PVDEFECT_DATA_DIR"]
    pvem = os.environ["PVDEFECT_PVEM"]
    ds = ingest_directory(data_dir)
    emb = load_embeddings(pvem)
    assert emb.dim == 1664

    cfg = HandcraftedConfig()
    entries = {}
    signature = None
    from pvdefect.image import load_image

    for s in ds:
        blocks = extract_handcrafted(load_image(s.path), {"GABOR"}, cfg)
        signature = tuple((b.name, b.dim) for b in blocks)
        entries[s.id] = np.concatenate([b.values for b in blocks]).astype(np.float32)
    store = FeatureStore(signature=signature, entries=entries)

    grid = GridConfig(combos=(("GABOR",), ("DEEP", "GABOR")), classifiers=("SVM",), seed=0)
    rows = run_experiment_grid(grid, ds, store, emb)
    by_combo = {r.combo_name: r for r in rows}
    hybrid = by_combo["DEEP+GABOR"].accuracy
    alone = by_combo["GABOR"].accuracy
    assert hybrid >= 90.0
    assert hybrid - alone >= 5.0
    _report(f"integration: DEEP+GABOR {hybrid:.2f}% vs GABOR {alone:.2f}%")
