"""Command line for batch operation of the pipeline.

Subcommands: ingest, augment, preprocess, extract, synth-embed, fuse, train,
predict, evaluate, grid, report. Exit codes: 0 success, 1 usage error,
2 runtime error. All randomness flows from --seed (or the config file).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import augment as aug
from .classifiers import TrainParams, gbdt_train, load_model, save_model, svm_train
from .classifiers.gbdt import GbdtModel, gbdt_predict
from .classifiers.svm import SvmModel, svm_predict
from .dataset import ClassLabel, LabeledDataset, ingest_directory, read_manifest, write_manifest
from .deepfeat import load_embeddings, synthetic_embeddings, write_embeddings
from .errors import PvdefectError
from .evaluate import (
    CLASSIFIER_NAMES,
    GridConfig,
    MetricsRow,
    assemble_matrix,
    compute_metrics,
    confusion_matrix,
    render_report,
    rows_from_json,
    run_experiment_grid,
    stratified_split,
)
from .fusion import FeatureStore, fit_standardizer, load_feature_store, write_feature_store
from .handcrafted import (
    DEEP_NAME,
    GABOR_NAME,
    HOG_NAME,
    LBP_NAME,
    HandcraftedConfig,
    extract_handcrafted,
)
from .image import load_image, save_image
from .preprocess import PreprocessConfig, preprocess_pipeline

log = logging.getLogger("pvdefect")


def _filter_fields(cls, d: dict) -> dict:
    names = {f.name for f in dataclasses.fields(cls)}
    return {k: v for k, v in d.items() if k in names}


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _parallel_map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_ingest(args) -> int:
    ds = ingest_directory(args.input)
    write_manifest(ds, args.out)
    log.info("ingested %d samples into %s", len(ds), args.out)
    return 0


def _cmd_augment(args) -> int:
    cfg_file = _load_config(args.config)
    cfg = aug.AugmentConfig(
        **_filter_fields(
            aug.AugmentConfig,
            {**cfg_file, "seed": args.seed, "max_translate_frac": args.max_translate_frac},
        )
    )
    ds = read_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    expanded, plans = aug.augment_dataset(
        ds, cfg, path_for=lambda vid: str(out_dir / (vid.replace("/", "_") + ".png"))
    )
    by_id = ds.by_id()

    def materialize(sample):
        if sample.parent is None:
            return
        img = load_image(by_id[sample.parent].path)
        save_image(aug.apply_variant(img, plans[sample.id], cfg.translate_fill), sample.path)

    _parallel_map(materialize, expanded.samples, args.jobs)
    write_manifest(expanded, args.out)
    log.info("augmented %d -> %d samples", len(ds), len(expanded))
    return 0


def _cmd_preprocess(args) -> int:
    cfg_file = _load_config(args.config)
    overrides = dict(cfg_file)
    if args.size:
        w, h = (int(v) for v in args.size.lower().split("x"))
        overrides["target_size"] = (w, h)
    if args.no_clahe:
        overrides["enable_clahe"] = False
    if args.no_gamma:
        overrides["enable_gamma"] = False
    cfg = PreprocessConfig.from_dict(_filter_fields(PreprocessConfig, overrides))
    ds = read_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def process(sample):
        img = load_image(sample.path)
        out_path = out_dir / (sample.id.replace("/", "_") + ".png")
        save_image(preprocess_pipeline(img, cfg), out_path)
        return dataclasses.replace(sample, path=str(out_path))

    processed = _parallel_map(process, ds.samples, args.jobs)
    write_manifest(LabeledDataset(processed), args.out)
    log.info("preprocessed %d samples", len(ds))
    return 0


def _parse_which(raw: str) -> set[str]:
    names = {w.strip().upper() for w in raw.split(",") if w.strip()}
    allowed = {LBP_NAME, HOG_NAME, GABOR_NAME}
    if not names or names - allowed:
        raise PvdefectError(f"--which takes a subset of {sorted(allowed)}")
    return names


def _cmd_extract(args) -> int:
    cfg = HandcraftedConfig.from_dict(
        _filter_fields(HandcraftedConfig, _load_config(args.config))
    )
    which = _parse_which(args.which)
    ds = read_manifest(args.manifest)

    def extract(sample):
        blocks = extract_handcrafted(load_image(sample.path), which, cfg)
        return sample.id, blocks

    results = _parallel_map(extract, ds.samples, args.jobs)
    signature = tuple((b.name, b.dim) for b in results[0][1])
    entries = {
        sid: np.concatenate([b.values for b in blocks]).astype(np.float32)
        for sid, blocks in results
    }
    write_feature_store(FeatureStore(signature=signature, entries=entries), args.out)
    log.info("extracted %s for %d samples", "+".join(n for n, _ in signature), len(entries))
    return 0


def _cmd_synth_embed(args) -> int:
    ds = read_manifest(args.manifest)
    labels = {s.id: s.label for s in ds}
    emb = synthetic_embeddings(labels, dim=args.dim, seed=args.seed, separation=args.separation)
    write_embeddings(emb, args.out)
    log.info("wrote %d synthetic embeddings (dim %d)", len(emb), emb.dim)
    return 0


def _combo_from_arg(raw: str) -> tuple[str, ...]:
    names = [w.strip().upper() for w in raw.split(",") if w.strip()]
    order = (DEEP_NAME, LBP_NAME, HOG_NAME, GABOR_NAME)
    unknown = set(names) - set(order)
    if unknown or not names:
        raise PvdefectError(f"--combo takes a subset of {list(order)}")
    return tuple(sorted(set(names), key=order.index))


def _load_sources(args):
    features = load_feature_store(args.features) if args.features else None
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    return features, embeddings


def _cmd_fuse(args) -> int:
    combo = _combo_from_arg(args.combo)
    features, embeddings = _load_sources(args)
    id_sets = []
    if DEEP_NAME in combo:
        if embeddings is None:
            raise PvdefectError("combo includes DEEP: pass --embeddings")
        id_sets.append(set(embeddings.entries))
    if any(name != DEEP_NAME for name in combo):
        if features is None:
            raise PvdefectError("combo includes handcrafted blocks: pass --features")
        id_sets.append(set(features.entries))
    ids = sorted(set.intersection(*id_sets))
    if not ids:
        raise PvdefectError("no sample ids common to all feature sources")
    matrix, signature = assemble_matrix(ids, combo, features, embeddings)
    entries = {sid: matrix[i].astype(np.float32) for i, sid in enumerate(ids)}
    write_feature_store(FeatureStore(signature=signature, entries=entries), args.out)
    log.info("fused %s for %d samples", "+".join(combo), len(ids))
    return 0


def _split_dataset(ds: LabeledDataset, args) -> LabeledDataset:
    if any(s.split == "unassigned" for s in ds):
        ds = stratified_split(ds, args.test_frac, args.seed)
    return ds


def _cmd_train(args) -> int:
    combo = _combo_from_arg(args.combo)
    params = TrainParams.from_dict(
        _filter_fields(TrainParams, _load_config(args.config))
    )
    ds = _split_dataset(read_manifest(args.manifest), args)
    features, embeddings = _load_sources(args)
    train = ds.subset("train")
    ids = [s.id for s in train]
    y = np.array([int(s.label) for s in train], dtype=np.int64)
    X, signature = assemble_matrix(ids, combo, features, embeddings)
    std = None if args.no_standardize else fit_standardizer(X, signature)
    Xin = std.transform(X) if std else X
    if args.classifier == "SVM":
        model = svm_train(Xin, y, params, signature=signature, standardizer=std)
    else:
        growth = "levelwise" if args.classifier.endswith("levelwise") else "leafwise"
        model = gbdt_train(Xin, y, params, growth=growth, signature=signature, standardizer=std)
    save_model(model, args.out)
    log.info("trained %s on %s (%d samples) -> %s", args.classifier, "+".join(combo), len(ids), args.out)
    return 0


def _predict_one(model, values) -> tuple[int, float]:
    if isinstance(model, SvmModel):
        label, votes = svm_predict(model, values)
        return label, float(votes.max() / votes.sum())
    label, probs = gbdt_predict(model, values)
    return label, float(probs.max())


def _handcrafted_values_for_model(model, image_path, cfg: HandcraftedConfig) -> np.ndarray:
    names = [n for n, _ in model.signature]
    if DEEP_NAME in names:
        raise PvdefectError(
            "model uses DEEP features; predict needs --manifest together with --embeddings"
        )
    blocks = extract_handcrafted(load_image(image_path), set(names), cfg)
    values = np.concatenate([b.values for b in blocks])
    got = tuple((b.name, b.dim) for b in blocks)
    if got != model.signature:
        raise PvdefectError(f"extracted signature {got} != model signature {model.signature}")
    return values


def _cmd_predict(args) -> int:
    model = load_model(args.model)
    if model.signature is None:
        raise PvdefectError("model carries no feature signature; cannot assemble inputs")
    cfg = HandcraftedConfig.from_dict(_filter_fields(HandcraftedConfig, _load_config(args.config)))
    outputs = []
    if args.image:
        values = _handcrafted_values_for_model(model, args.image, cfg)
        label, score = _predict_one(model, values)
        outputs.append(f"{args.image},{ClassLabel(label).canonical_name},{score:.4f}")
    elif args.manifest:
        ds = read_manifest(args.manifest)
        features, embeddings = _load_sources(args)
        combo = tuple(n for n, _ in model.signature)
        ids = [s.id for s in ds]
        X, signature = assemble_matrix(ids, combo, features, embeddings)
        if signature != model.signature:
            raise PvdefectError(f"store signature {signature} != model signature {model.signature}")
        for sample, row in zip(ds, X):
            label, score = _predict_one(model, row)
            outputs.append(f"{sample.path},{ClassLabel(label).canonical_name},{score:.4f}")
    else:
        raise PvdefectError("predict needs --image or --manifest")
    text = "\n".join(outputs) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    ds = _split_dataset(read_manifest(args.manifest), args)
    features, embeddings = _load_sources(args)
    subset = ds.subset(args.split)
    if len(subset) == 0:
        raise PvdefectError(f"no samples in split {args.split!r}")
    combo = tuple(n for n, _ in model.signature)
    ids = [s.id for s in subset]
    y_true = np.array([int(s.label) for s in subset], dtype=np.int64)
    X, _sig = assemble_matrix(ids, combo, features, embeddings)
    if isinstance(model, GbdtModel):
        from .classifiers.gbdt import gbdt_predict_many

        y_pred = gbdt_predict_many(model, X)
        clf_name = f"GBDT-{model.growth}"
    else:
        from .classifiers.svm import svm_predict_many

        y_pred = svm_predict_many(model, X)
        clf_name = "SVM"
    cm = confusion_matrix(y_true, y_pred, k=6)
    m = compute_metrics(cm)
    row = MetricsRow(
        feature_combo=combo,
        classifier=clf_name,
        accuracy=100 * m.accuracy,
        precision=100 * m.precision,
        recall=100 * m.recall,
        f1=100 * m.f1,
    )
    payload = render_report([row], args.format)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode())
    return 0


def _cmd_grid(args) -> int:
    doc = _load_config(args.config)
    manifest = args.manifest or doc.pop("manifest", None)
    features_path = args.features or doc.pop("features", None)
    embeddings_path = args.embeddings or doc.pop("embeddings", None)
    if manifest is None:
        raise PvdefectError("grid needs a manifest (flag or config key)")
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = GridConfig.from_dict(doc)
    ds = read_manifest(manifest)
    features = load_feature_store(features_path) if features_path else None
    embeddings = load_embeddings(embeddings_path) if embeddings_path else None
    rows = run_experiment_grid(cfg, ds, features, embeddings)
    Path(args.out).write_bytes(render_report(rows, args.format))
    failed = sum(1 for r in rows if r.error)
    log.info("grid: %d rows (%d failed) -> %s", len(rows), failed, args.out)
    return 0


def _cmd_report(args) -> int:
    rows = rows_from_json(Path(args.input).read_bytes())
    payload = render_report(rows, args.format)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvdefect",
        description="Panel-surface defect classification pipeline",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common_seed(p):
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("ingest", help="build a manifest from class-named directories")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("augment", help="fourfold seeded expansion of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--max-translate-frac", type=float, default=0.10)
    p.add_argument("--jobs", type=int, default=1)
    common_seed(p)
    p.set_defaults(fn=_cmd_augment)

    p = sub.add_parser("preprocess", help="denoise and enhance every image")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--size", help="target WxH, default 640x640")
    p.add_argument("--no-clahe", action="store_true")
    p.add_argument("--no-gamma", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_preprocess)

    p = sub.add_parser("extract", help="handcrafted blocks -> feature store")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--which", default="LBP,HOG,GABOR")
    p.add_argument("--config")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("synth-embed", help="synthetic class-blob embeddings")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--separation", type=float, default=6.0)
    common_seed(p)
    p.set_defaults(fn=_cmd_synth_embed)

    p = sub.add_parser("fuse", help="concatenate blocks into a fused store")
    p.add_argument("--features")
    p.add_argument("--embeddings")
    p.add_argument("--combo", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_fuse)

    p = sub.add_parser("train", help="train one classifier on one combo")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features")
    p.add_argument("--embeddings")
    p.add_argument("--combo", required=True)
    p.add_argument("--classifier", choices=list(CLASSIFIER_NAMES), default="SVM")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--no-standardize", action="store_true")
    common_seed(p)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("predict", help="classify one image or a manifest")
    p.add_argument("--model", required=True)
    p.add_argument("--image")
    p.add_argument("--manifest")
    p.add_argument("--features")
    p.add_argument("--embeddings")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("evaluate", help="metrics for a trained model on a split")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--features")
    p.add_argument("--embeddings")
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--format", choices=["csv", "json", "markdown"], default="csv")
    p.add_argument("--out")
    p.add_argument("--test-frac", type=float, default=0.2)
    common_seed(p)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("grid", help="full combo x classifier experiment grid")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest")
    p.add_argument("--features")
    p.add_argument("--embeddings")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=["csv", "json", "markdown"], default="csv")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_grid)

    p = sub.add_parser("report", help="re-render a JSON report")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["csv", "json", "markdown"], default="markdown")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except (PvdefectError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
