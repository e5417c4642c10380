"""CLI for the embedding exporter."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .export import ExportConfig, WeightDownloadError, export_embeddings


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pv-embed-export",
        description="Frozen DenseNet-169 features for every manifest image -> PVEM v1",
    )
    parser.add_argument("--manifest", required=True, help="JSON-lines dataset manifest")
    parser.add_argument("--out", required=True, help="output .pvem path")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    parser.add_argument(
        "--weights",
        choices=["pretrained", "seeded"],
        default="pretrained",
        help="'seeded' uses a deterministic random initialization (offline)",
    )
    parser.add_argument("--seed", type=int, default=0, help="used with --weights seeded")
    parser.add_argument("-v", "--verbose", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    cfg = ExportConfig(
        manifest=Path(args.manifest),
        output=Path(args.out),
        batch_size=args.batch_size,
        device=args.device,
        weights=args.weights,
        seed=args.seed,
    )
    try:
        export_embeddings(cfg)
    except WeightDownloadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
