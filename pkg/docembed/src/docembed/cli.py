"""CLI: ``docembed extract --corpus F --out F.ctxe [--model NAME]
[--batch-size 32]``. Exit codes: 0 success, 1 usage error, 2 extraction
failure (no partial output is left behind)."""

from __future__ import annotations

import argparse
import sys

from .extract import DEFAULT_MODEL, EmbedJob, ExtractionError, extract_embeddings


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="docembed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="encode a corpus into a CTXE file")
    p.add_argument("--corpus", required=True, help="one document per line")
    p.add_argument("--out", required=True, help="CTXE output path")
    p.add_argument("--model", default=DEFAULT_MODEL)
    p.add_argument("--batch-size", type=int, default=32)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = EmbedJob(
            corpus_path=args.corpus,
            out_path=args.out,
            model_name=args.model,
            batch_size=args.batch_size,
        )
        matrix = extract_embeddings(job)
    except ExtractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {matrix.shape[0]} x {matrix.shape[1]} embeddings to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
