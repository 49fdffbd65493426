#!/usr/bin/env python3
"""Write a synthetic planted-topic corpus (and optional label file) in the
one-document-per-line format the CLI consumes.

Example:
    python3 scripts/make_synthetic_corpus.py --docs 4000 --vocab 2000 \
        --topics 20 --out /tmp/synthetic.txt --labels /tmp/synthetic.labels
"""

import argparse

from ctmneg.synthetic import make_topic_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=4000)
    parser.add_argument("--vocab", type=int, default=2000)
    parser.add_argument("--topics", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--min-len", type=int, default=40)
    parser.add_argument("--max-len", type=int, default=80)
    parser.add_argument("--out", required=True)
    parser.add_argument("--labels", default=None, help="optional label file path")
    args = parser.parse_args()

    corpus = make_topic_corpus(
        args.docs, args.vocab, args.topics, seed=args.seed,
        doc_len=(args.min_len, args.max_len), labeled=args.labels is not None,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        for doc in corpus.documents:
            fh.write(" ".join(doc) + "\n")
    if args.labels:
        with open(args.labels, "w", encoding="utf-8") as fh:
            fh.write("\n".join(corpus.labels) + "\n")
    print(f"wrote {len(corpus)} documents to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
