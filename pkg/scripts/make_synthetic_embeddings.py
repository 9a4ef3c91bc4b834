"""Write seeded stand-in embeddings for serialized reports, ready for ``fse index``.

    fse serialize --input ann.json --output facts.jsonl
    fse vocab --input facts.jsonl --output vocab.json --min-freq 1
    python scripts/make_synthetic_embeddings.py --facts facts.jsonl --vocab vocab.json --output emb.jsonl
"""

import argparse
import json

from fse.serializer import read_jsonl
from fse.synthetic import synthetic_records
from fse.textproc import Vocab


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--facts", required=True, help="serialize output (JSON lines)")
    p.add_argument("--vocab", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--splits", help="optional JSON object mapping report_id to train/val/test")
    args = p.parse_args()

    facts = read_jsonl(args.facts)
    splits = None
    if args.splits:
        with open(args.splits, encoding="utf-8") as fh:
            splits = json.load(fh)
    records = synthetic_records([(f["report_id"], f["factual_serialization"]) for f in facts],
                                Vocab.load(args.vocab), args.dim, args.seed, splits)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps({"record_id": r.record_id, "split": r.split_tag, "vector": r.vector.tolist()}) + "\n")
    print(f"wrote {len(records)} embeddings of dim {args.dim} to {args.output}")


if __name__ == "__main__":
    main()
