"""Run serialize -> vocab -> synthetic embeddings -> index -> retrieve -> eval on a corpus.

    python scripts/run_pipeline.py --annotations tests/data/se_fixture.json --workdir runs/fixture
"""

import argparse
import json
from pathlib import Path

from fse.pipeline import PipelineConfig, run_pipeline


def parse_args():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--annotations", type=Path, required=True)
    p.add_argument("--workdir", type=Path, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--min-freq", type=int, default=1)
    p.add_argument("--mgt", default="complete", help="reference truncation length or 'complete'")
    p.add_argument("--test-every", type=int, default=4)
    return p.parse_args()


def main():
    args = parse_args()
    m_gt = args.mgt if args.mgt == "complete" else int(args.mgt)
    cfg = PipelineConfig(args.annotations, args.workdir, args.seed, args.dim, args.k, args.min_freq, m_gt,
                         args.test_every)
    outputs = run_pipeline(cfg)
    scores = json.loads(outputs["scores.json"].read_text(encoding="utf-8"))
    print(json.dumps(scores, indent=2, sort_keys=True))
    print(f"outputs in {args.workdir}")


if __name__ == "__main__":
    main()
