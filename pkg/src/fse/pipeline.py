"""End-to-end run on an annotation corpus: a nearest-neighbour report baseline.

serialize -> vocab -> synthetic embeddings -> index -> retrieve -> eval.
Each report's candidate is the report of its top retrieved training case; the
reference is the report itself. Every stage goes through the CLI so the run
exercises the same code paths a user would.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path

from . import annotations, cli, metrics, textproc
from .synthetic import synthetic_records

OUTPUT_FILES = ("facts.jsonl", "vocab.json", "embeddings.jsonl", "index.fse", "retrieved.jsonl",
                "candidates.jsonl", "references.jsonl", "scores.json")
PIPELINE_METRICS = "bleu1,bleu2,bleu3,bleu4,rougeL,radgraphF1"


@dataclass(frozen=True)
class PipelineConfig:
    annotations: Path
    workdir: Path
    seed: int = cli.DEFAULT_SEED
    dim: int = 64
    k: int = 3
    min_freq: int = 1
    m_gt: int | str = metrics.COMPLETE
    test_every: int = 4  # every n-th report (1-based) is held out of the index's train split


def assign_splits(report_ids, test_every: int) -> dict[str, str]:
    return {rid: "test" if (i + 1) % test_every == 0 else "train" for i, rid in enumerate(report_ids)}


def _cli(argv) -> str:
    buf = io.StringIO()
    cfg = cli.config_from_args(cli.build_parser().parse_args(argv))
    if cli.run(cfg, stdout=buf) != 0:
        raise RuntimeError(f"stage {argv[0]} failed: {buf.getvalue()}")
    return buf.getvalue()


def _write_jsonl(path: Path, rows):
    path.write_text("".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows),
                    encoding="utf-8")


def run_pipeline(cfg: PipelineConfig) -> dict[str, Path]:
    """Run every stage into ``cfg.workdir``; returns the output paths by file name."""
    wd = Path(cfg.workdir)
    wd.mkdir(parents=True, exist_ok=True)
    out = {name: wd / name for name in OUTPUT_FILES}

    _cli(["serialize", "--input", str(cfg.annotations), "--output", str(out["facts.jsonl"])])
    _cli(["vocab", "--input", str(out["facts.jsonl"]), "--output", str(out["vocab.json"]),
          "--min-freq", str(cfg.min_freq)])

    facts = [json.loads(line) for line in out["facts.jsonl"].read_text(encoding="utf-8").splitlines()]
    vocab = textproc.Vocab.load(out["vocab.json"])
    ids = [f["report_id"] for f in facts]
    splits = assign_splits(ids, cfg.test_every)
    records = synthetic_records([(f["report_id"], f["factual_serialization"]) for f in facts],
                                vocab, cfg.dim, cfg.seed, splits)
    _write_jsonl(out["embeddings.jsonl"], [
        {"record_id": r.record_id, "split": r.split_tag, "vector": r.vector.tolist()} for r in records
    ])

    _cli(["index", "--input", str(out["embeddings.jsonl"]), "--output", str(out["index.fse"])])
    _cli(["retrieve", "--index", str(out["index.fse"]), "--probe", str(out["embeddings.jsonl"]),
          "--k", str(cfg.k), "--exclude-self", "--output", str(out["retrieved.jsonl"])])

    reports = {r.report_id: r for r in annotations.load_annotations(cfg.annotations)}
    graphs = annotations.to_json_obj(reports.values())
    retrieved = [json.loads(line) for line in out["retrieved.jsonl"].read_text(encoding="utf-8").splitlines()]
    candidates, references = [], []
    for row in retrieved:
        rid = row["record_id"]
        top = row["results"][0]["record_id"]
        candidates.append({"report_id": rid, "text": graphs[top]["text"], "entities": graphs[top]["entities"]})
        references.append({"report_id": rid, "text": graphs[rid]["text"], "entities": graphs[rid]["entities"]})
    _write_jsonl(out["candidates.jsonl"], candidates)
    _write_jsonl(out["references.jsonl"], references)

    _cli(["eval", "--candidates", str(out["candidates.jsonl"]), "--references", str(out["references.jsonl"]),
          "--metrics", PIPELINE_METRICS, "--mgt", str(cfg.m_gt), "--output", str(out["scores.json"])])
    return out
