"""``fse`` command line: serialize, vocab, index, retrieve, eval, check-kernels.

Every command prints one JSON document (or JSON lines) on stdout. Data errors
exit with status 1 and a JSON error object on stderr; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

from . import annotations, metrics, retrieval, serializer, textproc
from .kernels import DEFAULT_TAU, check_kernels

DEFAULT_SEED = 42
METRIC_NAMES = ("bleu1", "bleu2", "bleu3", "bleu4", "rougeL", "microF1", "radgraphF1")
SIMILARITY_DECIMALS = 6


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    paths: dict[str, str] = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    k: int = 5
    m_gt: int | str = metrics.COMPLETE
    min_freq: int = textproc.DEFAULT_MIN_FREQ
    tau1: float = DEFAULT_TAU
    tau2: float = DEFAULT_TAU
    eps: float = 1e-6
    options: dict = field(default_factory=dict)

    def path(self, name: str) -> str:
        value = self.paths.get(name)
        if not value:
            raise UsageError(f"{self.command}: --{name} must be a non-empty path")
        return value


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def _write_text(path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# commands ---------------------------------------------------------------------

def cmd_serialize(cfg: RunConfig):
    reports = annotations.load_annotations(cfg.path("input"))
    config = serializer.SerializerConfig(serializer.read_stopwords(cfg.options.get("stopwords")))
    out = serializer.serialize_corpus(reports, config)
    _write_text(cfg.path("output"), serializer.dumps_jsonl(out))
    return {"command": "serialize", "output": cfg.paths["output"], "records": len(out)}


def cmd_vocab(cfg: RunConfig):
    corpus = [r["factual_serialization"] for r in _jsonl(cfg.path("input"))]
    vocab = textproc.build_vocab(corpus, cfg.min_freq, lowercase=cfg.options.get("lowercase", False))
    vocab.save(cfg.path("output"))
    return {"command": "vocab", "output": cfg.paths["output"], "size": len(vocab), "min_freq": cfg.min_freq}


def cmd_index(cfg: RunConfig):
    index = retrieval.build_index(retrieval.read_embeddings_jsonl(cfg.path("input")))
    retrieval.save_index(index, cfg.path("output"))
    return {"command": "index", "output": cfg.paths["output"], "records": len(index), "dim": index.dim}


def _read_probes(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
        return obj if isinstance(obj, list) else [obj]
    except json.JSONDecodeError:
        return [json.loads(line) for line in text.splitlines() if line.strip()]


def cmd_retrieve(cfg: RunConfig):
    index = retrieval.load_index(cfg.path("index"))
    exclude_self = cfg.options.get("exclude_self", False)
    lines = []
    for probe in _read_probes(cfg.path("probe")):
        rid = probe.get("record_id")
        if exclude_self and rid is None:
            raise ValueError("--exclude-self needs a record_id on every probe")
        results = retrieval.query(index, probe["vector"], cfg.k, rid if exclude_self else None)
        lines.append({
            "record_id": rid,
            "results": [
                {"record_id": r.record_id, "rank": r.rank, "similarity": round(r.similarity, SIMILARITY_DECIMALS)}
                for r in results
            ],
        })
    text = "".join(_dump(line) + "\n" for line in lines)
    if cfg.paths.get("output"):
        _write_text(cfg.paths["output"], text)
        return {"command": "retrieve", "output": cfg.paths["output"], "probes": len(lines)}
    return text


def evaluate(candidates: list[dict], references: list[dict], metric_names, m_gt=metrics.COMPLETE) -> dict:
    """Corpus scores for candidate/reference records matched by ``report_id``."""
    by_id = {c["report_id"]: c for c in candidates}
    missing = [r["report_id"] for r in references if r["report_id"] not in by_id]
    if missing:
        raise ValueError(f"no candidate for report ids {missing}")
    matched = [(by_id[r["report_id"]], r) for r in references]
    pairs = [metrics.EvalPair.from_text(c["text"], r["text"], m_gt=m_gt) for c, r in matched]

    scores = {}
    for name in metric_names:
        if name.startswith("bleu"):
            scores[name] = metrics.corpus_bleu(pairs, int(name[-1]))
        elif name == "rougeL":
            scores[name] = sum(metrics.rouge_l(p) for p in pairs) / len(pairs) if pairs else 0.0
        elif name == "microF1":
            preds = [c["labels"] for c, _ in matched]
            golds = [r["labels"] for _, r in matched]
            scores[name] = {
                "cx14": metrics.micro_f1(preds, golds, "all14"),
                "cx5": metrics.micro_f1(preds, golds, "cx5"),
            }
        elif name == "radgraphF1":
            vals = [
                metrics.radgraph_f1(
                    annotations.parse_report(c["report_id"], {"text": c["text"], "entities": c.get("entities", {})}),
                    annotations.parse_report(r["report_id"], {"text": r["text"], "entities": r.get("entities", {})}),
                )
                for c, r in matched
            ]
            scores[name] = sum(vals) / len(vals) if vals else 0.0
    return {"num_pairs": len(pairs), "m_gt": m_gt, "scores": scores}


def cmd_eval(cfg: RunConfig):
    report = evaluate(_jsonl(cfg.path("candidates")), _jsonl(cfg.path("references")),
                      cfg.options["metrics"], cfg.m_gt)
    report["command"] = "eval"
    if cfg.paths.get("output"):
        _write_text(cfg.paths["output"], _dump(report) + "\n")
    return report


def cmd_check_kernels(cfg: RunConfig):
    threshold = cfg.options.get("threshold", 1e-4)
    results = check_kernels(cfg.seed, cfg.eps, cfg.options.get("points", 20), threshold,
                            tau1=cfg.tau1, tau2=cfg.tau2)
    rows = [
        {"operation": r.operation, "seed": r.seed, "point": r.point_index, "eps": r.eps,
         "max_rel_error": r.max_rel_error, "passed": r.passed}
        for r in results
    ]
    ok = all(r.passed for r in results)
    if cfg.options.get("json"):
        return {"command": "check-kernels", "threshold": threshold, "passed": ok, "checks": rows}, ok
    lines = [f"{'operation':<26}{'seed':>6}{'point':>7}{'eps':>10}{'max rel err':>14}  result"]
    for r in rows:
        lines.append(f"{r['operation']:<26}{r['seed']:>6}{r['point']:>7}{r['eps']:>10.0e}"
                     f"{r['max_rel_error']:>14.3e}  {'pass' if r['passed'] else 'FAIL'}")
    lines.append(f"{sum(r['passed'] for r in rows)}/{len(rows)} checks passed at threshold {threshold:g}")
    return "\n".join(lines) + "\n", ok


COMMANDS = {
    "serialize": cmd_serialize,
    "vocab": cmd_vocab,
    "index": cmd_index,
    "retrieve": cmd_retrieve,
    "eval": cmd_eval,
    "check-kernels": cmd_check_kernels,
}


# argument parsing ---------------------------------------------------------------

def _m_gt(value: str):
    if value == metrics.COMPLETE:
        return value
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("--mgt must be a positive integer or 'complete'")
    return n


def _metric_list(value: str):
    names = [v.strip() for v in value.split(",") if v.strip()]
    bad = [n for n in names if n not in METRIC_NAMES]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown metrics {bad}; choose from {','.join(METRIC_NAMES)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serialize", help="annotation JSON -> factual serialization JSON lines")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--stopwords", help="stopword file (default: $FSE_STOPWORDS or bundled list)")

    p = sub.add_parser("vocab", help="build a word vocabulary from serializations")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--min-freq", type=int, default=textproc.DEFAULT_MIN_FREQ)
    p.add_argument("--lowercase", action="store_true")

    p = sub.add_parser("index", help="embedding JSON lines -> binary index file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("retrieve", help="top-k similar training cases for probe vectors")
    p.add_argument("--index", required=True)
    p.add_argument("--probe", required=True, help="JSON object, JSON list or JSON lines of {record_id, vector}")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--exclude-self", action="store_true")
    p.add_argument("--output")

    p = sub.add_parser("eval", help="corpus metrics for candidate vs reference reports")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--metrics", type=_metric_list, default=list(METRIC_NAMES))
    p.add_argument("--mgt", type=_m_gt, default=metrics.COMPLETE)
    p.add_argument("--output")

    p = sub.add_parser("check-kernels", help="finite-difference gradient checks")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--tau1", type=float, default=DEFAULT_TAU)
    p.add_argument("--tau2", type=float, default=DEFAULT_TAU)
    p.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=ns.command)
    for name in ("input", "output", "index", "probe", "candidates", "references"):
        if hasattr(ns, name) and getattr(ns, name) is not None:
            cfg.paths[name] = getattr(ns, name)
    for name in ("seed", "k", "min_freq", "tau1", "tau2", "eps"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if hasattr(ns, "mgt"):
        cfg.m_gt = ns.mgt
    for name in ("stopwords", "lowercase", "exclude_self", "metrics", "points", "threshold", "json"):
        if hasattr(ns, name):
            cfg.options[name] = getattr(ns, name)
    if cfg.k < 1:
        raise UsageError("--k must be >= 1")
    if not 1e-8 <= cfg.eps <= 1e-3:
        raise UsageError("--eps must lie in [1e-8, 1e-3]")
    if cfg.min_freq < 1:
        raise UsageError("--min-freq must be >= 1")
    if cfg.tau1 <= 0 or cfg.tau2 <= 0:
        raise UsageError("temperatures must be positive")
    return cfg


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    result = COMMANDS[cfg.command](cfg)
    ok = True
    if isinstance(result, tuple):
        result, ok = result
    stdout.write(result if isinstance(result, str) else _dump(result) + "\n")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except UsageError as err:
        parser.error(str(err))
    try:
        return run(cfg)
    except UsageError as err:
        parser.error(str(err))
    except (ValueError, KeyError, OSError, IndexError) as err:
        sys.stderr.write(_dump({"error": type(err).__name__, "command": cfg.command, "message": str(err)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
