"""Report evaluation: BLEU-n, ROUGE-L, CheXpert-label micro-F1, RadGraph entity/relation F1.

All text metrics work on lowercased whitespace tokens (see :func:`tokenize`).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from .annotations import AnnotatedReport

BLEU_EPSILON = 1e-9
COMPLETE = "complete"

CHEXPERT_CATEGORIES = (
    "No Finding",
    "Enlarged Cardiomediastinum",
    "Cardiomegaly",
    "Lung Opacity",
    "Lung Lesion",
    "Edema",
    "Consolidation",
    "Pneumonia",
    "Atelectasis",
    "Pneumothorax",
    "Pleural Effusion",
    "Pleural Other",
    "Fracture",
    "Support Devices",
)
CX5_CATEGORIES = ("Atelectasis", "Cardiomegaly", "Consolidation", "Edema", "Pleural Effusion")
CX5_MASK = tuple(int(c in CX5_CATEGORIES) for c in CHEXPERT_CATEGORIES)


class MetricDomainError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    return text.lower().split()


def truncate_reference(tokens, m_gt=COMPLETE) -> list[str]:
    """Keep the first ``m_gt`` tokens; ``"complete"`` (or ``None``) keeps everything."""
    if m_gt is None or m_gt == COMPLETE:
        return list(tokens)
    if int(m_gt) < 1:
        raise MetricDomainError("m_gt must be >= 1 or 'complete'")
    return list(tokens)[: int(m_gt)]


@dataclass(frozen=True)
class EvalPair:
    candidate: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]
    m_gt: int | str = COMPLETE

    def __post_init__(self):
        if not self.references:
            raise MetricDomainError("an evaluation pair needs at least one reference")
        object.__setattr__(self, "candidate", tuple(self.candidate))
        object.__setattr__(self, "references", tuple(tuple(r) for r in self.references))

    @classmethod
    def from_text(cls, candidate: str, *references: str, m_gt=COMPLETE) -> "EvalPair":
        return cls(tokenize(candidate), tuple(tokenize(r) for r in references), m_gt)

    @property
    def truncated_references(self) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(truncate_reference(r, self.m_gt)) for r in self.references)


# BLEU ---------------------------------------------------------------------------

def _ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def clipped_counts(candidate, references, n):
    """``(clipped matches, total candidate n-grams)`` for one order ``n``."""
    cand = _ngrams(candidate, n)
    max_ref = Counter()
    for ref in references:
        for gram, c in _ngrams(ref, n).items():
            max_ref[gram] = max(max_ref[gram], c)
    matched = sum(min(c, max_ref[gram]) for gram, c in cand.items())
    return matched, sum(cand.values())


def closest_ref_length(references, c: int) -> int:
    return min((abs(len(r) - c), len(r)) for r in references)[1]


def _bleu_from_counts(matched, totals, cand_len, ref_len, n):
    if cand_len == 0:
        return 0.0
    log_p = 0.0
    for m, t in zip(matched[:n], totals[:n]):
        p = m / t if (m > 0 and t > 0) else BLEU_EPSILON / max(t, 1)
        log_p += math.log(p) / n
    bp = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / cand_len)
    return min(1.0, bp * math.exp(log_p))


def bleu_n(pair: EvalPair, n: int = 4) -> float:
    """Sentence BLEU with uniform weights over orders 1..n.

    Zero precisions are smoothed to ``1e-9 / count``; brevity penalty uses the
    reference length closest to the candidate length.
    """
    return corpus_bleu([pair], n)


def corpus_bleu(pairs, n: int = 4) -> float:
    """Corpus BLEU: clipped counts and lengths pooled over all pairs before combining."""
    if not 1 <= n <= 4:
        raise MetricDomainError("BLEU order must be in 1..4")
    matched, totals = [0] * n, [0] * n
    cand_len = ref_len = 0
    for pair in pairs:
        refs = pair.truncated_references
        for k in range(1, n + 1):
            m, t = clipped_counts(pair.candidate, refs, k)
            matched[k - 1] += m
            totals[k - 1] += t
        cand_len += len(pair.candidate)
        ref_len += closest_ref_length(refs, len(pair.candidate))
    return _bleu_from_counts(matched, totals, cand_len, ref_len, n)


# ROUGE-L ------------------------------------------------------------------------

def lcs_length(a, b) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def _rouge_l_single(cand, ref) -> float:
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(cand), lcs / len(ref)
    return 2 * p * r / (p + r)


def rouge_l(pair: EvalPair) -> float:
    """LCS F-measure (beta = 1) against the best-matching reference."""
    return max(_rouge_l_single(pair.candidate, ref) for ref in pair.truncated_references)


# label micro-F1 -----------------------------------------------------------------

@dataclass(frozen=True)
class LabelVector:
    labels: tuple[int, ...]

    def __post_init__(self):
        labels = tuple(int(x) for x in self.labels)
        if len(labels) != len(CHEXPERT_CATEGORIES):
            raise MetricDomainError(f"expected {len(CHEXPERT_CATEGORIES)} label flags, got {len(labels)}")
        if any(x not in (0, 1) for x in labels):
            raise MetricDomainError("label flags must be 0 or 1")
        object.__setattr__(self, "labels", labels)


def micro_f1(preds, golds, subset: str = "all14") -> float:
    preds, golds = list(preds), list(golds)
    if len(preds) != len(golds):
        raise MetricDomainError(f"{len(preds)} predictions vs {len(golds)} references")
    if subset == "all14":
        mask = (1,) * len(CHEXPERT_CATEGORIES)
    elif subset == "cx5":
        mask = CX5_MASK
    else:
        raise MetricDomainError(f"unknown label subset {subset!r}")
    tp = fp = fn = 0
    for p, g in zip(preds, golds):
        p = p.labels if isinstance(p, LabelVector) else LabelVector(p).labels
        g = g.labels if isinstance(g, LabelVector) else LabelVector(g).labels
        for keep, a, b in zip(mask, p, g):
            if keep:
                tp += a & b
                fp += a & (1 - b)
                fn += (1 - a) & b
    if tp == fp == fn == 0:
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


# RadGraph F1 --------------------------------------------------------------------

def _set_f1(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return 2 * len(a & b) / (len(a) + len(b))


def graph_sets(report: AnnotatedReport):
    ents = report.entities
    entities = {(e.tokens.lower(), e.label) for e in ents.values()}
    relations = {
        (e.tokens.lower(), rel, ents[target].tokens.lower())
        for e in ents.values()
        for rel, target in e.relations
        if target in ents
    }
    return entities, relations


def radgraph_f1(gen: AnnotatedReport, ref: AnnotatedReport) -> float:
    """Mean of entity F1 and relation F1 over deduplicated annotation sets."""
    ge, gr = graph_sets(gen)
    re_, rr = graph_sets(ref)
    return 0.5 * (_set_f1(ge, re_) + _set_f1(gr, rr))
