"""Structural-entities serialization of annotated reports.

Pipeline: drop noisy entities, keep one entity per overlap group, group the
survivors by sentence in report order, prefix "no"/"maybe" indicators and join
the groups with ``[SEP]``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources

from .annotations import SENTENCE_PUNCT, AnnotatedReport, EntityAnnotation

SEP = "[SEP]"
STOPWORDS_ENV = "FSE_STOPWORDS"
DEFAULT_STOPWORDS = "stopwords_en_v1.txt"


def read_stopwords(path=None) -> frozenset[str]:
    """Load a stopword file (``#`` comments allowed).

    Resolution order: ``path``, then ``$FSE_STOPWORDS``, then the bundled list.
    """
    path = path or os.environ.get(STOPWORDS_ENV)
    if path:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = resources.files("fse.data").joinpath(DEFAULT_STOPWORDS).read_text(encoding="utf-8")
    words = (line.strip().lower() for line in text.splitlines())
    return frozenset(w for w in words if w and not w.startswith("#"))


@dataclass(frozen=True)
class SerializerConfig:
    stopword_list: frozenset[str] = field(default_factory=read_stopwords)
    sentence_punct: frozenset[str] = SENTENCE_PUNCT
    negative_labels: frozenset[str] = frozenset({"OBS-DA"})
    uncertain_labels: frozenset[str] = frozenset({"OBS-U"})

    def __post_init__(self):
        if self.negative_labels & self.uncertain_labels:
            raise ValueError("negative_labels and uncertain_labels must be disjoint")


@dataclass(frozen=True)
class FactualSubsequence:
    sentence_index: int
    indicator: str | None
    entity_texts: tuple[str, ...]

    @property
    def rendered(self) -> str:
        words = ((self.indicator,) if self.indicator else ()) + self.entity_texts
        return " ".join(words)


@dataclass(frozen=True)
class FactualSerialization:
    report_id: str
    subsequences: tuple[FactualSubsequence, ...]

    @property
    def num_subsequences(self) -> int:
        return len(self.subsequences)

    @property
    def rendered(self) -> str:
        return f" {SEP} ".join(s.rendered for s in self.subsequences)

    def to_record(self) -> dict:
        return {
            "report_id": self.report_id,
            "factual_serialization": self.rendered,
            "num_subsequences": self.num_subsequences,
        }


def _sentence_index(report: AnnotatedReport, punct) -> list[int]:
    """Sentence id of every word, splitting after tokens in ``punct``."""
    ids, cur = [], 0
    for w in report.word_tokens:
        ids.append(cur)
        if w in punct:
            cur += 1
    return ids


def filter_noise(report: AnnotatedReport, config: SerializerConfig) -> list[EntityAnnotation]:
    sent = _sentence_index(report, config.sentence_punct)
    kept = []
    for ent in report.entities.values():
        if sent[ent.start_ix] != sent[ent.end_ix]:
            continue
        if ent.num_tokens == 1 and ent.tokens.strip().lower() in config.stopword_list:
            continue
        kept.append(ent)
    return kept


def _preference(ent: EntityAnnotation):
    # most tokens, then most characters, then earliest start, then smallest id
    return (-ent.num_tokens, -len(ent.tokens), ent.start_ix, ent.entity_id)


def resolve_overlaps(entities) -> list[EntityAnnotation]:
    """Keep the preferred entity from each group of transitively overlapping spans."""
    ordered = sorted(entities, key=lambda e: (e.start_ix, e.end_ix, e.entity_id))
    kept = []
    group: list[EntityAnnotation] = []
    reach = -1
    for ent in ordered:
        if group and ent.start_ix > reach:
            kept.append(min(group, key=_preference))
            group = []
        if not group:
            reach = ent.end_ix
        group.append(ent)
        reach = max(reach, ent.end_ix)
    if group:
        kept.append(min(group, key=_preference))
    return kept


def group_into_subsequences(entities, report: AnnotatedReport, config: SerializerConfig | None = None):
    """Group entities by the sentence holding their first token.

    Returns ``[(sentence_index, [entities...]), ...]`` in sentence order; sentences
    without entities are skipped.
    """
    punct = config.sentence_punct if config else SENTENCE_PUNCT
    sent = _sentence_index(report, punct)
    groups: dict[int, list[EntityAnnotation]] = {}
    for ent in sorted(entities, key=lambda e: (e.start_ix, e.end_ix, e.entity_id)):
        groups.setdefault(sent[ent.start_ix], []).append(ent)
    return sorted(groups.items())


def apply_factuality_indicators(group, config: SerializerConfig, sentence_index: int = 0) -> FactualSubsequence:
    if not group:
        raise ValueError("cannot build a factual subsequence from an empty group")
    labels = {e.label for e in group}
    if labels & config.negative_labels:
        indicator = "no"
    elif labels & config.uncertain_labels:
        indicator = "maybe"
    else:
        indicator = None
    ordered = sorted(group, key=lambda e: e.start_ix)
    return FactualSubsequence(sentence_index, indicator, tuple(e.tokens for e in ordered))


def serialize(report: AnnotatedReport, config: SerializerConfig | None = None) -> FactualSerialization:
    config = config or SerializerConfig()
    entities = resolve_overlaps(filter_noise(report, config))
    subsequences = tuple(
        apply_factuality_indicators(group, config, sentence_index=ix)
        for ix, group in group_into_subsequences(entities, report, config)
    )
    return FactualSerialization(report.report_id, subsequences)


def serialize_corpus(reports, config: SerializerConfig | None = None) -> list[FactualSerialization]:
    config = config or SerializerConfig()
    return [serialize(r, config) for r in reports]


def dumps_jsonl(serializations) -> str:
    return "".join(json.dumps(s.to_record(), ensure_ascii=False) + "\n" for s in serializations)


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
