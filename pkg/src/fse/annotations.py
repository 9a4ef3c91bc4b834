"""RadGraph-style report annotations: parsing, canonicalization and validation.

Input is the JSON produced by the RadGraph tool::

    {report_id: {"text": str,
                 "entities": {entity_id: {"tokens": str, "label": str,
                                          "start_ix": int, "end_ix": int,
                                          "relations": [[rel, target_id], ...]}}}}

Indices are 0-based inclusive word indices into ``text.split()``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

ENTITY_LABELS = ("OBS-DP", "OBS-DA", "OBS-U", "ANAT-DP")
LABEL_ALIASES = {
    "O-DP": "OBS-DP",
    "O-DA": "OBS-DA",
    "O-U": "OBS-U",
    "A-DP": "ANAT-DP",
}
RELATION_LABELS = ("modify", "located_at", "suggestive_of")
SENTENCE_PUNCT = frozenset({".", "!", "?"})


class AnnotationParseError(ValueError):
    """Raised for input that is not valid JSON or does not match the schema."""

    def __init__(self, message: str, byte_offset: int | None = None):
        self.byte_offset = byte_offset
        if byte_offset is not None:
            message = f"{message} (at byte offset {byte_offset})"
        super().__init__(message)


class AnnotationValidationError(ValueError):
    """Raised when parsed reports violate annotation invariants."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class EntityAnnotation:
    entity_id: str
    tokens: str
    label: str
    start_ix: int
    end_ix: int
    relations: tuple[tuple[str, str], ...] = ()

    @property
    def num_tokens(self) -> int:
        return self.end_ix - self.start_ix + 1


@dataclass(frozen=True)
class AnnotatedReport:
    report_id: str
    text: str
    word_tokens: tuple[str, ...]
    sentence_boundaries: tuple[tuple[int, int], ...]
    entities: dict[str, EntityAnnotation] = field(default_factory=dict)

    def sentence_of(self, token_ix: int) -> int:
        """Index of the sentence containing ``token_ix``."""
        for i, (start, end) in enumerate(self.sentence_boundaries):
            if start <= token_ix < end:
                return i
        raise IndexError(f"token index {token_ix} outside report {self.report_id!r}")


def canonical_label(label: str) -> str:
    label = LABEL_ALIASES.get(label, label)
    if label not in ENTITY_LABELS:
        raise KeyError(label)
    return label


def sentence_boundaries(words) -> tuple[tuple[int, int], ...]:
    """Half-open ``[start, end)`` ranges; a punctuation token closes its own sentence."""
    bounds = []
    start = 0
    for i, w in enumerate(words):
        if w in SENTENCE_PUNCT:
            bounds.append((start, i + 1))
            start = i + 1
    if start < len(words):
        bounds.append((start, len(words)))
    return tuple(bounds)


def make_report(report_id: str, text: str, entities=()) -> AnnotatedReport:
    words = tuple(text.split())
    return AnnotatedReport(
        report_id=report_id,
        text=text,
        word_tokens=words,
        sentence_boundaries=sentence_boundaries(words),
        entities={e.entity_id: e for e in entities},
    )


def validate(report: AnnotatedReport) -> list[str]:
    """Return every invariant violation found in ``report`` (empty when valid)."""
    out = []
    rid = report.report_id
    n = len(report.word_tokens)

    pos = 0
    for start, end in report.sentence_boundaries:
        if start != pos or end <= start:
            out.append(f"report {rid!r}: sentence boundaries do not partition the tokens at {start}")
            break
        pos = end
    else:
        if pos != n:
            out.append(f"report {rid!r}: sentence boundaries cover {pos} of {n} tokens")

    for eid, ent in report.entities.items():
        where = f"report {rid!r} entity {eid!r}"
        if ent.entity_id != eid:
            out.append(f"{where}: keyed under a different id {ent.entity_id!r}")
        if ent.label not in ENTITY_LABELS:
            out.append(f"{where}: unknown label {ent.label!r}")
        if ent.start_ix > ent.end_ix:
            out.append(f"{where}: start_ix {ent.start_ix} > end_ix {ent.end_ix}")
        elif len(ent.tokens.split()) != ent.num_tokens:
            out.append(
                f"{where}: {len(ent.tokens.split())} tokens in {ent.tokens!r} "
                f"but span [{ent.start_ix}, {ent.end_ix}] has {ent.num_tokens}"
            )
        if ent.start_ix < 0 or ent.end_ix >= n:
            out.append(f"{where}: span [{ent.start_ix}, {ent.end_ix}] outside [0, {n})")
        for rel, target in ent.relations:
            if rel not in RELATION_LABELS:
                out.append(f"{where}: unknown relation label {rel!r}")
            if target not in report.entities:
                out.append(f"{where}: relation {rel!r} targets missing entity {target!r}")
    return out


def _require(cond, message):
    if not cond:
        raise AnnotationParseError(message)


def _parse_entity(rid: str, eid: str, obj) -> EntityAnnotation:
    where = f"report {rid!r} entity {eid!r}"
    _require(isinstance(obj, dict), f"{where}: expected an object")
    for key in ("tokens", "label", "start_ix", "end_ix"):
        _require(key in obj, f"{where}: missing field {key!r}")
    _require(isinstance(obj["tokens"], str), f"{where}: tokens must be a string")
    for key in ("start_ix", "end_ix"):
        v = obj[key]
        _require(isinstance(v, int) and not isinstance(v, bool), f"{where}: {key} must be an integer")
    try:
        label = canonical_label(obj["label"])
    except (KeyError, TypeError):
        raise AnnotationValidationError([f"{where}: unknown label {obj['label']!r}"]) from None
    relations = []
    for rel in obj.get("relations", []):
        _require(
            isinstance(rel, list) and len(rel) == 2 and all(isinstance(r, str) for r in rel),
            f"{where}: relations must be [label, target_id] pairs",
        )
        relations.append((rel[0], rel[1]))
    return EntityAnnotation(
        entity_id=eid,
        tokens=obj["tokens"],
        label=label,
        start_ix=obj["start_ix"],
        end_ix=obj["end_ix"],
        relations=tuple(relations),
    )


def _parse_report(rid: str, obj) -> AnnotatedReport:
    _require(isinstance(obj, dict), f"report {rid!r}: expected an object")
    _require(isinstance(obj.get("text"), str), f"report {rid!r}: missing string field 'text'")
    ents = obj.get("entities", {})
    _require(isinstance(ents, dict), f"report {rid!r}: entities must be an object")
    return make_report(rid, obj["text"], [_parse_entity(rid, eid, e) for eid, e in ents.items()])


def parse_report(rid: str, obj) -> AnnotatedReport:
    """Parse and validate one ``{"text", "entities"}`` object."""
    report = _parse_report(rid, obj)
    violations = validate(report)
    if violations:
        raise AnnotationValidationError(violations)
    return report


def parse_annotations(raw: str | bytes) -> list[AnnotatedReport]:
    """Parse annotation JSON into canonical, validated reports (in file order)."""
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as err:
            raise AnnotationParseError(f"invalid UTF-8: {err.reason}", err.start) from None
    else:
        text = raw
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        offset = len(text[: err.pos].encode("utf-8"))
        raise AnnotationParseError(f"malformed JSON: {err.msg}", offset) from None
    _require(isinstance(data, dict), "top level must be an object keyed by report id")

    reports = []
    violations = []
    for rid, obj in data.items():
        report = _parse_report(rid, obj)
        violations.extend(validate(report))
        reports.append(report)
    if violations:
        raise AnnotationValidationError(violations)
    return reports


def load_annotations(path) -> list[AnnotatedReport]:
    with open(path, "rb") as fh:
        return parse_annotations(fh.read())


def to_json_obj(reports) -> dict:
    """Inverse of :func:`parse_annotations` (labels are written in canonical form)."""
    return {
        r.report_id: {
            "text": r.text,
            "entities": {
                eid: {
                    "tokens": e.tokens,
                    "label": e.label,
                    "start_ix": e.start_ix,
                    "end_ix": e.end_ix,
                    "relations": [list(rel) for rel in e.relations],
                }
                for eid, e in r.entities.items()
            },
        }
        for r in reports
    }


def dumps(reports) -> str:
    return json.dumps(to_json_obj(reports), ensure_ascii=False, indent=1)
