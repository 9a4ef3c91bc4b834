import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fse.annotations import (
    AnnotationParseError,
    AnnotationValidationError,
    EntityAnnotation,
    dumps,
    make_report,
    parse_annotations,
    validate,
)


def one_report(label="O-DA", start=3, end=4, tokens="pleural effusion", relations=()):
    return json.dumps({
        "p1": {
            "text": "there is no pleural effusion .",
            "entities": {"1": {"tokens": tokens, "label": label, "start_ix": start, "end_ix": end,
                               "relations": [list(r) for r in relations]}},
        }
    })


def test_alias_is_canonicalized():
    (report,) = parse_annotations(one_report("O-DA"))
    assert report.entities["1"].label == "OBS-DA"


@pytest.mark.parametrize("alias,canonical", [("O-DP", "OBS-DP"), ("O-U", "OBS-U"), ("A-DP", "ANAT-DP"),
                                             ("OBS-DP", "OBS-DP")])
def test_alias_table(alias, canonical):
    (report,) = parse_annotations(one_report(alias))
    assert report.entities["1"].label == canonical


def test_end_before_start_is_rejected():
    with pytest.raises(AnnotationValidationError, match="start_ix 4 > end_ix 3"):
        parse_annotations(one_report(start=4, end=3))


def test_unknown_label_names_report_and_entity():
    with pytest.raises(AnnotationValidationError) as err:
        parse_annotations(one_report("OBS-XX"))
    assert "'p1'" in str(err.value) and "'1'" in str(err.value)


def test_dangling_relation_is_rejected():
    with pytest.raises(AnnotationValidationError, match="missing entity 'nope'"):
        parse_annotations(one_report(relations=[("modify", "nope")]))


def test_malformed_json_reports_byte_offset():
    raw = '{"é": {"text": "a b", "entities": {]}}'.encode("utf-8")
    with pytest.raises(AnnotationParseError) as err:
        parse_annotations(raw)
    # "é" is two bytes, so the byte offset is one past the character offset
    assert err.value.byte_offset == raw.index(b"]")


def test_three_report_fixture_counts(data_dir):
    raw = (data_dir / "three_reports.json").read_bytes()
    # independent walk over the raw JSON
    obj = json.loads(raw)
    n_entities = sum(len(r["entities"]) for r in obj.values())
    n_relations = sum(len(e["relations"]) for r in obj.values() for e in r["entities"].values())
    assert (len(obj), n_entities, n_relations) == (3, 11, 6)

    reports = parse_annotations(raw)
    assert len(reports) == 3
    assert sum(len(r.entities) for r in reports) == n_entities
    assert sum(len(e.relations) for r in reports for e in r.entities.values()) == n_relations


def test_sentence_boundaries_split_after_punctuation():
    r = make_report("x", "a b . c ? d ! e")
    assert r.sentence_boundaries == ((0, 3), (3, 5), (5, 7), (7, 8))
    assert make_report("x", "").sentence_boundaries == ()


def test_valid_fixture_has_no_violations(se_fixture_bytes):
    for report in parse_annotations(se_fixture_bytes):
        assert validate(report) == []


def test_span_beyond_tokens_is_one_violation():
    ent = EntityAnnotation("1", "effusion", "OBS-DP", 9, 9)
    assert len(validate(make_report("x", "no pleural effusion .", [ent]))) == 1


def test_two_injected_violations_are_both_reported():
    bad_span = EntityAnnotation("1", "effusion", "OBS-DP", 9, 9)
    dangling = EntityAnnotation("2", "pleural", "OBS-DP", 1, 1, (("modify", "zz"),))
    violations = validate(make_report("x", "no pleural effusion .", [bad_span, dangling]))
    assert len(violations) == 2
    assert "outside" in violations[0] and "missing entity 'zz'" in violations[1]


def test_round_trip(se_fixture_bytes):
    reports = parse_annotations(se_fixture_bytes)
    assert parse_annotations(dumps(reports)) == reports


def test_parse_is_deterministic(se_fixture_bytes):
    assert parse_annotations(se_fixture_bytes) == parse_annotations(bytes(se_fixture_bytes))


def test_canonicalization_is_idempotent(se_fixture_bytes):
    once = parse_annotations(se_fixture_bytes)
    twice = parse_annotations(dumps(once))
    assert dumps(once) == dumps(twice)


words = st.sampled_from(["opacity", "lung", "left", "effusion", "no", ".", "?", "base"])


@given(st.lists(words, max_size=25))
def test_boundaries_always_partition(tokens):
    r = make_report("h", " ".join(tokens))
    assert validate(r) == []
    covered = [i for start, end in r.sentence_boundaries for i in range(start, end)]
    assert covered == list(range(len(tokens)))
