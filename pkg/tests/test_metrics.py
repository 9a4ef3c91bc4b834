import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fse.annotations import EntityAnnotation, make_report
from fse.metrics import (
    COMPLETE,
    CX5_MASK,
    EvalPair,
    LabelVector,
    MetricDomainError,
    bleu_n,
    clipped_counts,
    corpus_bleu,
    lcs_length,
    micro_f1,
    radgraph_f1,
    rouge_l,
    tokenize,
    truncate_reference,
)


def pair(cand, *refs, m_gt=COMPLETE):
    return EvalPair.from_text(cand, *refs, m_gt=m_gt)


def test_tokenize_lowercases():
    assert tokenize("No  Acute\tProcess") == ["no", "acute", "process"]


def test_unigram_clipping():
    p = pair("the the the the the the the", "the cat is on the mat")
    assert clipped_counts(p.candidate, p.references, 1) == (2, 7)
    # candidate is longer than the reference so there is no brevity penalty
    assert bleu_n(p, 1) == pytest.approx(2 / 7, abs=1e-9)


def test_clipping_uses_max_over_references():
    p = pair("the the the", "the cat", "the the mat")
    assert clipped_counts(p.candidate, p.references, 1) == (2, 3)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_identical_scores_one(n):
    p = pair("small left pleural effusion", "small left pleural effusion")
    assert bleu_n(p, n) == 1.0
    assert rouge_l(p) == 1.0


def test_two_pair_micro_corpus():
    pairs = [pair("the cat sat on the mat", "the cat is on the mat"), pair("a dog", "a dog barked loudly")]
    # unigrams 5/6 + 2/2, bigrams 3/5 + 1/1, c = 8, r = 10
    bp = math.exp(1 - 10 / 8)
    assert corpus_bleu(pairs, 1) == pytest.approx(bp * 7 / 8, abs=1e-12)
    assert corpus_bleu(pairs, 2) == pytest.approx(bp * math.sqrt(7 / 8 * 4 / 6), abs=1e-12)


def test_zero_precision_is_smoothed():
    p = pair("a b", "a c")
    assert bleu_n(p, 2) == pytest.approx(math.sqrt(0.5 * 1e-9), rel=1e-12)


def test_empty_candidate_scores_zero():
    assert bleu_n(pair("", "a b"), 4) == 0.0
    assert rouge_l(pair("", "a b")) == 0.0


def test_bleu_order_range():
    with pytest.raises(MetricDomainError):
        bleu_n(pair("a", "a"), 5)


def test_references_required():
    with pytest.raises(MetricDomainError):
        EvalPair(("a",), ())


def test_rouge_l_example():
    assert lcs_length("a b c d".split(), "a c b d".split()) == 3
    assert rouge_l(pair("a b c d", "a c b d")) == pytest.approx(0.75, abs=1e-9)


def test_rouge_l_disjoint_and_best_reference():
    assert rouge_l(pair("x y", "a b")) == 0.0
    assert rouge_l(pair("a b c d", "z", "a c b d")) == pytest.approx(0.75, abs=1e-9)


def labels(*positive):
    flags = [0] * 14
    for i in positive:
        flags[i] = 1
    return LabelVector(flags)


def test_micro_f1_pooled_example():
    # sample 1: TP 1, FP 1; sample 2: TP 1, FN 1
    preds = [labels(0, 1), labels(2)]
    golds = [labels(0), labels(2, 3)]
    assert micro_f1(preds, golds) == pytest.approx(2 / 3, abs=1e-9)


def test_micro_f1_edge_cases():
    assert micro_f1([labels(1, 2)], [labels(1, 2)]) == 1.0
    assert micro_f1([labels(1)], [labels(2)]) == 0.0
    assert micro_f1([labels()], [labels()]) == 1.0
    with pytest.raises(MetricDomainError):
        micro_f1([labels()], [])
    with pytest.raises(MetricDomainError):
        LabelVector([0] * 13)


def test_cx5_ignores_other_categories():
    outside = CX5_MASK.index(0)
    inside = CX5_MASK.index(1)
    assert sum(CX5_MASK) == 5
    assert micro_f1([labels(outside, inside)], [labels(inside)], subset="cx5") == 1.0
    assert micro_f1([labels(outside, inside)], [labels(inside)], subset="all14") == pytest.approx(2 / 3)


def graph(rid, text, layout):
    words = text.split()
    ents = []
    for eid, (start, end, label, rels) in layout.items():
        ents.append(EntityAnnotation(eid, " ".join(words[start:end + 1]), label, start, end, tuple(rels)))
    return make_report(rid, text, ents)


REF = graph("r", "small left pleural effusion .", {
    "1": (0, 0, "OBS-DP", [("modify", "3")]),
    "2": (1, 1, "ANAT-DP", []),
    "3": (2, 3, "OBS-DP", []),
})


def test_radgraph_example():
    gen = graph("g", "left pleural effusion .", {"1": (0, 0, "ANAT-DP", []), "2": (1, 2, "OBS-DP", [])})
    # entity F1 = 2*2/(2+3), relation F1 = 0
    assert radgraph_f1(gen, REF) == pytest.approx(0.4, abs=1e-9)


def test_radgraph_identity_and_empty():
    assert radgraph_f1(REF, REF) == 1.0
    empty = make_report("e", "no acute process .")
    assert radgraph_f1(empty, empty) == 1.0


def test_radgraph_is_case_insensitive():
    upper = graph("u", "Small Left pleural effusion .", {
        "1": (0, 0, "OBS-DP", [("modify", "3")]),
        "2": (1, 1, "ANAT-DP", []),
        "3": (2, 3, "OBS-DP", []),
    })
    assert radgraph_f1(upper, REF) == 1.0


def test_truncate_reference():
    toks = [f"w{i}" for i in range(120)]
    assert truncate_reference(toks, COMPLETE) == toks
    assert truncate_reference(toks, 100) == toks[:100]
    with pytest.raises(MetricDomainError):
        truncate_reference(toks, 0)


REF_120 = " ".join(f"w{i}" for i in range(120))
CAND_60 = " ".join(f"w{i}" for i in range(60))


@pytest.mark.parametrize("m_gt,bleu,rouge", [
    (60, 1.0, 1.0),
    (100, math.exp(1 - 100 / 60), 0.75),
    (COMPLETE, math.exp(-1), 2 / 3),
])
def test_truncation_fixture(m_gt, bleu, rouge):
    # every candidate n-gram occurs in the reference, so only the brevity penalty moves BLEU
    p = pair(CAND_60, REF_120, m_gt=m_gt)
    for n in range(1, 5):
        assert bleu_n(p, n) == pytest.approx(bleu, abs=1e-9)
    assert rouge_l(p) == pytest.approx(rouge, abs=1e-9)


text_st = st.lists(st.sampled_from(list("abcde")), max_size=10).map(" ".join)


@given(text_st, st.lists(text_st, min_size=1, max_size=4), st.randoms())
def test_scores_bounded_and_reference_order_invariant(cand, refs, rnd):
    p = pair(cand, *refs)
    shuffled = refs[:]
    rnd.shuffle(shuffled)
    q = pair(cand, *shuffled)
    for n in range(1, 5):
        assert 0.0 <= bleu_n(p, n) <= 1.0
        assert bleu_n(p, n) == bleu_n(q, n)
    assert 0.0 <= rouge_l(p) <= 1.0
    assert rouge_l(p) == rouge_l(q)


@given(st.lists(st.sampled_from(list("abcde")), min_size=1, max_size=10), st.randoms())
def test_bleu1_of_permutation_is_one(words, rnd):
    shuffled = words[:]
    rnd.shuffle(shuffled)
    assert bleu_n(EvalPair(shuffled, (words,)), 1) == pytest.approx(1.0, abs=1e-12)


flags_st = st.lists(st.integers(0, 1), min_size=14, max_size=14).map(LabelVector)


@given(st.lists(st.tuples(flags_st, flags_st), max_size=6), st.sampled_from(["all14", "cx5"]))
def test_micro_f1_symmetric(rows, subset):
    preds = [a for a, _ in rows]
    golds = [b for _, b in rows]
    assert micro_f1(preds, golds, subset) == micro_f1(golds, preds, subset)
    assert 0.0 <= micro_f1(preds, golds, subset) <= 1.0


@st.composite
def graphs(draw):
    words = draw(st.lists(st.sampled_from(["lung", "left", "effusion", "opacity"]), min_size=1, max_size=6))
    n = draw(st.integers(0, len(words)))
    layout = {}
    for i in range(n):
        rels = []
        if i > 0 and draw(st.booleans()):
            rels.append((draw(st.sampled_from(["modify", "located_at"])), str(draw(st.integers(0, i - 1)))))
        layout[str(i)] = (i, i, draw(st.sampled_from(["OBS-DP", "ANAT-DP"])), rels)
    return graph("h", " ".join(words), layout)


@given(graphs(), graphs())
def test_radgraph_symmetric(a, b):
    assert radgraph_f1(a, b) == radgraph_f1(b, a)
    assert 0.0 <= radgraph_f1(a, b) <= 1.0
