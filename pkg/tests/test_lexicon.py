"""Lexicon loading, validation, and matcher semantics."""

import json
import pickle

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cooccur import compile, default_lexicon, find_matches, load_lexicon, tokenize
from cooccur.lexicon import Lexicon, LexiconEntry, LexiconError, MatchHit
from oracles import oracle_find_matches


def write_lexicon(tmp_path, data):
    p = tmp_path / "lex.json"
    p.write_text(json.dumps(data))
    return p


def test_load_basic(tmp_path):
    p = write_lexicon(
        tmp_path,
        {
            "race": {"Black": ["black"]},
            "disease": {"hypertension": ["hypertension", "high blood pressure"]},
        },
    )
    lex = load_lexicon(p)
    assert len(lex.entries) == 2
    assert sum(len(e.terms) for e in lex.entries) == 3


def test_unknown_dimension_is_fatal(tmp_path):
    p = write_lexicon(tmp_path, {"ethnicity": {"X": ["x"]}})
    with pytest.raises(LexiconError, match="ethnicity"):
        load_lexicon(p)


def test_empty_category_is_fatal(tmp_path):
    p = write_lexicon(tmp_path, {"race": {"Black": []}})
    with pytest.raises(LexiconError):
        load_lexicon(p)


def test_empty_term_is_fatal(tmp_path):
    p = write_lexicon(tmp_path, {"race": {"Black": ["black", "  "]}})
    with pytest.raises(LexiconError):
        load_lexicon(p)


def test_punctuation_only_term_is_fatal(tmp_path):
    p = write_lexicon(tmp_path, {"race": {"Black": ["..."]}})
    with pytest.raises(LexiconError):
        load_lexicon(p)


def test_duplicate_terms_collapse_with_warning(tmp_path, caplog):
    p = write_lexicon(tmp_path, {"race": {"Black": ["black", "Black"]}})
    with caplog.at_level("WARNING"):
        lex = load_lexicon(p)
    assert lex.terms_of("race", "Black") == ["black"]
    assert any("duplicate" in r.message for r in caplog.records)


def test_default_lexicon_contents():
    lex = default_lexicon()
    diseases = lex.categories("disease")
    assert len(diseases) == 18
    for named in (
        "hypertension",
        "prostate cancer",
        "HIV/AIDS",
        "lupus",
        "sarcoidosis",
        "hepatitis B",
        "tuberculosis",
        "rheumatoid arthritis",
    ):
        assert named in diseases
    assert lex.categories("race") == [
        "White", "Black", "Asian", "Hispanic", "Native American", "Pacific Islander",
    ]
    assert lex.categories("gender") == ["male", "female"]


def test_exact_case_mode(tmp_path):
    p = write_lexicon(
        tmp_path,
        {"race": {"Black": ["Black"]}, "disease": {"lupus": ["lupus"]},
         "options": {"case_mode": "exact"}},
    )
    m = compile(load_lexicon(p))
    assert [h.category for h in find_matches(m, ["Black"])] == ["Black"]
    assert find_matches(m, ["black"]) == []
    assert find_matches(m, ["BLACK"]) == []


def test_pronouns_off_by_default_and_enableable(tmp_path):
    base = {"gender": {"male": ["male"], "female": ["female"]},
            "disease": {"hypertension": ["hypertension"]}}
    lex = load_lexicon(write_lexicon(tmp_path, base))
    assert find_matches(compile(lex), ["he", "said"]) == []

    base["options"] = {"match_pronouns": True}
    lex2 = load_lexicon(write_lexicon(tmp_path, base))
    hits = find_matches(compile(lex2), ["he", "said"])
    assert [(h.dimension, h.category) for h in hits] == [("gender", "male")]


def test_multiword_phrase_matches_consecutive_tokens(matcher):
    hits = find_matches(matcher, ["hepatitis", "b"])
    assert hits == [MatchHit(0, 1, "disease", "hepatitis B", "hepatitis b")]


def test_whole_token_semantics(matcher):
    assert find_matches(matcher, ["blackboard"]) == []
    assert [h.category for h in find_matches(matcher, ["black"])] == ["Black"]


def test_slash_token_matches_under_folding(matcher):
    hits = find_matches(matcher, ["HIV/AIDS"])
    assert hits == [MatchHit(0, 0, "disease", "HIV/AIDS", "hiv/aids")]


def test_spec_example_three_hits(matcher):
    tokens = ["the", "black", "man", "with", "hypertension"]
    got = [(h.dimension, h.category, h.span_start, h.span_end) for h in find_matches(matcher, tokens)]
    assert got == [
        ("race", "Black", 1, 1),
        ("gender", "male", 2, 2),
        ("disease", "hypertension", 4, 4),
    ]


def test_leftmost_longest_within_category():
    lex = Lexicon(entries=[
        LexiconEntry("disease", "prostate_cancer", ["prostate cancer", "cancer"]),
    ])
    hits = find_matches(compile(lex), ["prostate", "cancer", "screening"])
    assert [(h.span_start, h.span_end) for h in hits] == [(0, 1)]
    # cross-check with the brute-force oracle's own resolution rule
    oracle = oracle_find_matches(
        ["prostate", "cancer", "screening"],
        [("disease", "prostate_cancer", "prostate cancer"),
         ("disease", "prostate_cancer", "cancer")],
    )
    assert [(s, e) for s, e, *_ in oracle] == [(0, 1)]


def test_empty_tokens(matcher):
    assert find_matches(matcher, []) == []


def test_repeat_calls_identical(matcher):
    tokens = tokenize("Black men with hypertension and lupus; black women too.")
    assert find_matches(matcher, tokens) == find_matches(matcher, tokens)


def test_matcher_pickles_to_equivalent(matcher):
    clone = pickle.loads(pickle.dumps(matcher))
    tokens = tokenize("Hispanic woman with tuberculosis")
    assert find_matches(clone, tokens) == find_matches(matcher, tokens)


@settings(max_examples=150)
@given(st.lists(st.sampled_from(["black", "BLACK", "Black", "bLaCk"]), max_size=6))
def test_case_fold_invariance(tokens):
    lex = Lexicon(entries=[LexiconEntry("race", "Black", ["black"])])
    m = compile(lex)
    hits = find_matches(m, tokens)
    assert len(hits) == len(tokens)
