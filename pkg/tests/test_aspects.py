import logging

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecreport.characterization import aspects
from ecreport.characterization.aspects import (
    AspectLexicon,
    HeuristicNounTagger,
    TaggerUnavailable,
    aspect_profile,
    build_aspect_lexicon,
    get_tagger,
    lemmatize_noun,
    tokens,
)


class AllNouns:
    """Tags every token as a noun, so frequency logic is tested on its own."""

    name = "all"

    def nouns(self, text):
        return tokens(text)


def lexicon(*lemmas):
    return AspectLexicon(tuple((lemma, 1) for lemma in lemmas), k=len(lemmas))


def test_frequency_example():
    lex = build_aspect_lexicon(["growth growth margin"], k=2, tagger=AllNouns())
    assert list(lex.aspects) == [("growth", 2), ("margin", 1)]


def test_k_larger_than_vocabulary():
    lex = build_aspect_lexicon(["growth margin"], k=10, tagger=AllNouns())
    assert len(lex.aspects) == 2


def test_empty_corpus():
    assert build_aspect_lexicon([], k=5, tagger=AllNouns()).aspects == ()


def test_ties_break_alphabetically_and_plurals_merge():
    lex = build_aspect_lexicon(["margins cash margin cash beta"], k=3, tagger=AllNouns())
    assert list(lex.aspects) == [("cash", 2), ("margin", 2), ("beta", 1)]


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        build_aspect_lexicon(["x"], k=0, tagger=AllNouns())


def test_lexicon_from_transcripts(nova):
    lex = build_aspect_lexicon([nova], k=20, tagger=HeuristicNounTagger())
    counts = [c for _, c in lex.aspects]
    assert counts == sorted(counts, reverse=True)
    assert len(lex.aspects) <= 20


def test_profile_proportions():
    reports = ["Strong growth."] * 19 + ["Flat quarter."]
    prof = aspect_profile(reports, lexicon("growth", "dividend"), "All agents")
    assert prof.occurrence["growth"] == pytest.approx(0.95)
    assert prof.occurrence["dividend"] == 0.0
    assert aspect_profile(["growth", "none"], lexicon("growth"), "x").occurrence == {"growth": 0.5}


def test_profile_counts_presence_not_frequency():
    prof = aspect_profile(["margin margins margin"], lexicon("margin"), "x")
    assert prof.occurrence["margin"] == 1.0


def test_lemma_match_not_substring():
    prof = aspect_profile(["Shareholders were pleased."], lexicon("share", "shareholder"), "x")
    assert prof.occurrence == {"share": 0.0, "shareholder": 1.0}


def test_profile_needs_reports():
    with pytest.raises(ValueError):
        aspect_profile([], lexicon("growth"), "x")


@given(st.lists(st.sampled_from(["growth", "margins", "cash flow", "guidance", "nothing here"]), min_size=1))
def test_profile_invariant_under_duplication(reports):
    lex = lexicon("growth", "margin", "cash", "guidance")
    once = aspect_profile(reports, lex, "x").occurrence
    twice = aspect_profile(reports * 2, lex, "x").occurrence
    assert once == pytest.approx(twice)
    assert set(once) <= set(lex.lemmas)
    assert all(0.0 <= v <= 1.0 for v in once.values())


@pytest.mark.parametrize("word, lemma", [
    ("margins", "margin"), ("companies", "company"), ("businesses", "business"), ("earnings", "earnings"),
    ("sales", "sales"), ("analyses", "analysis"), ("people", "person"), ("status", "status"), ("gas", "gas"),
    ("Margin", "margin"),
])
def test_lemmatize_noun(word, lemma):
    assert lemmatize_noun(word) == lemma


def test_tokens_drop_possessive():
    assert tokens("The company's margins") == ["the", "company", "margins"]


def test_heuristic_tagger_skips_function_words():
    assert HeuristicNounTagger().nouns("We expected strong revenue growth in the quarter") == [
        "revenue", "growth", "quarter",
    ]


def test_unknown_tagger():
    with pytest.raises(TaggerUnavailable, match="unknown tagger"):
        get_tagger("bogus")


def test_auto_falls_back_to_heuristic(monkeypatch, caplog):
    def unavailable():
        raise TaggerUnavailable("not here")

    monkeypatch.setitem(aspects.TAGGERS, "spacy", unavailable)
    monkeypatch.setitem(aspects.TAGGERS, "nltk", unavailable)
    with caplog.at_level(logging.WARNING):
        tagger = get_tagger("auto")
    assert tagger.name == "heuristic"
    assert "heuristic" in caplog.text
