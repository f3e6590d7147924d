from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from oracles import IDENTICAL_TEN_TOKEN, meteor_oracle, meteor_sentence_pairs
from reflectbench.verifiers import (
    alignment_stats,
    load_synonym_table,
    meteor,
    suffix_stemmer,
    tokenize,
)


def test_tokenize_lowercases_and_drops_punctuation():
    assert tokenize("Hello, World!") == ["hello", "world"]
    assert tokenize("  ") == []
    assert tokenize("Katze saß.") == ["katze", "saß"]


@pytest.mark.parametrize(
    "token, stem",
    [
        ("jumps", "jump"),
        ("jumped", "jump"),
        ("jumping", "jump"),
        ("walked", "walk"),
        ("studies", "stud"),
        ("boxes", "box"),
        ("quickly", "quick"),
        ("cat", "cat"),
        ("its", "its"),  # stem would drop below three characters
    ],
)
def test_suffix_stemmer(token, stem):
    assert suffix_stemmer(token) == stem


def test_identical_ten_token_sentence_scores_09995():
    assert meteor(IDENTICAL_TEN_TOKEN, IDENTICAL_TEN_TOKEN) == pytest.approx(0.9995, abs=1e-12)


def test_matches_direct_formula_oracle_on_fifty_pairs():
    pairs = meteor_sentence_pairs()
    assert len(pairs) == 50
    for cand, ref in pairs:
        assert meteor(cand, ref) == pytest.approx(meteor_oracle(cand, ref), abs=1e-9), (cand, ref)


def test_empty_sides_score_zero():
    assert meteor("", "the cat") == 0.0
    assert meteor("the cat", "") == 0.0
    assert meteor("", "") == 0.0


def test_no_overlap_scores_zero():
    assert meteor("alpha bravo", "gamma delta") == 0.0


def test_single_identical_token_pays_full_fragmentation_penalty():
    # one match in one chunk: F=1, penalty=0.5*(1/1)^3
    assert meteor("cat", "cat") == pytest.approx(0.5)


def test_swapped_bigram_splits_into_two_chunks():
    assert meteor("b a", "a b") == pytest.approx(0.5)  # F=1, penalty=0.5*(2/2)^3


def test_word_order_changes_the_score():
    straight = meteor("a b c d", "a b c d")
    reversed_ = meteor("d c b a", "a b c d")
    assert straight == pytest.approx(1.0 - 0.5 * (1 / 4) ** 3)
    assert reversed_ == pytest.approx(0.5)
    assert straight > reversed_


def test_pairing_minimizes_chunks_with_repeated_words():
    stats = alignment_stats("the cat the dog", "the dog the cat")
    assert stats.matches == 4
    assert stats.chunks == 2  # naive left-to-right pairing would give 4
    assert meteor("the cat the dog", "the dog the cat") == pytest.approx(
        meteor_oracle("the cat the dog", "the dog the cat"), abs=1e-9
    )


def test_stemming_stage_recovers_morphological_variants():
    with_stems = meteor("the cat jumps", "the cat jumped")
    without = meteor("the cat jumps", "the cat jumped", stemmer=lambda w: w)
    assert with_stems == pytest.approx(1.0 - 0.5 * (1 / 3) ** 3)
    assert without < with_stems


def test_synonym_stage_is_off_by_default_and_opt_in(tmp_path):
    listing = tmp_path / "synonyms.txt"
    listing.write_text("# pairs\nbig, large\n", encoding="utf-8")
    table = load_synonym_table(listing)
    assert table["big"] == frozenset({"large"})
    assert table["large"] == frozenset({"big"})

    plain = meteor("the big dog", "the large dog")
    with_syn = meteor("the big dog", "the large dog", synonyms=table)
    assert plain == pytest.approx(1 / 3)
    assert with_syn == pytest.approx(1.0 - 0.5 * (1 / 3) ** 3)


def test_alignment_stats_internal_consistency():
    for cand, ref in meteor_sentence_pairs():
        stats = alignment_stats(cand, ref)
        if stats.matches == 0:
            assert stats.score == 0.0
            continue
        n_cand, n_ref = len(tokenize(cand)), len(tokenize(ref))
        assert stats.precision == pytest.approx(stats.matches / n_cand)
        assert stats.recall == pytest.approx(stats.matches / n_ref)
        assert 1 <= stats.chunks <= stats.matches
        expected_f = 10 * stats.precision * stats.recall / (stats.recall + 9 * stats.precision)
        assert stats.f_mean == pytest.approx(expected_f)
        assert stats.penalty == pytest.approx(0.5 * (stats.chunks / stats.matches) ** 3)
        assert stats.score == pytest.approx(stats.f_mean * (1 - stats.penalty))


_WORDS = st.sampled_from(["cat", "cats", "dog", "the", "sat", "mat", "jump", "jumps"])


@settings(max_examples=60, deadline=None)
@given(st.lists(_WORDS, min_size=0, max_size=6), st.lists(_WORDS, min_size=0, max_size=6))
def test_score_stays_in_unit_interval(cand_words, ref_words):
    value = meteor(" ".join(cand_words), " ".join(ref_words))
    assert 0.0 <= value <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(_WORDS, min_size=1, max_size=6, unique=True))
def test_identity_beats_any_reordering(words):
    ref = " ".join(words)
    identity = meteor(ref, ref)
    flipped = meteor(" ".join(reversed(words)), ref)
    assert identity >= flipped
