import io

import pytest

from qtagger.corpus import (ParseError, TagInventory, parse_conll,
                            parse_slot_corpus, tag_statistics, to_conll,
                            to_slot_lines)

from conftest import CONLL_TWO_SENTENCES, SLOT_LINES


def test_parse_conll_structure(conll_corpus):
    assert len(conll_corpus.sentences) == 2
    assert conll_corpus.num_tokens == 5
    assert conll_corpus.inventory.labels == ["B-PER", "I-PER", "O"]
    assert conll_corpus.sentences[0].surfaces() == ["John", "Smith", "sleeps"]


def test_parse_conll_skips_docstart():
    text = "-DOCSTART- -X- O O\n\nJohn NNP I-NP B-PER\n"
    corpus = parse_conll(io.StringIO(text), column_spec=(0, -1))
    assert len(corpus.sentences) == 1
    assert corpus.inventory.labels == ["B-PER"]


def test_parse_conll_one_column_line_errors_with_line_number():
    text = "John B-PER\n\nbroken\n"
    with pytest.raises(ParseError, match="line 3"):
        parse_conll(io.StringIO(text))


def test_parse_conll_empty_stream_errors():
    with pytest.raises(ParseError, match="no sentences"):
        parse_conll(io.StringIO(""))


def test_parse_conll_column_spec_out_of_range():
    with pytest.raises(ParseError, match="column spec"):
        parse_conll(io.StringIO("a b\n"), column_spec=(0, 5))


def test_parse_slot_structure(slot_corpus):
    assert len(slot_corpus.sentences) == 2
    assert len(slot_corpus.sentences[0]) == 4
    assert slot_corpus.inventory.labels == ["O", "B-CITY", "B-FARE"]


def test_parse_slot_length_mismatch_names_record():
    text = "a b c d e\tO O O O\n"
    with pytest.raises(ParseError, match="record 1"):
        parse_slot_corpus(io.StringIO(text))


def test_parse_slot_missing_tab():
    with pytest.raises(ParseError, match="tokens<TAB>labels"):
        parse_slot_corpus(io.StringIO("just some words\n"))


def test_unknown_test_label_rejected(conll_corpus):
    text = "Paris B-LOC\n"
    with pytest.raises(ParseError, match="B-LOC"):
        parse_conll(io.StringIO(text), inventory=conll_corpus.inventory)


def test_known_labels_reuse_training_inventory(conll_corpus):
    text = "Anna B-PER\n"
    test = parse_conll(io.StringIO(text), inventory=conll_corpus.inventory, split="test")
    assert test.inventory is conll_corpus.inventory
    assert test.sentences[0].tokens[0].gold_label == conll_corpus.inventory.index("B-PER")


def test_conll_round_trip(conll_corpus):
    again = parse_conll(io.StringIO(to_conll(conll_corpus)))
    assert to_conll(again) == to_conll(conll_corpus)
    assert again.inventory.labels == conll_corpus.inventory.labels
    assert again.inventory.counts == conll_corpus.inventory.counts


def test_slot_round_trip(slot_corpus):
    again = parse_slot_corpus(io.StringIO(to_slot_lines(slot_corpus)))
    assert to_slot_lines(again) == to_slot_lines(slot_corpus)
    assert again.inventory.counts == slot_corpus.inventory.counts


def test_repeated_parse_is_deterministic():
    a = parse_conll(io.StringIO(CONLL_TWO_SENTENCES))
    b = parse_conll(io.StringIO(CONLL_TWO_SENTENCES))
    assert a.inventory.labels == b.inventory.labels
    assert a.inventory.counts == b.inventory.counts
    assert [s.surfaces() for s in a.sentences] == [s.surfaces() for s in b.sentences]


def test_inventory_validation():
    with pytest.raises(ValueError, match="duplicate"):
        TagInventory(["A", "A"], [1, 2])
    with pytest.raises(ValueError, match="mismatch"):
        TagInventory(["A", "B"], [1])
    with pytest.raises(ValueError, match="minority_threshold"):
        TagInventory(["A"], [1], minority_threshold=0.0)


def test_tag_statistics_partition():
    # 198 O tokens vs 2 RARE -> RARE is below the 1% default threshold
    labels = ["O", "B-RARE"]
    counts = [198, 2]
    inv = TagInventory(labels, counts)
    corpus = parse_slot_corpus(io.StringIO("a b\tO O\n"), inventory=None)
    corpus.inventory = inv
    stats = tag_statistics(corpus)
    assert stats.minority_labels == ["B-RARE"]
    assert stats.majority_labels == ["O"]
    assert stats.minority_tokens + stats.majority_tokens == 200
    assert set(stats.minority_labels) | set(stats.majority_labels) == set(labels)
    assert set(stats.minority_labels) & set(stats.majority_labels) == set()


def test_tag_statistics_single_label_is_majority():
    corpus = parse_slot_corpus(io.StringIO("a b c\tO O O\n"))
    stats = tag_statistics(corpus)
    assert stats.minority_labels == []
    assert stats.majority_labels == ["O"]
    assert stats.total_tokens == 3


def test_tag_statistics_counts_sum(slot_corpus):
    stats = tag_statistics(slot_corpus)
    assert stats.total_tokens == slot_corpus.num_tokens
    assert sum(stats.per_label.values()) == slot_corpus.num_tokens
