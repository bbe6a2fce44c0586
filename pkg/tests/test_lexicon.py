from __future__ import annotations

import shutil

import pytest
from hypothesis import given, strategies as st

from teamviability.lexicon import (
    REQUIRED_LEXICONS,
    SENTIMENT,
    CategoryLexicon,
    LexiconError,
    concat,
    count_category,
    default_lexicon_dir,
    load_lexicon_dir,
    normalize,
    parse_lexicon,
    tokenize,
)


def test_normalize_strips_accents_and_case():
    assert normalize("Café NAÏVE") == "cafe naive"
    assert normalize("don’t") == "don't"


def test_tokenize_words_and_apostrophes():
    ts = tokenize("Don't STOP, 'quoted' words_here x2!")
    assert ts.tokens == ("don't", "stop", "quoted", "words", "here", "x2")


def test_sentence_boundaries():
    ts = tokenize("One two. Three?! Four")
    assert ts.tokens == ("one", "two", "three", "four")
    assert ts.sentence_ends == (2, 3, 4)
    assert ts.n_sentences == 3


def test_punctuation_only_has_no_sentence():
    ts = tokenize("?!...")
    assert ts.tokens == () and ts.n_sentences == 0


def test_concat_shifts_sentence_ends():
    a, b = tokenize("a b. c"), tokenize("d e")
    joined = concat([a, b])
    assert joined.tokens == ("a", "b", "c", "d", "e")
    assert joined.sentence_ends == (2, 3, 5)
    assert (a + b) == joined


@given(st.text(max_size=80))
def test_tokenize_properties(text):
    ts = tokenize(text)
    assert all(t and t == t.lower() and not t.startswith("'") and not t.endswith("'") for t in ts.tokens)
    assert list(ts.sentence_ends) == sorted(set(ts.sentence_ends))
    if ts.tokens:
        assert ts.sentence_ends[-1] == len(ts.tokens)


def test_prefix_matching():
    lex = CategoryLexicon("x", frozenset({"happ*", "happiness", "ha*"}))
    assert lex.match("happiness") == "happiness"
    assert lex.match("happy") == "happ*"
    assert lex.match("hat") == "ha*"
    assert lex.match("h") is None
    assert count_category(["happy", "hat", "cat", "happiness"], lex) == 3


def test_parse_sentiment_file():
    text = "#name: sentiment\n#type: sentiment\ngood\t0.5\t0.6\nhorri*\t-1\t1\n"
    lex = parse_lexicon(text)
    assert lex.is_sentiment
    assert lex.polarity["horri*"] == -1.0
    assert lex.match("horrible") == "horri*"


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("but\n", "before '#name:'"),
        ("#name: x\nBut\n", "lowercase"),
        ("#name: x\nbu*t\n", "malformed"),
        ("#name: x\nbut\nbut\n", "duplicate"),
        ("#name: s\n#type: sentiment\ngood 0.5 0.6\n", "TAB"),
        ("#name: s\n#type: sentiment\ngood\t2\t0.5\n", "polarity"),
        ("#name: x\n", "no entries"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(LexiconError, match=fragment):
        parse_lexicon(text, "f.txt")


def test_error_names_file_and_line():
    with pytest.raises(LexiconError, match=r"f\.txt:3"):
        parse_lexicon("#name: x\nok\nB\n", "f.txt")


def test_bundled_lexicons_load():
    lex = load_lexicon_dir()
    assert set(REQUIRED_LEXICONS) <= set(lex)
    assert lex[SENTIMENT].is_sentiment
    assert "but" in lex["exclusive"]
    assert "you" in lex["second_person"]
    assert len(lex["easy_words"].entries) > 2000


def _copy_bundled(tmp_path):
    dst = tmp_path / "lex"
    dst.mkdir()
    for f in default_lexicon_dir().iterdir():
        if f.name.endswith(".txt"):
            (dst / f.name).write_text(f.read_text(encoding="utf-8"), encoding="utf-8")
    return dst


def test_missing_category_rejected(tmp_path):
    d = _copy_bundled(tmp_path)
    (d / "anger.txt").unlink()
    with pytest.raises(LexiconError, match="anger"):
        load_lexicon_dir(d)


def test_duplicate_category_rejected(tmp_path):
    d = _copy_bundled(tmp_path)
    shutil.copy(d / "anger.txt", d / "anger2.txt")
    with pytest.raises(LexiconError, match="duplicate category"):
        load_lexicon_dir(d)


def test_untyped_sentiment_rejected(tmp_path):
    d = _copy_bundled(tmp_path)
    (d / "sentiment.txt").write_text("#name: sentiment\ngood\n")
    with pytest.raises(LexiconError, match="sentiment"):
        load_lexicon_dir(d)
