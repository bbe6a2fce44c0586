from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from teamviability.features import HUMAN_FEATURES
from teamviability.labels import (
    QUESTION_IDS,
    QUESTIONS,
    InsufficientRatersError,
    RatingSubmission,
    aggregate_corpus,
    aggregate_question,
    aggregate_team,
    filter_attention,
    load_ratings,
    write_ratings,
)
from teamviability.transcript import ChatMessage, Transcript, ValidationError


def team(tid="T", size=4):
    roster = tuple(f"m{i}" for i in range(size))
    return Transcript(tid, 1, "masked", roster, (ChatMessage("m0", 1.0, "hi"),))


def sub(rater, attention=4, value=3, tid="T", **over):
    answers = {q: value for q in QUESTION_IDS}
    answers.update(over)
    return RatingSubmission(tid, rater, attention, answers)


@pytest.mark.parametrize(
    "ratings, expected",
    [
        # mean 4.2, sd 1.6: the lone 1 is 3.2 away and dropped
        ([1, 5, 5, 5, 5], 5.0),
        # mean 3, sd 0: nothing dropped
        ([3, 3, 3], 3.0),
        # mean 3, sd sqrt(2/3): every rating within 1.5 sd, median of all
        ([2, 3, 4], 3.0),
        # mean 2.5, sd 1.5: all within 2.25, even-count median
        ([1, 1, 4, 4], 2.5),
        # mean 2, sd sqrt(2.4): the 5 is 3 away (> 2.32) and dropped, median of 1,1,1,2
        ([1, 1, 1, 2, 5], 1.0),
        # mean 8/3, sd sqrt(26/9): the 5s are 2.33 away (< 2.55) and kept
        ([1, 1, 2, 2, 5, 5], 2.0),
    ],
)
def test_aggregate_question_cases(ratings, expected):
    assert aggregate_question(ratings) == expected


def test_too_few_ratings():
    with pytest.raises(InsufficientRatersError):
        aggregate_question([4, 5])


@given(st.lists(st.integers(1, 5), min_size=3, max_size=12))
def test_aggregate_within_rating_range(ratings):
    v = aggregate_question(ratings)
    assert min(ratings) <= v <= max(ratings)
    assert v * 2 == int(v * 2)


def test_attention_filter_drops_exactly_mismatches():
    t = team(size=4)
    subs = [sub("a", 4), sub("b", 3), sub("c", 4), sub("d", 5), sub("e", 4)]
    kept = filter_attention(subs, t)
    assert [s.rater_id for s in kept] == ["a", "c", "e"]


def test_aggregate_team_uses_passing_raters():
    t = team(size=4)
    subs = [sub("a", value=4), sub("b", value=4), sub("c", value=5), sub("x", attention=2, value=1)]
    agg = aggregate_team(subs, t)
    assert agg.values["hl_01"] == 4.0
    assert agg.rater_count_used["hl_01"] == 3
    assert len(agg.vector()) == 20


def test_aggregate_team_needs_three_passing():
    t = team(size=4)
    with pytest.raises(InsufficientRatersError):
        aggregate_team([sub("a"), sub("b"), sub("x", attention=3)], t)


def test_submission_validation():
    with pytest.raises(ValidationError):
        sub("a", hl_05=6)
    with pytest.raises(ValidationError):
        RatingSubmission("T", "a", 4, {q: 3 for q in QUESTION_IDS[:-1]})
    with pytest.raises(ValidationError):
        RatingSubmission("T", "a", 4, {**{q: 3 for q in QUESTION_IDS}, "hl_99": 3})


def test_question_registry():
    assert QUESTION_IDS == HUMAN_FEATURES
    assert len(QUESTIONS) == 20
    assert len({slug for slug, _ in QUESTIONS}) == 20


def test_ratings_roundtrip_and_corpus_table(tmp_path):
    t1, t2 = team("T1", 3), team("T2", 5)
    subs = [sub(f"r{i}", attention=3, tid="T1", value=2) for i in range(3)]
    subs += [sub(f"s{i}", attention=5, tid="T2", value=4) for i in range(4)]
    path = tmp_path / "ratings.jsonl"
    write_ratings(subs, path)
    again = load_ratings(path)
    assert again == subs
    table = aggregate_corpus(again, {"T1": t1, "T2": t2})
    assert table.names == HUMAN_FEATURES
    assert table.rows(["T1"])[0].tolist() == [2.0] * 20
    assert table.rows(["T2"])[0].tolist() == [4.0] * 20


def test_load_ratings_reports_line(tmp_path):
    path = tmp_path / "ratings.jsonl"
    write_ratings([sub("a")], path)
    with open(path, "a") as fh:
        fh.write('{"team_id": "T", "rater_id": "b"}\n')
    with pytest.raises(ValidationError) as exc:
        load_ratings(path)
    assert exc.value.line == 2


def test_rating_for_unknown_team():
    with pytest.raises(ValidationError):
        aggregate_corpus([sub("a", tid="nope")], {"T": team()})
