from __future__ import annotations

import json

import pytest

from teamviability.features import extract_table
from teamviability.synthetic import generate_synthetic_corpus


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r) + "\n")


def member(mid, items=None):
    return {"member_id": mid, "viability_items": items or [3] * 14}


@pytest.fixture
def tiny_files(tmp_path):
    """A valid two-team messages/teams pair."""
    teams = [
        {"team_id": "A", "round": 1, "condition": "masked", "members": [member("p1"), member("p2"), member("p3", [5] * 14)]},
        {"team_id": "B", "round": 2, "condition": "reconvened", "duration_s": 600, "performance": 0.5,
         "members": [member("q1", [1] * 14), member("q2"), member("q3"), member("q4")]},
    ]
    msgs = [
        {"team_id": "A", "sender": "p2", "timestamp_s": 5.0, "text": "second"},
        {"team_id": "A", "sender": "p1", "timestamp_s": 1.5, "text": "first"},
        {"team_id": "B", "sender": "q4", "timestamp_s": 10, "text": "hello all"},
    ]
    mp, tp = tmp_path / "messages.jsonl", tmp_path / "teams.jsonl"
    write_jsonl(mp, msgs)
    write_jsonl(tp, teams)
    return mp, tp


@pytest.fixture(scope="session")
def planted():
    """The seed-7 planted-signal corpus and its computational feature table."""
    corpus, ratings = generate_synthetic_corpus(600, effect=1.0, seed=7)
    table, _ = extract_table(corpus.transcripts.values())
    return corpus, ratings, table
