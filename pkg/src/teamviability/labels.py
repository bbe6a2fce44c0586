"""Aggregation of crowd ratings into per-team human-label features."""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .features import HUMAN_FEATURES, FeatureTable
from .transcript import Transcript, ValidationError

QUESTION_IDS = HUMAN_FEATURES
MIN_RATERS = 3
OUTLIER_SD = 1.5

# Survey statements, in question-id order (hl_01 ... hl_20).
QUESTIONS = (
    ("generating_many_ideas", "There were many ideas/suggestions/input generated from this group."),
    ("reaching_a_conclusion", "The group reached a decision in the end (there was a sense of consensus)."),
    ("progressing_slowly", "It took a long time for the team to reach a conclusion."),
    ("thoughtful_response", "The final answer of the team is reasonable and well-thought-out."),
    ("social_loafing", "At least one team member was not participating as much as the other team members."),
    ("annoying_collaborators", "At least one team member was annoying (used all caps, or sarcasm, or was obnoxious, etc)."),
    ("frustrated_collaborators", "At least one team member expressed frustration/confusion."),
    ("positive_interaction", "There were positive interactions (emojis, lol, great!, etc)."),
    ("starting_salutations", "The team members greeted each other at the beginning of the interaction."),
    ("ending_salutations", "The team members congratulated each other at the end of the interaction."),
    ("sarcastic_interaction", "There were sarcastic comments."),
    ("agreeable_interaction", "The group was agreeable."),
    ("respectful_interaction", "The teammates were supportive and respectful as opposed to insulting."),
    ("passive_aggressive_interaction", "Team members were passive-aggressive."),
    ("dismissing_collaborators", "At least one person in the team was dismissed at some point."),
    ("punishing_collaborators", "At least one person in the team was punished at some point."),
    ("showing_embarrassment", "At least one person in the team seemed embarrassed at some point."),
    ("political_interaction", "This interaction was Political as opposed to Non-political."),
    ("playful_interaction", "The conversation was Playful as opposed to ideologically charged."),
    ("fact_driven_discussion", "Ideas were Fact-based as opposed to Emotion-based."),
)


class InsufficientRatersError(ValueError):
    pass


@dataclass(frozen=True)
class RatingSubmission:
    team_id: str
    rater_id: str
    attention_answer: int
    answers: Mapping[str, int]

    def __post_init__(self):
        missing = [q for q in QUESTION_IDS if q not in self.answers]
        if missing:
            raise ValidationError(f"submission {self.rater_id!r}/{self.team_id!r}: missing {missing}")
        for q, a in self.answers.items():
            if q not in QUESTION_IDS:
                raise ValidationError(f"submission {self.rater_id!r}: unknown question {q!r}")
            if isinstance(a, bool) or not isinstance(a, int) or not 1 <= a <= 5:
                raise ValidationError(f"submission {self.rater_id!r}: answer {q}={a!r} outside 1-5")


@dataclass(frozen=True)
class AggregatedLabels:
    team_id: str
    values: Mapping[str, float]
    rater_count_used: Mapping[str, int]

    def vector(self) -> list[float]:
        return [self.values[q] for q in QUESTION_IDS]


def filter_attention(submissions: Iterable[RatingSubmission], transcript: Transcript) -> list[RatingSubmission]:
    """Keep submissions whose participant count matches the roster size."""
    n = len(transcript.roster)
    return [s for s in submissions if s.attention_answer == n]


def _filtered(ratings: Sequence[int]) -> list[int]:
    mu = math.fsum(ratings) / len(ratings)
    sigma = math.sqrt(math.fsum((r - mu) ** 2 for r in ratings) / len(ratings))
    kept = [r for r in ratings if abs(r - mu) <= OUTLIER_SD * sigma]
    return kept or list(ratings)


def aggregate_question(ratings: Sequence[int]) -> float:
    """Median after dropping ratings more than 1.5 population SDs from the mean."""
    if len(ratings) < MIN_RATERS:
        raise InsufficientRatersError(f"need at least {MIN_RATERS} ratings, got {len(ratings)}")
    return float(statistics.median(_filtered(ratings)))


def aggregate_team(submissions: Iterable[RatingSubmission], transcript: Transcript) -> AggregatedLabels:
    subs = [s for s in submissions if s.team_id == transcript.team_id]
    kept = filter_attention(subs, transcript)
    if len(kept) < MIN_RATERS:
        raise InsufficientRatersError(
            f"team {transcript.team_id!r}: {len(kept)} attention-passing raters, need {MIN_RATERS}"
        )
    values, used = {}, {}
    for q in QUESTION_IDS:
        ratings = [s.answers[q] for s in kept]
        values[q] = aggregate_question(ratings)
        used[q] = len(_filtered(ratings))
    return AggregatedLabels(transcript.team_id, values, used)


def load_ratings(path: str | Path) -> list[RatingSubmission]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
                sub = RatingSubmission(
                    team_id=obj["team_id"],
                    rater_id=str(obj["rater_id"]),
                    attention_answer=obj["attention_answer"],
                    answers=dict(obj["answers"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"malformed rating ({exc})", path, lineno) from None
            except ValidationError as exc:
                raise ValidationError(str(exc), path, lineno) from None
            out.append(sub)
    return out


def write_ratings(submissions: Iterable[RatingSubmission], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in submissions:
            obj = {
                "team_id": s.team_id,
                "rater_id": s.rater_id,
                "attention_answer": s.attention_answer,
                "answers": {q: s.answers[q] for q in QUESTION_IDS},
            }
            fh.write(json.dumps(obj) + "\n")


def aggregate_corpus(
    submissions: Iterable[RatingSubmission], transcripts: Mapping[str, Transcript]
) -> FeatureTable:
    """Human-label columns hl_01..hl_20 for every transcript."""
    by_team: dict[str, list[RatingSubmission]] = {}
    for s in submissions:
        if s.team_id not in transcripts:
            raise ValidationError(f"rating for unknown team {s.team_id!r}")
        by_team.setdefault(s.team_id, []).append(s)
    ids, rows = [], []
    for tid, t in transcripts.items():
        agg = aggregate_team(by_team.get(tid, []), t)
        ids.append(tid)
        rows.append(agg.vector())
    return FeatureTable(tuple(ids), QUESTION_IDS, np.asarray(rows, dtype=float).reshape(len(ids), len(QUESTION_IDS)))
