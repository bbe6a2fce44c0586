"""Team-level conversational features.

Each feature is first measured per roster member over the messages inside a
time window; team values are then the mean/min/max/std over members, a
team-total count, or a pairwise average.
"""

from __future__ import annotations

import csv
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lexicon import (
    ARGUE,
    EASY_WORDS,
    SENTIMENT,
    WORD_CHOICE_CATEGORIES,
    CategoryLexicon,
    TokenStream,
    concat,
    count_category,
    load_lexicon_dir,
    tokenize,
)
from .transcript import Transcript

STATS = ("mean", "min", "max", "std")
MEMBER_MEASURES = ("msg_count", "word_count", "polarity", "subjectivity", "readability")

COMPUTATIONAL_FEATURES: tuple[str, ...] = (
    tuple(f"{m}_{s}" for m in MEMBER_MEASURES for s in STATS)
    + ("tfidf_cosine_mean",)
    + tuple(f"liwc_{c}" for c in WORD_CHOICE_CATEGORIES)
    + ("argue_count", "pseudonym_refs")
)
HUMAN_FEATURES: tuple[str, ...] = tuple(f"hl_{i:02d}" for i in range(1, 21))
ALL_FEATURES = COMPUTATIONAL_FEATURES + HUMAN_FEATURES

# Entries that can never be negative.
COUNT_FEATURES = frozenset(
    n for n in COMPUTATIONAL_FEATURES
    if n.startswith(("msg_count", "word_count", "liwc_", "readability"))
    or n in ("argue_count", "pseudonym_refs")
)

DALE_CHALL_PDW = 0.1579
DALE_CHALL_ASL = 0.0496
DALE_CHALL_ADJUST = 3.6365
DALE_CHALL_DIFFICULT_FRACTION = 0.05

Window = tuple[float, float]


class EmptyWindowError(ValueError):
    """No team message falls inside the requested window."""


@lru_cache(maxsize=262144)
def _tokens(text: str) -> TokenStream:
    return tokenize(text)


@dataclass(frozen=True)
class MemberMeasures:
    member_id: str
    message_count: int
    word_count: int
    polarity: float
    subjectivity: float
    readability: float
    messages: tuple[TokenStream, ...] = ()

    @property
    def document(self) -> TokenStream:
        return concat(self.messages)


@dataclass(frozen=True)
class FeatureVector:
    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("names and values differ in length")
        for n, v in zip(self.names, self.values):
            if not math.isfinite(v):
                raise ValueError(f"feature {n} is not finite: {v}")

    def __getitem__(self, name: str) -> float:
        return self.values[self.names.index(name)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def extend(self, names: Sequence[str], values: Sequence[float]) -> "FeatureVector":
        return FeatureVector(self.names + tuple(names), self.values + tuple(float(v) for v in values))


def in_window(t: float, window: Window | None, duration: float) -> bool:
    if window is None:
        return True
    t0, t1 = window
    # a window reaching the end of the interaction also keeps a message stamped exactly at it
    return t0 <= t and (t < t1 or t1 >= duration)


def _check_window(window: Window | None) -> None:
    if window is not None:
        t0, t1 = window
        if not (0 <= t0 < t1):
            raise ValueError(f"invalid window [{t0}, {t1})")


def window_messages(transcript: Transcript, window: Window | None = None):
    _check_window(window)
    return [m for m in transcript.messages if in_window(m.timestamp, window, transcript.duration)]


def sentiment(
    tokens: TokenStream | Sequence[TokenStream],
    sentiment_lex: CategoryLexicon,
    negators: CategoryLexicon | None = None,
) -> tuple[float, float]:
    """Mean (polarity, subjectivity) over lexicon hits.

    A hit directly preceded by a negator token within the same stream has its
    polarity sign flipped. Returns (0, 0) when nothing matches.
    """
    streams = [tokens] if isinstance(tokens, TokenStream) else tokens
    pols: list[float] = []
    subs: list[float] = []
    for stream in streams:
        prev = None
        for tok in stream.tokens:
            entry = sentiment_lex.match(tok)
            if entry is not None:
                p = sentiment_lex.polarity.get(entry, 0.0)
                if negators is not None and prev is not None and prev in negators:
                    p = -p
                pols.append(p)
                subs.append(sentiment_lex.subjectivity.get(entry, 0.0))
            prev = tok
    if not pols:
        return 0.0, 0.0
    return math.fsum(pols) / len(pols), math.fsum(subs) / len(subs)


def dale_chall(tokens: TokenStream, easy_words: CategoryLexicon) -> float:
    """New Dale-Chall score; 0 for an empty stream."""
    words = len(tokens.tokens)
    if words == 0:
        return 0.0
    sentences = max(tokens.n_sentences, 1)
    difficult = sum(1 for t in tokens.tokens if not t.isdigit() and t not in easy_words)
    pdw = 100.0 * difficult / words
    score = DALE_CHALL_PDW * pdw + DALE_CHALL_ASL * (words / sentences)
    if difficult / words > DALE_CHALL_DIFFICULT_FRACTION:
        score += DALE_CHALL_ADJUST
    return score


def ngram_counts(messages: Iterable[TokenStream | Sequence[str]]) -> Counter:
    """Unigram and within-message bigram counts."""
    counts: Counter = Counter()
    for msg in messages:
        toks = msg.tokens if isinstance(msg, TokenStream) else tuple(msg)
        counts.update(toks)
        counts.update(f"{a} {b}" for a, b in zip(toks, toks[1:]))
    return counts


def tfidf_team_similarity(documents: Sequence[TokenStream | Sequence[TokenStream]]) -> float:
    """Mean pairwise cosine of members' TF-IDF vectors (unigrams + bigrams).

    Each document is one member's text: either a single stream or the list of
    that member's message streams (bigrams never cross messages).
    idf(t) = ln((1 + N) / (1 + df(t))) + 1 with N the member count.
    """
    n = len(documents)
    if n < 2:
        raise ValueError("TF-IDF similarity needs at least two members")
    counts = [ngram_counts([d] if isinstance(d, TokenStream) else d) for d in documents]
    vocab = sorted(set().union(*counts))
    if not vocab:
        return 0.0
    index = {t: i for i, t in enumerate(vocab)}
    tf = np.zeros((n, len(vocab)))
    for row, c in enumerate(counts):
        for term, k in c.items():
            tf[row, index[term]] = k
    df = (tf > 0).sum(axis=0)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
    weights = tf * idf
    norms = np.linalg.norm(weights, axis=1)
    unit = np.divide(weights, norms[:, None], out=np.zeros_like(weights), where=norms[:, None] > 0)
    sims = [float(unit[i] @ unit[j]) for i, j in itertools.combinations(range(n), 2)]
    return min(1.0, max(0.0, math.fsum(sims) / len(sims)))


def _id_tokens(member_id: str) -> tuple[str, ...]:
    return _tokens(member_id).tokens


def _count_sequence(tokens: Sequence[str], pattern: Sequence[str]) -> int:
    k = len(pattern)
    if k == 0:
        return 0
    return sum(1 for i in range(len(tokens) - k + 1) if tuple(tokens[i : i + k]) == tuple(pattern))


def pseudonym_refs(transcript: Transcript, window: Window | None = None) -> int:
    """Mentions of other roster members' identifiers, self-mentions excluded."""
    ids = {m: _id_tokens(m) for m in transcript.roster}
    total = 0
    for msg in window_messages(transcript, window):
        stream = _tokens(msg.text)
        start = 0
        # a multi-token id never spans a sentence boundary
        for end in stream.sentence_ends:
            toks = stream.tokens[start:end]
            for member, pattern in ids.items():
                if member != msg.sender:
                    total += _count_sequence(toks, pattern)
            start = end
    return total


def member_measures(
    transcript: Transcript,
    window: Window | None = None,
    lexicons: Mapping[str, CategoryLexicon] | None = None,
) -> list[MemberMeasures]:
    """Per-member measures in roster order over messages with t0 <= t < t1."""
    lexicons = default_lexicons() if lexicons is None else lexicons
    msgs = window_messages(transcript, window)
    if not msgs:
        raise EmptyWindowError(f"team {transcript.team_id!r}: no messages in window {window}")
    by_member: dict[str, list[TokenStream]] = {m: [] for m in transcript.roster}
    for msg in msgs:
        by_member[msg.sender].append(_tokens(msg.text))
    sent_lex, negators, easy = lexicons[SENTIMENT], lexicons.get("negation"), lexicons[EASY_WORDS]
    out = []
    for member, streams in by_member.items():
        doc = concat(streams)
        pol, subj = sentiment(streams, sent_lex, negators)
        out.append(
            MemberMeasures(
                member_id=member,
                message_count=len(streams),
                word_count=len(doc),
                polarity=pol,
                subjectivity=subj,
                readability=dale_chall(doc, easy),
                messages=tuple(streams),
            )
        )
    return out


def _stats(values: Sequence[float]) -> list[float]:
    a = np.asarray(values, dtype=float)
    return [float(a.mean()), float(a.min()), float(a.max()), float(a.std())]


def team_features(
    transcript: Transcript,
    window: Window | None = None,
    lexicons: Mapping[str, CategoryLexicon] | None = None,
    rates: bool = False,
) -> FeatureVector:
    """The 42-entry computational feature vector for one team.

    ``rates=True`` reports word-choice, argue and pseudonym counts per 100 team
    words instead of raw counts.
    """
    lexicons = default_lexicons() if lexicons is None else lexicons
    members = member_measures(transcript, window, lexicons)
    values: list[float] = []
    values += _stats([m.message_count for m in members])
    values += _stats([m.word_count for m in members])
    values += _stats([m.polarity for m in members])
    values += _stats([m.subjectivity for m in members])
    values += _stats([m.readability for m in members])
    values.append(tfidf_team_similarity([m.messages for m in members]))

    all_tokens = [t for m in members for s in m.messages for t in s.tokens]
    counts = [count_category(all_tokens, lexicons[c]) for c in WORD_CHOICE_CATEGORIES]
    counts.append(count_category(all_tokens, lexicons[ARGUE]))
    counts.append(pseudonym_refs(transcript, window))
    if rates:
        total = len(all_tokens)
        values += [100.0 * c / total if total else 0.0 for c in counts]
    else:
        values += [float(c) for c in counts]
    return FeatureVector(COMPUTATIONAL_FEATURES, tuple(values))


@lru_cache(maxsize=1)
def default_lexicons() -> dict[str, CategoryLexicon]:
    return load_lexicon_dir()


# ------------------------------------------------------------ feature table


@dataclass(frozen=True)
class FeatureTable:
    """Feature matrix keyed by team id; column order is the registry order."""

    team_ids: tuple[str, ...]
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.team_ids), len(self.names)):
            raise ValueError("feature matrix shape does not match ids/names")
        if len(set(self.team_ids)) != len(self.team_ids):
            raise ValueError("duplicate team ids in feature table")

    def columns(self, subset: str) -> "FeatureTable":
        """Restrict to 'computational', 'human' or 'all' registry columns."""
        wanted = {
            "computational": COMPUTATIONAL_FEATURES,
            "human": HUMAN_FEATURES,
            "all": self.names,
        }.get(subset)
        if wanted is None:
            raise ValueError(f"unknown feature subset {subset!r}")
        missing = [n for n in wanted if n not in self.names]
        if missing:
            raise ValueError(f"feature table lacks {subset} columns, e.g. {missing[0]}")
        idx = [self.names.index(n) for n in wanted]
        return FeatureTable(self.team_ids, tuple(wanted), self.values[:, idx])

    def rows(self, team_ids: Sequence[str]) -> np.ndarray:
        pos = {t: i for i, t in enumerate(self.team_ids)}
        return self.values[[pos[t] for t in team_ids]]

    def subset(self, team_ids: Sequence[str]) -> "FeatureTable":
        return FeatureTable(tuple(team_ids), self.names, self.rows(team_ids))

    def join(self, other: "FeatureTable") -> "FeatureTable":
        """Append another table's columns; both must cover the same teams."""
        if set(other.team_ids) != set(self.team_ids):
            raise ValueError("feature tables cover different teams")
        return FeatureTable(
            self.team_ids,
            self.names + other.names,
            np.hstack([self.values, other.rows(self.team_ids)]),
        )

    def vector(self, team_id: str) -> FeatureVector:
        return FeatureVector(self.names, tuple(float(v) for v in self.rows([team_id])[0]))


def extract_table(
    transcripts: Iterable[Transcript],
    window: Window | None = None,
    lexicons: Mapping[str, CategoryLexicon] | None = None,
    rates: bool = False,
    skip_empty: bool = False,
) -> tuple[FeatureTable, list[str]]:
    """Feature table for many teams; returns (table, ids dropped for empty windows)."""
    lexicons = default_lexicons() if lexicons is None else lexicons
    ids, rows, dropped = [], [], []
    for t in transcripts:
        try:
            fv = team_features(t, window, lexicons, rates)
        except EmptyWindowError:
            if not skip_empty:
                raise
            dropped.append(t.team_id)
            continue
        ids.append(t.team_id)
        rows.append(fv.values)
    values = np.asarray(rows, dtype=float).reshape(len(rows), len(COMPUTATIONAL_FEATURES))
    return FeatureTable(tuple(ids), COMPUTATIONAL_FEATURES, values), dropped


def write_table(table: FeatureTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("team_id",) + table.names)
        for tid, row in zip(table.team_ids, table.values):
            w.writerow([tid] + [repr(float(v)) for v in row])


def read_table(path: str | Path) -> FeatureTable:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "team_id":
            raise ValueError(f"{path}: first column must be team_id")
        names = tuple(header[1:])
        unknown = [n for n in names if n not in ALL_FEATURES]
        if unknown:
            raise ValueError(f"{path}: unknown feature columns {unknown}")
        order = [n for n in ALL_FEATURES if n in names]
        if list(names) != order:
            raise ValueError(f"{path}: feature columns out of registry order")
        ids, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields")
            ids.append(rec[0])
            try:
                rows.append([float(x) for x in rec[1:]])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric feature value") from None
    return FeatureTable(tuple(ids), names, np.asarray(rows, dtype=float).reshape(len(ids), len(names)))
