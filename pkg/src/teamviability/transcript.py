"""Chat transcripts, team metadata and viability instrument responses.

Corpora are read from two JSON Lines files: one message per line and one
team per line. Everything is validated on load and returned as frozen
dataclasses.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

N_ITEMS = 14
ITEM_MIN, ITEM_MAX = 1, 5
ROSTER_MIN, ROSTER_MAX = 3, 8
DEFAULT_DURATION = 600.0
CONDITIONS = ("masked", "initial_visible", "reconvened")

HIGH, LOW = "high", "low"

_MESSAGE_FIELDS = {"team_id", "sender", "timestamp_s", "text"}
_TEAM_FIELDS = {"team_id", "round", "condition", "duration_s", "members", "performance"}
_MEMBER_FIELDS = {"member_id", "viability_items"}


class ValidationError(ValueError):
    """Input data violates the corpus contract."""

    def __init__(self, message: str, path: str | Path | None = None, line: int | None = None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class DegenerateLabelWarning(UserWarning):
    """A percentile split left one class empty."""


@dataclass(frozen=True)
class ChatMessage:
    sender: str
    timestamp: float
    text: str


@dataclass(frozen=True)
class Transcript:
    team_id: str
    round: int
    condition: str
    roster: tuple[str, ...]
    messages: tuple[ChatMessage, ...]
    duration: float = DEFAULT_DURATION

    def __post_init__(self):
        if not ROSTER_MIN <= len(self.roster) <= ROSTER_MAX:
            raise ValidationError(
                f"team {self.team_id!r}: roster size {len(self.roster)} outside "
                f"{ROSTER_MIN}-{ROSTER_MAX}"
            )
        if len(set(self.roster)) != len(self.roster):
            raise ValidationError(f"team {self.team_id!r}: duplicate member ids in roster")
        if self.condition not in CONDITIONS:
            raise ValidationError(f"team {self.team_id!r}: unknown condition {self.condition!r}")
        if not 0 <= self.round <= 4:
            raise ValidationError(f"team {self.team_id!r}: round {self.round} outside 0-4")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValidationError(f"team {self.team_id!r}: duration must be positive")
        members = set(self.roster)
        prev = -math.inf
        for m in self.messages:
            if m.sender not in members:
                raise ValidationError(
                    f"team {self.team_id!r}: sender {m.sender!r} not in roster"
                )
            if not 0 <= m.timestamp <= self.duration:
                raise ValidationError(
                    f"team {self.team_id!r}: timestamp {m.timestamp} outside [0, {self.duration}]"
                )
            if m.timestamp < prev:
                raise ValidationError(f"team {self.team_id!r}: messages not sorted by timestamp")
            prev = m.timestamp


@dataclass(frozen=True)
class ViabilityRecord:
    team_id: str
    items: Mapping[str, tuple[int, ...]]
    performance: float | None = None

    def __post_init__(self):
        for member, answers in self.items.items():
            _check_items(answers, f"team {self.team_id!r} member {member!r}")

    def individual_scores(self) -> dict[str, int]:
        return {m: individual_viability(a) for m, a in self.items.items()}


@dataclass(frozen=True)
class Corpus:
    transcripts: Mapping[str, Transcript]
    viability: Mapping[str, ViabilityRecord]
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def team_ids(self) -> list[str]:
        return list(self.transcripts)

    @property
    def n_messages(self) -> int:
        return sum(len(t.messages) for t in self.transcripts.values())

    def scores(self) -> dict[str, float]:
        return {tid: team_viability(rec) for tid, rec in self.viability.items()}

    def performance(self) -> dict[str, float]:
        return {
            tid: rec.performance
            for tid, rec in self.viability.items()
            if rec.performance is not None
        }

    def rounds(self) -> dict[str, int]:
        return {tid: t.round for tid, t in self.transcripts.items()}

    def conditions(self) -> dict[str, str]:
        return {tid: t.condition for tid, t in self.transcripts.items()}

    def subset(self, team_ids: Iterable[str]) -> "Corpus":
        keep = list(team_ids)
        return Corpus(
            {t: self.transcripts[t] for t in keep},
            {t: self.viability[t] for t in keep},
        )


def _check_items(items: Sequence[int], what: str = "items") -> None:
    if len(items) != N_ITEMS:
        raise ValidationError(f"{what}: expected {N_ITEMS} items, got {len(items)}")
    for x in items:
        if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
            raise ValidationError(f"{what}: item {x!r} is not an integer")
        if not ITEM_MIN <= x <= ITEM_MAX:
            raise ValidationError(f"{what}: item {x} outside {ITEM_MIN}-{ITEM_MAX}")


def individual_viability(items: Sequence[int]) -> int:
    """Sum of one member's 14 instrument items (range 14-70)."""
    _check_items(items)
    return int(sum(items))


def team_viability(record: ViabilityRecord) -> float:
    """Mean of the members' individual scores."""
    if not record.items:
        raise ValidationError(f"team {record.team_id!r}: no members with viability items")
    scores = [individual_viability(a) for a in record.items.values()]
    return float(math.fsum(scores) / len(scores))


def percentile_cutoff(scores: Sequence[float], p: float) -> float:
    """Linear-interpolation percentile between closest ranks (inclusive method)."""
    if len(scores) == 0:
        raise ValueError("percentile of an empty score list")
    if not 0 < p < 100:
        raise ValueError(f"percentile must lie strictly between 0 and 100, got {p}")
    return float(np.percentile(np.asarray(scores, dtype=float), p, method="linear"))


def label_teams(scores: Mapping[str, float], p: float) -> dict[str, str]:
    """Split teams at the p-th percentile; a score equal to the cutoff is low."""
    cutoff = percentile_cutoff(list(scores.values()), p)
    labels = {tid: HIGH if s > cutoff else LOW for tid, s in scores.items()}
    n_high = sum(1 for v in labels.values() if v == HIGH)
    if n_high == 0 or n_high == len(labels):
        warnings.warn(
            f"percentile {p} (cutoff {cutoff}) leaves one class empty",
            DegenerateLabelWarning,
            stacklevel=2,
        )
    return labels


# ---------------------------------------------------------------- ingestion


def _read_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed JSON ({exc.msg})", path, lineno) from None
            if not isinstance(obj, dict):
                raise ValidationError("expected a JSON object", path, lineno)
            yield lineno, obj


def _require(obj: dict, key: str, types, path, lineno):
    if key not in obj:
        raise ValidationError(f"missing field {key!r}", path, lineno)
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, types):
        raise ValidationError(f"field {key!r} has wrong type", path, lineno)
    return value


def _unknown(obj: dict, known: set, path, lineno, notes: list[str]) -> None:
    extra = sorted(set(obj) - known)
    if extra:
        msg = f"{path}:{lineno}: ignoring unknown fields {extra}"
        log.warning(msg)
        notes.append(msg)


def load_corpus(messages_path: str | Path | None, teams_path: str | Path) -> Corpus:
    """Read and validate a messages/teams JSON Lines pair.

    ``messages_path=None`` reads only the team file (transcripts come back
    empty), which is enough for anything that needs scores or metadata.
    """
    teams_path = Path(teams_path)
    notes: list[str] = []
    teams: dict[str, dict] = {}

    for lineno, obj in _read_jsonl(teams_path):
        _unknown(obj, _TEAM_FIELDS, teams_path, lineno, notes)
        tid = _require(obj, "team_id", str, teams_path, lineno)
        if tid in teams:
            raise ValidationError(f"duplicate team_id {tid!r}", teams_path, lineno)
        rnd = _require(obj, "round", int, teams_path, lineno)
        cond = _require(obj, "condition", str, teams_path, lineno)
        duration = obj.get("duration_s", DEFAULT_DURATION)
        if duration is None:
            duration = DEFAULT_DURATION
        if isinstance(duration, bool) or not isinstance(duration, (int, float)):
            raise ValidationError("field 'duration_s' has wrong type", teams_path, lineno)
        perf = obj.get("performance")
        if perf is not None and (isinstance(perf, bool) or not isinstance(perf, (int, float))):
            raise ValidationError("field 'performance' has wrong type", teams_path, lineno)
        members = _require(obj, "members", list, teams_path, lineno)
        roster, items = [], {}
        for m in members:
            if not isinstance(m, dict):
                raise ValidationError("member entry must be an object", teams_path, lineno)
            _unknown(m, _MEMBER_FIELDS, teams_path, lineno, notes)
            mid = _require(m, "member_id", str, teams_path, lineno)
            answers = _require(m, "viability_items", list, teams_path, lineno)
            try:
                _check_items(answers, f"team {tid!r} member {mid!r}")
            except ValidationError as exc:
                raise ValidationError(str(exc), teams_path, lineno) from None
            roster.append(mid)
            items[mid] = tuple(int(a) for a in answers)
        if not ROSTER_MIN <= len(roster) <= ROSTER_MAX:
            raise ValidationError(
                f"team {tid!r}: roster size {len(roster)} outside {ROSTER_MIN}-{ROSTER_MAX}",
                teams_path,
                lineno,
            )
        teams[tid] = dict(
            round=rnd,
            condition=cond,
            duration=float(duration),
            roster=tuple(roster),
            items=items,
            performance=None if perf is None else float(perf),
            lineno=lineno,
            messages=[],
        )

    message_lines = () if messages_path is None else _read_jsonl(Path(messages_path))
    for lineno, obj in message_lines:
        _unknown(obj, _MESSAGE_FIELDS, messages_path, lineno, notes)
        tid = _require(obj, "team_id", str, messages_path, lineno)
        if tid not in teams:
            raise ValidationError(f"unknown team_id {tid!r}", messages_path, lineno)
        sender = _require(obj, "sender", str, messages_path, lineno)
        ts = _require(obj, "timestamp_s", (int, float), messages_path, lineno)
        text = _require(obj, "text", str, messages_path, lineno)
        if not math.isfinite(ts) or ts < 0:
            raise ValidationError(f"timestamp {ts} must be finite and >= 0", messages_path, lineno)
        if sender not in teams[tid]["roster"]:
            raise ValidationError(
                f"sender {sender!r} not in roster of team {tid!r}", messages_path, lineno
            )
        if ts > teams[tid]["duration"]:
            raise ValidationError(
                f"timestamp {ts} exceeds duration {teams[tid]['duration']} of team {tid!r}",
                messages_path,
                lineno,
            )
        teams[tid]["messages"].append(ChatMessage(sender, float(ts), text))

    transcripts, records = {}, {}
    for tid, t in teams.items():
        try:
            transcripts[tid] = Transcript(
                team_id=tid,
                round=t["round"],
                condition=t["condition"],
                roster=t["roster"],
                # sorted() is stable: equal timestamps keep file order
                messages=tuple(sorted(t["messages"], key=lambda m: m.timestamp)),
                duration=t["duration"],
            )
        except ValidationError as exc:
            raise ValidationError(str(exc), teams_path, t["lineno"]) from None
        records[tid] = ViabilityRecord(tid, t["items"], t["performance"])

    corpus = Corpus(transcripts, records, tuple(notes))
    log.info("loaded %d teams, %d messages", len(transcripts), corpus.n_messages)
    return corpus


def _num(x: float):
    return int(x) if float(x).is_integer() else x


def write_corpus(corpus: Corpus, messages_path: str | Path, teams_path: str | Path) -> None:
    """Serialize a corpus back to the JSON Lines pair read by load_corpus."""
    with open(teams_path, "w", encoding="utf-8", newline="\n") as fh:
        for tid, t in corpus.transcripts.items():
            rec = corpus.viability[tid]
            obj = {
                "team_id": tid,
                "round": t.round,
                "condition": t.condition,
                "duration_s": _num(t.duration),
                "members": [
                    {"member_id": m, "viability_items": list(rec.items[m])} for m in t.roster
                ],
            }
            if rec.performance is not None:
                obj["performance"] = rec.performance
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    with open(messages_path, "w", encoding="utf-8", newline="\n") as fh:
        for tid, t in corpus.transcripts.items():
            for m in t.messages:
                obj = {"team_id": tid, "sender": m.sender, "timestamp_s": m.timestamp, "text": m.text}
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
