"""Tokenization and category-lexicon matching.

Lexicon files are plain UTF-8 text, one category per file::

    #name: exclusive
    # comment lines are ignored
    but
    except*

A ``#type: sentiment`` header switches entries to
``term<TAB>polarity<TAB>subjectivity``. A trailing ``*`` makes an entry a
prefix pattern.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

# Table-1 word-choice categories, in feature-registry order.
WORD_CHOICE_CATEGORIES = (
    "anger",
    "anxiety",
    "sadness",
    "articles",
    "conjunctions",
    "prepositions",
    "inclusive",
    "exclusive",
    "quantifiers",
    "certainty",
    "discrepancies",
    "negation",
    "tentativeness",
    "first_singular",
    "first_plural",
    "second_person",
    "indefinite_pronouns",
    "adverbs",
    "social",
)
ARGUE = "argue"
SENTIMENT = "sentiment"
EASY_WORDS = "easy_words"
REQUIRED_LEXICONS = WORD_CHOICE_CATEGORIES + (ARGUE, SENTIMENT, EASY_WORDS)

_TOKEN_RE = re.compile(r"(?:[^\W_]|')+")
_SENTENCE_END_RE = re.compile(r"[.!?]+")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'"})


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class TokenStream:
    """Lowercased tokens plus sentence structure.

    ``sentence_ends[i]`` is the exclusive token index closing sentence i.
    ``offsets`` are character offsets into the normalized source text.
    """

    tokens: tuple[str, ...] = ()
    sentence_ends: tuple[int, ...] = ()
    offsets: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n_sentences(self) -> int:
        return len(self.sentence_ends)

    def __add__(self, other: "TokenStream") -> "TokenStream":
        n = len(self.tokens)
        return TokenStream(
            self.tokens + other.tokens,
            self.sentence_ends + tuple(n + e for e in other.sentence_ends),
            self.offsets + other.offsets,
        )


def concat(streams: Iterable[TokenStream]) -> TokenStream:
    tokens: list[str] = []
    ends: list[int] = []
    offsets: list[int] = []
    for s in streams:
        n = len(tokens)
        tokens.extend(s.tokens)
        ends.extend(n + e for e in s.sentence_ends)
        offsets.extend(s.offsets)
    return TokenStream(tuple(tokens), tuple(ends), tuple(offsets))


def normalize(text: str) -> str:
    """Strip accents (canonical decomposition, drop combining marks) and lowercase."""
    decomposed = unicodedata.normalize("NFD", text.translate(_APOSTROPHES))
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return stripped.lower()


def tokenize(text: str) -> TokenStream:
    norm = normalize(text)
    tokens: list[str] = []
    offsets: list[int] = []
    ends: list[int] = []
    pos = 0
    for seg in _SENTENCE_END_RE.finditer(norm + "."):
        for m in _TOKEN_RE.finditer(norm, pos, min(seg.start(), len(norm))):
            tok = m.group().strip("'")
            if tok:
                tokens.append(tok)
                offsets.append(m.start() + m.group().index(tok[0]))
        if tokens and (not ends or ends[-1] < len(tokens)):
            ends.append(len(tokens))
        pos = seg.end()
    return TokenStream(tuple(tokens), tuple(ends), tuple(offsets))


@dataclass(frozen=True)
class CategoryLexicon:
    name: str
    entries: frozenset[str]
    polarity: Mapping[str, float] = field(default_factory=dict)
    subjectivity: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.entries:
            raise LexiconError(f"lexicon {self.name!r} has no entries")
        for e in self.entries:
            _check_entry(e)
        for term, p in self.polarity.items():
            if not -1.0 <= p <= 1.0:
                raise LexiconError(f"{self.name}: polarity of {term!r} outside [-1, 1]")
        for term, s in self.subjectivity.items():
            if not 0.0 <= s <= 1.0:
                raise LexiconError(f"{self.name}: subjectivity of {term!r} outside [0, 1]")
        exact = {e for e in self.entries if not e.endswith("*")}
        prefixes = tuple(sorted((e[:-1] for e in self.entries if e.endswith("*")), key=len))
        object.__setattr__(self, "_exact", frozenset(exact))
        object.__setattr__(self, "_prefixes", prefixes)

    @property
    def is_sentiment(self) -> bool:
        return bool(self.polarity)

    def match(self, token: str) -> str | None:
        """Entry matching ``token``: an exact entry wins, else the longest prefix."""
        if token in self._exact:
            return token
        best = None
        for p in self._prefixes:
            if token.startswith(p):
                best = p + "*"
        return best

    def __contains__(self, token: str) -> bool:
        return self.match(token) is not None


def _check_entry(entry: str) -> None:
    if not entry or any(ch.isspace() for ch in entry):
        raise LexiconError(f"malformed entry {entry!r}")
    if "*" in entry[:-1] or entry == "*":
        raise LexiconError(f"malformed entry {entry!r}: '*' only allowed once, at the end")
    if entry != entry.lower():
        raise LexiconError(f"entry {entry!r} must be lowercase")


def count_category(tokens: TokenStream | Sequence[str], lex: CategoryLexicon) -> int:
    toks = tokens.tokens if isinstance(tokens, TokenStream) else tokens
    return sum(1 for t in toks if t in lex)


# ------------------------------------------------------------------ loading


def parse_lexicon(text: str, source: str = "<string>") -> CategoryLexicon:
    name = None
    kind = "category"
    entries: set[str] = set()
    polarity: dict[str, float] = {}
    subjectivity: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            key = key.strip().lower()
            if sep and key == "name":
                name = value.strip()
            elif sep and key == "type":
                kind = value.strip().lower()
            continue
        if name is None:
            raise LexiconError(f"{source}:{lineno}: entry before '#name:' header")
        if kind == "sentiment":
            parts = raw.strip().split("\t")
            if len(parts) != 3:
                raise LexiconError(
                    f"{source}:{lineno}: sentiment entry needs term<TAB>polarity<TAB>subjectivity"
                )
            term = parts[0]
            try:
                pol, subj = float(parts[1]), float(parts[2])
            except ValueError:
                raise LexiconError(f"{source}:{lineno}: non-numeric sentiment value") from None
            polarity[term], subjectivity[term] = pol, subj
        else:
            term = line
        try:
            _check_entry(term)
        except LexiconError as exc:
            raise LexiconError(f"{source}:{lineno}: {exc}") from None
        if term in entries:
            raise LexiconError(f"{source}:{lineno}: duplicate entry {term!r}")
        entries.add(term)
    if name is None:
        raise LexiconError(f"{source}: missing '#name:' header")
    try:
        return CategoryLexicon(name, frozenset(entries), polarity, subjectivity)
    except LexiconError as exc:
        raise LexiconError(f"{source}: {exc}") from None


def load_lexicon_file(path: str | Path) -> CategoryLexicon:
    path = Path(path)
    return parse_lexicon(path.read_text(encoding="utf-8"), str(path))


def default_lexicon_dir():
    return resources.files("teamviability") / "data" / "lexicons"


def load_lexicon_dir(path=None, required: Sequence[str] = REQUIRED_LEXICONS) -> dict[str, CategoryLexicon]:
    """Load every ``*.txt`` lexicon in a directory, keyed by category name.

    ``path=None`` loads the bundled open lexicons.
    """
    root = default_lexicon_dir() if path is None else Path(path)
    if not root.is_dir():
        raise LexiconError(f"{root}: not a directory")
    lexicons: dict[str, CategoryLexicon] = {}
    for f in sorted((p for p in root.iterdir() if p.name.endswith(".txt")), key=lambda p: p.name):
        lex = parse_lexicon(f.read_text(encoding="utf-8"), str(f))
        if lex.name in lexicons:
            raise LexiconError(f"{f}: duplicate category name {lex.name!r}")
        lexicons[lex.name] = lex
    missing = [name for name in required if name not in lexicons]
    if missing:
        raise LexiconError(f"{root}: missing required categories {missing}")
    if SENTIMENT in lexicons and not lexicons[SENTIMENT].is_sentiment:
        raise LexiconError(f"{root}: lexicon {SENTIMENT!r} must be '#type: sentiment'")
    return lexicons
