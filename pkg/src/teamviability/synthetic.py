"""Seeded synthetic corpora with a planted viability signal.

Each team draws a latent standardized z. Its chat behavior follows u (equal
to z, except for reconvened teams under a condition shift) and its reported
viability follows v, a noisy copy of z. Message tokens are drawn from small
vocabulary pools whose rates move with u (exclusive words, second-person
pronouns and positive words up; sadness and negation words down) and
participation becomes more balanced as u grows. Instrument responses are
sampled so each member's item sum lands near the target implied by v.
All constants live in ``data/synthetic_calibration.json``.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .labels import QUESTION_IDS, RatingSubmission, write_ratings
from .transcript import (
    CONDITIONS,
    ITEM_MAX,
    ITEM_MIN,
    N_ITEMS,
    ChatMessage,
    Corpus,
    Transcript,
    ViabilityRecord,
    write_corpus,
)

MIN_TEAMS = 20


def load_calibration(path: str | Path | None = None) -> dict:
    if path is None:
        text = (resources.files("teamviability") / "data" / "synthetic_calibration.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    cal = json.loads(text)
    if cal.get("version") != 1:
        raise ValueError(f"unsupported calibration version {cal.get('version')!r}")
    return cal


def _items_for(total: int, rng: np.random.Generator) -> tuple[int, ...]:
    total = min(max(total, N_ITEMS * ITEM_MIN), N_ITEMS * ITEM_MAX)
    items = [ITEM_MIN] * N_ITEMS
    for _ in range(total - N_ITEMS * ITEM_MIN):
        open_ = [i for i, v in enumerate(items) if v < ITEM_MAX]
        items[open_[rng.integers(len(open_))]] += 1
    return tuple(items)


def _message_text(n_tokens, pool_probs, pools, filler, rng, mention, cal) -> str:
    names = list(pool_probs)
    probs = np.array([pool_probs[k] for k in names])
    words = []
    for _ in range(n_tokens):
        u = rng.random()
        acc = 0.0
        chosen = None
        for name, p in zip(names, probs):
            acc += p
            if u < acc:
                chosen = pools[name]
                break
        vocab = filler if chosen is None else chosen
        words.append(vocab[rng.integers(len(vocab))])
    if mention is not None:
        words.insert(int(rng.integers(len(words) + 1)), mention)
    text = " ".join(words)
    if rng.random() < cal["messages"]["question_rate"]:
        text += "?"
    elif rng.random() < 0.5:
        text += "."
    return text[0].upper() + text[1:] if rng.random() < 0.5 else text


def generate_synthetic_corpus(
    n_teams: int,
    effect: float = 1.0,
    condition_shift: float = 0.0,
    seed: int = 0,
    calibration: dict | None = None,
) -> tuple[Corpus, list[RatingSubmission]]:
    """Return (corpus, rating submissions); deterministic given the arguments.

    ``condition_shift`` in [0, 1] mixes reconvened teams' behavioral latent
    with independent noise, weakening the link between their chat and their
    viability.
    """
    if n_teams < MIN_TEAMS:
        raise ValueError(f"n_teams must be at least {MIN_TEAMS}")
    if not (effect >= 0 and math.isfinite(effect)):
        raise ValueError("effect must be a finite non-negative number")
    if not 0.0 <= condition_shift <= 1.0:
        raise ValueError("condition_shift must lie in [0, 1]")
    cal = load_calibration() if calibration is None else calibration
    duration = float(cal["duration_s"])
    lo_size, hi_size = cal["team_size"]
    via = cal["viability"]
    pools = {k: v["words"] for k, v in cal["pools"].items()}
    filler = cal["filler"]
    cond_names = list(cal["conditions"])
    cond_p = np.array([cal["conditions"][c] for c in cond_names], dtype=float)
    if any(c not in CONDITIONS for c in cond_names):
        raise ValueError("calibration names an unknown condition")
    cond_p /= cond_p.sum()
    raters = cal["raters"]

    transcripts, records, ratings = {}, {}, []
    width = len(str(n_teams))
    for i in range(n_teams):
        # independent streams per team: changing one team's behavior never moves another's
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0, i]))
        rater_rng = np.random.default_rng(np.random.SeedSequence([seed, 1, i]))
        tid = f"T{i + 1:0{width}d}"
        size = int(rng.integers(lo_size, hi_size + 1))
        roster = tuple(f"Person{m + 1}" for m in range(size))
        condition = cond_names[int(rng.choice(len(cond_names), p=cond_p))]
        rnd = int(rng.integers(1, 5))
        z = float(rng.standard_normal())
        noise = float(rng.standard_normal())
        u = (1 - condition_shift) * z + condition_shift * noise if condition == "reconvened" else z
        rho = via["behavior_corr"]
        v = rho * z + math.sqrt(1 - rho * rho) * float(rng.standard_normal())

        target = float(np.clip(via["center"] + via["scale"] * v, via["min"], via["max"]))
        items = {}
        for m in roster:
            indiv = int(round(target + via["member_sd"] * rng.standard_normal()))
            items[m] = _items_for(indiv, rng)
        perf = None
        if rng.random() < cal["performance"]["fraction"]:
            w = cal["performance"]["viability_weight"]
            perf = round(float(w * v + math.sqrt(1 - w * w) * rng.standard_normal()), 6)

        # rates respond log-linearly to u, more steeply above tail_start
        tail = cal["tail"]["boost"] * max(u - cal["tail"]["start"], 0.0)
        pool_probs = {
            k: pool["base"] * math.exp(effect * (pool["slope"] * u + math.copysign(tail, pool["slope"])))
            for k, pool in cal["pools"].items()
        }
        mass = sum(pool_probs.values())
        if mass > cal["messages"]["max_pool_mass"]:
            pool_probs = {k: p * cal["messages"]["max_pool_mass"] / mass for k, p in pool_probs.items()}
        part = cal["participation"]
        alpha = part["alpha"] * math.exp(effect * (part["slope"] * u + tail))
        weights = rng.dirichlet([alpha] * size)
        n_msgs = max(size, int(rng.poisson(cal["messages"]["per_team_mean"])))
        senders = rng.choice(size, size=n_msgs, p=weights)
        times = np.sort(np.round(rng.uniform(0.0, duration, size=n_msgs), 1))
        msgs = []
        for s, t in zip(senders, times):
            n_tok = 1 + int(rng.poisson(cal["messages"]["tokens_per_message_mean"] - 1))
            mention = None
            if rng.random() < cal["messages"]["mention_rate"]:
                others = [r for r in range(size) if r != s]
                mention = roster[others[int(rng.integers(len(others)))]].lower()
            text = _message_text(n_tok, pool_probs, pools, filler, rng, mention, cal)
            msgs.append(ChatMessage(roster[int(s)], float(min(t, duration)), text))
        transcripts[tid] = Transcript(tid, rnd, condition, roster, tuple(msgs), duration)
        records[tid] = ViabilityRecord(tid, items, perf)

        # raters have their own stream so they never perturb the transcripts;
        # inattentive raters come on top of the attentive ones, so every team keeps enough
        n_pass = int(rater_rng.integers(raters["min"], raters["max"] + 1))
        n_fail = int(rater_rng.binomial(n_pass, raters["attention_fail_rate"]))
        kinds = [True] * n_pass + [False] * n_fail
        rater_rng.shuffle(kinds)
        for r, passes in enumerate(kinds):
            attention = size if passes else size + int(rater_rng.choice([-1, 1]))
            answers = {}
            for q, qid in enumerate(QUESTION_IDS):
                sign = 1 if q % 2 == 0 else -1
                raw = 3 + raters["human_effect"] * sign * v + rater_rng.standard_normal()
                answers[qid] = int(np.clip(round(raw), 1, 5))
            ratings.append(RatingSubmission(tid, f"R{i + 1}_{r + 1}", attention, answers))

    return Corpus(transcripts, records), ratings


def write_synthetic_corpus(corpus: Corpus, ratings, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "transcripts": out / "messages.jsonl",
        "teams": out / "teams.jsonl",
        "ratings": out / "ratings.jsonl",
    }
    write_corpus(corpus, paths["transcripts"], paths["teams"])
    write_ratings(ratings, paths["ratings"])
    return paths
