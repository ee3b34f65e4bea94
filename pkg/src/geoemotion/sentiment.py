"""Per-message emotion scoring.

Two independent instruments:

* a SentiStrength-style dual scale, positive P in [1, 5] and negative N in
  [-5, -1], driven by a term/booster/negator/emoticon/idiom lexicon;
* valence/arousal/dominance means over lemmas found in a VAD norms lexicon.

Scoring rules for the dual scale, applied to the stream of tokens that
play some role in the lexicon (everything else is skipped, so unknown
words never change a score):

1. idioms are matched first, longest phrase wins, and score as one unit;
2. remaining words and emoticons take their lexicon strength;
3. a booster directly before a scored unit adds its offset to the
   magnitude;
4. a negator among the two units before a scored unit neutralizes a
   positive to +1 and halves a negative's magnitude (floor, never below 1);
5. an elongated spelling adds 1 to the magnitude of a unit that was not
   neutralized;
6. P is the largest positive strength, N the most negative one.

Magnitudes are clamped to [1, 5] after every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .ingest import GeoMessage, SentimentLexicon, VadLexicon
from .parallel import map_chunks
from .tokenize import EMOTICON, WORD_KINDS, Lemmatizer, Token, tokenize

NEGATION_WINDOW = 2

_SCORE, _BOOST, _NEGATE, _OTHER = range(4)


@dataclass(frozen=True, slots=True)
class SentimentScore:
    positive: int = 1
    negative: int = -1


@dataclass(frozen=True, slots=True)
class VadScore:
    valence: float
    arousal: float
    dominance: float
    matched_terms: int


@dataclass(frozen=True, slots=True)
class MessageScore:
    message_id: str
    sentiment: SentimentScore
    vad: Optional[VadScore]


def _clamp(magnitude: int) -> int:
    return 1 if magnitude < 1 else 5 if magnitude > 5 else magnitude


def _word_key(token: Token, lexicon: SentimentLexicon) -> Optional[str]:
    for form in token.variants():
        if lexicon.knows_word(form):
            return form
    return None


def _relevant(tokens: Sequence[Token], lexicon: SentimentLexicon):
    """(key, token) for tokens that matter to the lexicon, in order."""
    out = []
    for tok in tokens:
        if tok.kind in WORD_KINDS:
            key = _word_key(tok, lexicon)
            if key is not None:
                out.append((key, tok))
        elif tok.kind == EMOTICON and tok.surface in lexicon.emoticons:
            out.append((tok.surface, tok))
    return out


def _units(relevant, lexicon: SentimentLexicon):
    """Collapse the relevant stream into (role, value, elongated) units."""
    units = []
    i = 0
    n = len(relevant)
    max_len = lexicon.max_idiom_len
    while i < n:
        key, tok = relevant[i]
        if tok.kind == EMOTICON:
            units.append((_SCORE, lexicon.emoticons[key], False))
            i += 1
            continue
        matched = False
        for span in range(min(max_len, n - i), 0, -1):
            window = relevant[i : i + span]
            if any(t.kind == EMOTICON for _, t in window):
                continue
            phrase = tuple(k for k, _ in window)
            strength = lexicon.idioms.get(phrase)
            if strength is not None:
                units.append((_SCORE, strength, any(t.elongated for _, t in window)))
                i += span
                matched = True
                break
        if matched:
            continue
        strength = lexicon.term_strength(key)
        if strength is not None:
            units.append((_SCORE, strength, tok.elongated))
        elif key in lexicon.boosters:
            units.append((_BOOST, lexicon.boosters[key], False))
        elif key in lexicon.negators:
            units.append((_NEGATE, 0, False))
        else:
            units.append((_OTHER, 0, False))
        i += 1
    return units


def score_sentistrength(tokens: Sequence[Token], lexicon: SentimentLexicon) -> SentimentScore:
    units = _units(_relevant(tokens, lexicon), lexicon)
    positive, negative = 1, -1
    for j, (role, strength, elongated) in enumerate(units):
        if role != _SCORE:
            continue
        sign = 1 if strength > 0 else -1
        magnitude = abs(strength)
        if j > 0 and units[j - 1][0] == _BOOST:
            magnitude = _clamp(magnitude + units[j - 1][1])
        negated = any(units[k][0] == _NEGATE for k in range(max(0, j - NEGATION_WINDOW), j))
        neutralized = False
        if negated:
            if sign > 0:
                magnitude, neutralized = 1, True
            else:
                magnitude = max(1, magnitude // 2)
        if elongated and not neutralized:
            magnitude = _clamp(magnitude + 1)
        if sign > 0:
            positive = max(positive, magnitude)
        else:
            negative = min(negative, -magnitude)
    return SentimentScore(positive, negative)


def vad_lemmas(tokens: Iterable[Token], lexicon: VadLexicon, lemmatizer: Lemmatizer) -> list[str]:
    """Lexicon lemmas matched by the word tokens, repeats kept."""
    entries = lexicon.entries
    out = []
    for tok in tokens:
        if tok.kind not in WORD_KINDS:
            continue
        for form in tok.variants():
            lemma = lemmatizer.lemmatize(form, entries)
            if lemma is not None:
                out.append(lemma)
                break
    return out


def score_vad(
    tokens: Iterable[Token], lexicon: VadLexicon, lemmatizer: Optional[Lemmatizer] = None
) -> Optional[VadScore]:
    lemmas = vad_lemmas(tokens, lexicon, lemmatizer or Lemmatizer())
    if not lemmas:
        return None
    triples = [lexicon.entries[lemma] for lemma in lemmas]
    n = len(triples)
    return VadScore(
        valence=math.fsum(t[0] for t in triples) / n,
        arousal=math.fsum(t[1] for t in triples) / n,
        dominance=math.fsum(t[2] for t in triples) / n,
        matched_terms=n,
    )


class Scorer:
    """Lexicons plus lemmatizer, applied to whole messages."""

    def __init__(self, sentiment: SentimentLexicon, vad: VadLexicon, lemmatizer: Optional[Lemmatizer] = None):
        self.sentiment = sentiment
        self.vad = vad
        self.lemmatizer = lemmatizer or Lemmatizer()

    def score_text(self, text: str) -> tuple[SentimentScore, Optional[VadScore]]:
        tokens = tokenize(text)
        return (
            score_sentistrength(tokens, self.sentiment),
            score_vad(tokens, self.vad, self.lemmatizer),
        )

    def score_message(self, message: GeoMessage) -> MessageScore:
        sentiment, vad = self.score_text(message.text)
        return MessageScore(message.message_id, sentiment, vad)


_WORKER_SCORER: Optional[Scorer] = None


def _init_worker(scorer: Scorer) -> None:
    global _WORKER_SCORER
    _WORKER_SCORER = scorer


def _score_chunk(messages: list[GeoMessage]) -> list[MessageScore]:
    return [_WORKER_SCORER.score_message(m) for m in messages]


def score_messages(messages: Sequence[GeoMessage], scorer: Scorer, workers: int = 1) -> list[MessageScore]:
    """Score a corpus; output is ordered by message_id whatever the worker count."""
    scores = map_chunks(_score_chunk, list(messages), workers, initializer=_init_worker, initargs=(scorer,))
    scores.sort(key=lambda s: s.message_id)
    return scores


def lexicon_coverage(corpus: Iterable, lexicon: VadLexicon, lemmatizer: Optional[Lemmatizer] = None) -> float:
    """Fraction of messages (or texts) with at least one VAD-matched term."""
    lemmatizer = lemmatizer or Lemmatizer()
    total = covered = 0
    for item in corpus:
        text = item.text if isinstance(item, GeoMessage) else item
        total += 1
        if vad_lemmas(tokenize(text), lexicon, lemmatizer):
            covered += 1
    if total == 0:
        raise ValueError("coverage of an empty corpus is undefined")
    return covered / total
