"""Tweet tokenizer and rule-based lemmatizer.

The tokenizer never drops characters: every non-whitespace character of the
input belongs to exactly one token, so the text is recoverable from token
offsets plus the whitespace between them.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

WORD = "word"
EMOTICON = "emoticon"
URL = "url"
MENTION = "mention"
HASHTAG = "hashtag-word"
PUNCT = "punctuation"

WORD_KINDS = frozenset({WORD, HASHTAG})

_EYES = r"[:;=]"
_NOSE = r"[\-o'^]?"
_MOUTH = r"[)\](\[dDpP/\\|}{3*oO@]"

_EMOTICON = "|".join(
    [
        r"</?3+",
        r">?" + _EYES + _NOSE + _MOUTH,
        r"(?<![^\W_])[xX][\-]?[dDpP](?![^\W_])",
        r"[(\[]" + _NOSE + _EYES,
        r"\^_*\^",
        r"-_+-",
        r"(?<![^\W_])[oO0]_[oO0](?![^\W_])",
    ]
)

_TOKEN_RE = re.compile(
    r"(?P<url>(?:https?://|www\.)\S+)"
    r"|(?P<mention>@\w+)"
    r"|(?P<hashtag>#\w+)"
    r"|(?P<emoticon>(?:" + _EMOTICON + r")(?![a-zA-Z0-9]))"
    r"|(?P<word>[^\W_]+(?:['’][^\W_]+)*)"
    r"|(?P<punct>(?P<pc>[^\w\s])(?P=pc)*|_+)",
    re.UNICODE,
)

_KIND_BY_GROUP = {
    "url": URL,
    "mention": MENTION,
    "hashtag": HASHTAG,
    "emoticon": EMOTICON,
    "word": WORD,
    "punct": PUNCT,
}

_ELONGATION = re.compile(r"([^\W\d_])\1{2,}", re.UNICODE)
MAX_VARIANT_RUNS = 4


@dataclass(frozen=True, slots=True)
class Token:
    surface: str
    normalized: str
    kind: str
    start: int
    elongated: bool = False

    @property
    def end(self) -> int:
        return self.start + len(self.surface)

    def variants(self) -> list[str]:
        """Lookup keys for a word token, most literal first.

        Each elongated letter run may stand for a single or a double letter,
        so "happpyyy" yields "happyy", "happy", "hapyy", "hapy". This is the
        misspelling fallback for emphatic spellings.
        """
        if not self.elongated:
            return [self.normalized]
        word = self.surface[1:] if self.kind == HASHTAG else self.surface
        parts = _ELONGATION.split(word.lower().replace("’", "'"))
        letters = parts[1::2]
        free = min(len(letters), MAX_VARIANT_RUNS)
        out = []
        for lengths in itertools.product((2, 1), repeat=free):
            lengths += (2,) * (len(letters) - free)
            pieces = list(parts)
            for i, n in enumerate(lengths):
                pieces[2 * i + 1] = letters[i] * n
            out.append("".join(pieces))
        return out


def _normalize_word(word: str) -> tuple[str, bool]:
    lowered = word.lower().replace("’", "'")
    collapsed = _ELONGATION.sub(r"\1\1", lowered)
    return collapsed, collapsed != lowered


def tokenize(text: str) -> list[Token]:
    tokens = []
    for match in _TOKEN_RE.finditer(text):
        group = match.lastgroup
        surface = match.group()
        kind = _KIND_BY_GROUP[group]
        elongated = False
        if kind == WORD:
            normalized, elongated = _normalize_word(surface)
        elif kind == HASHTAG:
            normalized, elongated = _normalize_word(surface[1:])
        elif kind == MENTION:
            normalized = surface.lower()
        else:
            normalized = surface
        tokens.append(Token(surface, normalized, kind, match.start(), elongated))
    return tokens


class Lemmatizer:
    """Inflection stripper for English lemma-keyed lexicons.

    Candidate lemmas are generated from an exception table and a handful of
    suffix rules (-s, -es, -ies, -ing, -ed, possessive 's). When a
    vocabulary is given the first candidate it contains wins, so the rules
    never have to decide between "ride"/"rid" on their own.
    """

    def __init__(self, exceptions: Optional[dict[str, str]] = None):
        self.exceptions = dict(exceptions or {})

    def candidates(self, word: str) -> list[str]:
        out = [word]
        if word.endswith("'s") and len(word) > 2:
            word = word[:-2]
            out.append(word)
        irregular = self.exceptions.get(word)
        if irregular:
            out.append(irregular)
        n = len(word)
        if n > 4 and word.endswith("ies"):
            out.append(word[:-3] + "y")
        if n > 3 and word.endswith("es"):
            out.append(word[:-2])
        if n > 2 and word.endswith("s") and not word.endswith("ss"):
            out.append(word[:-1])
        if n > 4 and word.endswith("ing"):
            out.extend(_stem_variants(word[:-3]))
        if n > 4 and word.endswith("ied"):
            out.append(word[:-3] + "y")
        if n > 3 and word.endswith("ed"):
            out.append(word[:-1])
            out.extend(_stem_variants(word[:-2]))
        seen = set()
        return [c for c in out if not (c in seen or seen.add(c))]

    def lemmatize(self, word: str, vocabulary=None) -> Optional[str]:
        """Return the lemma of ``word``.

        Without a vocabulary this is the irregular form or the word itself;
        with one it is the first candidate found there, or None.
        """
        if vocabulary is None:
            return self.exceptions.get(word, word)
        for cand in self.candidates(word):
            if cand in vocabulary:
                return cand
        return None


def _stem_variants(stem: str) -> list[str]:
    out = [stem, stem + "e"]
    if len(stem) > 2 and stem[-1] == stem[-2] and stem[-1] not in "aeiouls":
        out.append(stem[:-1])
    return out


def iter_words(tokens: Iterable[Token]) -> Iterator[Token]:
    return (t for t in tokens if t.kind in WORD_KINDS)
