"""Caption scoring against an affective word-norm lexicon."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Mapping, NamedTuple

from .dataset import ParseError, ValidationError

# letters only: digits, underscores, apostrophes and hyphens all split tokens
_TOKEN = re.compile(r"[^\W\d_]+")

# accepted header spellings for the two consumed columns
_WORD_COLS = ("word", "Word")
_VALENCE_COLS = ("valence_mean", "V.Mean.Sum")
_AROUSAL_COLS = ("arousal_mean", "A.Mean.Sum")


class LexiconEntry(NamedTuple):
    valence: float
    arousal: float


@dataclass(frozen=True)
class AffectLexicon:
    entries: Mapping[str, LexiconEntry]
    scale: tuple[float, float] = (1.0, 9.0)

    def __post_init__(self):
        lo, hi = self.scale
        norm = {}
        for word, (v, a) in self.entries.items():
            for val in (v, a):
                if not (lo <= val <= hi):
                    raise ValidationError(f"lexicon score {val} for {word!r} outside [{lo}, {hi}]")
            norm[word.lower()] = LexiconEntry(float(v), float(a))
        object.__setattr__(self, "entries", norm)

    @property
    def size(self) -> int:
        return len(self.entries)

    def get(self, word: str) -> LexiconEntry | None:
        return self.entries.get(word.lower())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries


def _pick(fieldnames, options, path):
    for o in options:
        if o in fieldnames:
            return o
    raise ParseError(f"missing column, expected one of {options}", path, 1)


def load_lexicon(path: str | Path, scale: tuple[float, float] = (1.0, 9.0)) -> AffectLexicon:
    """Read ``word,valence_mean,arousal_mean`` (extra columns ignored)."""
    path = str(path)
    entries = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        wc = _pick(fields, _WORD_COLS, path)
        vc = _pick(fields, _VALENCE_COLS, path)
        ac = _pick(fields, _AROUSAL_COLS, path)
        for lineno, row in enumerate(reader, start=2):
            try:
                entries[row[wc].strip().lower()] = LexiconEntry(float(row[vc]), float(row[ac]))
            except (TypeError, ValueError):
                raise ParseError("bad lexicon row", path, lineno) from None
    return AffectLexicon(entries, scale)


def tokenize(text: str, stopwords: Iterable[str] | None = None,
             stemmer: Callable[[str], str] | None = None) -> list[str]:
    """Lowercase and split on every non-letter character."""
    tokens = _TOKEN.findall(text.lower())
    if stopwords is not None:
        stop = {w.lower() for w in stopwords}
        tokens = [t for t in tokens if t not in stop]
    if stemmer is not None:
        tokens = [stemmer(t) for t in tokens]
    return tokens


def light_stem(token: str) -> str:
    """Strip a few common English inflections; a crude optional stemmer."""
    for suffix in ("ing", "ed", "es", "s"):
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    return token


class TextScore(NamedTuple):
    valence: float | None
    arousal: float | None
    coverage: float
    n_tokens: int
    n_matched: int


def score_text(text: str, lexicon: AffectLexicon, stopwords: Iterable[str] | None = None,
               stemmer: Callable[[str], str] | None = None) -> TextScore:
    """Mean lexicon valence/arousal over matched tokens, with multiplicity."""
    if lexicon.size == 0:
        raise ValidationError("lexicon is empty")
    tokens = tokenize(text, stopwords, stemmer)
    hits = [e for e in (lexicon.get(t) for t in tokens) if e is not None]
    coverage = len(hits) / len(tokens) if tokens else 0.0
    if not hits:
        return TextScore(None, None, coverage, len(tokens), 0)
    return TextScore(math.fsum(h.valence for h in hits) / len(hits),
                     math.fsum(h.arousal for h in hits) / len(hits),
                     coverage, len(tokens), len(hits))


def _mean_threshold(values: Mapping[str, float]) -> dict[str, str]:
    mean = sum((Fraction(v) for v in values.values()), Fraction(0)) / len(values)
    return {k: ("H" if Fraction(v) > mean else "L") for k, v in values.items()}


def label_corpus(scores: Mapping[str, tuple[float | None, float | None] | None]
                 ) -> dict[str, tuple[str, str] | None]:
    """H/L valence and arousal labels by thresholding at the corpus mean.

    Ads whose score is missing are left out of the mean and labelled
    ``None``. A score equal to the mean is labelled L.
    """
    present = {ad: s for ad, s in scores.items()
               if s is not None and s[0] is not None and s[1] is not None}
    if not present:
        raise ValidationError("all scores missing")
    if len(present) < 2:
        raise ValidationError("need at least two ads with scores")
    v_lab = _mean_threshold({ad: s[0] for ad, s in present.items()})
    a_lab = _mean_threshold({ad: s[1] for ad, s in present.items()})
    return {ad: ((v_lab[ad], a_lab[ad]) if ad in present else None) for ad in scores}


def load_captions(path: str | Path) -> dict[str, str]:
    """Read ``ad_id,caption`` rows; the caption column may also be ``caption_text``."""
    path = str(path)
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "ad_id" not in fields:
            raise ParseError("missing ad_id column", path, 1)
        col = _pick(fields, ("caption", "caption_text"), path)
        for row in reader:
            out[row["ad_id"].strip()] = row[col] or ""
    return out
