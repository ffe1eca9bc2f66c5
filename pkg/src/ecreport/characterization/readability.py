"""Sentence counts, readability indices and abstractiveness.

All three indices use the classic published constants:

* FKGL = 0.39 * words/sentences + 11.8 * syllables/words - 15.59
* CLI  = 0.0588 * L - 0.296 * S - 15.8   (L, S = letters, sentences per 100 words)
* ARI  = 4.71 * characters/words + 0.5 * words/sentences - 21.43
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from statistics import fmean
from typing import Iterable, Sequence

from ecreport.model import EcReportError

WORD_RE = re.compile(r"[A-Za-z0-9]+(?:['’.,\-][A-Za-z0-9]+)*")
_TERMINATOR_RE = re.compile(r"[.!?]+")
_CLOSERS = "\"'”’)]"
_VOWELS = frozenset("aeiouy")

DEFAULT_ABBREVIATIONS = frozenset({
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "mt",
    "inc", "corp", "co", "ltd", "llc", "plc", "bros", "vs",
    "e.g", "i.e", "approx", "est", "avg", "dept", "fig",
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
    "u.s", "u.k", "u.n", "e.u",
})


class EmptyText(EcReportError):
    pass


def words(text: str) -> list[str]:
    return WORD_RE.findall(text)


def sentence_count(text: str, abbreviations: Iterable[str] = DEFAULT_ABBREVIATIONS) -> int:
    """Number of sentences in ``text``.

    A run of ``.``, ``!`` or ``?`` ends a sentence when it is followed by
    whitespace or the end of the text (closing quotes and brackets may sit in
    between). A lone period after a listed abbreviation or a single-letter
    initial does not. Decimal points never qualify since a digit follows them.
    Segments without any word are not counted.
    """
    abbrevs = {a.lower().rstrip(".") for a in abbreviations}
    count = 0
    start = 0
    for m in _TERMINATOR_RE.finditer(text):
        end = m.end()
        while end < len(text) and text[end] in _CLOSERS:
            end += 1
        if end < len(text) and not text[end].isspace():
            continue
        if m.group() == "." and end < len(text):
            prev = re.search(r"[A-Za-z][A-Za-z.]*$", text[start:m.start()])
            if prev and (prev.group().lower() in abbrevs or len(prev.group()) == 1):
                continue
        if WORD_RE.search(text, start, m.start()):
            count += 1
        start = end
    if WORD_RE.search(text, start):
        count += 1
    return count


def syllables(word: str) -> int:
    """Vowel-group syllable estimate, never less than 1.

    Counts maximal runs of vowel letters (``y`` included), then drops a silent
    final ``e`` that follows a consonant, except in a consonant + ``le`` ending.
    """
    w = "".join(ch for ch in word.lower() if ch.isalpha())
    if not w:
        return 1
    count = 0
    prev_vowel = False
    for ch in w:
        is_vowel = ch in _VOWELS
        if is_vowel and not prev_vowel:
            count += 1
        prev_vowel = is_vowel
    if len(w) >= 2 and w[-1] == "e" and w[-2] not in _VOWELS:
        consonant_le = w[-2] == "l" and len(w) >= 3 and w[-3] not in _VOWELS
        if not consonant_le:
            count -= 1
    return max(1, count)


@dataclass(frozen=True)
class TextCounts:
    words: int
    sentences: int
    syllables: int
    letters: int
    characters: int


def text_counts(text: str) -> TextCounts:
    toks = words(text)
    return TextCounts(
        words=len(toks),
        sentences=sentence_count(text),
        syllables=sum(syllables(t) for t in toks),
        letters=sum(ch.isalpha() for t in toks for ch in t),
        characters=sum(ch.isalnum() for t in toks for ch in t),
    )


def _counts_or_raise(text: str) -> TextCounts:
    c = text_counts(text)
    if c.words == 0 or c.sentences == 0:
        raise EmptyText("text has no words")
    return c


def fkgl(text: str) -> float:
    c = _counts_or_raise(text)
    return 0.39 * (c.words / c.sentences) + 11.8 * (c.syllables / c.words) - 15.59


def coleman_liau(text: str) -> float:
    c = _counts_or_raise(text)
    letters_per_100 = 100.0 * c.letters / c.words
    sentences_per_100 = 100.0 * c.sentences / c.words
    return 0.0588 * letters_per_100 - 0.296 * sentences_per_100 - 15.8


def ari(text: str) -> float:
    c = _counts_or_raise(text)
    return 4.71 * (c.characters / c.words) + 0.5 * (c.words / c.sentences) - 21.43


def unigrams(text: str) -> list[str]:
    return [t.lower() for t in words(text)]


def abstractiveness(report_text: str, transcript_text: str) -> float:
    """Percentage of report tokens (with repetition) absent from the transcript."""
    report_tokens = unigrams(report_text)
    if not report_tokens:
        raise EmptyText("report has no words")
    source = set(unigrams(transcript_text))
    novel = sum(1 for t in report_tokens if t not in source)
    return 100.0 * novel / len(report_tokens)


@dataclass(frozen=True)
class StyleStats:
    sentence_count: float
    fkgl: float
    cli: float
    ari: float
    abstractiveness: float


def style_stats(report_text: str, transcript_text: str) -> StyleStats:
    return StyleStats(
        sentence_count=sentence_count(report_text),
        fkgl=fkgl(report_text),
        cli=coleman_liau(report_text),
        ari=ari(report_text),
        abstractiveness=abstractiveness(report_text, transcript_text),
    )


def mean_style_stats(stats: Sequence[StyleStats]) -> StyleStats:
    if not stats:
        raise ValueError("no stats to average")
    return StyleStats(**{f.name: fmean(getattr(s, f.name) for s in stats) for f in fields(StyleStats)})
