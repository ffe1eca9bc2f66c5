"""Frequent-noun aspect lexicons and per-system aspect occurrence profiles.

Noun detection is pluggable. ``spacy`` and ``nltk`` taggers are used when the
library and its English model/data are installed; the ``heuristic`` tagger
needs nothing and treats any open-class looking word as a noun candidate.
Whatever the tagger, lemmas come from :func:`lemmatize_noun` so that lexicon
entries and report tokens are normalised identically.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from ecreport.model import EcReportError, Report, Transcript

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[A-Za-z]+(?:['’][A-Za-z]+)?")

# Plurals that stay as they are, either because the singular means something
# else ("earning", "sale") or because they are not plurals at all.
_INVARIANT = frozenset({
    "earnings", "sales", "news", "series", "species", "proceeds", "savings", "goods",
    "means", "thanks", "economics", "analytics", "logistics", "headquarters", "operations",
    "this", "has", "was", "is", "its", "us", "gas", "bus", "plus", "yes", "lens",
})
_IRREGULAR = {"people": "person", "children": "child", "men": "man", "women": "woman", "analyses": "analysis",
              "bases": "basis", "crises": "crisis", "indices": "index", "data": "data", "criteria": "criterion"}


class TaggerUnavailable(EcReportError):
    pass


def tokens(text: str) -> list[str]:
    out = []
    for t in _TOKEN_RE.findall(text):
        t = t.lower().replace("’", "'")
        if t.endswith("'s"):
            t = t[:-2]
        out.append(t)
    return [t for t in out if t]


def lemmatize_noun(word: str) -> str:
    """Singular form of an English noun, by suffix rules."""
    w = word.lower()
    if w in _IRREGULAR:
        return _IRREGULAR[w]
    if w in _INVARIANT or len(w) <= 3 or not w.endswith("s"):
        return w
    if w.endswith(("ss", "us", "is")):
        return w
    if w.endswith("ies") and len(w) > 4:
        return w[:-3] + "y"
    if w.endswith(("sses", "ches", "shes", "xes", "zes")):
        return w[:-2]
    return w[:-1]


class NounTagger(Protocol):
    name: str

    def nouns(self, text: str) -> list[str]:
        """Lower-cased surface forms of every noun token in ``text``."""


_NON_NOUNS = frozenset("""
a about above across after again against all almost along already also although always am among an and
another any anyone anything are around as at away back be became because become been before being below
between both but by can cannot could did do does doing done down during each either else enough even ever
every few first for from further get gets getting give given go going gone got great had has have having
he her here hers herself him himself his how however i if in into is it its itself just last least less
let like made make makes making many may me might mine more most much must my myself need needs never new
next no nor not now of off often on once one only or other others our ours ourselves out over own per
perhaps quite rather really said same say says see seen she should since so some something still such
take taken than that the their theirs them themselves then there therefore these they this those though
through thus to too toward towards under until up upon us very was we well were what whatever when where
whether which while who whom whose why will with within without would yet you your yours yourself
yourselves think thank thanks know want continue continued continues expect expected expects believe
believes believed see saw look looking looked feel felt keep kept come came comes coming include includes
included including provide provided provides remain remains remained turn turned able good better best
high higher highest low lower lowest strong stronger strongest big bigger large larger largest small
smaller little long longer short full half whole overall significant significantly certain different
important key major several various right okay yeah sure hello hi please thank across today tomorrow
yesterday again ago approximately around roughly pretty lot lots kind sort way ways bit really actually
obviously clearly particularly especially probably likely maybe mostly partly slightly strongly
relatively generally certainly early late recent recently currently previously additional additionally
total totally related relative compared versus driven driving drive drove helped help helps helping
""".split())


class HeuristicNounTagger:
    """Dependency-free stand-in for a POS tagger.

    A token counts as a noun if it is alphabetic, at least three letters long,
    not a listed function word or common verb/adjective/adverb, and does not
    end in ``-ly`` or ``-ed``. Crude, but deterministic and always available.
    """

    name = "heuristic"

    def nouns(self, text: str) -> list[str]:
        return [
            t for t in tokens(text)
            if len(t) >= 3 and "'" not in t and t not in _NON_NOUNS and not t.endswith(("ly", "ed"))
        ]


class SpacyNounTagger:
    name = "spacy"

    def __init__(self, model: str = "en_core_web_sm"):
        try:
            import spacy
        except ImportError as exc:
            raise TaggerUnavailable("spacy is not installed") from exc
        try:
            self._nlp = spacy.load(model, disable=["ner", "parser"])
        except OSError as exc:
            raise TaggerUnavailable(f"spacy model {model!r} is not installed") from exc

    def nouns(self, text: str) -> list[str]:
        return [t.lower_ for t in self._nlp(text) if t.pos_ == "NOUN" and t.is_alpha]


class NltkNounTagger:
    name = "nltk"

    def __init__(self) -> None:
        try:
            import nltk
        except ImportError as exc:
            raise TaggerUnavailable("nltk is not installed") from exc
        self._nltk = nltk
        try:
            nltk.pos_tag(["probe"])
        except LookupError as exc:
            raise TaggerUnavailable("nltk tagger data is not installed") from exc

    def nouns(self, text: str) -> list[str]:
        toks = tokens(text)
        return [w for w, tag in self._nltk.pos_tag(toks) if tag in ("NN", "NNS")]


TAGGERS = {"spacy": SpacyNounTagger, "nltk": NltkNounTagger, "heuristic": HeuristicNounTagger}


def get_tagger(name: str = "auto") -> NounTagger:
    """Tagger by name; ``auto`` tries spacy, then nltk, then the heuristic."""
    if name == "auto":
        for candidate in ("spacy", "nltk"):
            try:
                return TAGGERS[candidate]()
            except TaggerUnavailable as exc:
                logger.info("%s tagger unavailable: %s", candidate, exc)
        logger.warning("no POS tagger installed; falling back to the heuristic noun tagger")
        return HeuristicNounTagger()
    try:
        cls = TAGGERS[name]
    except KeyError:
        raise TaggerUnavailable(f"unknown tagger {name!r}; expected auto or one of {sorted(TAGGERS)}") from None
    return cls()


@dataclass(frozen=True)
class AspectLexicon:
    aspects: tuple[tuple[str, int], ...]
    k: int = 250

    @property
    def lemmas(self) -> list[str]:
        return [lemma for lemma, _ in self.aspects]


def build_aspect_lexicon(
    transcripts: Iterable[Transcript | str], k: int = 250, tagger: NounTagger | None = None
) -> AspectLexicon:
    """The ``k`` most frequent noun lemmas over the whole corpus.

    Ties are broken alphabetically.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if tagger is None:
        tagger = get_tagger("auto")
    counts: Counter[str] = Counter()
    for t in transcripts:
        text = t.full_text() if isinstance(t, Transcript) else t
        counts.update(lemmatize_noun(n) for n in tagger.nouns(text))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return AspectLexicon(tuple(ranked), k)


@dataclass(frozen=True)
class AspectProfile:
    system_label: str
    occurrence: dict[str, float]


def aspect_profile(reports: Sequence[Report | str], lexicon: AspectLexicon, label: str) -> AspectProfile:
    """Share of reports mentioning each lexicon lemma at least once."""
    if not reports:
        raise ValueError("aspect_profile needs at least one report")
    present: Counter[str] = Counter()
    wanted = set(lexicon.lemmas)
    for r in reports:
        text = r.text if isinstance(r, Report) else r
        present.update({lemmatize_noun(t) for t in tokens(text)} & wanted)
    n = len(reports)
    return AspectProfile(label, {lemma: present[lemma] / n for lemma in lexicon.lemmas})
