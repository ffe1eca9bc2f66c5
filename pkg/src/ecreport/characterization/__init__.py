"""Report characterization: style statistics and aspect profiles."""

from ecreport.characterization.aspects import (
    AspectLexicon,
    AspectProfile,
    TaggerUnavailable,
    aspect_profile,
    build_aspect_lexicon,
    get_tagger,
    lemmatize_noun,
)
from ecreport.characterization.readability import (
    EmptyText,
    StyleStats,
    abstractiveness,
    ari,
    coleman_liau,
    fkgl,
    mean_style_stats,
    sentence_count,
    style_stats,
    syllables,
)

__all__ = [
    "AspectLexicon", "AspectProfile", "EmptyText", "StyleStats", "TaggerUnavailable",
    "abstractiveness", "ari", "aspect_profile", "build_aspect_lexicon", "coleman_liau", "fkgl",
    "get_tagger", "lemmatize_noun", "mean_style_stats", "sentence_count", "style_stats", "syllables",
]
