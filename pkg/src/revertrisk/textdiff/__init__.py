from .delta import (
    ACTION_KEYS,
    ACTIONS,
    CATEGORY_ORDER,
    ActionCounts,
    DiffConfig,
    TextDelta,
    compute_action_counts,
    extract_delta,
)
from .levenshtein import levenshtein, similarity
from .wikitext import TokenCategory, extract_plain_paragraphs, split_sentences, tokenize_wikitext

__all__ = [
    "ACTION_KEYS",
    "ACTIONS",
    "CATEGORY_ORDER",
    "ActionCounts",
    "DiffConfig",
    "TextDelta",
    "TokenCategory",
    "compute_action_counts",
    "extract_delta",
    "extract_plain_paragraphs",
    "levenshtein",
    "similarity",
    "split_sentences",
    "tokenize_wikitext",
]
