"""A small wikitext tokenizer and plain-text extraction.

This is not a wikitext parser: templates are not expanded and tables are
opaque tokens. It covers what the edit-action counts and the sentence diff
need.
"""
from __future__ import annotations

import enum
import re
import unicodedata
from collections import Counter
from functools import lru_cache


class TokenCategory(str, enum.Enum):
    WORD = "Word"
    PUNCTUATION = "Punctuation"
    WHITESPACE = "Whitespace"
    MEDIA = "Media"
    REFERENCE = "Reference"
    TEMPLATE = "Template"
    WIKILINK = "Wikilink"
    EXTERNAL_LINK = "ExternalLink"
    HEADING = "Heading"
    TABLE = "Table"
    OTHER = "Other"


Token = tuple[str, TokenCategory]

_REF = re.compile(r"<ref\b[^>]*?/>|<ref\b[^>]*>.*?</ref\s*>", re.IGNORECASE | re.DOTALL)
_URL = re.compile(r"https?://[^\s\[\]<>\"{}|]+", re.IGNORECASE)
_HEADING = re.compile(r"(={1,6})[^\n]+?\1[ \t]*(?=\n|$)")
_MEDIA = re.compile(r"\[\[\s*(?:file|image)\s*:", re.IGNORECASE)
# letters/digits plus combining marks of common scripts, so Indic and Arabic
# words are not split at vowel signs; danda (U+0964/5) stays punctuation
_WORDCHAR = (
    r"(?:[^\W_]|[\u0300-\u036f\u0483-\u0489\u0591-\u05c7\u0610-\u061a\u064b-\u065f\u0670"
    r"\u06d6-\u06ed\u0900-\u0963\u0966-\u0dff\u0e31-\u0e4e\u1ab0-\u1aff\u1dc0-\u1dff"
    r"\u20d0-\u20ff\ufe20-\ufe2f])"
)
_WORD = re.compile(rf"{_WORDCHAR}+(?:['’]{_WORDCHAR}+)*")
_WS = re.compile(r"\s+")

_STRIPPED = frozenset(
    {TokenCategory.REFERENCE, TokenCategory.TEMPLATE, TokenCategory.MEDIA, TokenCategory.TABLE, TokenCategory.HEADING}
)


def _scan_pairs(text: str, i: int, opener: str, closer: str) -> int:
    """End index (exclusive) of the balanced opener/closer run starting at i, or -1."""
    depth = 0
    j = i
    n = len(text)
    while j < n:
        if text.startswith(opener, j):
            depth += 1
            j += len(opener)
        elif text.startswith(closer, j):
            depth -= 1
            j += len(closer)
            if depth == 0:
                return j
        else:
            j += 1
    return -1


def _scan_table(text: str, i: int) -> int:
    depth = 0
    j = i
    n = len(text)
    while j < n:
        if text.startswith("{{", j):
            end = _scan_pairs(text, j, "{{", "}}")
            j = end if end > 0 else j + 2
        elif text.startswith("{|", j):
            depth += 1
            j += 2
        elif text.startswith("|}", j):
            depth -= 1
            j += 2
            if depth == 0:
                return j
        else:
            j += 1
    return -1


def _next_token(text: str, i: int) -> Token:
    ch = text[i]
    if ch == "<":
        m = _REF.match(text, i)
        if m:
            return m.group(), TokenCategory.REFERENCE
    elif ch == "{":
        if text.startswith("{{", i):
            end = _scan_pairs(text, i, "{{", "}}")
            if end > 0:
                return text[i:end], TokenCategory.TEMPLATE
            return "{{", TokenCategory.OTHER
        if text.startswith("{|", i):
            end = _scan_table(text, i)
            if end > 0:
                return text[i:end], TokenCategory.TABLE
            return "{|", TokenCategory.OTHER
    elif ch == "[":
        if text.startswith("[[", i):
            end = _scan_pairs(text, i, "[[", "]]")
            if end < 0:
                return "[[", TokenCategory.OTHER
            segment = text[i:end]
            if _MEDIA.match(segment):
                return segment, TokenCategory.MEDIA
            return segment, TokenCategory.WIKILINK
    elif ch == "=":
        if i == 0 or text[i - 1] == "\n":
            m = _HEADING.match(text, i)
            if m:
                return m.group(), TokenCategory.HEADING
    elif ch == "h" or ch == "H":
        m = _URL.match(text, i)
        if m:
            return m.group(), TokenCategory.EXTERNAL_LINK

    m = _WORD.match(text, i)
    if m:
        return m.group(), TokenCategory.WORD
    if ch.isspace():
        return _WS.match(text, i).group(), TokenCategory.WHITESPACE
    if unicodedata.category(ch).startswith("P"):
        return ch, TokenCategory.PUNCTUATION
    return ch, TokenCategory.OTHER


def tokenize_wikitext(text: str) -> list[Token]:
    """Split wikitext into categorized tokens whose concatenation is ``text``."""
    return list(_tokenize_cached(text))


@lru_cache(maxsize=512)
def _tokenize_cached(text: str) -> tuple[Token, ...]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        tok = _next_token(text, i)
        tokens.append(tok)
        i += len(tok[0])
    return tuple(tokens)


@lru_cache(maxsize=4096)
def category_counts(text: str) -> Counter:
    return Counter(cat for _, cat in _tokenize_cached(text))


_EMPHASIS = re.compile(r"'{2,}")
_PARAGRAPH_BREAK = re.compile(r"\n\s*\n")


def _link_display(token: str) -> str:
    inner = token[2:-2]
    return inner.split("|", 1)[1] if "|" in inner else inner


def extract_plain_paragraphs(text: str) -> list[str]:
    parts = []
    for tok, cat in _tokenize_cached(text):
        if cat in _STRIPPED:
            continue
        parts.append(_link_display(tok) if cat is TokenCategory.WIKILINK else tok)
    plain = _EMPHASIS.sub("", "".join(parts))
    out = []
    for para in _PARAGRAPH_BREAK.split(plain):
        para = " ".join(para.split())
        if para:
            out.append(para)
    return out


_SENTENCE_END = re.compile(r"(?<=[.!?。؟।።])\s+")


def split_sentences(paragraph: str, max_sentence_length: int = 2000) -> list[str]:
    out = []
    for sentence in _SENTENCE_END.split(paragraph):
        sentence = sentence.strip()
        if sentence:
            out.append(sentence[:max_sentence_length])
    return out
