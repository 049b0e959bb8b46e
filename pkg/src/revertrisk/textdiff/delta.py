"""Text inserts/removes/changes between two wikitext revisions, and edit-action counts."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .levenshtein import similarity
from .wikitext import TokenCategory, category_counts, extract_plain_paragraphs, split_sentences, tokenize_wikitext

ACTIONS = ("change", "insert", "move", "remove")
CATEGORY_ORDER = tuple(sorted(TokenCategory, key=lambda c: c.value))
ACTION_KEYS = tuple(f"{action}_{cat.value}" for cat in CATEGORY_ORDER for action in ACTIONS)


@dataclass(frozen=True)
class DiffConfig:
    sentence_match_threshold: float = 0.5
    paragraph_match_threshold: float = 0.4
    max_sentence_length: int = 2000

    def __post_init__(self):
        if not 0.0 < self.paragraph_match_threshold <= self.sentence_match_threshold < 1.0:
            raise ValueError("need 0 < paragraph_match_threshold <= sentence_match_threshold < 1")
        if self.max_sentence_length <= 0:
            raise ValueError("max_sentence_length must be positive")


@dataclass(frozen=True)
class TextDelta:
    inserts: tuple[str, ...] = ()
    removes: tuple[str, ...] = ()
    changes: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inserts", tuple(self.inserts))
        object.__setattr__(self, "removes", tuple(self.removes))
        object.__setattr__(self, "changes", tuple((str(a), str(b)) for a, b in self.changes))

    @property
    def is_empty(self) -> bool:
        return not (self.inserts or self.removes or self.changes)

    def units(self, channel: str) -> Sequence:
        return {"insert": self.inserts, "remove": self.removes, "change": self.changes}[channel]

    def to_dict(self) -> dict:
        return {
            "inserts": list(self.inserts),
            "removes": list(self.removes),
            "changes": [list(pair) for pair in self.changes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TextDelta":
        return cls(
            tuple(data.get("inserts", ())),
            tuple(data.get("removes", ())),
            tuple(tuple(p) for p in data.get("changes", ())),
        )


def _consume_exact(left: Sequence[str], right: Sequence[str]) -> tuple[list[str], list[str]]:
    """Remove the multiset intersection from both sides, keeping order."""
    available = Counter(right)
    left_rest = []
    for s in left:
        if available[s] > 0:
            available[s] -= 1
        else:
            left_rest.append(s)
    used = Counter(right) - available
    right_rest = []
    for s in right:
        if used[s] > 0:
            used[s] -= 1
        else:
            right_rest.append(s)
    return left_rest, right_rest


def _greedy_match(left: Sequence[str], right: Sequence[str], threshold: float):
    """Greedy descending-similarity matching of pairs with similarity >= threshold.

    Ties are broken by a key that is symmetric in (left, right), so swapping
    the two sides yields the mirrored matching.
    """
    candidates = []
    for i, a in enumerate(left):
        la = len(a)
        for j, b in enumerate(right):
            lb = len(b)
            # similarity <= min/max, skip pairs that cannot reach the threshold
            if min(la, lb) < threshold * max(la, lb) * (1 - 1e-12):
                continue
            s = similarity(a, b)
            if s >= threshold:
                lo, hi = (a, b) if a <= b else (b, a)
                candidates.append((-s, i + j, lo, hi, i, j))
    candidates.sort()
    used_left, used_right, pairs = set(), set(), []
    for *_, i, j in candidates:
        if i in used_left or j in used_right:
            continue
        used_left.add(i)
        used_right.add(j)
        pairs.append((i, j))
    pairs.sort()
    return (
        pairs,
        [i for i in range(len(left)) if i not in used_left],
        [j for j in range(len(right)) if j not in used_right],
    )


def extract_delta(parent_text: str, current_text: str, config: DiffConfig | None = None) -> TextDelta:
    config = config or DiffConfig()
    if parent_text == current_text:
        return TextDelta()
    max_len = config.max_sentence_length
    parent_paras, current_paras = _consume_exact(
        extract_plain_paragraphs(parent_text), extract_plain_paragraphs(current_text)
    )
    pairs, lone_parent, lone_current = _greedy_match(
        parent_paras, current_paras, config.paragraph_match_threshold
    )

    inserts, removes, changes = [], [], []
    for i in lone_parent:
        removes.extend(split_sentences(parent_paras[i], max_len))
    for i, j in pairs:
        old, new = _consume_exact(
            split_sentences(parent_paras[i], max_len), split_sentences(current_paras[j], max_len)
        )
        sentence_pairs, lone_old, lone_new = _greedy_match(old, new, config.sentence_match_threshold)
        changes.extend((old[a], new[b]) for a, b in sentence_pairs)
        removes.extend(old[a] for a in lone_old)
        inserts.extend(new[b] for b in lone_new)
    for j in lone_current:
        inserts.extend(split_sentences(current_paras[j], max_len))
    return TextDelta(tuple(inserts), tuple(removes), tuple(changes))


@dataclass(frozen=True)
class ActionCounts:
    counts: dict[str, int] = field(default_factory=dict)

    def __getitem__(self, key: str) -> int:
        if key not in _KEY_SET:
            raise KeyError(key)
        return self.counts.get(key, 0)

    def to_flat(self) -> dict[str, int]:
        """All 44 keys in fixed order, e.g. ``{"change_ExternalLink": 0, ...}``."""
        return {key: self.counts.get(key, 0) for key in ACTION_KEYS}

    def as_list(self) -> list[int]:
        return [self.counts.get(key, 0) for key in ACTION_KEYS]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


_KEY_SET = frozenset(ACTION_KEYS)


def _changed_categories(old: str, new: str) -> set[TokenCategory]:
    a = Counter(tokenize_wikitext(old))
    b = Counter(tokenize_wikitext(new))
    return {cat for _, cat in ((a - b) + (b - a))}


def compute_action_counts(
    parent_text: str,
    current_text: str,
    delta: TextDelta | None = None,
    config: DiffConfig | None = None,
) -> ActionCounts:
    if parent_text == current_text:
        return ActionCounts({})
    before = category_counts(parent_text)
    after = category_counts(current_text)
    counts: dict[str, int] = {}
    for cat in CATEGORY_ORDER:
        diff = after.get(cat, 0) - before.get(cat, 0)
        if diff > 0:
            counts[f"insert_{cat.value}"] = diff
        elif diff < 0:
            counts[f"remove_{cat.value}"] = -diff
    if delta is None:
        delta = extract_delta(parent_text, current_text, config)
    for old, new in delta.changes:
        for cat in _changed_categories(old, new):
            key = f"change_{cat.value}"
            counts[key] = counts.get(key, 0) + 1
    return ActionCounts(counts)
