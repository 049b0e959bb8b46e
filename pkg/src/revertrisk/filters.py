"""Data filters and the two-level train/test and scorer/classifier splits."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Mapping, Sequence, TypeVar

import numpy as np

from .errors import BalanceError, PreconditionError
from .records import Corpus, RevisionRecord, UserKind

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Non-encyclopedic namespace prefixes. "default" applies to every language.
DEFAULT_NAMESPACE_PREFIXES: dict[str, tuple[str, ...]] = {
    "default": (
        "Talk:", "User:", "User talk:", "Wikipedia:", "Wikipedia talk:", "File:", "File talk:",
        "Template:", "Template talk:", "Category:", "Help:", "Portal:", "Draft:", "MediaWiki:", "Module:",
    ),
    "dewiki": ("Diskussion:", "Benutzer:", "Benutzer Diskussion:", "Datei:", "Vorlage:", "Kategorie:", "Hilfe:"),
    "frwiki": ("Discussion:", "Utilisateur:", "Discussion utilisateur:", "Wikipédia:", "Fichier:", "Modèle:", "Catégorie:"),
    "eswiki": ("Discusión:", "Usuario:", "Usuario discusión:", "Archivo:", "Plantilla:", "Categoría:", "Ayuda:"),
    "itwiki": ("Discussione:", "Utente:", "Discussioni utente:", "Immagine:", "Template:", "Categoria:", "Aiuto:"),
    "plwiki": ("Dyskusja:", "Wikipedysta:", "Dyskusja wikipedysty:", "Plik:", "Szablon:", "Kategoria:", "Pomoc:"),
    "ruwiki": ("Обсуждение:", "Участник:", "Обсуждение участника:", "Файл:", "Шаблон:", "Категория:", "Справка:"),
}

USER_MODES = ("all", "anonymous_only")
CHANNELS = ("change", "insert", "remove")


def _prefixes_for(wiki_db: str, table: Mapping[str, Sequence[str]]) -> tuple[str, ...]:
    return tuple(table.get("default", ())) + tuple(table.get(wiki_db, ()))


def filter_content(corpus: Corpus, namespace_prefixes: Mapping[str, Sequence[str]] | None = None) -> Corpus:
    """Drop page creations and non-encyclopedic pages."""
    table = DEFAULT_NAMESPACE_PREFIXES if namespace_prefixes is None else namespace_prefixes
    cache: dict[str, tuple[str, ...]] = {}
    kept = []
    for r in corpus:
        if r.revision_parent_id <= 0:
            continue
        prefixes = cache.get(r.wiki_db)
        if prefixes is None:
            prefixes = cache[r.wiki_db] = _prefixes_for(r.wiki_db, table)
        if r.page_title.startswith(prefixes):
            continue
        kept.append(r)
    return corpus.replace_records(kept)


def filter_users(corpus: Corpus, mode: str = "all") -> Corpus:
    if mode not in USER_MODES:
        raise ValueError(f"mode must be one of {USER_MODES}, got {mode!r}")
    if mode == "anonymous_only":
        keep = (UserKind.ANONYMOUS,)
    else:
        keep = (UserKind.ANONYMOUS, UserKind.REGISTERED)
    return corpus.replace_records(r for r in corpus if r.user_kind in keep)


def filter_edit_wars(corpus: Corpus) -> Corpus:
    """Drop reverting revisions that are themselves reverted by the next revision.

    The next revision of a page is the following record in (timestamp,
    revision_id) order. A revert at k+1 always restores a state from before k,
    so ``is_revert(k+1)`` together with ``is_reverted(k)`` identifies k as
    undone by its successor.
    """
    missing = [r.revision_id for r in corpus if r.is_revert is None or r.is_reverted is None]
    if missing:
        raise PreconditionError(f"edit-war filter needs revert annotations; missing on {missing[:5]}")
    kept = []
    for _, history in corpus.pages():
        for i, r in enumerate(history):
            nxt = history[i + 1] if i + 1 < len(history) else None
            if r.is_revert and r.is_reverted and nxt is not None and nxt.is_revert:
                continue
            kept.append(r)
    return corpus.replace_records(kept)


@dataclass(frozen=True)
class SplitSpec:
    train_start: datetime
    train_end: datetime
    test_end: datetime
    scorer_fraction: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if not (self.train_start < self.train_end <= self.test_end):
            raise ValueError("need train_start < train_end <= test_end")
        if not 0.0 < self.scorer_fraction < 1.0:
            raise ValueError("scorer_fraction must lie in (0, 1)")

    @property
    def classifier_fraction(self) -> float:
        return 1.0 - self.scorer_fraction


def split_time(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Half-open windows: train [start, end), test [end, test_end)."""
    train, test = [], []
    for r in corpus:
        ts = r.event_timestamp
        if spec.train_start <= ts < spec.train_end:
            train.append(r)
        elif spec.train_end <= ts < spec.test_end:
            test.append(r)
    return corpus.replace_records(train), corpus.replace_records(test)


def page_unit_interval(wiki_db: str, page_title: str, seed: int) -> float:
    """Seeded 64-bit hash of a page mapped to [0, 1)."""
    digest = hashlib.blake2b(
        f"{seed}\x1f{wiki_db}\x1f{page_title}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def split_articles(corpus: Corpus, scorer_fraction: float = 0.6, seed: int = 0) -> tuple[Corpus, Corpus]:
    """Page-disjoint split into (scorer_train, classifier_train)."""
    if not 0.0 < scorer_fraction < 1.0:
        raise ValueError("scorer_fraction must lie in (0, 1)")
    scorer, classifier = [], []
    side: dict[tuple[str, str], bool] = {}
    for r in corpus:
        to_scorer = side.get(r.page_key)
        if to_scorer is None:
            to_scorer = side[r.page_key] = page_unit_interval(r.wiki_db, r.page_title, seed) < scorer_fraction
        (scorer if to_scorer else classifier).append(r)
    return corpus.replace_records(scorer), corpus.replace_records(classifier)


def single_modification_filter(items: Sequence[tuple[RevisionRecord, object]], channel: str) -> list:
    """Keep (record, delta) pairs whose delta holds exactly one unit in ``channel``."""
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}")
    attr = {"change": "changes", "insert": "inserts", "remove": "removes"}[channel]
    return [(r, d) for r, d in items if len(getattr(d, attr)) == 1]


def undersample_balance(items: Sequence[T], labels: Sequence[bool], seed: int = 0) -> tuple[list[T], list[bool]]:
    """Downsample the majority class to the minority size; original order kept."""
    labels_arr = np.asarray(labels, dtype=bool)
    if len(items) != len(labels_arr):
        raise ValueError("items and labels differ in length")
    pos = np.flatnonzero(labels_arr)
    neg = np.flatnonzero(~labels_arr)
    if len(pos) == 0 or len(neg) == 0:
        raise BalanceError(f"both classes required (positives={len(pos)}, negatives={len(neg)})")
    rng = np.random.default_rng(seed)
    if len(pos) > len(neg):
        pos = rng.choice(pos, size=len(neg), replace=False)
    elif len(neg) > len(pos):
        neg = rng.choice(neg, size=len(pos), replace=False)
    keep = np.sort(np.concatenate([pos, neg]))
    return [items[i] for i in keep], [bool(labels_arr[i]) for i in keep]
