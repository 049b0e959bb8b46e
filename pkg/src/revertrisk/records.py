"""Revision records, corpus ingestion and identity-revert annotation."""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import itertools
import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import AnnotationError, EmptyCorpusError, ParseError, SchemaError

logger = logging.getLogger(__name__)

DEFAULT_REVERT_WINDOW = 10

INTERFACE_FLAGS = (
    "is_mobile_edit",
    "is_mobile_web_edit",
    "is_visualeditor",
    "is_wikieditor",
    "is_mobile_app_edit",
    "is_android_app_edit",
    "is_ios_app_edit",
)


class UserKind(str, enum.Enum):
    ANONYMOUS = "anonymous"
    REGISTERED = "registered"
    BOT = "bot"


@dataclass(frozen=True)
class RevisionRecord:
    wiki_db: str
    revision_id: int
    revision_parent_id: int
    page_title: str
    event_timestamp: datetime
    user_kind: UserKind
    revision_text_bytes_diff: int
    event_comment: str = ""
    event_user_text: str = ""
    seconds_since_previous_revision: int | None = None
    is_mobile_edit: bool = False
    is_mobile_web_edit: bool = False
    is_visualeditor: bool = False
    is_wikieditor: bool = False
    is_mobile_app_edit: bool = False
    is_android_app_edit: bool = False
    is_ios_app_edit: bool = False
    parent_text: str | None = None
    current_text: str | None = None
    is_reverted: bool | None = None
    is_revert: bool | None = None
    user_groups: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.wiki_db:
            raise SchemaError("wiki_db", "wiki_db must be non-empty")
        if self.revision_id <= 0:
            raise SchemaError("revision_id", "revision_id must be positive")
        if self.revision_parent_id < 0:
            raise SchemaError("revision_parent_id", "revision_parent_id must be nonnegative")
        if self.event_timestamp.tzinfo is None:
            object.__setattr__(self, "event_timestamp", self.event_timestamp.replace(tzinfo=timezone.utc))
        if self.has_texts:
            expected = byte_length(self.current_text) - byte_length(self.parent_text)
            if expected != self.revision_text_bytes_diff:
                raise SchemaError(
                    "revision_text_bytes_diff",
                    f"revision_text_bytes_diff={self.revision_text_bytes_diff} but texts differ by {expected} bytes",
                )

    @property
    def is_anonymous(self) -> bool:
        return self.user_kind is UserKind.ANONYMOUS

    @property
    def has_texts(self) -> bool:
        return self.parent_text is not None and self.current_text is not None

    @property
    def page_key(self) -> tuple[str, str]:
        return (self.wiki_db, self.page_title)

    @property
    def interface_flags(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in INTERFACE_FLAGS}

    def sort_key(self):
        return (self.wiki_db, self.page_title, self.event_timestamp, self.revision_id)


def byte_length(text: str) -> int:
    return len(text.encode("utf-8"))


# --- timestamps -----------------------------------------------------------

_TS = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[ T](\d{2}):(\d{2}):(\d{2})(?:\.(\d+))?"
    r"(Z|[+-]\d{2}:?\d{2})?$"
)


def parse_timestamp(value: str) -> datetime:
    """Parse ``YYYY-MM-DD HH:MM:SS.S`` or ISO-8601 into an aware UTC datetime."""
    m = _TS.match(value.strip())
    if not m:
        raise ValueError(f"unrecognized timestamp {value!r}")
    year, month, day, hour, minute, second, frac, tz = m.groups()
    micro = int((frac or "0")[:6].ljust(6, "0"))
    ts = datetime(int(year), int(month), int(day), int(hour), int(minute), int(second), micro)
    if tz and tz != "Z":
        sign = 1 if tz[0] == "+" else -1
        digits = tz[1:].replace(":", "")
        offset = sign * (int(digits[:2]) * 60 + int(digits[2:]))
        return (ts - timedelta(minutes=offset)).replace(tzinfo=timezone.utc)
    return ts.replace(tzinfo=timezone.utc)


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%d %H:%M:%S.%f")
    return ts.strftime("%Y-%m-%d %H:%M:%S.0")


# --- line format ------------------------------------------------------------

_REQUIRED = ("wiki_db", "revision_id", "revision_parent_id", "page_title", "event_timestamp")


def _as_bool(value, name: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    if isinstance(value, str) and value.strip().lower() in ("0", "1", "true", "false"):
        return value.strip().lower() in ("1", "true")
    raise SchemaError(name, f"field {name!r} is not a boolean: {value!r}")


def _as_optional_bool(value, name: str) -> bool | None:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return _as_bool(value, name)


def _as_int(value, name: str) -> int:
    if isinstance(value, bool):
        raise SchemaError(name, f"field {name!r} is not an integer: {value!r}")
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise SchemaError(name, f"field {name!r} is not an integer: {value!r}") from None
    if math.isnan(number) or number != int(number):
        raise SchemaError(name, f"field {name!r} is not an integer: {value!r}")
    return int(number)


def record_from_dict(data: dict, line_number: int | None = None) -> RevisionRecord:
    """Map a flat revision field dict (the JSON-lines row layout) onto a ``RevisionRecord``."""
    try:
        for name in _REQUIRED:
            if data.get(name) is None:
                raise SchemaError(name)

        parent_text = data.get("parent_text")
        current_text = data.get("current_text")
        if "revision_text_bytes_diff" in data and data["revision_text_bytes_diff"] is not None:
            bytes_diff = _as_int(data["revision_text_bytes_diff"], "revision_text_bytes_diff")
        elif parent_text is not None and current_text is not None:
            bytes_diff = byte_length(current_text) - byte_length(parent_text)
        else:
            raise SchemaError("revision_text_bytes_diff")

        if _as_bool(data.get("is_bot", False), "is_bot"):
            kind = UserKind.BOT
        elif _as_bool(data.get("is_anonymous", False), "is_anonymous"):
            kind = UserKind.ANONYMOUS
        else:
            kind = UserKind.REGISTERED

        seconds = data.get("event_user_seconds_since_previous_revision")
        if seconds is None or (isinstance(seconds, float) and math.isnan(seconds)):
            seconds = None
        else:
            seconds = _as_int(seconds, "event_user_seconds_since_previous_revision")

        try:
            ts = parse_timestamp(str(data["event_timestamp"]))
        except ValueError as exc:
            raise SchemaError("event_timestamp", str(exc)) from None

        groups = data.get("user_groups")
        if groups is not None:
            if not isinstance(groups, list) or not all(isinstance(g, str) for g in groups):
                raise SchemaError("user_groups", "user_groups must be a list of strings")
            groups = tuple(groups)

        flags = {name: _as_bool(data.get(name, False), name) for name in INTERFACE_FLAGS}
        return RevisionRecord(
            wiki_db=str(data["wiki_db"]),
            revision_id=_as_int(data["revision_id"], "revision_id"),
            revision_parent_id=_as_int(data["revision_parent_id"], "revision_parent_id"),
            page_title=str(data["page_title"]),
            event_timestamp=ts,
            user_kind=kind,
            revision_text_bytes_diff=bytes_diff,
            event_comment=str(data.get("event_comment") or ""),
            event_user_text=str(data.get("event_user_text_historical") or ""),
            seconds_since_previous_revision=seconds,
            parent_text=parent_text,
            current_text=current_text,
            is_reverted=_as_optional_bool(data.get("revision_is_identity_reverted"), "revision_is_identity_reverted"),
            is_revert=_as_optional_bool(data.get("is_revert"), "is_revert"),
            user_groups=groups,
            **flags,
        )
    except SchemaError as exc:
        if exc.line_number is None and line_number is not None:
            raise SchemaError(exc.field, str(exc), line_number) from None
        raise


def parse_revision_record(line: str, line_number: int | None = None) -> RevisionRecord:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed record: {exc.msg}", line_number) from None
    if not isinstance(data, dict):
        raise ParseError("record is not an object", line_number)
    return record_from_dict(data, line_number)


def record_to_dict(record: RevisionRecord) -> dict:
    out = {
        "wiki_db": record.wiki_db,
        "event_comment": record.event_comment,
        "event_user_text_historical": record.event_user_text,
        "event_user_seconds_since_previous_revision": record.seconds_since_previous_revision,
        "revision_id": record.revision_id,
        "page_title": record.page_title,
        "revision_text_bytes_diff": record.revision_text_bytes_diff,
        "event_timestamp": format_timestamp(record.event_timestamp),
        "revision_parent_id": record.revision_parent_id,
    }
    if record.is_reverted is not None:
        out["revision_is_identity_reverted"] = int(record.is_reverted)
    for name in INTERFACE_FLAGS:
        out[name] = int(getattr(record, name))
    out["is_anonymous"] = int(record.user_kind is UserKind.ANONYMOUS)
    out["is_bot"] = int(record.user_kind is UserKind.BOT)
    if record.is_revert is not None:
        out["is_revert"] = int(record.is_revert)
    if record.user_groups is not None:
        out["user_groups"] = list(record.user_groups)
    if record.parent_text is not None:
        out["parent_text"] = record.parent_text
    if record.current_text is not None:
        out["current_text"] = record.current_text
    return out


def serialize_revision_record(record: RevisionRecord) -> str:
    return json.dumps(record_to_dict(record), ensure_ascii=False)


# --- corpus -------------------------------------------------------------------


@dataclass
class Corpus:
    records: tuple[RevisionRecord, ...]
    issues: list[ParseError] = field(default_factory=list)

    def __post_init__(self):
        self.records = tuple(sorted(self.records, key=RevisionRecord.sort_key))

    @property
    def per_language_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(r.wiki_db for r in self.records).items()))

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[RevisionRecord]:
        return iter(self.records)

    def replace_records(self, records: Iterable[RevisionRecord]) -> "Corpus":
        return Corpus(tuple(records), list(self.issues))

    def pages(self) -> Iterator[tuple[tuple[str, str], list[RevisionRecord]]]:
        for key, group in itertools.groupby(self.records, key=lambda r: r.page_key):
            yield key, list(group)


def _iter_files(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix in (".jsonl", ".json", ".ndjson"))
    return [path]


def read_records(path: str | Path, strict: bool = False) -> tuple[list[RevisionRecord], list[ParseError]]:
    """Read every line of a corpus file (or directory of shards)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus path not found: {path}")
    records, issues = [], []
    for file in _iter_files(path):
        with open(file, encoding="utf-8") as fh:
            for number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(parse_revision_record(line, number))
                except ParseError as exc:
                    if strict:
                        raise
                    issues.append(exc)
    for exc in issues:
        logger.warning("skipped malformed record: %s", exc)
    return records, issues


def cap_per_language(records: Iterable[RevisionRecord], cap: int | None) -> list[RevisionRecord]:
    """Keep at most ``cap`` earliest records per language."""
    if cap is None:
        return list(records)
    by_lang: dict[str, list[RevisionRecord]] = {}
    for r in records:
        by_lang.setdefault(r.wiki_db, []).append(r)
    kept = []
    for recs in by_lang.values():
        recs.sort(key=lambda r: (r.event_timestamp, r.revision_id))
        kept.extend(recs[:cap])
    return kept


def load_corpus(
    path: str | Path,
    train_cap: int | None = 300_000,
    test_cap: int | None = 100_000,
    role: str = "train",
    strict: bool = False,
) -> Corpus:
    if role not in ("train", "test"):
        raise ValueError(f"role must be 'train' or 'test', got {role!r}")
    cap = train_cap if role == "train" else test_cap
    if cap is not None and cap <= 0:
        raise ValueError("caps must be positive")
    records, issues = read_records(path, strict=strict)
    if not records:
        raise EmptyCorpusError(f"no valid records in {path}")
    return Corpus(tuple(cap_per_language(records, cap)), issues)


def write_corpus(records: Iterable[RevisionRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(serialize_revision_record(r))
            fh.write("\n")
            n += 1
    return n


# --- identity reverts -----------------------------------------------------------


def content_digest(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()


def revert_flags(digests: Sequence[str], window: int = DEFAULT_REVERT_WINDOW) -> tuple[list[bool], list[bool]]:
    """Identity-revert flags for one page history given per-revision digests.

    Revision k reverts when it restores the content of the most recent earlier
    revision j with ``2 <= k - j <= window``; revisions strictly between are
    reverted. A null edit (same digest as k-1) triggers nothing.
    """
    if window < 1:
        raise ValueError("window must be positive")
    n = len(digests)
    is_revert = [False] * n
    is_reverted = [False] * n
    for k in range(1, n):
        if digests[k] == digests[k - 1]:
            continue
        for j in range(k - 2, max(-1, k - window - 1), -1):
            if digests[j] == digests[k]:
                is_revert[k] = True
                for m in range(j + 1, k):
                    is_reverted[m] = True
                break
    return is_revert, is_reverted


def annotate_reverts(page_history: Sequence[RevisionRecord], window: int = DEFAULT_REVERT_WINDOW) -> list[RevisionRecord]:
    """Recompute ``is_revert``/``is_reverted`` for one page from its texts."""
    if not page_history:
        return []
    keys = {r.page_key for r in page_history}
    if len(keys) != 1:
        raise AnnotationError(f"records span several pages: {sorted(keys)[:3]}")
    missing = [r.revision_id for r in page_history if r.current_text is None]
    if missing:
        raise AnnotationError(f"revisions without text: {missing[:5]}")
    digests = [content_digest(r.current_text) for r in page_history]
    reverts, reverted = revert_flags(digests, window)
    return [
        dataclasses.replace(r, is_revert=a, is_reverted=b)
        for r, a, b in zip(page_history, reverts, reverted)
    ]


def annotate_corpus(corpus: Corpus, window: int = DEFAULT_REVERT_WINDOW) -> Corpus:
    """Annotate every page whose texts are available; precomputed labels win."""
    out = []
    skipped = 0
    for _, history in corpus.pages():
        if not all(r.current_text is not None for r in history):
            out.extend(history)
            skipped += 1
            continue
        for original, computed in zip(history, annotate_reverts(history, window)):
            out.append(
                dataclasses.replace(
                    original,
                    is_reverted=original.is_reverted if original.is_reverted is not None else computed.is_reverted,
                    is_revert=original.is_revert if original.is_revert is not None else computed.is_revert,
                )
            )
    if skipped:
        logger.info("annotate: %d pages lack texts, kept precomputed labels", skipped)
    return corpus.replace_records(out)
