"""Fetch a revision and its parent from a MediaWiki action API."""
from __future__ import annotations

import logging

import httpx

from .errors import RevisionNotFound, TransportError, UnsupportedRevision, UpstreamTimeout
from .records import RevisionRecord, UserKind, byte_length, parse_timestamp

logger = logging.getLogger(__name__)

DEFAULT_USER_AGENT = "revertrisk/0.1 (revert-risk scoring client)"
DEFAULT_API_ROOT = "https://{lang}.wikipedia.org"

# change tags -> record interface flags
_TAG_FLAGS = {
    "mobile edit": "is_mobile_edit",
    "mobile web edit": "is_mobile_web_edit",
    "visualeditor": "is_visualeditor",
    "wikieditor": "is_wikieditor",
    "mobile app edit": "is_mobile_app_edit",
    "android app edit": "is_android_app_edit",
    "ios app edit": "is_ios_app_edit",
}


def normalize_wiki_db(lang: str) -> str:
    """``"en"`` and ``"enwiki"`` both map to ``"enwiki"``."""
    lang = lang.strip()
    if not lang:
        raise ValueError("empty language code")
    return lang if lang.endswith("wiki") else f"{lang}wiki"


def language_code(wiki_db: str) -> str:
    return wiki_db[: -len("wiki")] if wiki_db.endswith("wiki") else wiki_db


class MediaWikiClient:
    def __init__(
        self,
        api_root: str = DEFAULT_API_ROOT,
        api_roots: dict[str, str] | None = None,
        timeout: float = 10.0,
        user_agent: str = DEFAULT_USER_AGENT,
        transport: httpx.BaseTransport | None = None,
    ):
        """
        :param api_root: root URL template; ``{lang}`` is replaced with the
            language code (``en`` for ``enwiki``). Requests go to
            ``{api_root}/w/api.php``.
        :param api_roots: per-wiki_db overrides of the template.
        :param transport: optional httpx transport (tests replay fixtures through it).
        """
        if not user_agent:
            raise ValueError("a User-Agent is required by the MediaWiki API etiquette")
        self.api_root = api_root
        self.api_roots = dict(api_roots or {})
        self.timeout = timeout
        self.user_agent = user_agent
        self._client = httpx.Client(
            timeout=timeout, headers={"User-Agent": user_agent}, transport=transport
        )

    def close(self):
        self._client.close()

    def api_url(self, wiki_db: str) -> str:
        root = self.api_roots.get(wiki_db, self.api_root)
        return root.format(lang=language_code(wiki_db)).rstrip("/") + "/w/api.php"

    def _query_revision(self, wiki_db: str, revision_id: int) -> tuple[dict, dict]:
        params = {
            "action": "query",
            "prop": "revisions",
            "revids": str(revision_id),
            "rvprop": "ids|timestamp|user|comment|content|tags",
            "rvslots": "main",
            "format": "json",
            "formatversion": "2",
        }
        try:
            response = self._client.get(self.api_url(wiki_db), params=params)
        except httpx.TimeoutException as exc:
            raise UpstreamTimeout(f"MediaWiki API timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise TransportError(f"MediaWiki API request failed: {exc}") from exc
        if response.status_code != 200:
            raise TransportError(f"MediaWiki API returned HTTP {response.status_code}", response.status_code)
        try:
            payload = response.json()
        except ValueError as exc:
            raise TransportError("MediaWiki API returned invalid JSON", response.status_code) from exc

        if "error" in payload:
            raise TransportError(f"MediaWiki API error: {payload['error'].get('info', payload['error'])}", 200)
        query = payload.get("query", {})
        if query.get("badrevids"):
            raise RevisionNotFound(f"revision {revision_id} not found on {wiki_db}", 404)
        pages = query.get("pages") or []
        for page in pages:
            for rev in page.get("revisions", []):
                if rev.get("revid") == revision_id:
                    if page.get("missing") or rev.get("texthidden") or rev.get("suppressed"):
                        raise RevisionNotFound(f"revision {revision_id} is deleted or suppressed", 404)
                    return page, rev
        raise RevisionNotFound(f"revision {revision_id} not found on {wiki_db}", 404)

    @staticmethod
    def _content(rev: dict) -> str:
        slots = rev.get("slots") or {}
        main = slots.get("main") or {}
        if "content" in main:
            return main["content"]
        if "content" in rev:
            return rev["content"]
        raise RevisionNotFound(f"revision {rev.get('revid')} has no readable content", 404)

    def fetch_revision_pair(self, language: str, revision_id: int) -> RevisionRecord:
        wiki_db = normalize_wiki_db(language)
        page, rev = self._query_revision(wiki_db, revision_id)
        parent_id = int(rev.get("parentid") or 0)
        if parent_id == 0:
            raise UnsupportedRevision(f"revision {revision_id} creates a page; page creations are not scored", 422)
        current_text = self._content(rev)
        _, parent = self._query_revision(wiki_db, parent_id)
        parent_text = self._content(parent)

        if rev.get("anon"):
            kind = UserKind.ANONYMOUS
        else:
            kind = UserKind.REGISTERED
        flags = {_TAG_FLAGS[t]: True for t in rev.get("tags", []) if t in _TAG_FLAGS}
        return RevisionRecord(
            wiki_db=wiki_db,
            revision_id=revision_id,
            revision_parent_id=parent_id,
            page_title=page.get("title", ""),
            event_timestamp=parse_timestamp(rev["timestamp"]),
            user_kind=kind,
            revision_text_bytes_diff=byte_length(current_text) - byte_length(parent_text),
            event_comment=rev.get("comment", "") or "",
            event_user_text=rev.get("user", "") or "",
            parent_text=parent_text,
            current_text=current_text,
            is_reverted=None,
            **flags,
        )
