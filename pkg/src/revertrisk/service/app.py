"""FastAPI app serving a model bundle."""
from __future__ import annotations

import hmac
import logging
import threading
import time
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from ..bundle import ModelBundle, load_bundle
from ..config import ServiceSection
from ..errors import (
    FetchError,
    LoadError,
    RevertRiskError,
    RevisionNotFound,
    ScoringError,
    SchemaError,
    UnsupportedRevision,
    UpstreamTimeout,
)
from ..mediawiki import MediaWikiClient, normalize_wiki_db
from ..records import RevisionRecord, UserKind, byte_length
from .schemas import (
    ChannelScoreRequest,
    ChannelScoreResponse,
    Contribution,
    HealthResponse,
    RawScoreRequest,
    ReloadRequest,
    ReloadResponse,
    ScoreRequest,
    ScoreResponse,
    Timings,
)

log = logging.getLogger(__name__)

SECRET_HEADER = "X-Reload-Secret"


class BundleHolder:
    """Holds the live bundle; readers grab the reference once per request so a swap is atomic."""

    def __init__(self, bundle: ModelBundle | None = None, path: str | None = None):
        self._bundle = bundle
        self.path = path
        self._lock = threading.Lock()

    @property
    def bundle(self) -> ModelBundle | None:
        return self._bundle

    def load(self, path: str | None = None) -> ModelBundle:
        with self._lock:
            path = path or self.path
            if path is None:
                raise LoadError("no bundle path configured")
            fresh = load_bundle(path)
            self._bundle = fresh
            self.path = str(path)
            return fresh


def _status_for(exc: FetchError) -> int:
    if isinstance(exc, RevisionNotFound):
        return 404
    if isinstance(exc, UnsupportedRevision):
        return 422
    if isinstance(exc, UpstreamTimeout):
        return 504
    return 502


def record_from_raw(req: RawScoreRequest) -> RevisionRecord:
    groups = tuple(req.user_groups) if req.user_groups is not None else None
    return RevisionRecord(
        wiki_db=normalize_wiki_db(req.lang),
        revision_id=req.revision_id,
        revision_parent_id=req.revision_parent_id,
        page_title=req.page_title,
        event_timestamp=req.event_timestamp or datetime(1970, 1, 1, tzinfo=timezone.utc),
        user_kind=UserKind(req.user_kind),
        revision_text_bytes_diff=byte_length(req.current_text) - byte_length(req.parent_text),
        event_comment=req.event_comment,
        seconds_since_previous_revision=req.seconds_since_previous_revision,
        is_mobile_edit=req.is_mobile_edit,
        is_mobile_web_edit=req.is_mobile_web_edit,
        is_visualeditor=req.is_visualeditor,
        is_wikieditor=req.is_wikieditor,
        is_mobile_app_edit=req.is_mobile_app_edit,
        is_android_app_edit=req.is_android_app_edit,
        is_ios_app_edit=req.is_ios_app_edit,
        parent_text=req.parent_text,
        current_text=req.current_text,
        user_groups=groups,
    )


def _respond(bundle: ModelBundle, record: RevisionRecord, fetch_ms: float = 0.0) -> ScoreResponse:
    try:
        result = bundle.score_one(record)
    except ScoringError as exc:
        raise HTTPException(502, f"text scorer failed: {exc}") from exc
    return ScoreResponse(
        probability=result.probability,
        margin=result.margin,
        model_version=bundle.model_version,
        feature_config=bundle.feature_config.name,
        top_contributions=[Contribution(feature=f, value=v) for f, v in result.contributions],
        timings=Timings(fetch_ms=fetch_ms, **result.timings),
    )


def create_app(
    bundle: ModelBundle | None = None,
    settings: ServiceSection | None = None,
    client: MediaWikiClient | None = None,
    load_on_startup: bool = True,
) -> FastAPI:
    """Build the scoring app.

    With no ``bundle`` the app loads ``settings.bundle_path`` at startup; until a
    bundle is present /healthz answers 503 and scoring endpoints 503.
    """
    settings = settings or ServiceSection()
    holder = BundleHolder(bundle, settings.bundle_path)
    started = time.monotonic()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if holder.bundle is None and holder.path and load_on_startup:
            try:
                holder.load()
                log.info("loaded bundle %s (%s)", holder.path, holder.bundle.model_version)
            except LoadError as exc:
                log.error("bundle load failed: %s", exc)
        yield
        if app.state.client is not None:
            app.state.client.close()

    app = FastAPI(title="revertrisk", version="1", lifespan=lifespan)
    app.state.holder = holder
    app.state.settings = settings
    app.state.client = client

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": _short_errors(exc)})

    def _bundle() -> ModelBundle:
        b = holder.bundle
        if b is None:
            raise HTTPException(503, "no model bundle loaded")
        return b

    def _client() -> MediaWikiClient:
        if app.state.client is None:
            app.state.client = MediaWikiClient(api_root=settings.api_root, timeout=settings.timeout)
        return app.state.client

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        b = holder.bundle
        uptime = time.monotonic() - started
        if b is None:
            body = HealthResponse(status="unavailable", uptime_s=uptime)
            return JSONResponse(status_code=503, content=body.model_dump())
        return HealthResponse(status="ok", model_version=b.model_version, uptime_s=uptime)

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(req: ScoreRequest):
        b = _bundle()
        t0 = time.perf_counter()
        try:
            record = _client().fetch_revision_pair(req.lang, req.rev_id)
        except FetchError as exc:
            raise HTTPException(_status_for(exc), str(exc)) from exc
        fetch_ms = (time.perf_counter() - t0) * 1e3
        if record.revision_parent_id == 0:
            raise HTTPException(422, "page creations are not scored")
        limit = settings.max_text_bytes
        if byte_length(record.parent_text) > limit or byte_length(record.current_text) > limit:
            raise HTTPException(413, f"revision text exceeds {limit} bytes")
        return _respond(b, record, fetch_ms)

    @app.post("/v1/score:raw", response_model=ScoreResponse)
    def score_raw(req: RawScoreRequest):
        b = _bundle()
        limit = settings.max_text_bytes
        for name in ("parent_text", "current_text"):
            if byte_length(getattr(req, name)) > limit:
                raise HTTPException(413, f"{name} exceeds {limit} bytes")
        try:
            record = record_from_raw(req)
        except (SchemaError, ValueError) as exc:
            raise HTTPException(400, str(exc)) from exc
        return _respond(b, record)

    @app.post("/admin/reload", response_model=ReloadResponse)
    def reload(req: Optional[ReloadRequest] = None, x_reload_secret: Optional[str] = Header(None)):
        secret = settings.reload_secret
        if not secret or x_reload_secret is None or not hmac.compare_digest(secret, x_reload_secret):
            raise HTTPException(403, "reload not permitted")
        path = req.bundle_path if req and req.bundle_path else None
        try:
            fresh = holder.load(path)
        except RevertRiskError as exc:
            # the old bundle stays live
            raise HTTPException(409, f"reload failed: {exc}") from exc
        return ReloadResponse(model_version=fresh.model_version, feature_config=fresh.feature_config.name)

    return app


def _short_errors(exc: RequestValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err.get("loc", ()) if p != "body")
        parts.append(f"{loc or 'body'}: {err.get('msg')}")
    return "; ".join(parts) or "malformed request body"


def create_scorer_app(scorers: dict) -> FastAPI:
    """Expose local channel scorers over the remote-scorer wire contract."""
    app = FastAPI(title="revertrisk-scorer", version="1")

    @app.exception_handler(RequestValidationError)
    async def _bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": _short_errors(exc)})

    @app.post("/score", response_model=ChannelScoreResponse)
    def score(req: ChannelScoreRequest):
        scorer = scorers.get(req.channel)
        if scorer is None:
            raise HTTPException(404, f"no scorer for channel {req.channel!r}")
        units = req.units
        if req.channel == "change":
            try:
                units = [(u["old"], u["new"]) for u in units]
            except (TypeError, KeyError) as exc:
                raise HTTPException(400, "change units must be {old, new} objects") from exc
        elif not all(isinstance(u, str) for u in units):
            raise HTTPException(400, "units must be strings")
        return {"scores": [{"raw": s.raw, "probability": s.probability} for s in scorer.score(units)]}

    return app
