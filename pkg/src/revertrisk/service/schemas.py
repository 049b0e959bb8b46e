"""Wire models for the scoring service."""
from __future__ import annotations

from datetime import datetime
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class ScoreRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lang: str = Field(..., min_length=2, examples=["en", "enwiki"])
    rev_id: int = Field(..., gt=0)


class RawScoreRequest(BaseModel):
    """A revision supplied inline: both texts plus the metadata the features need."""

    model_config = ConfigDict(extra="forbid")

    lang: str = Field(..., min_length=2)
    parent_text: str
    current_text: str
    page_title: str = ""
    user_kind: Literal["anonymous", "registered"] = "registered"
    user_groups: Optional[list[str]] = None
    event_comment: str = ""
    event_timestamp: Optional[datetime] = None
    seconds_since_previous_revision: Optional[int] = Field(None, ge=0)
    revision_id: int = Field(1, gt=0)
    revision_parent_id: int = Field(1, ge=0)
    is_mobile_edit: bool = False
    is_mobile_web_edit: bool = False
    is_visualeditor: bool = False
    is_wikieditor: bool = False
    is_mobile_app_edit: bool = False
    is_android_app_edit: bool = False
    is_ios_app_edit: bool = False


class Contribution(BaseModel):
    feature: str
    value: float


class Timings(BaseModel):
    fetch_ms: float = 0.0
    featurize_ms: float = 0.0
    predict_ms: float = 0.0


class ScoreResponse(BaseModel):
    probability: float = Field(..., ge=0.0, le=1.0)
    margin: float
    model_version: str
    feature_config: str
    top_contributions: list[Contribution] = Field(default_factory=list, max_length=10)
    timings: Timings = Field(default_factory=Timings)


class HealthResponse(BaseModel):
    status: Literal["ok", "unavailable"]
    model_version: Optional[str] = None
    uptime_s: float


class ReloadRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bundle_path: Optional[str] = None


class ReloadResponse(BaseModel):
    model_version: str
    feature_config: str


class ErrorResponse(BaseModel):
    detail: str


class ChannelScoreOut(BaseModel):
    raw: float
    probability: float


class ChannelScoreRequest(BaseModel):
    """Body of the remote channel-scorer contract."""

    channel: Literal["change", "insert", "remove", "title"]
    units: list


class ChannelScoreResponse(BaseModel):
    scores: list[ChannelScoreOut]
