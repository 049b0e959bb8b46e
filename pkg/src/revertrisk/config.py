"""Pipeline configuration: one YAML file, validated with pydantic."""
from __future__ import annotations

import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .gbdt import TrainConfig
from .textdiff import DiffConfig
from .textscore import ScorerParams


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataSection(_Section):
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    train_cap: Optional[int] = Field(300_000, gt=0)
    test_cap: Optional[int] = Field(100_000, gt=0)
    strict: bool = False
    languages: list[str] = Field(default_factory=list)
    namespace_prefixes: Optional[dict[str, list[str]]] = None
    revert_window: int = Field(10, ge=2)
    user_mode: Literal["all", "anonymous_only"] = "all"


class SplitSection(_Section):
    train_start: datetime = datetime(2022, 1, 1, tzinfo=timezone.utc)
    train_end: datetime = datetime(2022, 7, 1, tzinfo=timezone.utc)
    test_end: datetime = datetime(2022, 7, 8, tzinfo=timezone.utc)
    scorer_fraction: float = Field(0.6, gt=0.0, lt=1.0)

    @field_validator("train_start", "train_end", "test_end")
    @classmethod
    def _utc(cls, v: datetime) -> datetime:
        return v if v.tzinfo else v.replace(tzinfo=timezone.utc)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.train_start < self.train_end <= self.test_end:
            raise ValueError("need train_start < train_end <= test_end")
        return self


class DiffSection(_Section):
    sentence_match_threshold: float = Field(0.5, gt=0.0, lt=1.0)
    paragraph_match_threshold: float = Field(0.4, gt=0.0, lt=1.0)
    max_sentence_length: int = Field(2000, gt=0)

    def build(self) -> DiffConfig:
        return DiffConfig(self.sentence_match_threshold, self.paragraph_match_threshold, self.max_sentence_length)


class ScorerSection(_Section):
    C: float = Field(4.0, gt=0.0)
    max_iter: int = Field(200, ge=1)
    title_alpha: float = Field(1.0, gt=0.0)
    hash_bits: int = Field(18, ge=8, le=24)
    ngram_range: tuple[int, int] = (1, 3)
    min_title_revisions: int = Field(5, ge=1)
    single_modification: bool = True
    remote_endpoints: dict[str, str] = Field(default_factory=dict)

    def build(self) -> ScorerParams:
        return ScorerParams(self.C, self.max_iter, self.title_alpha, self.hash_bits, self.ngram_range)


class GBDTSection(_Section):
    learning_rate: float = Field(0.01, gt=0.0)
    n_trees: int = Field(200, ge=1)
    max_depth: int = Field(6, ge=0)
    min_child_weight: float = Field(1.0, ge=0.0)
    l2_lambda: float = Field(1.0, ge=0.0)
    n_bins: int = Field(64, ge=2)
    class_weighting: bool = True

    def build(self, seed: int) -> TrainConfig:
        return TrainConfig(self.learning_rate, self.n_trees, self.max_depth, self.min_child_weight,
                           self.l2_lambda, self.n_bins, seed)


class FeatureSection(_Section):
    configs: list[Literal["basic", "mlm", "user", "full"]] = Field(default_factory=lambda: ["basic", "mlm", "user", "full"])
    user_groups: list[str] = Field(default_factory=lambda: ["sysop", "autoconfirmed"])
    comment_length: bool = True


class EvaluationSection(_Section):
    threshold: float = Field(0.5, ge=0.0, le=1.0)
    target_recall: float = Field(0.75, gt=0.0, le=1.0)
    balance: bool = True


class ServiceSection(_Section):
    host: str = "127.0.0.1"
    port: int = Field(8000, ge=0, le=65535)
    bundle_path: Optional[str] = None
    api_root: str = "https://{lang}.wikipedia.org"
    timeout: float = Field(10.0, gt=0.0)
    max_text_bytes: int = Field(2 * 1024 * 1024, gt=0)
    reload_secret: Optional[str] = None


class PipelineConfig(_Section):
    seed: int = 0
    output_dir: str = "runs/default"
    data: DataSection = Field(default_factory=DataSection)
    split: SplitSection = Field(default_factory=SplitSection)
    diff: DiffSection = Field(default_factory=DiffSection)
    scorers: ScorerSection = Field(default_factory=ScorerSection)
    gbdt: GBDTSection = Field(default_factory=GBDTSection)
    features: FeatureSection = Field(default_factory=FeatureSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    service: ServiceSection = Field(default_factory=ServiceSection)


ENV_OVERRIDES = {
    "REVERTRISK_PORT": ("port", int),
    "REVERTRISK_BUNDLE": ("bundle_path", str),
    "REVERTRISK_API_ROOT": ("api_root", str),
    "REVERTRISK_TIMEOUT": ("timeout", float),
    "REVERTRISK_RELOAD_SECRET": ("reload_secret", str),
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> PipelineConfig:
    """Read a YAML config (or defaults when ``path`` is None) and apply environment overrides."""
    raw = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: top level must be a mapping")
    config = PipelineConfig.model_validate(raw)
    env = os.environ if env is None else env
    updates = {}
    for var, (key, cast) in ENV_OVERRIDES.items():
        if var in env:
            updates[key] = cast(env[var])
    if updates:
        service = ServiceSection.model_validate({**config.service.model_dump(), **updates})
        config = config.model_copy(update={"service": service})
    return config


def dump_config(config: PipelineConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
