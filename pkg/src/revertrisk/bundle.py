"""The deployable model bundle: channel scorers, tree ensemble and feature layout in one zip."""
from __future__ import annotations

import hashlib
import io
import json
import logging
import time
import warnings
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import AssemblyError, LoadError, VersionError
from .features import FeatureConfig, FeaturizedSet, featurize
from .gbdt import TreeEnsemble, deserialize, explain, margin_to_probability, predict_margin, serialize
from .records import RevisionRecord
from .textdiff import DiffConfig
from .textscore import LinearTextScorer, RemoteScorer, scorer_from_bytes

log = logging.getLogger(__name__)

BUNDLE_SCHEMA_VERSION = 2
SUPPORTED_VERSIONS = (1, 2)
SCORER_CHANNELS = ("change", "insert", "remove", "title")
# fixed zip member timestamps keep bundle bytes reproducible
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


@dataclass
class ScoreResult:
    probability: float
    margin: float
    contributions: list[tuple[str, float]]
    timings: dict[str, float] = field(default_factory=dict)


@dataclass
class ModelBundle:
    scorers: dict[str, object]
    ensemble: TreeEnsemble
    feature_config: FeatureConfig
    diff_config: DiffConfig = field(default_factory=DiffConfig)
    provenance: dict = field(default_factory=dict)

    schema_version: int = BUNDLE_SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        expected = self.feature_config.feature_names()
        if list(self.ensemble.feature_names) != expected:
            raise AssemblyError(
                f"ensemble expects {len(self.ensemble.feature_names)} features that do not match "
                f"the {len(expected)}-feature layout of config {self.feature_config.name!r}"
            )
        if self.feature_config.use_text_scores:
            missing = [ch for ch in SCORER_CHANNELS if ch not in self.scorers]
            if missing:
                raise AssemblyError(f"bundle lacks scorers for {missing}")

    @property
    def model_version(self) -> str:
        return hashlib.sha1(serialize(self.ensemble)).hexdigest()[:12]

    @property
    def languages(self) -> tuple[str, ...]:
        return self.feature_config.languages

    def featurize(self, records: Sequence[RevisionRecord], deltas=None) -> FeaturizedSet:
        return featurize(records, self.feature_config, self.scorers, self.diff_config, deltas)

    def score_records(self, records: Sequence[RevisionRecord], deltas=None) -> np.ndarray:
        if not records:
            return np.empty(0)
        return margin_to_probability(predict_margin(self.ensemble, self.featurize(records, deltas).X))

    def score_one(self, record: RevisionRecord, top_k: int = 10) -> ScoreResult:
        t0 = time.perf_counter()
        x = self.featurize([record]).X[0]
        t1 = time.perf_counter()
        margin = predict_margin(self.ensemble, x)
        prob = float(margin_to_probability(margin))
        _, contrib = explain(self.ensemble, x)
        t2 = time.perf_counter()
        top = sorted(contrib.items(), key=lambda kv: (-abs(kv[1]), kv[0]))[:top_k]
        return ScoreResult(prob, float(margin), top, {"featurize_ms": (t1 - t0) * 1e3, "predict_ms": (t2 - t1) * 1e3})


def _write(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def _scorer_member(channel: str, scorer) -> tuple[str, bytes]:
    if isinstance(scorer, LinearTextScorer):
        return f"scorers/{channel}.npz", scorer.to_bytes()
    if isinstance(scorer, RemoteScorer):
        return f"scorers/{channel}.json", json.dumps(scorer.descriptor(), sort_keys=True).encode()
    raise TypeError(f"cannot persist scorer of type {type(scorer).__name__}")


def bundle_to_bytes(bundle: ModelBundle) -> bytes:
    members = {}
    for channel in sorted(bundle.scorers):
        name, blob = _scorer_member(channel, bundle.scorers[channel])
        members[channel] = name
    manifest = {
        "kind": "revertrisk-bundle",
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "model_version": bundle.model_version,
        "feature_config": bundle.feature_config.to_dict(),
        "feature_names": bundle.feature_config.feature_names(),
        "diff_config": {
            "sentence_match_threshold": bundle.diff_config.sentence_match_threshold,
            "paragraph_match_threshold": bundle.diff_config.paragraph_match_threshold,
            "max_sentence_length": bundle.diff_config.max_sentence_length,
        },
        "scorers": members,
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        _write(zf, "manifest.json", json.dumps(manifest, indent=2, sort_keys=True).encode())
        _write(zf, "provenance.json", json.dumps(bundle.provenance, indent=2, sort_keys=True, default=str).encode())
        _write(zf, "ensemble.json", serialize(bundle.ensemble))
        for channel in sorted(bundle.scorers):
            name, blob = _scorer_member(channel, bundle.scorers[channel])
            _write(zf, name, blob)
    return buf.getvalue()


def save_bundle(bundle: ModelBundle, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(bundle_to_bytes(bundle))
    tmp.replace(path)
    return path


def migrate_manifest(manifest: dict) -> dict:
    """Bring an older manifest up to the current schema."""
    version = manifest.get("schema_version")
    if version == 1:
        # v1 kept the language list beside the feature config and had no user-group list
        manifest = dict(manifest)
        fc = dict(manifest.get("feature_config", {}))
        fc.setdefault("languages", manifest.pop("languages", []))
        fc.setdefault("user_groups", ["sysop", "autoconfirmed"])
        manifest["feature_config"] = fc
        manifest["schema_version"] = 2
        warnings.warn("bundle uses schema_version 1; migrated to 2 on load", stacklevel=3)
        log.warning("migrated bundle manifest from schema_version 1")
    return manifest


def bundle_from_bytes(blob: bytes, transport=None) -> ModelBundle:
    try:
        zf = zipfile.ZipFile(io.BytesIO(blob))
    except zipfile.BadZipFile as exc:
        raise LoadError(f"bundle is not a valid archive: {exc}") from exc
    with zf:
        try:
            manifest = json.loads(zf.read("manifest.json"))
        except KeyError:
            raise LoadError("bundle has no manifest.json") from None
        except (ValueError, zipfile.BadZipFile) as exc:
            raise LoadError(f"corrupt bundle manifest: {exc}") from exc
        if manifest.get("kind") != "revertrisk-bundle":
            raise LoadError("archive is not a model bundle")
        version = manifest.get("schema_version")
        if version not in SUPPORTED_VERSIONS:
            raise VersionError(version, list(SUPPORTED_VERSIONS))
        manifest = migrate_manifest(manifest)
        try:
            feature_config = FeatureConfig.from_dict(manifest["feature_config"])
            diff_config = DiffConfig(**manifest.get("diff_config", {}))
            ensemble = deserialize(zf.read("ensemble.json"))
            scorers = {ch: scorer_from_bytes(zf.read(name), transport) for ch, name in manifest["scorers"].items()}
            provenance = json.loads(zf.read("provenance.json")) if "provenance.json" in zf.namelist() else {}
        except LoadError:
            raise
        except (KeyError, ValueError, TypeError, zipfile.BadZipFile) as exc:
            raise LoadError(f"corrupt bundle: {exc}") from exc
    names = manifest.get("feature_names")
    if names is not None and names != feature_config.feature_names():
        raise LoadError("bundle manifest feature names do not match its feature config")
    try:
        return ModelBundle(scorers, ensemble, feature_config, diff_config, provenance)
    except AssemblyError as exc:
        raise LoadError(f"bundle failed validation: {exc}") from exc


def load_bundle(path: str | Path, transport=None) -> ModelBundle:
    path = Path(path)
    if not path.exists():
        raise LoadError(f"bundle not found: {path}")
    return bundle_from_bytes(path.read_bytes(), transport)


def bundle_members(blob: bytes) -> Mapping[str, bytes]:
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        return {name: zf.read(name) for name in zf.namelist()}
