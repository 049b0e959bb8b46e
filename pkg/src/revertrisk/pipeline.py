"""End-to-end orchestration: corpus preparation, training, evaluation and report files."""
from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .bundle import ModelBundle, save_bundle
from .config import PipelineConfig, dump_config
from .errors import EmptyCorpusError, MetricError, RevertRiskError, StageError
from .fairness import FairnessReport, fairness_report, rule_based_baseline
from .features import FeatureConfig, FeaturizedSet, compute_deltas, featurize
from .filters import SplitSpec, filter_content, filter_edit_wars, filter_users, split_articles, split_time
from .gbdt import compute_class_weights, feature_importance, margin_to_probability, predict_margin, sample_weights_for, train
from .metrics import EvalReport, evaluate_scores
from .records import Corpus, annotate_corpus, cap_per_language, load_corpus
from .textscore import (
    RemoteScorer,
    build_title_targets,
    channel_training_set,
    train_scorer,
    train_title_regressor,
)

log = logging.getLogger(__name__)

SINGLE_MODIFICATION_CHANNELS = ("change", "insert")


@dataclass
class StageCount:
    stage: str
    n_in: int
    n_out: int


@dataclass
class StageLedger:
    entries: list[StageCount] = field(default_factory=list)

    def record(self, stage: str, n_in: int, n_out: int) -> None:
        self.entries.append(StageCount(stage, n_in, n_out))
        log.info("stage %-22s in=%-8d out=%d", stage, n_in, n_out)

    def to_list(self) -> list[dict]:
        return [vars(e) for e in self.entries]


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (RevertRiskError, ValueError, OSError) as exc:
        raise StageError(name, exc) from exc


def _require_nonempty(corpus: Corpus, what: str) -> Corpus:
    if len(corpus) == 0:
        raise EmptyCorpusError(f"no revisions left after {what}")
    return corpus


@dataclass
class PreparedData:
    scorer: Corpus
    classifier: Corpus
    test: Corpus
    ledger: StageLedger
    corpus_hashes: dict[str, str]

    @property
    def languages(self) -> list[str]:
        langs = {r.wiki_db for c in (self.scorer, self.classifier) for r in c}
        return sorted(langs)


def file_digest(path: str | Path) -> str:
    path = Path(path)
    h = hashlib.sha256()
    files = sorted(path.iterdir()) if path.is_dir() else [path]
    for f in files:
        if f.is_file():
            h.update(f.name.encode())
            h.update(f.read_bytes())
    return h.hexdigest()


def clean_corpus(corpus: Corpus, config: PipelineConfig, ledger: StageLedger, prefix: str = "") -> Corpus:
    """Annotate reverts and apply the content, edit-war and user filters."""
    with stage(f"{prefix}annotate"):
        n = len(corpus)
        corpus = annotate_corpus(corpus, config.data.revert_window)
        ledger.record(f"{prefix}annotate", n, len(corpus))
    with stage(f"{prefix}filter_content"):
        n = len(corpus)
        corpus = _require_nonempty(filter_content(corpus, config.data.namespace_prefixes), "filter_content")
        ledger.record(f"{prefix}filter_content", n, len(corpus))
    # edit wars are judged on the full page history, before users are removed
    with stage(f"{prefix}filter_edit_wars"):
        n = len(corpus)
        corpus = _require_nonempty(filter_edit_wars(corpus), "filter_edit_wars")
        ledger.record(f"{prefix}filter_edit_wars", n, len(corpus))
    with stage(f"{prefix}filter_users"):
        n = len(corpus)
        corpus = _require_nonempty(filter_users(corpus, config.data.user_mode), "filter_users")
        ledger.record(f"{prefix}filter_users", n, len(corpus))
    return corpus


def _restrict_languages(corpus: Corpus, languages: Sequence[str]) -> Corpus:
    if not languages:
        return corpus
    keep = set(languages)
    return corpus.replace_records(r for r in corpus if r.wiki_db in keep)


def split_corpus(
    corpus: Corpus, config: PipelineConfig, ledger: StageLedger | None = None, test_corpus: Corpus | None = None
) -> tuple[Corpus, Corpus, Corpus]:
    """Time split, per-language caps, then the page-level scorer/classifier split of a clean corpus.

    With ``test_corpus`` the test side comes from that corpus instead of the week after training.
    """
    ledger = ledger if ledger is not None else StageLedger()
    spec = SplitSpec(config.split.train_start, config.split.train_end, config.split.test_end,
                     config.split.scorer_fraction, config.seed)
    with stage("split_time"):
        n = len(corpus)
        train_side, test_side = split_time(corpus, spec)
        if test_corpus is not None:
            _, test_side = split_time(test_corpus, spec)
        # pages seen in training never reach the test set
        train_pages = {r.page_key for r in train_side}
        test_side = test_side.replace_records(r for r in test_side if r.page_key not in train_pages)
        _require_nonempty(train_side, "split_time (train window)")
        ledger.record("split_time", n, len(train_side) + len(test_side))
    with stage("cap_per_language"):
        n = len(train_side) + len(test_side)
        train_side = train_side.replace_records(cap_per_language(train_side, config.data.train_cap))
        test_side = test_side.replace_records(cap_per_language(test_side, config.data.test_cap))
        ledger.record("cap_per_language", n, len(train_side) + len(test_side))
    with stage("split_articles"):
        n = len(train_side)
        scorer, classifier = split_articles(train_side, config.split.scorer_fraction, config.seed)
        _require_nonempty(scorer, "split_articles (scorer side)")
        _require_nonempty(classifier, "split_articles (classifier side)")
        ledger.record("split_articles", n, len(scorer) + len(classifier))
    return scorer, classifier, test_side


def prepare_data(config: PipelineConfig, train_path=None, test_path=None) -> PreparedData:
    """Load, annotate, filter and split into scorer / classifier / test corpora."""
    ledger = StageLedger()
    train_path = train_path or config.data.train_path
    test_path = test_path or config.data.test_path
    if train_path is None:
        raise StageError("ingest", ValueError("no training corpus path configured"))
    hashes = {"train": file_digest(train_path)}
    with stage("ingest"):
        corpus = load_corpus(train_path, None, None, strict=config.data.strict)
        corpus = _restrict_languages(corpus, config.data.languages)
        ledger.record("ingest", len(corpus) + len(corpus.issues), len(corpus))
    corpus = clean_corpus(corpus, config, ledger)
    test_corpus = None
    if test_path is not None:
        hashes["test"] = file_digest(test_path)
        with stage("test_ingest"):
            test_corpus = load_corpus(test_path, None, None, role="test", strict=config.data.strict)
            test_corpus = _restrict_languages(test_corpus, config.data.languages)
        test_corpus = clean_corpus(test_corpus, config, ledger, "test_")
    scorer, classifier, test_side = split_corpus(corpus, config, ledger, test_corpus)
    return PreparedData(scorer, classifier, test_side, ledger, hashes)


def train_channel_scorers(scorer_corpus: Corpus, config: PipelineConfig, ledger: StageLedger | None = None) -> dict:
    params = config.scorers.build()
    records = list(scorer_corpus)
    with stage("scorer_deltas"):
        deltas = compute_deltas(records, config.diff.build())
    items = list(zip(records, deltas))
    trained_on = config.data.user_mode
    scorers: dict[str, object] = {}
    for k, channel in enumerate(("change", "insert", "remove")):
        with stage(f"train_scorer_{channel}"):
            endpoint = config.scorers.remote_endpoints.get(channel)
            if endpoint:
                scorers[channel] = RemoteScorer(channel, endpoint, timeout=config.service.timeout)
                continue
            single = config.scorers.single_modification and channel in SINGLE_MODIFICATION_CHANNELS
            examples = channel_training_set(items, channel, config.seed + k, single_modification=single)
            if ledger is not None:
                ledger.record(f"train_scorer_{channel}", len(items), len(examples))
            scorers[channel] = train_scorer(channel, examples, config.seed + k, params, trained_on)
    with stage("train_scorer_title"):
        endpoint = config.scorers.remote_endpoints.get("title")
        if endpoint:
            scorers["title"] = RemoteScorer("title", endpoint, timeout=config.service.timeout)
        else:
            targets = build_title_targets(records, config.scorers.min_title_revisions)
            if ledger is not None:
                ledger.record("train_scorer_title", len(records), len(targets))
            scorers["title"] = train_title_regressor(targets, config.seed + 3, params, trained_on)
    return scorers


def feature_config_for(name: str, languages: Sequence[str], config: PipelineConfig) -> FeatureConfig:
    return FeatureConfig.named(name, languages, user_groups=tuple(config.features.user_groups),
                               comment_length=config.features.comment_length)


def select_features(full: FeaturizedSet, target: FeatureConfig) -> FeaturizedSet:
    """Column subset of a full-layout feature set for a narrower config."""
    index = {name: i for i, name in enumerate(full.feature_names)}
    names = target.feature_names()
    cols = [index[n] for n in names]
    return FeaturizedSet(full.records, full.X[:, cols], full.deltas, names)


def full_layout(fc: FeatureConfig) -> FeatureConfig:
    """The widest layout sharing ``fc``'s languages and user groups."""
    return replace(fc, use_text_scores=True, use_user_features=True)


def featurize_all(records, fc: FeatureConfig, scorers, diff_config, deltas=None) -> FeaturizedSet:
    return featurize(records, full_layout(fc), scorers, diff_config, deltas)


def train_classifier(fs: FeaturizedSet, config: PipelineConfig):
    y = fs.labels
    if config.gbdt.class_weighting:
        w_pos, w_neg = compute_class_weights(y)
    else:
        w_pos, w_neg = 1.0, 1.0
    weights = sample_weights_for(y, w_pos, w_neg)
    ensemble = train(fs.X, y.astype(float), weights, config.gbdt.build(config.seed), fs.feature_names)
    return ensemble, (w_pos, w_neg)


@dataclass
class TrainResult:
    bundles: dict[str, ModelBundle]
    data: PreparedData
    scorers: dict
    ledger: StageLedger


def run_train(
    config: PipelineConfig,
    feature_configs: Sequence[str] | None = None,
    data: PreparedData | None = None,
    train_path=None,
    test_path=None,
) -> TrainResult:
    """Prepare data, train channel scorers, then one classifier per feature configuration."""
    names = list(feature_configs or config.features.configs)
    data = data or prepare_data(config, train_path, test_path)
    ledger = data.ledger
    languages = list(config.data.languages) or data.languages
    scorers = train_channel_scorers(data.scorer, config, ledger)
    with stage("featurize"):
        classifier_records = [r for r in data.classifier if r.is_reverted is not None]
        base = feature_config_for("full", languages, config)
        full = featurize_all(classifier_records, base, scorers, config.diff.build())
        ledger.record("featurize", len(data.classifier), len(classifier_records))
    bundles = {}
    for name in names:
        with stage(f"train_classifier_{name}"):
            fc = feature_config_for(name, languages, config)
            fs = select_features(full, fc)
            ensemble, (w_pos, w_neg) = train_classifier(fs, config)
            provenance = {
                "feature_config": name,
                "seed": config.seed,
                "corpus_sha256": data.corpus_hashes,
                "class_weights": {"positive": w_pos, "negative": w_neg},
                "n_train": int(fs.X.shape[0]),
                "stage_counts": ledger.to_list(),
                "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            }
            bundles[name] = ModelBundle(dict(scorers), ensemble, fc, config.diff.build(), provenance)
    return TrainResult(bundles, data, scorers, ledger)


def save_train_result(result: TrainResult, output_dir: str | Path, config: PipelineConfig | None = None) -> list[Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [save_bundle(b, out / f"bundle_{name}.zip") for name, b in result.bundles.items()]
    (out / "stage_counts.json").write_text(json.dumps(result.ledger.to_list(), indent=2))
    if config is not None:
        (out / "config.yaml").write_text(dump_config(config))
    return paths


# --- evaluation ---------------------------------------------------------------------

VIEWS = ("all", "anonymous_only")
BASELINE = "rule_based"


@dataclass
class EvalCell:
    config: str
    view: str
    report: EvalReport | None
    fairness: FairnessReport | None = None
    errors: list[str] = field(default_factory=list)


@dataclass
class EvaluationResult:
    cells: list[EvalCell]
    importances: dict[str, dict[str, float]]
    n_test: int

    def cell(self, config: str, view: str = "all") -> EvalCell:
        for c in self.cells:
            if c.config == config and c.view == view:
                return c
        raise KeyError((config, view))

    def to_dict(self) -> dict:
        return {
            "n_test": self.n_test,
            "cells": [
                {
                    "config": c.config,
                    "view": c.view,
                    "report": c.report.to_dict() if c.report else None,
                    "fairness": c.fairness.to_dict() if c.fairness else None,
                    "errors": c.errors,
                }
                for c in self.cells
            ],
            "feature_importance": self.importances,
        }


def _evaluate_cell(name, view, scores, labels, languages, privileged, config: PipelineConfig) -> EvalCell:
    cell = EvalCell(name, view, None)
    threshold = config.evaluation.threshold
    try:
        cell.report = evaluate_scores(scores, labels, languages, threshold, config.evaluation.balance, config.seed)
        cell.errors.extend(cell.report.errors)
    except MetricError as exc:
        cell.errors.append(str(exc))
    if view == "all":
        # fairness is measured on the unbalanced test distribution
        try:
            cell.fairness = fairness_report(scores, labels, privileged, threshold)
            cell.errors.extend(cell.fairness.errors)
        except MetricError as exc:
            cell.errors.append(f"fairness: {exc}")
    return cell


def run_evaluate(bundles: Mapping[str, ModelBundle], test: Corpus | Iterable, config: PipelineConfig) -> EvaluationResult:
    """All-users and anonymous-only views for every bundle plus the rule-based baseline."""
    records = [r for r in test if r.is_reverted is not None]
    if not records:
        raise StageError("evaluate", EmptyCorpusError("test corpus has no labelled revisions"))
    labels = np.array([bool(r.is_reverted) for r in records])
    languages = np.array([r.wiki_db for r in records])
    privileged = np.array([not r.is_anonymous for r in records])
    anon = ~privileged

    scores: dict[str, np.ndarray] = {BASELINE: rule_based_baseline(records)}
    importances = {}
    with stage("evaluate_featurize"):
        deltas = compute_deltas(records, next(iter(bundles.values())).diff_config) if bundles else None
        cache: dict[tuple, FeaturizedSet] = {}
        for name, bundle in bundles.items():
            fc = bundle.feature_config
            key = (fc.languages, fc.user_groups, fc.comment_length, tuple(id(bundle.scorers.get(ch)) for ch in sorted(bundle.scorers)))
            if key not in cache:
                cache[key] = featurize_all(records, fc, bundle.scorers, bundle.diff_config, deltas)
            fs = select_features(cache[key], bundle.feature_config)
            scores[name] = margin_to_probability(predict_margin(bundle.ensemble, fs.X))
            importances[name] = feature_importance(bundle.ensemble)

    cells = []
    for name, s in scores.items():
        cells.append(_evaluate_cell(name, "all", s, labels, languages, privileged, config))
        cells.append(_evaluate_cell(name, "anonymous_only", s[anon], labels[anon], languages[anon], privileged[anon], config))
    return EvaluationResult(cells, importances, len(records))


TABLE_FIELDS = (
    "config", "view", "language", "auc", "pr_at_r75", "f1_at_half", "accuracy_at_half", "macro_f1",
    "n_samples", "positive_rate", "dir", "dir_base", "auc_difference", "threshold",
)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_reports(result: EvaluationResult, output_dir: str | Path) -> dict[str, Path]:
    """report.json, a flat metrics table, PR-curve points and feature importances."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.json",
        "table": out / "metrics_table.csv",
        "pr_curves": out / "pr_curves.csv",
        "importance": out / "feature_importance.csv",
    }
    paths["report"].write_text(json.dumps(result.to_dict(), indent=2, default=str))
    with open(paths["table"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_FIELDS)
        for c in result.cells:
            if c.report is None:
                continue
            fair = c.fairness.to_dict() if c.fairness else {}
            rows = [("all", c.report)] + sorted(c.report.per_language.items())
            for lang, m in rows:
                w.writerow([
                    c.config, c.view, lang, _fmt(m.auc), _fmt(m.pr_at_r75), _fmt(m.f1_at_half),
                    _fmt(m.accuracy_at_half), _fmt(m.macro_f1), m.n_samples, _fmt(m.positive_rate),
                    fair.get("dir", "") if lang == "all" else "",
                    fair.get("dir_base", "") if lang == "all" else "",
                    _fmt(fair.get("auc_difference")) if lang == "all" else "",
                    c.report.threshold,
                ])
    with open(paths["pr_curves"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("config", "view", "threshold", "precision", "recall"))
        for c in result.cells:
            if c.report is None:
                continue
            for t, p, r in c.report.pr_curve:
                w.writerow((c.config, c.view, repr(t), repr(p), repr(r)))
    with open(paths["importance"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("config", "feature", "importance"))
        for name, imp in result.importances.items():
            for feat, v in sorted(imp.items(), key=lambda kv: -kv[1]):
                w.writerow((name, feat, repr(v)))
    return paths
