"""Command line entry point.

Batch commands call the library directly; ``score`` talks to a running service.
Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.
"""
from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import httpx
import numpy as np
from pydantic import ValidationError

from .config import PipelineConfig, dump_config, load_config
from .errors import DataError, FetchError, RevertRiskError, StageError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
FEATURE_CONFIGS = ("basic", "mlm", "user", "full")

log = logging.getLogger("revertrisk")


def _apply_common(ctx_obj: dict, seed, output, languages, feature_config) -> PipelineConfig:
    config: PipelineConfig = ctx_obj["config"]
    update = {}
    if seed is not None:
        update["seed"] = seed
    if output is not None:
        update["output_dir"] = str(output)
    if languages:
        langs = sorted({x.strip() for x in languages.split(",") if x.strip()})
        update["data"] = config.data.model_copy(update={"languages": langs})
    if feature_config:
        update["features"] = config.features.model_copy(update={"configs": list(feature_config)})
    return config.model_copy(update=update) if update else config


def common_options(fn):
    fn = click.option("--feature-config", "feature_config", multiple=True,
                      type=click.Choice(FEATURE_CONFIGS), help="Restrict to these feature configurations.")(fn)
    fn = click.option("--languages", help="Comma-separated wiki_db codes, e.g. enwiki,dewiki.")(fn)
    fn = click.option("--output", type=click.Path(path_type=Path), help="Output directory.")(fn)
    fn = click.option("--seed", type=int, help="Override the configured seed.")(fn)
    return fn


def _emit(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True, default=str))


def _out_dir(config: PipelineConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="YAML pipeline config.")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def cli(ctx, config_path, verbose):
    """Revert-risk modelling toolkit."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    ctx.obj = {"config": load_config(config_path)}


@cli.command()
@click.option("--n-revisions", type=int, default=50_000, show_default=True)
@common_options
@click.pass_obj
def synth(obj, n_revisions, seed, output, languages, feature_config):
    """Write a synthetic corpus with a known vandalism signal."""
    from .synth import SynthConfig, write_synthetic_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    kwargs = {"n_revisions": n_revisions, "seed": config.seed}
    if config.data.languages:
        kwargs["languages"] = tuple(config.data.languages)
    path = _out_dir(config) / "corpus.jsonl"
    n = write_synthetic_corpus(path, SynthConfig(**kwargs))
    _emit({"path": str(path), "records": n})


@cli.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@common_options
@click.pass_obj
def ingest(obj, source, seed, output, languages, feature_config):
    """Parse and validate a corpus, writing the well-formed records."""
    from .records import load_corpus, write_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    corpus = load_corpus(source, None, None, strict=config.data.strict)
    if config.data.languages:
        keep = set(config.data.languages)
        corpus = corpus.replace_records(r for r in corpus if r.wiki_db in keep)
    out = _out_dir(config)
    write_corpus(corpus, out / "corpus.jsonl")
    summary = {"records": len(corpus), "skipped": len(corpus.issues), "per_language": corpus.per_language_counts}
    (out / "ingest.json").write_text(json.dumps(summary, indent=2))
    _emit(summary)


@cli.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@common_options
@click.pass_obj
def annotate(obj, source, seed, output, languages, feature_config):
    """Label identity reverts within each page history."""
    from .records import annotate_corpus, load_corpus, write_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    corpus = annotate_corpus(load_corpus(source, None, None, strict=config.data.strict), config.data.revert_window)
    write_corpus(corpus, _out_dir(config) / "corpus.jsonl")
    _emit({"records": len(corpus), "reverted": sum(1 for r in corpus if r.is_reverted)})


@cli.command("filter")
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@common_options
@click.pass_obj
def filter_cmd(obj, source, seed, output, languages, feature_config):
    """Annotate, then drop non-content pages, edit wars and excluded users."""
    from .pipeline import StageLedger, clean_corpus
    from .records import load_corpus, write_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    ledger = StageLedger()
    corpus = clean_corpus(load_corpus(source, None, None, strict=config.data.strict), config, ledger)
    write_corpus(corpus, _out_dir(config) / "corpus.jsonl")
    _emit(ledger.to_list())


@cli.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@common_options
@click.pass_obj
def split(obj, source, seed, output, languages, feature_config):
    """Split a filtered corpus into scorer, classifier and test files."""
    from .pipeline import StageLedger, split_corpus
    from .records import load_corpus, write_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    ledger = StageLedger()
    parts = split_corpus(load_corpus(source, None, None, strict=config.data.strict), config, ledger)
    out = _out_dir(config)
    for name, part in zip(("scorer", "classifier", "test"), parts):
        write_corpus(part, out / f"{name}.jsonl")
    (out / "stage_counts.json").write_text(json.dumps(ledger.to_list(), indent=2))
    _emit({name: len(part) for name, part in zip(("scorer", "classifier", "test"), parts)})


@cli.command("train-scorers")
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@common_options
@click.pass_obj
def train_scorers(obj, source, seed, output, languages, feature_config):
    """Train the change/insert/remove/title text scorers on a scorer-side corpus."""
    from .pipeline import StageLedger, train_channel_scorers
    from .records import load_corpus
    from .textscore import LinearTextScorer, save_scorer

    config = _apply_common(obj, seed, output, languages, feature_config)
    ledger = StageLedger()
    scorers = train_channel_scorers(load_corpus(source, None, None), config, ledger)
    out = _out_dir(config)
    written = {}
    for channel, scorer in scorers.items():
        if isinstance(scorer, LinearTextScorer):
            path = out / f"{channel}.npz"
            save_scorer(scorer, path)
            written[channel] = str(path)
    _emit({"scorers": written, "stages": ledger.to_list()})


def _load_scorer_dir(path: Path) -> dict:
    from .textscore import load_scorer

    scorers = {}
    for channel in ("change", "insert", "remove", "title"):
        for suffix in (".npz", ".json"):
            p = path / f"{channel}{suffix}"
            if p.exists():
                scorers[channel] = load_scorer(p)
    return scorers


@cli.command()
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option("--scorers", "scorer_dir", type=click.Path(exists=True, file_okay=False, path_type=Path),
              help="Directory written by train-scorers (needed unless the config is 'basic' or 'user').")
@common_options
@click.pass_obj
def featurize(obj, source, scorer_dir, seed, output, languages, feature_config):
    """Compute the feature matrix for a labelled corpus."""
    from .pipeline import feature_config_for, featurize_all
    from .records import load_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    corpus = load_corpus(source, None, None)
    records = [r for r in corpus if r.is_reverted is not None]
    name = config.features.configs[-1] if feature_config else "full"
    langs = config.data.languages or sorted({r.wiki_db for r in records})
    fc = feature_config_for(name, langs, config)
    scorers = _load_scorer_dir(scorer_dir) if scorer_dir else {}
    if fc.use_text_scores and not scorers:
        raise click.UsageError(f"feature config {name!r} needs --scorers")
    fs = featurize_all(records, fc, scorers, config.diff.build())
    path = _out_dir(config) / f"features_{name}.npz"
    np.savez_compressed(
        path, X=fs.X, y=fs.labels.astype(np.int8), feature_names=np.array(fs.feature_names),
        revision_id=np.array([r.revision_id for r in records]), wiki_db=np.array([r.wiki_db for r in records]),
    )
    _emit({"path": str(path), "rows": int(fs.X.shape[0]), "features": len(fs.feature_names)})


@cli.command()
@click.option("--train-path", type=click.Path(exists=True, path_type=Path))
@click.option("--test-path", type=click.Path(exists=True, path_type=Path))
@click.option("--evaluate/--no-evaluate", "do_eval", default=False, help="Also evaluate on the held-out test week.")
@common_options
@click.pass_obj
def train(obj, train_path, test_path, do_eval, seed, output, languages, feature_config):
    """Run the full training pipeline and write one bundle per feature configuration."""
    from .pipeline import run_evaluate, run_train, save_train_result, write_reports
    from .records import write_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    result = run_train(config, train_path=train_path, test_path=test_path)
    out = _out_dir(config)
    paths = save_train_result(result, out, config)
    write_corpus(result.data.test, out / "test.jsonl")
    summary = {"bundles": [str(p) for p in paths], "test_records": len(result.data.test)}
    if do_eval:
        evaluation = run_evaluate(result.bundles, result.data.test, config)
        summary["reports"] = {k: str(v) for k, v in write_reports(evaluation, out).items()}
    _emit(summary)


def _load_bundles(paths: tuple[Path, ...]) -> dict:
    from .bundle import load_bundle

    files: list[Path] = []
    for p in paths:
        files.extend(sorted(p.glob("bundle_*.zip")) if p.is_dir() else [p])
    if not files:
        raise click.UsageError("no bundles found")
    bundles = {}
    for f in files:
        b = load_bundle(f)
        bundles[b.feature_config.name] = b
    return bundles


@cli.command()
@click.argument("bundles", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="Labelled, filtered test corpus (e.g. test.jsonl written by train).")
@common_options
@click.pass_obj
def evaluate(obj, bundles, test_path, seed, output, languages, feature_config):
    """Score a test corpus with each bundle and write metric reports."""
    from .pipeline import run_evaluate, write_reports
    from .records import load_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    loaded = _load_bundles(bundles)
    if feature_config:
        loaded = {k: v for k, v in loaded.items() if k in feature_config}
    result = run_evaluate(loaded, load_corpus(test_path, None, None, role="test"), config)
    paths = write_reports(result, _out_dir(config))
    _emit({"reports": {k: str(v) for k, v in paths.items()}})


@cli.command()
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True, path_type=Path))
@common_options
@click.pass_obj
def fairness(obj, bundle, test_path, seed, output, languages, feature_config):
    """Disparate impact and AUC gap between anonymous and registered editors."""
    from .bundle import load_bundle
    from .fairness import fairness_report
    from .records import load_corpus

    config = _apply_common(obj, seed, output, languages, feature_config)
    b = load_bundle(bundle)
    records = [r for r in load_corpus(test_path, None, None, role="test") if r.is_reverted is not None]
    scores = b.score_records(records)
    labels = np.array([r.is_reverted for r in records])
    privileged = np.array([not r.is_anonymous for r in records])
    report = fairness_report(scores, labels, privileged, config.evaluation.threshold)
    _emit({"feature_config": b.feature_config.name, **report.to_dict()})


@cli.command()
@click.argument("bundle", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--rev-id", required=True, type=int)
@click.option("--top", type=int, default=10, show_default=True)
@click.pass_obj
def explain(obj, bundle, corpus_path, rev_id, top):
    """Per-feature contributions for one revision of a corpus."""
    from .bundle import load_bundle
    from .records import load_corpus

    b = load_bundle(bundle)
    matches = [r for r in load_corpus(corpus_path, None, None) if r.revision_id == rev_id]
    if not matches:
        raise DataError(f"revision {rev_id} not in {corpus_path}")
    result = b.score_one(matches[0], top_k=top)
    _emit({
        "revision_id": rev_id,
        "probability": result.probability,
        "margin": result.margin,
        "base_margin": b.ensemble.base_margin,
        "contributions": [{"feature": f, "value": v} for f, v in result.contributions],
    })


@cli.command()
@click.option("--bundle", "bundle_path", type=click.Path(exists=True, dir_okay=False), help="Bundle zip to serve.")
@click.option("--host")
@click.option("--port", type=int)
@click.pass_obj
def serve(obj, bundle_path, host, port):
    """Run the HTTP scoring service."""
    import uvicorn

    from .service import create_app

    config: PipelineConfig = obj["config"]
    update = {k: v for k, v in {"bundle_path": bundle_path, "host": host, "port": port}.items() if v is not None}
    settings = config.service.model_copy(update=update)
    if not settings.bundle_path:
        raise click.UsageError("no bundle: pass --bundle or set service.bundle_path / REVERTRISK_BUNDLE")
    app = create_app(settings=settings)
    uvicorn.run(app, host=settings.host, port=settings.port, timeout_graceful_shutdown=30)


@cli.command()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--lang")
@click.option("--rev-id", type=int)
@click.option("--raw", "raw_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON file with a raw payload (lang, parent_text, current_text, ...).")
@click.option("--timeout", type=float, default=30.0)
def score(url, lang, rev_id, raw_path, timeout):
    """Ask a running service for a revert-risk score."""
    if raw_path:
        endpoint, body = "/v1/score:raw", json.loads(Path(raw_path).read_text(encoding="utf-8"))
    elif lang and rev_id:
        endpoint, body = "/v1/score", {"lang": lang, "rev_id": rev_id}
    else:
        raise click.UsageError("pass --lang and --rev-id, or --raw FILE")
    try:
        response = httpx.post(url.rstrip("/") + endpoint, json=body, timeout=timeout)
    except httpx.HTTPError as exc:
        raise FetchError(f"service unreachable: {exc}") from exc
    if response.status_code != 200:
        click.echo(response.text, err=True)
        raise FetchError(f"service returned HTTP {response.status_code}", response.status_code)
    _emit(response.json())


@cli.command("show-config")
@click.pass_obj
def show_config(obj):
    """Print the effective configuration."""
    click.echo(dump_config(obj["config"]), nl=False)


def _is_data_error(exc: BaseException) -> bool:
    if isinstance(exc, StageError):
        return _is_data_error(exc.cause)
    return isinstance(exc, (DataError, FetchError, FileNotFoundError, ValueError))


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="revertrisk", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except ValidationError as exc:
        click.echo(f"invalid configuration: {exc}", err=True)
        return EXIT_USAGE
    except RevertRiskError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA if _is_data_error(exc) else EXIT_INTERNAL
    except (FileNotFoundError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        click.echo(f"internal error: {exc}", err=True)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
