from __future__ import annotations

import itertools
from datetime import datetime, timedelta, timezone

import pytest

from revertrisk.records import Corpus, RevisionRecord, UserKind, byte_length

T0 = datetime(2022, 3, 1, tzinfo=timezone.utc)
_ids = itertools.count(1_000)


def make_record(**kw) -> RevisionRecord:
    """A valid record with overridable fields; bytes_diff follows the texts."""
    fields = dict(
        wiki_db="enwiki",
        revision_id=next(_ids),
        revision_parent_id=1,
        page_title="Example",
        event_timestamp=T0,
        user_kind=UserKind.REGISTERED,
        revision_text_bytes_diff=0,
    )
    fields.update(kw)
    if fields.get("parent_text") is not None and fields.get("current_text") is not None:
        fields["revision_text_bytes_diff"] = byte_length(fields["current_text"]) - byte_length(fields["parent_text"])
    return RevisionRecord(**fields)


def page_history(texts, title="Page", wiki_db="enwiki", start=T0, kinds=None) -> list[RevisionRecord]:
    """Consecutive revisions of one page whose contents are ``texts``."""
    out = []
    prev_text = ""
    prev_id = 0
    for i, text in enumerate(texts):
        rid = next(_ids)
        kind = kinds[i] if kinds else UserKind.REGISTERED
        out.append(make_record(
            wiki_db=wiki_db, page_title=title, revision_id=rid, revision_parent_id=prev_id,
            event_timestamp=start + timedelta(minutes=i), user_kind=kind,
            parent_text=prev_text, current_text=text,
        ))
        prev_text, prev_id = text, rid
    return out


@pytest.fixture
def corpus_of():
    return lambda records: Corpus(tuple(records))


SMALL_CONFIG = {"gbdt": {"n_trees": 30, "learning_rate": 0.1}}


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    """A trained two-language run on a 3000-revision synthetic corpus, with every bundle saved."""
    from revertrisk.config import PipelineConfig
    from revertrisk.pipeline import run_train, save_train_result
    from revertrisk.synth import SynthConfig, write_synthetic_corpus

    root = tmp_path_factory.mktemp("small_run")
    corpus = root / "corpus.jsonl"
    write_synthetic_corpus(corpus, SynthConfig(n_revisions=3000, languages=("enwiki", "dewiki")))
    config = PipelineConfig.model_validate({**SMALL_CONFIG, "data": {"train_path": str(corpus)}})
    result = run_train(config)
    save_train_result(result, root / "out", config)
    return {"root": root, "corpus": corpus, "config": config, "result": result, "out": root / "out"}


# --- acceptance summary -----------------------------------------------------------

_criteria: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    if report.failed or report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        if number not in _criteria or _criteria[number][0] == "PASS":
            _criteria[number] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        status, title, detail = _criteria[number]
        line = f"criterion {number:>2} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
