import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings, strategies as st

from revertrisk.errors import AnnotationError, EmptyCorpusError, ParseError, SchemaError
from revertrisk.records import (
    Corpus,
    UserKind,
    annotate_corpus,
    annotate_reverts,
    load_corpus,
    parse_revision_record,
    parse_timestamp,
    record_to_dict,
    revert_flags,
    serialize_revision_record,
    write_corpus,
)

from .conftest import make_record, page_history

BALACLAVA = {
    "wiki_db": "enwiki",
    "event_comment": "grammar",
    "event_user_text_historical": "2603:6010:D800:395B:A03F:E9CD:9BE1:65D7",
    "event_user_seconds_since_previous_revision": None,
    "revision_id": 1096535207,
    "page_title": "Balaclava (clothing)",
    "revision_text_bytes_diff": 45,
    "revision_is_identity_reverted": 1,
    "event_timestamp": "2022-07-05 02:46:04.0",
    "revision_parent_id": 1096535065,
    "is_mobile_edit": 0,
    "is_mobile_web_edit": 0,
    "is_visualeditor": 0,
    "is_wikieditor": 1,
    "is_mobile_app_edit": 0,
    "is_android_app_edit": 0,
    "is_ios_app_edit": 0,
    "is_anonymous": 1,
}


def test_parse_balaclava_sample():
    r = parse_revision_record(json.dumps(BALACLAVA))
    assert r.wiki_db == "enwiki"
    assert r.revision_id == 1096535207
    assert r.is_reverted is True
    assert r.user_kind is UserKind.ANONYMOUS
    assert r.is_anonymous
    assert r.is_wikieditor and not r.is_mobile_edit
    assert r.seconds_since_previous_revision is None
    assert r.event_timestamp == datetime(2022, 7, 5, 2, 46, 4, tzinfo=timezone.utc)


def test_nan_seconds_is_absent():
    line = json.dumps(BALACLAVA).replace("null", "NaN")
    assert parse_revision_record(line).seconds_since_previous_revision is None


def test_zero_diff_identical_texts_is_valid():
    data = dict(BALACLAVA, revision_text_bytes_diff=0, parent_text="same", current_text="same")
    r = parse_revision_record(json.dumps(data))
    assert r.revision_text_bytes_diff == 0


def test_missing_revision_id_names_field():
    data = dict(BALACLAVA)
    del data["revision_id"]
    with pytest.raises(SchemaError) as exc:
        parse_revision_record(json.dumps(data), 7)
    assert exc.value.field == "revision_id"
    assert exc.value.line_number == 7


def test_malformed_line_carries_line_number():
    with pytest.raises(ParseError) as exc:
        parse_revision_record("{not json", 3)
    assert exc.value.line_number == 3


def test_bytes_diff_must_match_texts():
    data = dict(BALACLAVA, parent_text="abc", current_text="abcd", revision_text_bytes_diff=5)
    with pytest.raises(SchemaError):
        parse_revision_record(json.dumps(data))


def test_bot_flag_wins():
    r = parse_revision_record(json.dumps(dict(BALACLAVA, is_bot=1)))
    assert r.user_kind is UserKind.BOT


def test_timestamp_formats():
    a = parse_timestamp("2022-07-05 02:46:04.0")
    b = parse_timestamp("2022-07-05T04:46:04+02:00")
    c = parse_timestamp("2022-07-05T02:46:04Z")
    assert a == b == c


_text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=40)


@settings(max_examples=200, deadline=None)
@given(
    parent=_text, current=_text, comment=_text, title=st.text(min_size=1, max_size=20).filter(lambda s: "\x00" not in s),
    anon=st.booleans(), reverted=st.one_of(st.none(), st.booleans()),
    seconds=st.one_of(st.none(), st.integers(0, 10**7)),
    micros=st.integers(0, 999_999),
)
def test_serialize_roundtrip(parent, current, comment, title, anon, reverted, seconds, micros):
    r = make_record(
        page_title=title, parent_text=parent, current_text=current, event_comment=comment,
        user_kind=UserKind.ANONYMOUS if anon else UserKind.REGISTERED, is_reverted=reverted,
        seconds_since_previous_revision=seconds,
        event_timestamp=datetime(2022, 5, 1, 12, 0, 0, micros, tzinfo=timezone.utc),
    )
    assert parse_revision_record(serialize_revision_record(r)) == r


def test_load_corpus_caps_keep_earliest(tmp_path):
    hist = page_history([f"t{i}" for i in range(12)])
    path = tmp_path / "c.jsonl"
    write_corpus(reversed(hist), path)
    corpus = load_corpus(path, train_cap=10)
    assert len(corpus) == 10
    assert [r.revision_id for r in corpus] == [r.revision_id for r in hist[:10]]


def test_load_corpus_five_languages_under_cap(tmp_path):
    recs = []
    for lang in ("dewiki", "enwiki", "eswiki", "frwiki", "itwiki"):
        recs += page_history([f"x{i}" for i in range(10)], wiki_db=lang)
    path = tmp_path / "c.jsonl"
    write_corpus(recs, path)
    corpus = load_corpus(path, train_cap=10)
    assert len(corpus) == 50
    assert corpus.per_language_counts == {lang: 10 for lang in ("dewiki", "enwiki", "eswiki", "frwiki", "itwiki")}


def test_load_corpus_lenient_and_strict(tmp_path):
    hist = page_history([f"t{i}" for i in range(9)])
    lines = [serialize_revision_record(r) for r in hist]
    lines.insert(4, '{"broken": ')
    path = tmp_path / "c.jsonl"
    path.write_text("\n".join(lines) + "\n")
    corpus = load_corpus(path)
    assert len(corpus) == 9
    assert [e.line_number for e in corpus.issues] == [5]
    with pytest.raises(ParseError):
        load_corpus(path, strict=True)


def test_load_corpus_errors(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("\n")
    with pytest.raises(EmptyCorpusError):
        load_corpus(empty)
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "missing.jsonl")
    with pytest.raises(ValueError):
        load_corpus(empty, train_cap=0)


def test_load_corpus_infinite_cap_preserves_records(tmp_path):
    recs = page_history(["a", "b", "c"], title="A") + page_history(["d", "e"], title="B", wiki_db="dewiki")
    path = tmp_path / "c.jsonl"
    write_corpus(recs, path)
    corpus = load_corpus(path, None, None)
    assert sorted(r.revision_id for r in corpus) == sorted(r.revision_id for r in recs)


def test_corpus_ordering():
    recs = page_history(["a", "b"], title="Zed") + page_history(["a", "b"], title="Alpha")
    c = Corpus(tuple(reversed(recs)))
    assert [r.page_title for r in c] == ["Alpha", "Alpha", "Zed", "Zed"]


# --- identity reverts -----------------------------------------------------------

def test_revert_hand_trace():
    revert, reverted = revert_flags(["h0", "h1", "h0"], 10)
    assert revert == [False, False, True]
    assert reverted == [False, True, False]


def test_null_edit_sets_nothing():
    assert revert_flags(["h0", "h0"], 10) == ([False, False], [False, False])


def test_window_bound():
    assert revert_flags(["h0", "h1", "h2", "h0"], 2) == ([False] * 4, [False] * 4)
    revert, reverted = revert_flags(["h0", "h1", "h2", "h0"], 3)
    assert revert == [False, False, False, True]
    assert reverted == [False, True, True, False]


def test_annotate_reverts_on_texts():
    hist = annotate_reverts(page_history(["base", "vandal", "base"]))
    assert [r.is_revert for r in hist] == [False, False, True]
    assert [r.is_reverted for r in hist] == [False, True, False]


def test_annotate_requires_texts():
    hist = page_history(["a", "b"])
    from dataclasses import replace
    hist[1] = replace(hist[1], current_text=None, parent_text=None)
    with pytest.raises(AnnotationError):
        annotate_reverts(hist)


def test_precomputed_labels_win(corpus_of):
    hist = page_history(["a", "b", "a"])
    from dataclasses import replace
    hist[0] = replace(hist[0], is_reverted=True)
    out = list(annotate_corpus(corpus_of(hist)))
    assert out[0].is_reverted is True
    assert out[1].is_reverted is True


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=25), st.integers(1, 30))
def test_revert_flag_properties(seq, window):
    digests = [f"h{x}" for x in seq]
    revert, reverted = revert_flags(digests, window)
    # idempotent in the sense of a pure function, and window-free beyond page length
    assert revert_flags(digests, window) == (revert, reverted)
    if window >= len(digests):
        assert revert_flags(digests, len(digests) + 5) == (revert, reverted)
    # every reverted revision has a later revert within W
    for m, flag in enumerate(reverted):
        if flag:
            assert any(revert[k] for k in range(m + 1, min(len(digests), m + window + 1)))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=15))
def test_annotate_idempotent(seq):
    hist = page_history([f"text {x}" for x in seq])
    once = annotate_reverts(hist)
    assert annotate_reverts(once) == once


def test_record_to_dict_field_names():
    d = record_to_dict(make_record(parent_text="a", current_text="ab"))
    for name in ("wiki_db", "event_user_text_historical", "event_user_seconds_since_previous_revision",
                 "revision_text_bytes_diff", "revision_parent_id", "is_anonymous"):
        assert name in d
