from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings, strategies as st

from revertrisk.errors import BalanceError, PreconditionError
from revertrisk.filters import (
    SplitSpec,
    filter_content,
    filter_edit_wars,
    filter_users,
    single_modification_filter,
    split_articles,
    split_time,
    undersample_balance,
)
from revertrisk.records import Corpus, UserKind, annotate_corpus
from revertrisk.textdiff import TextDelta

from .conftest import make_record, page_history

UTC = timezone.utc


def annotated(texts, **kw):
    return annotate_corpus(Corpus(tuple(page_history(texts, **kw))))


# --- content and users -------------------------------------------------------

def test_filter_content():
    creation = make_record(revision_parent_id=0)
    talk = make_record(page_title="Talk:Foo")
    article = make_record(page_title="Foo")
    out = filter_content(Corpus((creation, talk, article)), {"default": ["Talk:"]})
    assert [r.page_title for r in out] == ["Foo"]


def test_filter_content_default_table_is_localized():
    de_talk = make_record(wiki_db="dewiki", page_title="Diskussion:Foo")
    en_user = make_record(page_title="User:Bar")
    keep = make_record(page_title="Bar")
    out = filter_content(Corpus((de_talk, en_user, keep)))
    assert [r.page_title for r in out] == ["Bar"]


@pytest.mark.parametrize("kind,mode,kept", [
    (UserKind.BOT, "all", False),
    (UserKind.REGISTERED, "anonymous_only", False),
    (UserKind.REGISTERED, "all", True),
    (UserKind.ANONYMOUS, "all", True),
    (UserKind.ANONYMOUS, "anonymous_only", True),
    (UserKind.BOT, "anonymous_only", False),
])
def test_filter_users(kind, mode, kept):
    out = filter_users(Corpus((make_record(user_kind=kind),)), mode)
    assert (len(out) == 1) == kept


def test_filter_users_rejects_unknown_mode():
    with pytest.raises(ValueError):
        filter_users(Corpus(()), "registered_only")


# --- edit wars -----------------------------------------------------------------

def test_edit_war_hand_trace():
    corpus = annotated(["h0", "h1", "h0", "h1"])
    ids = [r.revision_id for r in corpus]
    out = filter_edit_wars(corpus)
    assert [r.revision_id for r in out] == [ids[0], ids[1], ids[3]]
    assert next(r for r in out if r.revision_id == ids[1]).is_reverted


def test_edit_war_single_revert_kept():
    corpus = annotated(["h0", "h1", "h0"])
    assert len(filter_edit_wars(corpus)) == 3


def test_edit_war_null_edit_kept():
    corpus = annotated(["h0", "h0"])
    assert len(filter_edit_wars(corpus)) == 2


def test_edit_war_needs_annotations():
    with pytest.raises(PreconditionError):
        filter_edit_wars(Corpus((make_record(),)))


_histories = st.lists(st.lists(st.integers(0, 3), min_size=1, max_size=12), min_size=1, max_size=4)


def _corpus_from(seqs):
    recs = []
    for p, seq in enumerate(seqs):
        recs += page_history([f"t{x}" for x in seq], title=f"P{p}",
                             kinds=[UserKind.BOT if x == 3 else UserKind.ANONYMOUS for x in seq])
    return annotate_corpus(Corpus(tuple(recs)))


@settings(max_examples=150, deadline=None)
@given(_histories)
def test_filters_idempotent_and_order_preserving(seqs):
    c = _corpus_from(seqs)
    for f in (filter_content, filter_edit_wars, filter_users, lambda x: filter_users(x, "anonymous_only")):
        once = f(c)
        assert list(f(once)) == list(once)
        ids = [r.revision_id for r in c]
        kept = [r.revision_id for r in once]
        assert kept == [i for i in ids if i in set(kept)]


@settings(max_examples=150, deadline=None)
@given(_histories)
def test_edit_war_filter_only_drops_reverts(seqs):
    c = _corpus_from(seqs)
    kept = {r.revision_id for r in filter_edit_wars(c)}
    for r in c:
        if not r.is_revert:
            assert r.revision_id in kept


# --- splits --------------------------------------------------------------------

def _spec(**kw):
    base = dict(train_start=datetime(2022, 1, 1, tzinfo=UTC), train_end=datetime(2022, 7, 1, tzinfo=UTC),
                test_end=datetime(2022, 7, 8, tzinfo=UTC))
    base.update(kw)
    return SplitSpec(**base)


def test_split_time_half_open():
    spec = _spec()
    inside = make_record(event_timestamp=datetime(2022, 3, 1, tzinfo=UTC))
    boundary = make_record(event_timestamp=spec.train_end)
    last_test = make_record(event_timestamp=spec.test_end - timedelta(seconds=1))
    after = make_record(event_timestamp=spec.test_end)
    before = make_record(event_timestamp=datetime(2021, 12, 31, tzinfo=UTC))
    train, test = split_time(Corpus((inside, boundary, last_test, after, before)), spec)
    assert [r.revision_id for r in train] == [inside.revision_id]
    assert {r.revision_id for r in test} == {boundary.revision_id, last_test.revision_id}


def test_split_spec_validation():
    with pytest.raises(ValueError):
        _spec(train_end=datetime(2021, 1, 1, tzinfo=UTC))
    with pytest.raises(ValueError):
        _spec(scorer_fraction=1.0)
    assert _spec(scorer_fraction=0.6).classifier_fraction == pytest.approx(0.4)


def test_split_articles_two_pages():
    recs = page_history(list("abcdef"), title="Six") + page_history(list("abcd"), title="Four")
    c = Corpus(tuple(recs))
    outcomes = set()
    for seed in range(40):
        scorer, classifier = split_articles(c, 0.6, seed)
        assert {r.page_title for r in scorer}.isdisjoint({r.page_title for r in classifier})
        outcomes.add((len(scorer), len(classifier)))
    assert (6, 4) in outcomes
    assert outcomes <= {(10, 0), (0, 10), (6, 4), (4, 6)}


def test_split_articles_deterministic():
    recs = []
    for p in range(50):
        recs += page_history(["a", "b"], title=f"P{p}")
    c = Corpus(tuple(recs))
    a = split_articles(c, 0.6, 7)
    b = split_articles(Corpus(tuple(reversed(recs))), 0.6, 7)
    assert [r.revision_id for r in a[0]] == [r.revision_id for r in b[0]]


# --- single modification and balance --------------------------------------------

def test_single_modification_filter():
    r = make_record()
    one = TextDelta(inserts=("x",))
    two = TextDelta(inserts=("x", "y"))
    none = TextDelta(changes=(("a", "b"),))
    items = [(r, one), (r, two), (r, none)]
    assert single_modification_filter(items, "insert") == [(r, one)]
    assert single_modification_filter(items, "change") == [(r, none)]
    assert single_modification_filter(items, "remove") == []
    with pytest.raises(ValueError):
        single_modification_filter(items, "title")


def test_undersample_counts():
    items = list(range(100))
    labels = [i < 10 for i in items]
    kept, kept_labels = undersample_balance(items, labels, 0)
    assert sum(kept_labels) == 10 and len(kept) == 20
    assert kept == sorted(kept)
    assert all(i < 10 for i, lab in zip(kept, kept_labels) if lab)


def test_undersample_already_balanced():
    items = list(range(10))
    labels = [i % 2 == 0 for i in items]
    kept, _ = undersample_balance(items, labels, 3)
    assert sorted(kept) == items


def test_undersample_needs_both_classes():
    with pytest.raises(BalanceError):
        undersample_balance([1, 2], [False, False])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.booleans(), min_size=2, max_size=200), st.integers(0, 2**31))
def test_undersample_is_exactly_balanced(labels, seed):
    if all(labels) or not any(labels):
        return
    kept, kept_labels = undersample_balance(list(range(len(labels))), labels, seed)
    assert sum(kept_labels) * 2 == len(kept_labels)
    assert all(labels[i] == lab for i, lab in zip(kept, kept_labels))
    assert undersample_balance(list(range(len(labels))), labels, seed)[0] == kept
