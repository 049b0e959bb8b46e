import pytest

from revertrisk.records import UserKind, load_corpus
from revertrisk.synth import SynthConfig, generate_records, vocabulary_hit, write_synthetic_corpus


def test_deterministic_and_sized():
    cfg = SynthConfig(n_revisions=1003, languages=("enwiki", "frwiki"), seed=3)
    a, b = generate_records(cfg), generate_records(cfg)
    assert a == b
    assert len(a) == 1003
    assert {r.wiki_db for r in a} == {"enwiki", "frwiki"}
    assert generate_records(SynthConfig(n_revisions=200, seed=4)) != generate_records(SynthConfig(n_revisions=200, seed=5))


def test_corpus_shape():
    records = generate_records(SynthConfig(n_revisions=3000, languages=("enwiki",)))
    kinds = {r.user_kind for r in records}
    assert kinds == {UserKind.ANONYMOUS, UserKind.REGISTERED, UserKind.BOT}
    assert any(r.page_title.startswith("Talk:") for r in records)
    assert any(r.revision_parent_id == 0 for r in records)
    assert any(r.event_comment == "Reverted edits" for r in records)
    for r in records:
        assert r.revision_text_bytes_diff == len(r.current_text.encode()) - len(r.parent_text.encode())


def test_written_corpus_loads(tmp_path):
    path = tmp_path / "c.jsonl"
    n = write_synthetic_corpus(path, SynthConfig(n_revisions=300, languages=("dewiki",)))
    corpus = load_corpus(path, None, None, strict=True)
    assert len(corpus) == n == 300


def test_vocabulary_hit():
    assert vocabulary_hit("this is stupid.", "enwiki")
    assert not vocabulary_hit("this is fine.", "enwiki")
    assert vocabulary_hit("Das ist doof!", "dewiki")


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(languages=("xxwiki",))
    with pytest.raises(ValueError):
        SynthConfig(registered_bad_rate=0.5, anon_ratio=3.0)
