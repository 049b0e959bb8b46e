import pytest
from pydantic import ValidationError

from revertrisk.config import dump_config, load_config


def test_defaults():
    cfg = load_config(env={})
    assert cfg.gbdt.learning_rate == 0.01 and cfg.gbdt.n_trees == 200
    assert cfg.split.scorer_fraction == 0.6
    assert cfg.data.revert_window == 10
    assert cfg.evaluation.threshold == 0.5 and cfg.evaluation.target_recall == 0.75
    assert cfg.features.configs == ["basic", "mlm", "user", "full"]


def test_yaml_roundtrip(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("seed: 7\ngbdt:\n  n_trees: 12\ndata:\n  languages: [enwiki]\n")
    cfg = load_config(path, env={})
    assert cfg.seed == 7 and cfg.gbdt.n_trees == 12 and cfg.data.languages == ["enwiki"]
    path.write_text(dump_config(cfg))
    assert load_config(path, env={}) == cfg


def test_env_overrides_service_section():
    cfg = load_config(env={"REVERTRISK_PORT": "9001", "REVERTRISK_RELOAD_SECRET": "s3"})
    assert cfg.service.port == 9001 and cfg.service.reload_secret == "s3"
    with pytest.raises(ValidationError):
        load_config(env={"REVERTRISK_PORT": "70000"})


@pytest.mark.parametrize("text", [
    "gbdt:\n  learning_rate: 0\n",
    "split:\n  scorer_fraction: 1.5\n",
    "split:\n  train_start: 2022-08-01\n",
    "unknown_key: 1\n",
    "features:\n  configs: [bogus]\n",
])
def test_invalid_configs_rejected(tmp_path, text):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    with pytest.raises(ValidationError):
        load_config(path, env={})


def test_non_mapping_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError):
        load_config(path, env={})
