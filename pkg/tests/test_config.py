import json
from importlib import resources

import pytest

from hyposcreen.config import (
    DEFAULT_GRID,
    PipelineConfig,
    SELECTION_METHODS,
    load_config,
    save_config,
)
from hyposcreen.errors import DataError


def test_defaults_are_valid_and_grid_width_matches_m():
    cfg = PipelineConfig()
    cfg.validate()
    assert len(DEFAULT_GRID) == 18
    assert cfg.ensemble.m == 18
    assert cfg.scaler == "minmax"
    assert cfg.cv_folds == 10
    assert cfg.bootstrap_seeds == 40
    assert cfg.selection.method == "lr_coef"
    assert cfg.selection.n_target == 30
    assert set(SELECTION_METHODS) == {"none", "lr_coef", "boost_rfe",
                                      "boost_rfa"}
    lrs = {g["learning_rate"] for g in DEFAULT_GRID}
    leaves = {g["max_leaves"] for g in DEFAULT_GRID}
    minima = {g["min_samples_leaf"] for g in DEFAULT_GRID}
    assert lrs == {0.05, 0.1, 0.2}
    assert leaves == {7, 15, 31}
    assert minima == {10, 20}


def test_round_trip_preserves_everything():
    cfg = PipelineConfig()
    cfg.expressions = ["smile", "disgust"]
    cfg.cv_folds = 5
    cfg.selection.method = "boost_rfa"
    cfg.smote.k_neighbors = 3
    cfg.ensemble.m = 2
    cfg.ensemble.grid = DEFAULT_GRID[:2]
    back = PipelineConfig.from_dict(cfg.to_dict())
    assert back.to_dict() == cfg.to_dict()
    back.validate()


def test_unknown_keys_rejected_at_top_level_and_in_sections():
    with pytest.raises(DataError):
        PipelineConfig.from_dict({"scalar": "minmax"})
    with pytest.raises(DataError):
        PipelineConfig.from_dict({"selection": {"methods": "none"}})
    with pytest.raises(DataError):
        PipelineConfig.from_dict({"ensemble": {"grids": []}})
    with pytest.raises(DataError):
        PipelineConfig.from_dict([1, 2])


def test_validation_catches_bad_values():
    cfg = PipelineConfig()
    cfg.scaler = "robust"
    with pytest.raises(DataError):
        cfg.validate()

    cfg = PipelineConfig()
    cfg.ensemble.m = 19
    with pytest.raises(DataError):
        cfg.validate()

    cfg = PipelineConfig()
    cfg.ensemble.grid = [{"n_estimators": 100}]
    cfg.ensemble.m = 1
    with pytest.raises(DataError):
        cfg.validate()

    cfg = PipelineConfig()
    cfg.ensemble.grid = [{"learning_rate": -0.1}]
    cfg.ensemble.m = 1
    with pytest.raises(DataError):
        cfg.validate()

    cfg = PipelineConfig()
    cfg.expressions = ["frown"]
    with pytest.raises(DataError):
        cfg.validate()

    cfg = PipelineConfig()
    cfg.threshold = 1.2
    with pytest.raises(DataError):
        cfg.validate()

    cfg = PipelineConfig()
    cfg.cv_folds = 1
    with pytest.raises(DataError):
        cfg.validate()


def test_candidate_params_fill_defaults():
    params = PipelineConfig.candidate_params({"learning_rate": 0.05})
    assert params.learning_rate == 0.05
    assert params.n_trees == 200
    assert params.max_bins == 255
    cfg = PipelineConfig()
    assert len(cfg.candidates()) == 18


def test_load_save_files(tmp_path):
    cfg = PipelineConfig()
    cfg.cv_folds = 4
    path = tmp_path / "config.json"
    save_config(cfg, path)
    loaded = load_config(path)
    assert loaded.to_dict() == cfg.to_dict()
    (tmp_path / "broken.json").write_text("{not json")
    with pytest.raises(DataError):
        load_config(tmp_path / "broken.json")
    with pytest.raises(DataError):
        load_config(tmp_path / "missing.json")


def test_packaged_default_config_matches_code_defaults():
    text = (resources.files("hyposcreen") / "data" /
            "default_config.json").read_text()
    assert PipelineConfig.from_dict(json.loads(text)).to_dict() == \
        PipelineConfig().to_dict()
