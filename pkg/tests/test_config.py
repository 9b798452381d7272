import numpy as np
import pytest

from esnlens.config import RunConfig, load_config, parse_config_text, trial_seed
from esnlens.errors import ConfigError, DataError


def test_defaults_validate():
    cfg = RunConfig().validate()
    assert cfg["model.n_neurons"] == 100 and cfg["model.alpha"] == [0.99]
    assert cfg["train.washout"] is None


def test_parse_comments_and_lists():
    vals = parse_config_text("# c\n\nmodel.alpha = 0.5, 0.9\nexplain.layers=0,2\n")
    cfg = RunConfig(vals)
    assert cfg["model.alpha"] == [0.5, 0.9] and cfg["explain.layers"] == [0, 2]


def test_unknown_key_has_line_number():
    with pytest.raises(ConfigError, match=r"x.cfg:2: unknown config key 'model.size'"):
        parse_config_text("seed = 1\nmodel.size = 3\n", "x.cfg")
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig({"bogus": 1})


def test_line_without_equals():
    with pytest.raises(ConfigError, match=":1: expected"):
        parse_config_text("seed 1\n")


@pytest.mark.parametrize(
    "key, value",
    [
        ("model.rho_max", "1.0"),
        ("model.alpha", "0"),
        ("model.n_neurons", "0"),
        ("model.density", "1.5"),
        ("train.ridge", "-1"),
        ("train.pooling", "max"),
        ("data.kind", "audio"),
        ("model.feedback", "maybe"),
        ("seed", "abc"),
        ("jobs", "0"),
    ],
)
def test_out_of_range_values_rejected(key, value):
    with pytest.raises(ConfigError):
        RunConfig({key: value})


def test_auto_values_parse_to_none():
    cfg = RunConfig({"train.washout": "auto", "model.concat_input": "none", "data.path": "auto"})
    assert cfg["train.washout"] is None and cfg["model.concat_input"] is None and cfg["data.path"] is None


@pytest.mark.parametrize(
    "values, fragment",
    [
        ({"model.n_layers": "3", "model.alpha": "0.5,0.9"}, "model.alpha"),
        ({"model.n_layers": "2", "model.feedback": "true"}, "feedback"),
        ({"model.alpha": "0.05", "model.rho_max": "0.95"}, "1 - alpha"),
        ({"data.T": "100", "data.test_T": "100"}, "test_T"),
        ({"data.kind": "csv"}, "data.path"),
        ({"data.kind": "csv", "data.path": "x.csv"}, "input_cols"),
        ({"explain.layers": "1"}, "two layer"),
        ({"explain.layers": "0,2"}, "0..1"),
        ({"explain.window": "1,2,3"}, "start,end"),
    ],
)
def test_cross_key_validation(values, fragment):
    with pytest.raises(ConfigError, match=fragment):
        RunConfig(values).validate()


def test_text_round_trip(tmp_path):
    cfg = RunConfig({"model.alpha": "0.3,0.7", "model.n_layers": "2", "train.ridge": "1e-7", "data.period": "12.5"})
    p = tmp_path / "c.cfg"
    p.write_text(cfg.to_text())
    back = load_config(p)
    assert back.items() == cfg.items()


def test_missing_config_file(tmp_path):
    with pytest.raises(DataError):
        load_config(tmp_path / "nope.cfg")


def test_trial_seed_scheme():
    assert trial_seed(1, 0) == int(np.random.SeedSequence([1, 0]).generate_state(1)[0])
    seeds = {trial_seed(7, k) for k in range(50)}
    assert len(seeds) == 50
    assert trial_seed(7, 3) == trial_seed(7, 3)
