import json

import numpy as np
import pytest

from slqr.config import (
    ExperimentConfig,
    fixture_names,
    fixture_path,
    from_dict,
    load_config,
    resolve_config,
    save_config,
    to_dict,
)
from slqr.errors import ConfigError


def minimal_doc():
    return {
        "mode": "model_based",
        "model": {
            "A": [[0.5]], "B": [[1.0]],
            "state_noise": [{"matrix": [[1.0]], "variance": 0.1}],
            "input_noise": [],
            "D": [[1.0]], "X0": [[1.0]],
        },
        "cost": {"Q": [[1.0]], "R": [[1.0]]},
        "pi": {"tol": 1e-9, "max_iter": 100},
    }


def learner_doc():
    doc = minimal_doc()
    doc["mode"] = "model_free"
    doc["learner"] = {
        "initial_gain": [[0.0]], "rollout_len": 100, "probe_var": 0.25,
        "rls_init_scale": 1e8, "max_iterations": 5, "gain_tol": 0.05,
        "cost_mode": "known_d",
    }
    doc["seeds"] = [0, 1]
    return doc


def test_shipped_fixtures_are_listed():
    assert fixture_names() == ["example_sec6", "scalar_smoke"]
    for name in fixture_names():
        assert fixture_path(name).is_file()
    with pytest.raises(ConfigError, match="unknown fixture"):
        fixture_path("nope")


def test_example_fixture_parses_to_the_published_system(sec6_config):
    config = sec6_config
    model, cost = config.model, config.cost
    assert config.mode == "both"
    assert model.state_dim == 3 and model.input_dim == 3
    np.testing.assert_allclose(np.diag(model.A), [0.8672, 0.7576, 0.7681])
    np.testing.assert_array_equal(model.B, np.eye(3))
    assert [var for _, var in model.state_noise] == [0.05, 0.015]
    assert [var for _, var in model.input_noise] == [0.05, 0.015]
    np.testing.assert_array_equal(model.D, 0.5 * np.eye(3))
    np.testing.assert_array_equal(model.X0, np.eye(3))
    np.testing.assert_array_equal(cost.Q, np.eye(3))
    np.testing.assert_array_equal(cost.R, np.eye(3))
    learner = config.learner
    assert learner.rollout_len == 42000
    assert learner.probe_var == 0.64
    assert learner.rls_init_scale == 1e8
    assert learner.max_iterations == 10
    assert learner.gain_tol == 0.05
    assert learner.cost_mode == "known_d"
    np.testing.assert_array_equal(learner.initial_gain, np.zeros((3, 3)))
    assert config.seeds == list(range(10))


def test_scalar_fixture_parses():
    config = load_config(fixture_path("scalar_smoke"))
    assert config.model.state_dim == 1 and config.model.input_dim == 1
    assert config.mode == "both"
    assert len(config.seeds) == 3


def test_missing_cost_entry_names_the_field():
    doc = minimal_doc()
    del doc["cost"]["R"]
    with pytest.raises(ConfigError, match=r"cost\.R"):
        from_dict(doc)


def test_negative_variance_names_the_channel():
    doc = minimal_doc()
    doc["model"]["state_noise"][0]["variance"] = -0.05
    with pytest.raises(ConfigError, match=r"state_noise\[0\]\.variance"):
        from_dict(doc)


def test_unknown_keys_are_rejected():
    doc = minimal_doc()
    doc["extra"] = 1
    with pytest.raises(ConfigError, match="unknown config field extra"):
        from_dict(doc)
    doc = minimal_doc()
    doc["model"]["G"] = [[1.0]]
    with pytest.raises(ConfigError, match=r"model\.G"):
        from_dict(doc)
    doc = learner_doc()
    doc["learner"]["warmup"] = 3
    with pytest.raises(ConfigError, match=r"learner\.warmup"):
        from_dict(doc)


def test_mode_values_are_checked():
    doc = minimal_doc()
    doc["mode"] = "offline"
    with pytest.raises(ConfigError, match="mode must be one of"):
        from_dict(doc)


def test_model_free_requires_seeds_and_learner():
    doc = learner_doc()
    doc["seeds"] = []
    with pytest.raises(ConfigError, match="seeds must be non-empty"):
        from_dict(doc)
    doc = learner_doc()
    del doc["learner"]
    with pytest.raises(ConfigError, match="learner"):
        from_dict(doc)


def test_model_based_requires_pi_section():
    doc = minimal_doc()
    del doc["pi"]
    with pytest.raises(ConfigError, match="pi"):
        from_dict(doc)


def test_invalid_model_is_wrapped_as_config_error():
    doc = minimal_doc()
    doc["model"]["D"] = [[0.0]]
    with pytest.raises(ConfigError, match="D must be positive definite"):
        from_dict(doc)
    doc = minimal_doc()
    doc["cost"]["R"] = [[0.0]]
    with pytest.raises(ConfigError, match="R must be positive definite"):
        from_dict(doc)


def test_gain_shape_is_checked_against_the_model():
    doc = learner_doc()
    doc["learner"]["initial_gain"] = [[0.0, 0.0]]
    with pytest.raises(ConfigError, match="initial_gain"):
        from_dict(doc)


def test_scalar_values_are_type_checked():
    doc = minimal_doc()
    doc["pi"]["max_iter"] = 2.5
    with pytest.raises(ConfigError, match="max_iter must be an integer"):
        from_dict(doc)
    doc = minimal_doc()
    doc["pi"]["tol"] = "tight"
    with pytest.raises(ConfigError, match="tol must be a number"):
        from_dict(doc)
    doc = minimal_doc()
    doc["seeds"] = [0, True]
    with pytest.raises(ConfigError, match="seeds must be a list of integers"):
        from_dict(doc)
    doc = minimal_doc()
    doc["output_dir"] = ""
    with pytest.raises(ConfigError, match="output_dir"):
        from_dict(doc)


def test_round_trip_is_stable(sec6_config):
    doc = to_dict(sec6_config)
    assert to_dict(from_dict(doc)) == doc
    doc2 = to_dict(from_dict(to_dict(from_dict(learner_doc()))))
    assert doc2 == to_dict(from_dict(learner_doc()))


def test_save_and_load_round_trip(tmp_path, sec6_config):
    path = tmp_path / "roundtrip.json"
    save_config(sec6_config, path)
    loaded = load_config(path)
    assert to_dict(loaded) == to_dict(sec6_config)


def test_load_reports_parse_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "mode": "both",\n  oops\n}\n')
    with pytest.raises(ConfigError, match="line 3"):
        load_config(path)
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.json")


def test_resolve_config_accepts_paths_and_fixture_names(tmp_path):
    assert resolve_config("example_sec6") == fixture_path("example_sec6")
    path = tmp_path / "cfg.json"
    save_config(from_dict(minimal_doc()), path)
    assert resolve_config(str(path)) == path
    with pytest.raises(ConfigError, match="not found"):
        resolve_config(str(tmp_path / "missing.json"))


def test_top_level_document_must_be_an_object():
    with pytest.raises(ConfigError, match="must be an object"):
        from_dict([1, 2, 3])
