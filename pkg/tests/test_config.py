from pathlib import Path

import pytest

from qfe.config import OUTPUT_ENV, SCHEMA, parse_config
from qfe.errors import ConfigError
from qfe.functions import InterpolationMethod


def test_empty_gives_defaults():
    cfg = parse_config("")
    camp = cfg.campaign()
    assert camp.n_resources_list == (800, 1900)
    assert camp.n_points == 100
    assert (camp.reference_n_s, camp.reference_n_resources) == (500, 60000)
    assert camp.mc_reps == 500
    assert camp.methods == (InterpolationMethod.NEAREST, InterpolationMethod.LINEAR)
    assert camp.response.visibility == 0.95


def test_n_s_exceeds_points():
    with pytest.raises(ConfigError, match="n_s exceeds acquired points") as err:
        parse_config("n_points = 100\nn_s_values = 5,200\n")
    assert err.value.key == "n_s_values" and err.value.line == 2


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate") as err:
        parse_config("seed = 42\n# comment\nseed = 42\n")
    assert err.value.line == 3 and err.value.key == "seed"


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown key") as err:
        parse_config("\n\nsed = 4")
    assert err.value.line == 3


@pytest.mark.parametrize(
    "text,key",
    [
        ("mc_reps = many", "mc_reps"),
        ("mc_reps = 1", "mc_reps"),
        ("probes = noon2, qutrit", "probes"),
        ("methods = spline", "methods"),
        ("vis = 1.5", "vis"),
        ("domain = 3, 0", "domain"),
        ("n_s_values = 1, 5", "n_s_values"),
        ("mode = fast", "mode"),
        ("response_params = 1, 2", "response_params"),
        ("response = sampled", "response"),
        ("n_resources = 800,,1900", "n_resources"),
    ],
)
def test_constraint_errors_name_key(text, key):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key
    assert f"'{key}'" in str(err.value)


def test_missing_equals():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("seed 4")


def test_comments_and_lists():
    cfg = parse_config("probes = single # classical only\nn_resources = 800 , 1900\nmethods=linear")
    camp = cfg.campaign()
    assert [p.name for p in camp.probes] == ["single"]
    assert camp.methods == (InterpolationMethod.LINEAR,)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "seed = 42\nmode = crb\nn_s_values = 2, 4, 8\n",
        "response = linear\nresponse_params = 0.25, 0.5\nvis = 0.9\ndomain = 0, 2.5\nprobes = noon2\n",
        "response = sinusoid\nresponse_params = 1, 2, 0.1, 1.5\nmethods = nearest\noutput_dir = out\nworkers = 3\n",
    ],
)
def test_round_trip(text):
    cfg = parse_config(text)
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.campaign().digest() == cfg.campaign().digest()
    assert set(cfg.values) == set(SCHEMA)


def test_response_file(tmp_path):
    (tmp_path / "r.csv").write_text("x,phi,vis\n0,0,0.9\n3,3,0.8\n")
    cfg = parse_config("response_file = r.csv\n", base_dir=tmp_path)
    model = cfg.campaign().response
    assert model.phase(1.0) == pytest.approx(1.0)
    assert model.vis(1.5) == pytest.approx(0.85)
    with pytest.raises(ConfigError):
        parse_config("response_file = missing.csv\n", base_dir=tmp_path)


def test_output_dir_env(monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, "/tmp/somewhere")
    assert parse_config("").output_dir == Path("/tmp/somewhere")
    assert parse_config("output_dir = here").output_dir == Path("here")
    monkeypatch.delenv(OUTPUT_ENV)
    assert parse_config("").output_dir == Path("qfe_output")
