import json

import numpy as np
import pytest

from stratabc.exceptions import ConfigError
from stratabc.services.experiment import (
    load_config,
    parse_config_data,
    read_chain,
    resolve_output_dir,
    run_experiment,
    write_chain,
)

WALK = {"sd": [0.05], "adapt": False}


def _gaussian(*stages, **extra):
    data = {
        "name": "toy",
        "seed": 7,
        "model": {"id": "gaussian", "theta_true": [0.0], "options": {"n_obs": 200}},
        "stages": list(stages),
    }
    data.update(extra)
    return data


def _pm(**fields):
    return {"name": "pm", "sampler": "pm", "M": 5, "delta": 0.05, "n_iter": 120, "burn_in": 20,
            "init": [0.0], "proposal": WALK, **fields}


def _errors(data):
    with pytest.raises(ConfigError) as info:
        parse_config_data(data)
    return info.value.errors


def test_valid_config_parses():
    config = parse_config_data(_gaussian({"name": "exact", "sampler": "exact", "n_iter": 100}, _pm()))
    assert [s.name for s in config.stages] == ["exact", "pm"]


def test_block_length_must_divide_the_series():
    data = {
        "name": "lv",
        "seed": 1,
        "model": {"id": "lotka_volterra", "theta_true": [1.0, 0.005, 0.6], "options": {"block_length": 7}},
        "stages": [{"name": "r", "sampler": "r", "delta": 1.0, "init": [1.0, 0.005, 0.6], "proposal": {"sd": [0.1] * 3}}],
    }
    assert any(e.startswith("model.options") for e in _errors(data))


def test_first_stage_cannot_inherit():
    errors = _errors(_gaussian(_pm(delta="inherit", sigma="inherit", init="inherit", proposal={"inherit": True})))
    joined = "\n".join(errors)
    assert "delta cannot be inherited" in joined
    assert "sigma cannot be inherited" in joined
    assert "init cannot be inherited" in joined
    assert "proposal cannot be inherited" in joined


def test_every_problem_is_reported():
    errors = _errors(_gaussian(_pm(init=None, sigma="pilot")))
    assert any("needs init" in e for e in errors)
    assert any("[pilot]" in e for e in errors)


def test_sampler_model_pairings():
    errors = _errors(_gaussian({"name": "ex", "sampler": "exchange", "init": [0.3], "proposal": WALK}))
    assert any("only available for the ising model" in e for e in errors)
    gk = {
        "name": "gk",
        "seed": 1,
        "model": {"id": "gandk", "theta_true": [3.0, 1.0, 2.0, 0.5]},
        "stages": [{"name": "exact", "sampler": "exact"}],
    }
    assert any("only available for the gaussian model" in e for e in _errors(gk))


def test_schema_errors_are_collected():
    errors = _errors(_gaussian(_pm(delta=-1.0, strata=[1.0, 0.5])))
    assert len(errors) >= 2


def test_unknown_model_options():
    data = _gaussian(_pm())
    data["model"]["options"] = {"colour": 3}
    assert any(e.startswith("model:") for e in _errors(data))


def test_load_config_from_preset_and_file(tmp_path):
    assert load_config("gauss_pm").name == "gauss_pm"
    with pytest.raises(ConfigError):
        load_config("no_such_preset")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(_gaussian(_pm())))
    assert load_config(path).stages[0].name == "pm"


def test_malformed_toml_is_a_config_error(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("name = \n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_output_dir_resolves_under_the_root(isolated_settings):
    config = parse_config_data(_gaussian(_pm()))
    assert resolve_output_dir(config) == isolated_settings.output_root / "toy"
    assert resolve_output_dir(config, 3).name == "replicate_003"


def test_run_writes_the_artifacts(isolated_settings):
    config = parse_config_data(_gaussian({"name": "exact", "sampler": "exact", "n_iter": 100}, _pm()))
    artifacts = run_experiment(config)
    out = artifacts.output_dir
    for name in ["config.json", "manifest.json", "chain_exact.tsv", "chain_pm.tsv", "diagnostics_pm.json"]:
        assert (out / name).is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert [s["name"] for s in manifest["stages"]] == ["exact", "pm"]
    chain = read_chain(out / "chain_pm.tsv", burn_in=20)
    assert len(chain) == 120
    assert chain.retained().shape == (100, 1)
    assert np.all(chain.delta == 0.05)


def test_runs_are_reproducible(isolated_settings, tmp_path):
    first = parse_config_data(_gaussian(_pm(), output_dir=str(tmp_path / "a")))
    second = parse_config_data(_gaussian(_pm(), output_dir=str(tmp_path / "b")))
    run_experiment(first)
    run_experiment(second)
    assert (tmp_path / "a" / "chain_pm.tsv").read_text() == (tmp_path / "b" / "chain_pm.tsv").read_text()


def test_stratified_stage_hands_off_to_the_next(isolated_settings):
    rs = {"name": "rs", "sampler": "rs", "R1": 100, "R2": 100, "delta": 0.05, "n_iter": 60,
          "init": [0.0], "proposal": WALK}
    xrs = {"name": "xrs", "sampler": "xrs", "R1": 100, "R2": 100, "delta": "inherit", "sigma": "inherit",
           "n_iter": 40, "init": "inherit", "proposal": {"inherit": True, "adapt": False}}
    artifacts = run_experiment(parse_config_data(_gaussian(rs, xrs)))
    out = artifacts.output_dir
    counts = np.loadtxt(out / "strata_rs.tsv", skiprows=1)
    assert counts.shape == (60, 3)
    first, second = artifacts.results
    assert second.delta == pytest.approx(first.delta)
    assert np.all(second.chain.delta == first.delta)
    assert artifacts.manifest.stages[0].handoff_sigma == [1.0]


def test_read_chain_rejects_bad_files(tmp_path):
    with pytest.raises(ConfigError):
        read_chain(tmp_path / "nothing.tsv")
    other = tmp_path / "other.tsv"
    other.write_text("a\tb\n1\t2\n")
    with pytest.raises(ConfigError):
        read_chain(other)
    empty = tmp_path / "chain_empty.tsv"
    empty.write_text("iter\ttheta\tloglik\taccepted\tdelta\n")
    with pytest.raises(ConfigError):
        read_chain(empty)


def test_chain_file_round_trip(tmp_path, isolated_settings):
    artifacts = run_experiment(parse_config_data(_gaussian(_pm())))
    chain = artifacts.results[0].chain
    path = tmp_path / "chain_copy.tsv"
    write_chain(path, chain)
    back = read_chain(path)
    np.testing.assert_array_equal(back.theta, chain.theta)
    np.testing.assert_array_equal(back.accepted, chain.accepted)
    assert back.parameter_names == chain.parameter_names
