import pytest
from typer.testing import CliRunner

from stratabc.cli import EXIT_CONFIG, EXIT_STARTUP, app
from stratabc.presets import preset_names

runner = CliRunner()

TOY = """
name = "cli_toy"
seed = 5

[model]
id = "gaussian"
theta_true = [0.0]
options = { n_obs = 100 }

[[stages]]
name = "exact"
sampler = "exact"
n_iter = 200
burn_in = 20

[[stages]]
name = "pm"
sampler = "pm"
M = 5
delta = 0.1
n_iter = 100
burn_in = 10
init = [0.0]
proposal = { sd = [0.05], adapt = false }
"""

OUTSIDE_PRIOR = """
name = "cli_gk"
seed = 5

[model]
id = "gandk"
theta_true = [3.0, 1.0, 2.0, 0.5]
options = { n_obs = 100 }

[[stages]]
name = "pm"
sampler = "pm"
delta = 1.0
n_iter = 10
init = [1e20, 1.0, 2.0, 0.5]
proposal = { sd = [0.1, 0.1, 0.1, 0.1] }
"""


@pytest.fixture
def toml(tmp_path):
    def write(text, name="experiment.toml"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


def test_presets_are_listed():
    result = runner.invoke(app, ["presets"])
    assert result.exit_code == 0
    for name in preset_names():
        assert name in result.output


def test_a_preset_is_printed():
    result = runner.invoke(app, ["presets", "gauss_pm"])
    assert result.exit_code == 0
    assert 'sampler = "pm"' in result.output


def test_unknown_preset_is_a_config_error():
    assert runner.invoke(app, ["presets", "nope"]).exit_code == EXIT_CONFIG


def test_missing_config_file(isolated_settings):
    result = runner.invoke(app, ["run", "nonexistent.toml"])
    assert result.exit_code == EXIT_CONFIG
    assert "config file not found" in result.output


def test_invalid_config_lists_problems(isolated_settings, toml):
    path = toml(TOY.replace("delta = 0.1", "delta = -0.1"))
    result = runner.invoke(app, ["run", path, "--no-progress"])
    assert result.exit_code == EXIT_CONFIG
    assert "delta must be positive" in result.output


def test_startup_failure_exit_code(isolated_settings, toml):
    result = runner.invoke(app, ["run", toml(OUTSIDE_PRIOR), "--no-progress", "--no-plot-data"])
    assert result.exit_code == EXIT_STARTUP


def test_run_then_diagnose(isolated_settings, toml):
    result = runner.invoke(app, ["run", toml(TOY), "--no-progress"])
    assert result.exit_code == 0, result.output
    out = isolated_settings.output_root / "cli_toy"
    assert (out / "manifest.json").is_file()
    assert (out / "density_pm.tsv").is_file()

    result = runner.invoke(app, ["diag", str(out / "chain_pm.tsv"), "--burn-in", "10"])
    assert result.exit_code == 0
    assert "theta" in result.output


def test_diag_of_a_missing_chain(tmp_path):
    assert runner.invoke(app, ["diag", str(tmp_path / "chain_x.tsv")]).exit_code == EXIT_CONFIG


def test_diag_burn_in_past_the_end(isolated_settings, toml):
    runner.invoke(app, ["run", toml(TOY), "--no-progress", "--no-plot-data"])
    chain = isolated_settings.output_root / "cli_toy" / "chain_exact.tsv"
    assert runner.invoke(app, ["diag", str(chain), "--burn-in", "500"]).exit_code == EXIT_CONFIG


def test_sweep_without_section(isolated_settings, toml):
    assert runner.invoke(app, ["sweep", toml(TOY), "--no-progress"]).exit_code == EXIT_CONFIG
