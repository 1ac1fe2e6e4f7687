"""Configuration parsing, seed precedence, and the command-line driver."""

import os

import numpy as np
import pytest

from hdsim import cli_main, load_config, parse_config_text
from hdsim.config import ExperimentConfig, resolve_seed
from hdsim.errors import ConfigError
from hdsim.report import read_trajectory_csv


def test_defaults_without_file():
    config = load_config(None)
    assert config["model"] == "inverter"
    assert config["dt"] == 1e-4
    assert config["inverter.l_pu"] == 0.0189


def test_parse_with_comments_and_sections():
    config = parse_config_text(
        """
        # experiment
        model = smib          # trailing comment
        smib.i_max = 1.25
        inverter.profile = 0:1, 0.1:0.5, 0.2:1
        """
    )
    assert config["model"] == "smib"
    assert config["smib.i_max"] == 1.25
    assert config["inverter.profile"] == ((0.0, 1.0), (0.1, 0.5), (0.2, 1.0))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config_text("inverter.vlow = 0.8")
    assert "unknown key" in str(err.value)


def test_bad_value_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("dt = fast")
    with pytest.raises(ConfigError):
        parse_config_text("filter = median")
    with pytest.raises(ConfigError):
        parse_config_text("model = inverter\nhorizon = -1")


def test_missing_equals_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("just some words")


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv("HDS_SEED", raising=False)
    default = ExperimentConfig()
    assert resolve_seed(default, None) == 42
    monkeypatch.setenv("HDS_SEED", "7")
    assert resolve_seed(default, None) == 7
    explicit = parse_config_text("seed = 9")
    assert resolve_seed(explicit, None) == 9  # config beats env
    assert resolve_seed(explicit, 3) == 3  # flag beats config
    monkeypatch.setenv("HDS_SEED", "oops")
    with pytest.raises(ConfigError):
        resolve_seed(default, None)


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_missing_config_file_names_path(tmp_path, capsys):
    missing = str(tmp_path / "nope.cfg")
    code = cli_main(["compare", "--config", missing])
    assert code == 1
    assert missing in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert cli_main(["frobnicate"]) == 1


def test_unknown_flag_is_usage_error(capsys):
    assert cli_main(["compare", "--frobnicate"]) == 1


def test_compare_writes_three_files_and_is_byte_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, "model = inverter\nfilter = both\nseed = 42\n")
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert cli_main(["compare", "--config", cfg, "--out", out_a]) == 0
    assert cli_main(["compare", "--config", cfg, "--seed", "42", "--out", out_b]) == 0
    names = sorted(os.listdir(out_a))
    assert names == ["report.csv", "trajectory_continuous.csv", "trajectory_hybrid.csv"]
    for name in names:
        with open(os.path.join(out_a, name), "rb") as fa:
            with open(os.path.join(out_b, name), "rb") as fb:
                assert fa.read() == fb.read(), f"{name} differs between reruns"


def test_compare_different_seed_changes_outputs(tmp_path):
    cfg = write_cfg(tmp_path, "model = inverter\n")
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert cli_main(["compare", "--config", cfg, "--seed", "1", "--out", out_a]) == 0
    assert cli_main(["compare", "--config", cfg, "--seed", "2", "--out", out_b]) == 0
    with open(os.path.join(out_a, "trajectory_hybrid.csv"), "rb") as fa:
        with open(os.path.join(out_b, "trajectory_hybrid.csv"), "rb") as fb:
            assert fa.read() != fb.read()


def test_estimate_requires_single_filter(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "filter = both\n")
    assert cli_main(["estimate", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_estimate_single_filter_runs(tmp_path):
    cfg = write_cfg(tmp_path, "filter = hybrid\nnoise.r_id = 0\nnoise.r_iq = 0\n"
                              "noise.r_vd = 0\nnoise.r_vq = 0\n")
    out = str(tmp_path / "est")
    assert cli_main(["estimate", "--config", cfg, "--out", out]) == 0
    names = sorted(os.listdir(out))
    assert names == ["report.csv", "trajectory_hybrid.csv"]
    # noiseless filter tracks its own generator: hat columns equal truth
    header, rows = read_trajectory_csv(os.path.join(out, "trajectory_hybrid.csv"))
    i_d = header.index("i_d")
    ihat_d = header.index("ihat_d")
    worst = max(abs(float(r[i_d]) - float(r[ihat_d])) for r in rows)
    assert worst <= 1e-6


def test_simulate_inverter_csv_round_trips(tmp_path):
    cfg = write_cfg(tmp_path, "model = inverter\n")
    out = str(tmp_path / "sim")
    assert cli_main(["simulate", "--config", cfg, "--out", out]) == 0
    path = os.path.join(out, "trajectory_inverter.csv")
    header, rows = read_trajectory_csv(path)
    assert header == ["t", "j", "mode", "i_d", "i_q", "v_d", "v_q"]

    from hdsim import inverter_automaton, simulate
    sc = load_config(cfg).scenario()
    traj = simulate(
        inverter_automaton(sc.params, sc.v_grid), sc.x0, sc.horizon, 50,
        sc.dt, mode0="GFL",
    )
    assert len(rows) == len(traj.samples)
    for row, sample in zip(rows, traj.samples):
        assert float(row[0]) == sample.time.t
        assert int(row[1]) == sample.time.j
        assert row[2] == sample.mode
        recovered = np.array([float(c) for c in row[3:]])
        assert np.array_equal(recovered, sample.state)


def test_verify_smib_reports_witness(tmp_path):
    cfg = write_cfg(
        tmp_path,
        "model = smib\nhorizon = 1.0\nsmib.delta0 = 0.5\n"
        "smib.i_max = 1.1\nsmib.p_max = 0.2\nverify.samples = 3\n"
        "verify.delta_half_width = 0\nverify.omega_half_width = 0\n",
    )
    out = str(tmp_path / "verify")
    assert cli_main(["verify", "--config", cfg, "--out", out]) == 0
    with open(os.path.join(out, "verify_report.txt")) as fh:
        text = fh.read()
    assert "verdict: unsafe" in text
    assert "witness time:" in text


def test_verify_safe_case(tmp_path):
    cfg = write_cfg(
        tmp_path,
        "model = smib\nhorizon = 0.5\nsmib.delta0 = 0.5\n"
        "verify.samples = 2\nverify.i_unsafe = 10.0\n",
    )
    out = str(tmp_path / "verify")
    assert cli_main(["verify", "--config", cfg, "--out", out]) == 0
    with open(os.path.join(out, "verify_report.txt")) as fh:
        assert "no-counterexample-found" in fh.read()


def test_hds_seed_env_is_lowest_priority(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, "model = inverter\nfilter = hybrid\n")
    out_env = str(tmp_path / "env")
    out_flag = str(tmp_path / "flag")
    monkeypatch.setenv("HDS_SEED", "1")
    assert cli_main(["estimate", "--config", cfg, "--out", out_env]) == 0
    with open(os.path.join(out_env, "report.csv")) as fh:
        assert "seed = 1" in fh.read()
    assert cli_main(
        ["estimate", "--config", cfg, "--seed", "5", "--out", out_flag]
    ) == 0
    with open(os.path.join(out_flag, "report.csv")) as fh:
        assert "seed = 5" in fh.read()
