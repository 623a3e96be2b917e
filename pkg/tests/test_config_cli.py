"""Flat config parsing, flag overrides, CLI outputs and exit codes."""

import csv
import os

import pytest

from qreflect.cli import build_config, main
from qreflect.config import ConfigError, RunConfig, parse_config, serialize_config


def test_defaults_are_unit_system():
    cfg = parse_config("command=timescales\nD=1\n")
    assert cfg.m == 1.0 and cfg.p_bar == 1.0 and cfg.hbar == 1.0
    assert cfg.D == 1.0


def test_flag_overrides_config_file(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("Dp=0.5\ncoupling=p\n")
    cfg = build_config(["model1", "--config", str(conf), "--D_p", "2"])
    assert cfg.D_p == 2.0
    assert cfg.coupling == "p"


def test_roundtrip_serialize_parse():
    cfg = RunConfig(command="model2", M=10.0, sigma=100.0, D_sweep=(0.01, 1.0),
                    steady_target=True, tau_inf=True, seed=99)
    again = parse_config(serialize_config(cfg))
    assert again == cfg


def test_unknown_key_and_bad_values():
    with pytest.raises(ConfigError):
        parse_config("no_such_key=1\n")
    with pytest.raises(ConfigError):
        parse_config("D=not_a_number\n")
    with pytest.raises(ConfigError):
        parse_config("coupling=z\n")
    with pytest.raises(ConfigError):
        parse_config("this line has no equals\n")


def test_comments_and_blank_lines():
    cfg = parse_config("# comment\n\nD=2.0  # trailing comment\n")
    assert cfg.D == 2.0


def test_alias_keys():
    cfg = parse_config("Dp=0.25\npbar=2.0\nL=1.5\n")
    assert cfg.D_p == 0.25 and cfg.p_bar == 2.0 and cfg.window_L == 1.5


def test_exit_codes(tmp_path):
    assert main(["timescales", "--D", "bogus", "--outdir", str(tmp_path / "a")]) == 2
    assert main(["figures", "--figure", "9", "--outdir", str(tmp_path / "b")]) == 2
    assert main(["timescales", "--D", "1", "--outdir", str(tmp_path / "c")]) == 0
    # strict escalation of a regime warning: position-coupling kernel driven
    # far outside its narrow-sideband regime
    rc = main(["model1", "--coupling", "x", "--D", "1", "--sigma", "10",
               "--outdir", str(tmp_path / "d"), "--strict", "true"])
    assert rc == 4
    rc = main(["model1", "--coupling", "x", "--D", "1", "--sigma", "10",
               "--outdir", str(tmp_path / "e")])
    assert rc == 0  # warning only without --strict


def test_timescales_csv_columns(tmp_path):
    assert main(["timescales", "--D", "1", "--M", "10", "--Sigma", "1",
                 "--outdir", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "timescales.csv")))
    assert rows[0] == ["name", "value", "defining_formula", "inputs"]
    names = {r[0] for r in rows[1:]}
    assert {"t_E", "t_z", "t_loc", "t_d_p", "T_1", "sigma_p"} <= names
    assert (tmp_path / "resolved_config.txt").exists()


def test_figure3_outputs_monotone(tmp_path):
    assert main(["figures", "--figure", "3", "--outdir", str(tmp_path)]) == 0
    for a in ("0.1", "0.2", "0.4"):
        rows = list(csv.reader(open(tmp_path / f"total_vs_Dp_a{a}.csv")))
        assert rows[0] == ["D_p", "total_reflected"]
        totals = [float(r[1]) for r in rows[1:]]
        assert all(b < x for x, b in zip(totals, totals[1:]))
    assert (tmp_path / "figure3.svg").read_text().startswith("<?xml")


def test_rerun_byte_identical(tmp_path):
    d1, d2 = tmp_path / "r1", tmp_path / "r2"
    args = ["qsd", "--coupling", "x", "--D", "1", "--level", "moments",
            "--n_traj", "6", "--seed", "77", "--t_final", "0.5"]
    assert main(args + ["--outdir", str(d1)]) == 0
    assert main(args + ["--outdir", str(d2)]) == 0
    for name in sorted(os.listdir(d1)):
        if name == "resolved_config.txt":
            continue  # records the differing output directory
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_csv_identical_across_thread_counts(tmp_path):
    d1, d2 = tmp_path / "t1", tmp_path / "t4"
    base = ["qsd", "--coupling", "p", "--D_p", "1", "--level", "moments",
            "--n_traj", "8", "--seed", "3", "--t_final", "0.4"]
    assert main(base + ["--outdir", str(d1), "--threads", "1"]) == 0
    assert main(base + ["--outdir", str(d2), "--threads", "4"]) == 0
    for name in sorted(os.listdir(d1)):
        if name == "resolved_config.txt":
            continue  # records the differing --threads value
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


def test_model2_cli_density_and_totals(tmp_path):
    rc = main(["model2", "--M", "10", "--sigma", "100", "--steady_target", "true",
               "--D_sweep", "0.01,1.0", "--outdir", str(tmp_path)])
    assert rc == 0
    rows = list(csv.reader(open(tmp_path / "total_vs_D.csv")))
    assert rows[0] == ["D", "total_reflected"]
    totals = [float(r[1]) for r in rows[1:]]
    assert totals[0] > totals[1]
    assert (tmp_path / "density_D0.01.csv").exists()


def test_unitary_cli_probability_ledger(tmp_path):
    rc = main(["unitary", "--sigma", "4", "--V0", "1.0", "--a", "1",
               "--outdir", str(tmp_path)])
    assert rc == 0
    rows = list(csv.reader(open(tmp_path / "probabilities.csv")))
    assert rows[0] == ["t", "norm", "reflected", "transmitted", "absorbed", "edge_loss"]
    final = rows[-1]
    assert float(final[1]) == pytest.approx(1.0, abs=1e-6)
    pos = list(csv.reader(open(tmp_path / "position_density.csv")))
    assert pos[0] == ["t", "x", "density"]


def test_svg_outputs_are_valid_xml(tmp_path):
    import xml.etree.ElementTree as ET
    assert main(["figures", "--figure", "2", "--outdir", str(tmp_path)]) == 0
    for name in os.listdir(tmp_path):
        if name.endswith(".svg"):
            root = ET.fromstring((tmp_path / name).read_text())
            assert root.tag.endswith("svg")
            assert any(child.tag.endswith("polyline") for child in root)
