"""Command-line interface: subcommands, exit codes, override plumbing."""

import json
import shutil
import subprocess

import pytest

from cosim.cli import main
from cosim.outputs import validate_output_file


TINY = ["--particles", "12", "--weeks", "8", "--seed", "5"]


def read_manifest(out_dir):
    with open(out_dir / "manifest.json") as fh:
        return json.load(fh)


def validate_dir(out_dir):
    problems = []
    for entry in read_manifest(out_dir)["files"]:
        problems += validate_output_file(str(out_dir / entry["name"]))
    assert problems == [], problems


# -------------------------------------------------------------- subcommands

def test_simulate_writes_validated_outputs(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", *TINY, "--out", str(out)]) == 0
    names = {e["name"] for e in read_manifest(out)["files"]}
    assert {"terminals.csv", "quantiles.csv", "trajectories.csv",
            "summary.json"} <= names
    validate_dir(out)


def test_simulate_no_trajectories_flag(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", *TINY, "--out", str(out),
                 "--no-trajectories"]) == 0
    names = {e["name"] for e in read_manifest(out)["files"]}
    assert "trajectories.csv" not in names


def test_simulate_symmetrised_flag_runs(tmp_path):
    out = tmp_path / "sym"
    assert main(["simulate", *TINY, "--out", str(out), "--symmetrised"]) == 0
    validate_dir(out)


def test_compare_writes_bias_report(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", *TINY, "--out", str(out)]) == 0
    assert (out / "coupled" / "terminals.csv").exists()
    assert (out / "uncoupled" / "terminals.csv").exists()
    report_problems = validate_output_file(str(out / "bias_report.json"))
    assert report_problems == []
    with open(out / "bias_report.json") as fh:
        report = json.load(fh)
    assert set(report["variables"]) >= {"y", "I", "D", "rho", "v"}


def test_cluster_writes_archetypes_and_correlations(tmp_path, capsys):
    out = tmp_path / "clu"
    assert main(["cluster", *TINY, "--out", str(out), "--k", "2"]) == 0
    names = {e["name"] for e in read_manifest(out)["files"]}
    assert {"archetypes.csv", "correlations.csv"} <= names
    validate_dir(out)
    lines = [l for l in capsys.readouterr().out.splitlines()
             if l.startswith("archetype ")]
    assert len(lines) == 2


def test_salience_writes_lens_outputs(tmp_path, capsys):
    out = tmp_path / "sal"
    assert main(["salience", *TINY, "--out", str(out),
                 "--lens", "D_T >= 0"]) == 0
    names = {e["name"] for e in read_manifest(out)["files"]}
    assert {"salience.csv", "salience_report.json"} <= names
    validate_dir(out)
    assert "'D_T >= 0'" in capsys.readouterr().out


def test_decompose_writes_decomposition(tmp_path, capsys):
    out = tmp_path / "dec"
    assert main(["decompose", *TINY, "--out", str(out)]) == 0
    assert validate_output_file(str(out / "decomposition.json")) == []
    text = capsys.readouterr().out
    assert "sampling:" in text and "structural:" in text \
        and "observational:" in text


def test_topology_reports_counts_without_running(tmp_path, capsys):
    out = tmp_path / "topo"
    assert main(["topology", "--out", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_variable_nodes"] == 9
    assert payload["n_factor_nodes"] == 5
    assert validate_output_file(str(out / "topology.json")) == []


def test_topology_four_narrative_counts(tmp_path, capsys):
    out = tmp_path / "topo4"
    assert main(["topology", "--narratives", "4", "--calibration", "us-scale",
                 "--out", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_variable_nodes"] == 12
    assert payload["n_factor_nodes"] == 10


# ------------------------------------------------------------ determinism

def run_in_fresh_root(monkeypatch, root, argv):
    """Run with cwd=root and a relative output dir so the config echo in
    summary.json is byte-identical across roots."""
    root.mkdir()
    monkeypatch.chdir(root)
    assert main(argv + ["--out", "out"]) == 0
    return read_manifest(root / "out")


def test_reruns_produce_identical_manifests(tmp_path, monkeypatch):
    man_a = run_in_fresh_root(monkeypatch, tmp_path / "a", ["simulate", *TINY])
    man_b = run_in_fresh_root(monkeypatch, tmp_path / "b", ["simulate", *TINY])
    assert man_a["files"] == man_b["files"]


def test_worker_count_does_not_change_outputs(tmp_path, monkeypatch):
    man_a = run_in_fresh_root(monkeypatch, tmp_path / "w1",
                              ["simulate", *TINY, "--workers", "1"])
    man_b = run_in_fresh_root(monkeypatch, tmp_path / "w8",
                              ["simulate", *TINY, "--workers", "8"])
    assert man_a["files"] == man_b["files"]


def hash_of(out_dir, name):
    return next(e["sha256"] for e in read_manifest(out_dir)["files"]
                if e["name"] == name)


def test_different_seed_changes_outputs(tmp_path):
    out_a, out_b = tmp_path / "s5", tmp_path / "s6"
    assert main(["simulate", *TINY, "--out", str(out_a)]) == 0
    assert main(["simulate", "--particles", "12", "--weeks", "8",
                 "--seed", "6", "--out", str(out_b)]) == 0
    assert hash_of(out_a, "terminals.csv") != hash_of(out_b, "terminals.csv")


# ------------------------------------------------------------- overrides

def test_set_overrides_reach_the_run(tmp_path):
    out = tmp_path / "ovr"
    assert main(["simulate", "--seed", "5", "--out", str(out),
                 "--set", "run.particles=9", "--set", "run.weeks=4"]) == 0
    with open(out / "summary.json") as fh:
        summary = json.load(fh)
    assert summary["particles"] == 9
    assert summary["weeks"] == 4


def test_flag_overrides_beat_config_file(tmp_path):
    ini = tmp_path / "base.ini"
    ini.write_text("[run]\nparticles = 500\nweeks = 8\nseed = 5\n")
    out = tmp_path / "flag"
    assert main(["simulate", "--config", str(ini), "--particles", "10",
                 "--out", str(out)]) == 0
    with open(out / "summary.json") as fh:
        assert json.load(fh)["particles"] == 10


# ------------------------------------------------------------- exit codes

def test_malformed_set_is_a_config_error(tmp_path):
    assert main(["simulate", *TINY, "--out", str(tmp_path / "x"),
                 "--set", "particles=9"]) == 2          # missing section
    assert main(["simulate", *TINY, "--out", str(tmp_path / "y"),
                 "--set", "run.particles"]) == 2        # missing value


def test_unknown_set_key_is_a_config_error(tmp_path):
    assert main(["simulate", *TINY, "--out", str(tmp_path / "x"),
                 "--set", "run.bogus=1"]) == 2


def test_invalid_particle_count_is_a_config_error(tmp_path):
    assert main(["simulate", "--particles", "0", "--weeks", "4",
                 "--out", str(tmp_path / "x")]) == 2


def test_missing_config_file_is_a_config_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "absent.ini")]) == 2


def test_blocked_output_path_is_an_io_error(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("file, not a directory")
    assert main(["simulate", *TINY, "--out", str(blocker / "sub")]) == 3


def test_empty_lens_support_is_a_runtime_error(tmp_path):
    # no trajectory accumulates a tenth of the population in deaths by week 8
    assert main(["salience", *TINY, "--out", str(tmp_path / "x"),
                 "--lens", "D_T >= 0.1"]) == 3


def test_unparseable_lens_is_a_config_error(tmp_path):
    assert main(["salience", *TINY, "--out", str(tmp_path / "x"),
                 "--lens", "y_T ~ 3"]) == 2


def test_indeterminate_policy_rule_is_a_runtime_error(tmp_path):
    # a passive interest-rate rule admits no unique stable solution
    assert main(["simulate", *TINY, "--out", str(tmp_path / "x"),
                 "--set", "economy.phi_pi=0.5"]) == 3


def test_unknown_subcommand_exits_via_argparse():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


# ------------------------------------------------------------- entry point

def test_installed_entry_point_smoke(tmp_path):
    exe = shutil.which("cosim")
    assert exe, "cosim console script not on PATH"
    res = subprocess.run(
        [exe, "topology", "--out", str(tmp_path / "t")],
        capture_output=True, text=True, timeout=120)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["n_variable_nodes"] == 9
