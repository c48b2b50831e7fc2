"""Command-line pipelines: config validation, per-subcommand artifacts,
gated exit codes, manifest hashing, and rerun determinism."""

import json

import numpy as np
import pytest

from thinepi.artifacts import load_manifest, read_csv, sha256_file
from thinepi.cli import (RunConfig, case_spec, emit_plots, main, run)
from thinepi.solver import load_solution


def _config(subcommand, out_dir, **params):
    return RunConfig(subcommand=subcommand, out_dir=str(out_dir),
                     params=params, seed=7)


# ---------------------------------------------------------------------------
# Configuration validation
# ---------------------------------------------------------------------------

def test_empty_config_lists_missing_keys():
    with pytest.raises(ValueError) as err:
        RunConfig.from_dict({})
    message = str(err.value)
    assert "missing required keys" in message
    assert "subcommand" in message and "out_dir" in message


def test_unknown_subcommand_rejected(tmp_path):
    with pytest.raises(ValueError, match="unknown subcommand"):
        run(RunConfig(subcommand="fit-everything", out_dir=str(tmp_path)))


def test_config_dict_round_trip(tmp_path):
    config = _config("gap-demo", tmp_path, pairs="0:1")
    back = RunConfig.from_dict(config.to_dict())
    assert back == config


def test_case_catalog_builds_and_rejects():
    for case in ("halfspace", "profile", "quartic", "near-profile"):
        spec = case_spec(case, 32)
        assert spec.dimension == 2 and spec.resolution == 32
    assert case_spec("profile-3d", 16).dimension == 3
    with pytest.raises(ValueError, match="unknown solve case"):
        case_spec("bogus", 32)


def test_near_profile_case_depends_on_seed():
    a = case_spec("near-profile", 32, seed=1)
    b = case_spec("near-profile", 32, seed=2)
    pts = np.array([[0.3, 0.4], [-0.5, 0.2]])
    assert not np.allclose(a.boundary(pts), b.boundary(pts))


# ---------------------------------------------------------------------------
# Subcommand runs (coarse, fast settings)
# ---------------------------------------------------------------------------

def test_gap_demo_run_and_rerun_hashes(tmp_path):
    manifest = run(_config("gap-demo", tmp_path / "one"))
    assert manifest.passed
    rows = read_csv(tmp_path / "one" / "gap.csv")
    assert len(rows) == 3 * 40
    assert all(row["contradiction"] is True for row in rows)

    again = run(_config("gap-demo", tmp_path / "two"))
    assert again.files == manifest.files       # identical content hashes


def test_manifest_hashes_match_files_on_disk(tmp_path):
    manifest = run(_config("gap-demo", tmp_path))
    listed = json.loads((tmp_path / "manifest.json").read_text())["files"]
    assert listed == manifest.files
    for entry in listed:
        assert sha256_file(tmp_path / entry["path"]) == entry["sha256"]


def test_solve_run_artifacts_and_gates(tmp_path):
    manifest = run(_config("solve", tmp_path, case="halfspace",
                           resolution=32))
    assert manifest.passed
    names = {check.name for check in manifest.checks}
    assert {"converged", "complementarity", "feasibility",
            "sup-error-vs-exact"} <= names
    produced = {entry["path"] for entry in manifest.files}
    assert {"solution.bin", "solution.json", "thin_line.csv"} <= produced

    sol = load_solution(tmp_path / "solution")
    rows = read_csv(tmp_path / "thin_line.csv")
    assert len(rows) == 65
    mid = rows[32]
    assert mid["x1"] == 0.0
    assert mid["u"] == pytest.approx(float(sol.values[32, 0]), abs=0)
    assert any(row["contact"] for row in rows)


def test_solve_run_from_config_file(tmp_path):
    config_path = tmp_path / "problem.json"
    config_path.write_text(json.dumps({
        "dimension": 2, "h": 1 / 32, "obstacle": {"kind": "zero"},
        "boundary": {"kind": "halfspace", "mu": 1.5}}))
    manifest = run(_config("solve", tmp_path / "out",
                           config=str(config_path)))
    assert manifest.passed
    assert manifest.config["params"]["config"] == str(config_path)


def test_epi_check_run_positive(tmp_path):
    manifest = run(_config("epi-check", tmp_path, m=0, n=1, trials=25,
                           resolution=1024))
    assert manifest.passed
    rows = read_csv(tmp_path / "epi.csv")
    assert len(rows) == 25
    assert min(row["slack"] for row in rows) >= -1e-8
    assert all(row["passed"] for row in rows)
    assert (tmp_path / "epi_slack.svg").exists()


def test_epi_check_run_negative(tmp_path):
    manifest = run(_config("epi-check", tmp_path, m=1, n=1, trials=10,
                           negative=True, resolution=1024))
    assert manifest.passed
    rows = read_csv(tmp_path / "epi.csv")
    assert len(rows) == 10
    for row in rows:
        assert -0.05 < row["w_z"] < 0.0
        assert 2.0 < row["alpha"] < 3.0
        assert row["alpha_in_range"] is True


def test_frequency_run_emits_curve(tmp_path):
    manifest = run(_config("frequency", tmp_path, case="halfspace",
                           resolution=32))
    assert manifest.passed
    rows = read_csv(tmp_path / "frequency.csv")
    assert {"radius", "H", "I", "Phi", "normalized", "truncated"} \
        <= set(rows[0])
    plateau = [check for check in manifest.checks
               if check.name == "frequency-plateau"]
    assert "1.49" in plateau[0].detail
    svg = (tmp_path / "frequency_phi.svg").read_text()
    assert "polyline" in svg
    assert {entry["path"] for entry in manifest.files} >= \
        {"frequency.csv", "frequency_phi.svg"}


def test_blowup_run_constructed(tmp_path):
    manifest = run(_config("blowup", tmp_path, case="constructed", m=0))
    assert manifest.passed
    rows = read_csv(tmp_path / "blowup.csv")
    dist = [row["dist_linf"] for row in rows]
    assert all(b < a for a, b in zip(dist, dist[1:]))
    svg = (tmp_path / "blowup_decay.svg").read_text()
    assert "circle" in svg and "stroke-dasharray" in svg


def test_stratify_run(tmp_path):
    manifest = run(_config("stratify", tmp_path, case="halfspace",
                           resolution=32, max_points=24))
    assert manifest.passed
    rows = read_csv(tmp_path / "stratify.csv")
    labels = {row["label"] for row in rows}
    assert 1.0 in labels or 1.5 in labels


def test_spectral_run_exact_basis(tmp_path):
    manifest = run(_config("spectral", tmp_path, n=1, vectors=20))
    assert manifest.passed
    rows = read_csv(tmp_path / "spectral.csv")
    assert len(rows) == 20
    assert max(row["rel_diff_mu"] for row in rows) <= 1e-10
    assert max(row["rel_diff_raised"] for row in rows) <= 1e-10


# ---------------------------------------------------------------------------
# Plot emission
# ---------------------------------------------------------------------------

def test_emit_plots_rejects_empty_csv(tmp_path):
    (tmp_path / "frequency.csv").write_text("")
    with pytest.raises(ValueError, match="empty CSV"):
        emit_plots(tmp_path)


def test_emit_plots_rejects_header_only_csv(tmp_path):
    (tmp_path / "blowup.csv").write_text("radius,dist_l2,dist_linf\n")
    with pytest.raises(ValueError, match="no data rows"):
        emit_plots(tmp_path)


def test_emit_plots_ignores_unknown_tables(tmp_path):
    (tmp_path / "notes.csv").write_text("a\n1\n")
    assert emit_plots(tmp_path) == []


# ---------------------------------------------------------------------------
# Entry point and exit codes
# ---------------------------------------------------------------------------

def test_main_success_exit_zero(tmp_path, capsys):
    code = main(["gap-demo", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS  contradiction-m0-n1" in out
    assert "manifest:" in out


def test_main_failed_gate_exit_one(tmp_path, capsys):
    code = main(["spectral", "--n", "1", "--vectors", "5",
                 "--tol", "0", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL  spectral-vs-quadrature" in out
    assert load_manifest(tmp_path / "manifest.json").passed is False


def test_main_error_exit_two(tmp_path, capsys):
    code = main(["solve", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert "error:" in err


def test_main_rejects_unknown_case():
    with pytest.raises(SystemExit):
        main(["solve", "--case", "bogus", "--out", "/tmp/never"])


def test_main_bad_pairs_exit_two(tmp_path, capsys):
    code = main(["gap-demo", "--pairs", "whoops", "--out", str(tmp_path)])
    assert code == 2
    assert "bad (m, n) pair" in capsys.readouterr().err
