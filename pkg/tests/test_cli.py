import json
import math

import numpy as np
import pytest

from d4sim.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestExitCodes:
    def test_unknown_subcommand_is_usage(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 2
        assert json.loads(err)["exit_code"] == 2

    def test_size_without_valid_coloring(self, capsys):
        code, _, err = run(capsys, "prepare", "--size", "2x2")
        assert code == 2
        assert json.loads(err)["error"] == "ColoringImpossible"

    def test_size_too_small(self, capsys):
        code, _, err = run(capsys, "prepare", "--size", "3x2")
        assert code == 2
        assert json.loads(err)["error"] == "SizeTooSmall"

    def test_malformed_size(self, capsys):
        code, _, _ = run(capsys, "prepare", "--size", "huge")
        assert code == 2

    def test_bad_sector_string(self, capsys):
        code, _, _ = run(capsys, "stabilizers", "--sector", "+++")
        assert code == 2

    def test_forbidden_sector(self, capsys):
        # leading '-' needs the equals form so argparse keeps it as a value
        code, _, err = run(capsys, "stabilizers", "--sector=-+++-+")
        assert code == 2
        assert "forbidden" in json.loads(err)["message"]

    def test_out_of_range_bound_input(self, capsys):
        code, _, err = run(capsys, "fidelity-bound", "--r", "1.5")
        assert code == 2

    def test_missing_config_file(self, capsys):
        code, _, _ = run(capsys, "selftest", "--config", "/no/such/file")
        assert code == 2

    def test_error_json_is_machine_readable(self, capsys):
        _, _, err = run(capsys, "prepare", "--size", "2x2")
        doc = json.loads(err)
        assert set(doc) == {"error", "message", "exit_code"}


class TestPrepare:
    def test_dry_run_costs(self, capsys):
        doc = run_json(capsys, "prepare", "--size", "3x3",
                       "--variant", "compiled", "--dry-run")
        assert doc["two_qubit_gates"] == 78
        assert doc["peak_register"] == 30

    def test_dry_run_naive_costs(self, capsys):
        doc = run_json(capsys, "prepare", "--variant", "naive", "--dry-run")
        assert doc["two_qubit_gates"] == 108
        assert doc["peak_register"] == 36

    def test_dry_run_prints_memory_estimate(self, capsys):
        doc = run_json(capsys, "prepare", "--dry-run")
        assert doc["dense_bytes_estimate"] == (1 << 30) * 16

    def test_full_run_report(self, capsys):
        doc = run_json(capsys, "prepare", "--seed", "5")
        assert doc["cost"]["two_qubit_gates"] == 78
        rep = doc["report"]
        if not doc["herald"]:
            assert all(abs(v - 1.0) < 1e-8 for v in rep["stars"])
            assert all(abs(v - 1.0) < 1e-8 for v in rep["triangles"])

    def test_forced_outcomes_give_clean_vacuum(self, capsys):
        doc = run_json(capsys, "prepare",
                       "--force-ancilla-outcomes", "all:+")
        assert doc["herald"] is False
        assert all(abs(v - 1.0) < 1e-10 for v in doc["report"]["stars"])

    def test_bad_forced_outcomes(self, capsys):
        code, _, _ = run(capsys, "prepare",
                         "--force-ancilla-outcomes", "0=+1")
        assert code == 2


class TestSectors:
    def test_list_counts(self, capsys):
        doc = run_json(capsys, "sectors", "--list")
        assert doc["admissible"] == 22
        assert doc["forbidden"] == 42
        assert len(doc["list"]) == 64

    def test_full_reports(self, capsys):
        doc = run_json(capsys, "sectors")
        assert len(doc["reports"]) == 22
        for rep in doc["reports"]:
            assert rep["scalars"]["energy_density"] == pytest.approx(-1.0)
            assert rep["scalars"]["pinning"] == pytest.approx(1.0)


class TestBorromean:
    def test_exact_phase_is_pi(self, capsys):
        doc = run_json(capsys, "borromean")
        assert abs(doc["phase_over_pi"]) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("variant", ["rb", "gb"])
    def test_trivial_variants(self, capsys, variant):
        doc = run_json(capsys, "borromean", "--variant", variant)
        assert doc["phase_over_pi"] == pytest.approx(0.0, abs=1e-9)

    def test_interferometric_within_three_sigma(self, capsys):
        doc = run_json(capsys, "borromean", "--mode", "sampled",
                       "--shots", "10000", "--seed", "2")
        inter = doc["interferometry"]
        # amplitude is -1; the phase estimate must be pi well inside noise
        assert abs(abs(inter["estimate_phase_over_pi"]) - 1.0) < 0.05
        assert abs(inter["estimate_r"] - 1.0) < 3 * inter["stderr_r"] + 0.05


class TestOtherCommands:
    def test_single_anyon(self, capsys):
        doc = run_json(capsys, "single-anyon")
        rep = doc["report"]
        assert rep["scalars"]["negative_stars"] == 1.0
        assert all(abs(v - 1.0) < 1e-10 for v in rep["triangles"])

    def test_braid_default_leaves_charge_pair(self, capsys):
        doc = run_json(capsys, "braid")
        assert len(doc["negative_stars"]) == 2
        assert all(abs(v - 1.0) < 1e-10 for v in doc["final"]["triangles"])

    def test_degeneracy_scan_small(self, capsys):
        doc = run_json(capsys, "degeneracy-scan", "--trials", "50",
                       "--seed", "1")
        rep = doc["report"]
        assert rep["scalars"]["forbidden_mass"] == 0.0
        assert sum(rep["logicals"].values()) == pytest.approx(1.0)

    def test_fidelity_bound(self, capsys):
        doc = run_json(capsys, "fidelity-bound", "--r", "0.90",
                       "--g", "0.85", "--b", "0.89")
        assert doc["bounds"]["lower"] == pytest.approx(0.64)

    def test_anyon_table(self, capsys):
        doc = run_json(capsys, "anyon-table")
        assert len(doc["anyons"]) == 22
        assert sorted(doc["dimensions"].count(d) for d in (1, 2)) == [8, 14]
        s = np.array(doc["s_matrix"])
        assert np.allclose(s @ s, np.eye(22), atol=1e-12)

    def test_selftest_passes(self, capsys):
        doc = run_json(capsys, "selftest")
        assert doc["passed"] is True
        assert all(doc["checks"].values())


class TestPlumbing:
    def test_byte_identical_given_seed(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["degeneracy-scan", "--trials", "40", "--seed", "9",
                     "--output", str(a)]) == 0
        assert main(["degeneracy-scan", "--trials", "40", "--seed", "9",
                     "--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_merged_under_flags(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"variant": "naive", "seed": 7}))
        doc = run_json(capsys, "prepare", "--config", str(cfg), "--dry-run")
        assert doc["variant"] == "naive"
        # an explicit flag wins over the config file
        doc = run_json(capsys, "prepare", "--config", str(cfg),
                       "--variant", "compiled", "--dry-run")
        assert doc["variant"] == "compiled"

    def test_config_must_be_object(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        code, _, _ = run(capsys, "prepare", "--config", str(cfg))
        assert code == 2

    def test_noise_file(self, capsys, tmp_path):
        nf = tmp_path / "noise.json"
        nf.write_text(json.dumps({"p_depol2": 0.0}))
        doc = run_json(capsys, "prepare", "--noise", str(nf), "--seed", "3")
        assert doc["report"]["noise"]["p_depol2"] == 0.0

    def test_output_file(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        assert main(["sectors", "--list", "--output", str(out)]) == 0
        assert json.loads(out.read_text())["admissible"] == 22

    def test_figures_flag_writes_png(self, capsys, tmp_path):
        out = tmp_path / "stab.json"
        assert main(["stabilizers", "--figures", "--output", str(out)]) == 0
        assert (tmp_path / "stab-stabilizers.png").exists()

    def test_schema_version_present(self, capsys):
        doc = run_json(capsys, "sectors", "--list")
        assert doc["schema"].startswith("d4sim-report/")
