"""End-to-end command-line behavior: schemas, determinism, exit codes."""

import json
import math
import subprocess

import numpy as np
import pytest

import airykdv.cli as cli
from airykdv.cli import main

STEP = '{"type": "step"}'
KPZ = '{"type": "kpz"}'


def run(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


class TestDet:
    def test_json_record(self, capsys):
        rc, out, _ = run(capsys, ["det", "--sigma", STEP, "--x", "0", "--t", "1"])
        assert rc == 0
        doc = json.loads(out)
        assert doc["schema_version"] == 1
        assert doc["command"] == "det"
        assert doc["sigma"] == "step"
        assert doc["x"] == 0.0 and doc["t"] == 1.0
        assert doc["q"] == pytest.approx(math.exp(doc["log_q"]), rel=1e-14)
        for key in ("u", "p", "phi_sq_int"):
            assert isinstance(doc[key], float)
        # this point is the Tracy-Widom value at 0
        assert doc["q"] == pytest.approx(0.9693728283552618, abs=1e-12)

    def test_csv_format(self, capsys):
        rc, out, _ = run(capsys, ["det", "--sigma", STEP, "--x", "0", "--t", "1",
                                  "--format", "csv"])
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0] == "x,t,log_q,q,u,p,phi_sq_int"
        assert len(lines) == 2

    def test_sigma_from_file(self, capsys, tmp_path):
        f = tmp_path / "w.json"
        f.write_text('{"type": "fermi", "theta": 0.3}')
        rc, out, _ = run(capsys, ["det", "--sigma", f"@{f}", "--x", "0.3", "--t", "0.2"])
        assert rc == 0
        assert json.loads(out)["sigma"] == "fermi"

    def test_out_writes_file(self, capsys, tmp_path):
        dest = tmp_path / "rec.json"
        rc, out, _ = run(capsys, ["det", "--sigma", STEP, "--x", "0", "--t", "1",
                                  "--out", str(dest)])
        assert rc == 0
        assert out == ""
        assert json.loads(dest.read_text())["command"] == "det"

    def test_light_resolution_flags(self, capsys):
        rc, out, _ = run(capsys, ["det", "--sigma", KPZ, "--x", "0.3", "--t", "0.2",
                                  "--nodes", "24", "--panels", "1"])
        assert rc == 0
        coarse = json.loads(out)["log_q"]
        rc, out, _ = run(capsys, ["det", "--sigma", KPZ, "--x", "0.3", "--t", "0.2"])
        assert json.loads(out)["log_q"] == pytest.approx(coarse, abs=1e-8)


class TestScan:
    ARGS = ["scan", "--sigma", KPZ, "--x-from", "-0.4", "--x-to", "0.4",
            "--x-step", "0.4", "--t-from", "0.2", "--t-to", "0.4", "--t-step", "0.2"]

    def test_csv_shape_and_order(self, capsys):
        rc, out, _ = run(capsys, self.ARGS)
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0] == "x,t,log_q,u,regime,asym_value,gap"
        assert len(lines) == 1 + 3 * 2
        # row-major: x outer, t inner
        xs = [float(l.split(",")[0]) for l in lines[1:]]
        ts = [float(l.split(",")[1]) for l in lines[1:]]
        assert xs == [-0.4, -0.4, 0.0, 0.0, 0.4, 0.4]
        assert ts == [0.2, 0.4] * 3

    def test_threads_do_not_change_bytes(self, capsys):
        _, out1, _ = run(capsys, self.ARGS + ["--threads", "1"])
        _, out8, _ = run(capsys, self.ARGS + ["--threads", "8"])
        assert out1 == out8

    def test_regime_labels(self, capsys):
        # t^(1/3) = 0.2: edge at 0.6, and x = 2 stays within determinant range
        rc, out, _ = run(capsys, ["scan", "--sigma", STEP, "--t", "0.008",
                                  "--x-from", "-1", "--x-to", "2", "--x-step", "1"])
        assert rc == 0
        regimes = [l.split(",")[4] for l in out.strip().splitlines()[1:]]
        assert regimes == ["i", "ii", "iii", "outside"]

    def test_json_document(self, capsys):
        rc, out, _ = run(capsys, self.ARGS + ["--format", "json"])
        doc = json.loads(out)
        assert doc["schema_version"] == 1
        assert doc["command"] == "scan"
        assert doc["sigma"] == "kpz"
        assert doc["columns"][0] == "x"
        assert len(doc["rows"]) == 6

    def test_single_point_conflicts_with_range(self, capsys):
        rc, _, err = run(capsys, ["scan", "--sigma", KPZ, "--x", "1",
                                  "--x-from", "0", "--x-to", "1", "--x-step", "1",
                                  "--t", "0.2"])
        assert rc == 2
        assert "config error" in err


class TestCheck:
    def test_phi_identity_passes(self, capsys):
        rc, out, _ = run(capsys, ["check", "phi-identity", "--sigma", KPZ])
        assert rc == 0
        doc = json.loads(out.strip())
        assert doc["pass"] is True
        assert doc["tol"] == 1e-6
        assert doc["normalized"] <= 1e-6

    def test_all_emits_one_line_per_check(self, capsys):
        rc, out, _ = run(capsys, ["check", "all", "--sigma", STEP, "--z", "0,0.7"])
        assert rc == 0
        lines = out.strip().splitlines()
        # kdv, phi-identity, cylkdv: 1 line each; 4 z-dependent checks x 2
        assert len(lines) == 3 + 4 * 2
        names = {json.loads(l)["name"] for l in lines}
        assert names == {"kdv", "schrodinger", "idpii", "evolution", "mkdv",
                         "phi_identity", "cyl_kdv"}
        assert all(json.loads(l)["pass"] for l in lines)

    def test_impossible_tolerance_fails(self, capsys):
        rc, out, _ = run(capsys, ["check", "kdv", "--sigma", KPZ, "--tol", "1e-18"])
        assert rc == 1
        assert json.loads(out.strip())["pass"] is False

    def test_bad_z_list(self, capsys):
        rc, _, err = run(capsys, ["check", "schrodinger", "--sigma", KPZ, "--z", "a,b"])
        assert rc == 2
        assert "config error" in err


class TestTables:
    def test_tw_values_and_figure(self, capsys, tmp_path):
        dest = tmp_path / "tw.csv"
        rc, _, _ = run(capsys, ["tw", "--s-from", "-2", "--s-to", "2", "--step", "2",
                                "--out", str(dest)])
        assert rc == 0
        lines = dest.read_text().strip().splitlines()
        assert lines[0] == "s,f_tw"
        vals = [float(l.split(",")[1]) for l in lines[1:]]
        assert vals[0] == pytest.approx(0.41322414250512274, abs=1e-11)
        assert vals == sorted(vals)
        assert (tmp_path / "tw.png").exists()

    def test_no_plot_suppresses_figure(self, capsys, tmp_path):
        dest = tmp_path / "tw.csv"
        rc, _, _ = run(capsys, ["tw", "--s-from", "0", "--s-to", "1", "--step", "1",
                                "--out", str(dest), "--no-plot"])
        assert rc == 0
        assert not (tmp_path / "tw.png").exists()

    def test_plot_requires_out(self, capsys):
        rc, _, err = run(capsys, ["tw", "--s-from", "0", "--s-to", "1", "--step", "1",
                                  "--plot"])
        assert rc == 2
        assert "config error" in err

    def test_p2_both_routes(self, capsys, tmp_path):
        dest = tmp_path / "p2.csv"
        rc, _, _ = run(capsys, ["p2", "--s-from", "-1", "--s-to", "1", "--step", "1",
                                "--out", str(dest)])
        assert rc == 0
        lines = dest.read_text().strip().splitlines()
        assert lines[0] == "s,y_bvp,y_sq_det"
        for line in lines[1:]:
            _, y_bvp, y_sq = (float(v) for v in line.split(","))
            assert y_bvp**2 == pytest.approx(y_sq, abs=1e-6)
        assert (tmp_path / "p2.png").exists()

    def test_p2_deformed_has_no_bvp_route(self, capsys):
        rc, out, _ = run(capsys, ["p2", "--s-from", "0", "--s-to", "0", "--step", "1",
                                  "--gamma", "0.5", "--no-plot"])
        assert rc == 0
        row = out.strip().splitlines()[1].split(",")
        assert math.isnan(float(row[1]))
        assert float(row[2]) > 0

    def test_kpz_slice_bitwise(self, capsys, tmp_path):
        dest = tmp_path / "kpz.csv"
        rc, _, _ = run(capsys, ["kpz", "--T", "4", "--s-from", "-1", "--s-to", "1",
                                "--step", "1", "--out", str(dest)])
        assert rc == 0
        lines = dest.read_text().strip().splitlines()
        assert lines[0] == "s,T,log_q,deep_tail"
        from airykdv.asymptotics import kpz_laplace

        for line in lines[1:]:
            s, tcap, log_q, _ = (float(v) for v in line.split(","))
            assert log_q == kpz_laplace(s, tcap)
        assert (tmp_path / "kpz.png").exists()

    def test_scan_figure(self, capsys, tmp_path):
        dest = tmp_path / "scan.csv"
        rc, _, _ = run(capsys, ["scan", "--sigma", KPZ, "--t", "0.3", "--x-from", "-1",
                                "--x-to", "1", "--x-step", "0.5", "--out", str(dest)])
        assert rc == 0
        assert (tmp_path / "scan.png").exists()


class TestTailConstant:
    def test_passes_at_stated_tolerance(self, capsys):
        rc, out, _ = run(capsys, ["tail-constant"])
        assert rc == 0
        doc = json.loads(out)
        assert doc["pass"] is True
        assert abs(doc["error"]) < 2e-2
        assert doc["expected"] == pytest.approx(-0.13654001117711987, abs=1e-15)

    def test_fails_at_impossible_tolerance(self, capsys):
        rc, out, _ = run(capsys, ["tail-constant", "--tol", "1e-9"])
        assert rc == 1
        assert json.loads(out)["pass"] is False


class TestVEstimate:
    def test_default_ladder_and_fields(self, capsys):
        rc, out, _ = run(capsys, ["v-estimate", "--sigma", STEP, "--x", "0.1"])
        assert rc == 0
        doc = json.loads(out)
        assert doc["command"] == "v-estimate"
        assert doc["t_samples"] == [(0.1 / 5.0) ** 3, (0.1 / 6.0) ** 3]
        assert doc["eight_x_sq_v_hat"] == pytest.approx(1.0, abs=5e-3)
        assert len(doc["u_samples"]) == 2

    def test_explicit_samples(self, capsys):
        rc, out, _ = run(capsys, ["v-estimate", "--sigma", STEP, "--x", "0.1",
                                  "--t-samples", "8e-6,4e-6"])
        assert rc == 0
        assert json.loads(out)["t_samples"] == [8e-6, 4e-6]

    def test_regime_violation_is_config_error(self, capsys):
        rc, _, err = run(capsys, ["v-estimate", "--sigma", STEP, "--x", "0.1",
                                  "--t-samples", "0.1,0.2"])
        assert rc == 2
        assert "regime violated" in err


class TestExitCodes:
    def test_bad_sigma_json(self, capsys):
        rc, _, err = run(capsys, ["det", "--sigma", "{bad", "--x", "0", "--t", "1"])
        assert rc == 2
        assert "config error" in err

    def test_unreadable_sigma_file(self, capsys):
        rc, _, err = run(capsys, ["det", "--sigma", "@/no/such/file", "--x", "0",
                                  "--t", "1"])
        assert rc == 2
        assert "cannot read sigma file" in err

    def test_nonpositive_t(self, capsys):
        rc, _, err = run(capsys, ["det", "--sigma", STEP, "--x", "0", "--t", "-1"])
        assert rc == 2
        assert "config error" in err

    def test_bad_nodes(self, capsys):
        rc, _, _ = run(capsys, ["det", "--sigma", STEP, "--x", "0", "--t", "1",
                                "--nodes", "0"])
        assert rc == 2

    def test_bad_threads_env(self, capsys, monkeypatch):
        monkeypatch.setenv("AIRYKDV_THREADS", "lots")
        rc, _, err = run(capsys, ["scan", "--sigma", STEP, "--x", "0", "--t", "1"])
        assert rc == 2
        assert "AIRYKDV_THREADS" in err

    def test_numerical_failure_maps_to_3(self, capsys, monkeypatch):
        from airykdv.fredholm import NumericalError

        def boom(*a, **k):
            raise NumericalError("synthetic determinant failure")

        monkeypatch.setattr(cli, "observe", boom)
        rc, _, err = run(capsys, ["det", "--sigma", STEP, "--x", "0", "--t", "1"])
        assert rc == 3
        assert "numerical failure" in err


class TestEntryPoint:
    def test_console_script(self):
        r = subprocess.run(
            ["airykdv", "det", "--sigma", STEP, "--x", "0", "--t", "1"],
            capture_output=True, text=True, timeout=120,
        )
        assert r.returncode == 0
        assert json.loads(r.stdout)["command"] == "det"

    def test_module_invocation_help(self):
        r = subprocess.run(
            ["python3", "-m", "airykdv.cli", "--help"],
            capture_output=True, text=True, timeout=60,
        )
        assert r.returncode == 0
        for cmd in ("det", "scan", "check", "tw", "p2", "tail-constant", "kpz",
                    "v-estimate"):
            assert cmd in r.stdout
