import csv
import json
import math
import subprocess
import sys

import pytest

from radiant.cli import main


def read_json(path):
    return json.loads(path.read_text())


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestSample:
    def test_count_and_sidecar(self, tmp_path):
        assert main(["sample", "--n", "100", "--radius", "5", "--seed", "3", "-o", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "sample.csv")
        assert rows[0] == ["x", "y", "z"] and len(rows) == 101
        assert read_json(tmp_path / "sample.json") == {
            "geometry": "uniform_ball", "seed": 3, "n": 100, "radius": 5.0,
        }

    def test_rerun_is_byte_identical(self, tmp_path):
        args = ["sample", "--n", "100", "--radius", "5", "--seed", "3"]
        main(args + ["-o", str(tmp_path / "a")])
        main(args + ["-o", str(tmp_path / "b")])
        assert (tmp_path / "a/sample.csv").read_bytes() == (tmp_path / "b/sample.csv").read_bytes()

    def test_negative_radius(self, tmp_path, capsys):
        assert main(["sample", "--n", "100", "--radius", "-1", "-o", str(tmp_path)]) == 2
        assert "usage" in capsys.readouterr().err

    def test_inconsistent_n_and_rho(self, tmp_path):
        assert main(["sample", "--n", "10", "--rho", "1", "--radius", "1", "-o", str(tmp_path)]) == 2
        assert main(["sample", "--n", "4", "--rho", "1", "--radius", "1", "-o", str(tmp_path)]) == 0

    def test_ensemble_files(self, tmp_path):
        main(["sample", "--n", "5", "--radius", "1", "--seed", "10", "--ensemble", "3", "-o", str(tmp_path)])
        assert sorted(p.name for p in tmp_path.glob("*.csv")) == [
            "sample_seed10.csv", "sample_seed11.csv", "sample_seed12.csv",
        ]

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 7, "radius": 2.0, "seed": 5}))
        main(["sample", "--config", str(cfg), "--n", "9", "-o", str(tmp_path)])
        meta = read_json(tmp_path / "sample.json")
        assert (meta["n"], meta["radius"], meta["seed"]) == (9, 2.0, 5)

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as info:
            main(["sample", "--radius", "abc"])
        assert info.value.code == 2


class TestSpectrum:
    def test_dicke(self, tmp_path):
        code = main(["spectrum", "--n", "50", "--radius", "0.01", "--geometry", "dicke",
                     "--seed", "9", "-o", str(tmp_path)])
        assert code == 0
        stats = read_json(tmp_path / "stats.json")
        assert stats["stats"]["n_superradiant"] == 1
        assert stats["stats"]["max_rate"] == pytest.approx(50, rel=0.05)
        assert "note" in stats["predictions"]

    def test_single_atom_row(self, tmp_path):
        main(["spectrum", "--n", "1", "--radius", "1", "-o", str(tmp_path)])
        rows = read_csv(tmp_path / "spectrum.csv")
        assert rows[0] == ["index", "re_lambda", "im_lambda", "residual"]
        assert rows[1][:3] == ["0", "1.0", "0.0"]

    def test_predictions_side_by_side(self, tmp_path):
        main(["spectrum", "--n", "300", "--radius", "3", "--seed", "1", "-o", str(tmp_path)])
        pred = read_json(tmp_path / "stats.json")["predictions"]
        assert pred["superradiant_count"] == pytest.approx(9 / math.pi)
        assert pred["superradiant_rate"] == pytest.approx(300 / (9 / math.pi), rel=1e-3)
        assert pred["top_mode_count"] == 3

    def test_json_format_and_ensemble(self, tmp_path):
        main(["spectrum", "--n", "20", "--radius", "2", "--seed", "4", "--ensemble", "2",
              "--format", "json", "-o", str(tmp_path)])
        records = read_json(tmp_path / "spectrum_seed5.json")
        assert len(records) == 20 and set(records[0]) == {"index", "re_lambda", "im_lambda", "residual"}
        stats = read_json(tmp_path / "stats.json")
        assert [r["seed"] for r in stats["runs"]] == [4, 5]

    def test_numerical_failure_exit_code(self, tmp_path, monkeypatch, capsys):
        from radiant import spectra
        from radiant.errors import NumericalError

        def fail(*a, **k):
            raise NumericalError("did not converge", iterations=300, residual=1.0)

        monkeypatch.setattr(spectra, "eigendecompose", fail)
        assert main(["spectrum", "--n", "3", "--radius", "1", "-o", str(tmp_path)]) == 3
        assert "residual" in capsys.readouterr().err


class TestDispersion:
    def test_grid_and_peaks(self, tmp_path):
        main(["dispersion", "--mu", "0.1", "--rho", "1", "-o", str(tmp_path)])
        rows = read_csv(tmp_path / "dispersion.csv")
        assert rows[0] == ["k", "re_lambda", "im_lambda"] and len(rows) == 401
        peaks = read_json(tmp_path / "peaks.json")
        assert peaks["regime"] == "subcritical_mu"
        assert peaks["lambda_peak"] == pytest.approx(20 * math.pi)
        assert peaks["k_peak"] == pytest.approx(math.sqrt(0.99))
        assert peaks["width_nominal"] == pytest.approx(0.2)
        assert peaks["grid_search_lambda_peak"] == pytest.approx(20 * math.pi, rel=1e-6)

    def test_reference_points(self, tmp_path):
        main(["dispersion", "--mu", "0", "--k", "0", "-o", str(tmp_path / "a")])
        (_, re_, im_), = read_csv(tmp_path / "a/dispersion.csv")[1:]
        assert float(re_) == pytest.approx(0, abs=1e-15) and float(im_) == pytest.approx(4 * math.pi)
        main(["dispersion", "--mu", "0.1", "--k", str(math.sqrt(0.99)), "-o", str(tmp_path / "b")])
        assert float(read_csv(tmp_path / "b/dispersion.csv")[1][1]) == pytest.approx(20 * math.pi)
        main(["dispersion", "--mu", "10", "--k", "0", "-o", str(tmp_path / "c")])
        assert float(read_csv(tmp_path / "c/dispersion.csv")[1][1]) == pytest.approx(80 * math.pi / 10201)

    def test_unregularized_peaks_null(self, tmp_path):
        main(["dispersion", "--mu", "0", "-o", str(tmp_path)])
        assert read_json(tmp_path / "peaks.json")["lambda_peak"] is None


class TestChecks:
    def test_transform_check(self, tmp_path):
        assert main(["transform-check", "--k", "1.2", "--mu", "0.3", "-o", str(tmp_path)]) == 0
        out = read_json(tmp_path / "transform_check.json")
        assert out["relative_difference"] < 1e-8 and out["status"] == "PASS"

    def test_transform_check_needs_mu(self, tmp_path):
        assert main(["transform-check", "--k", "1.2", "-o", str(tmp_path)]) == 2

    def test_mode_count(self, tmp_path):
        main(["mode-count", "--mu", "0.1", "--k0", "1", "--rho", "1", "-o", str(tmp_path)])
        out = read_json(tmp_path / "mode_count.json")
        assert out["lhs"] == pytest.approx(10 * math.pi**2) and out["rhs"] == pytest.approx(10 * math.pi**2)
        assert out["status"] == "PASS"

    def test_mode_count_dicke(self, tmp_path):
        main(["mode-count", "--mu", "10", "--box-side", "2", "-o", str(tmp_path)])
        out = read_json(tmp_path / "mode_count.json")
        assert out["regime"] == "dicke" and out["status"] == "PASS"
        assert out["modes_in_box"] == pytest.approx(1000 * 8 / (6 * math.pi**2))

    def test_mode_count_regime_violation(self, tmp_path, capsys):
        assert main(["mode-count", "--mu", "2", "--regime", "shell", "-o", str(tmp_path)]) == 2
        assert "mode_count_dicke" in capsys.readouterr().err

    def test_quotient(self, tmp_path):
        main(["quotient", "--mu", "0.5", "--rho", "0.1", "--radius", "16", "--seed", "17", "-o", str(tmp_path)])
        out = read_json(tmp_path / "quotient.json")
        assert out["predicted"] == pytest.approx(2.2566, abs=1e-4)
        assert abs(out["measured"] - out["predicted"]) / out["predicted"] < 0.15
        assert out["status"] == "PASS" and out["n"] == 1716

    def test_quotient_radius_rule(self, tmp_path):
        assert main(["quotient", "--mu", "0.5", "--rho", "0.1", "--radius", "4", "-o", str(tmp_path)]) == 2

    @pytest.mark.parametrize("initial", ["uniform", "single", "plane-wave", "top-mode"])
    def test_evolve(self, tmp_path, initial):
        main(["evolve", "--n", "20", "--radius", "2", "--mu", "0.1", "--initial", initial,
              "--t-max", "2", "--steps", "5", "-o", str(tmp_path)])
        rows = read_csv(tmp_path / "decay.csv")
        assert rows[0] == ["t", "intensity"] and len(rows) == 6
        assert float(rows[1][1]) == pytest.approx(1.0)
        assert read_json(tmp_path / "evolve.json")["method"] == "spectral"


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "radiant", "mode-count", "--mu", "0.1", "-o", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    bad = subprocess.run([sys.executable, "-m", "radiant", "sample", "--radius", "-1"],
                         capture_output=True, text=True)
    assert bad.returncode == 2
