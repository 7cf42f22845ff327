from __future__ import annotations

import json

import numpy as np
import pytest

from qmpemba.cli import main
from qmpemba.config import load_config
from qmpemba.errors import ConfigError


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, data


def read_json(path):
    return json.loads(path.read_text())


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg.model == "dicke" and cfg.n == 40 and cfg.seed == 1

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment\nmodel = all-to-all\nn = 12\nseed = 7\nkappa = 2.0\n"
        )
        cfg = load_config(path, {"seed": 9})
        assert cfg.model == "all-to-all"
        assert cfg.n == 12
        assert cfg.seed == 9
        assert cfg.kappa == 2.0

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("nope = 3\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_bad_syntax(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("model dicke\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_fit_window_keys(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("fit_hi = 0.1\nfit_lo = 0.0001\n")
        cfg = load_config(path)
        assert cfg.fit_window == (0.1, 0.0001)

    def test_bad_model(self):
        with pytest.raises(ConfigError):
            load_config(None, {"model": "bogus"})


class TestSpectrumCommand:
    def test_files_and_content(self, tmp_path):
        out = tmp_path / "run"
        code = main(["spectrum", "--model", "dicke", "--n", "6", "--out", str(out)])
        assert code == 0
        header, data = read_csv(out / "spectrum.csv")
        assert header == ["k", "re_lambda", "im_lambda"]
        assert data.shape == (49, 3)
        assert data[0, 0] == 1
        assert abs(data[0, 1]) < 1e-9
        summary = read_json(out / "spectrum_summary.json")
        assert summary["lambda2_real"] is True
        assert summary["tau"] == pytest.approx(1 / abs(data[1, 1]), rel=1e-12)
        manifest = read_json(out / "manifest.json")
        assert manifest["config"]["n"] == 6
        assert manifest["vec_convention"] == "column-stacking"

    def test_determinism(self, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["spectrum", "--model", "all-to-all", "--n", "6", "--out", str(out_a)]) == 0
        assert main(["spectrum", "--model", "all-to-all", "--n", "6", "--out", str(out_b)]) == 0
        assert (out_a / "spectrum.csv").read_bytes() == (out_b / "spectrum.csv").read_bytes()

    def test_degenerate_slow_mode_exit_2(self, tmp_path):
        # an absurdly wide uniqueness tolerance forces the degenerate branch
        out = tmp_path / "run"
        code = main([
            "spectrum", "--model", "dicke", "--n", "6",
            "--tol-gap", "1e6", "--out", str(out),
        ])
        assert code == 2
        err = read_json(out / "error.json")
        assert err["error"] == "DegenerateSlowMode"
        assert err["exit_code"] == 2
        assert (out / "spectrum.csv").exists()

    def test_bad_flag_exit_4(self, tmp_path):
        assert main(["spectrum", "--n", "not-a-number"]) == 4

    def test_bad_config_value_exit_4(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("kappa = -1\n")
        assert main(["spectrum", "--config", str(path)]) == 4


class TestOverlapScanCommand:
    def test_columns_and_endpoints(self, tmp_path):
        out = tmp_path / "run"
        code = main(["overlap-scan", "--model", "dicke", "--n", "6", "--out", str(out)])
        assert code == 0
        header, data = read_csv(out / "overlap_scan.csv")
        assert header == ["s", "overlap", "analytic", "unrotated_overlap"]
        manifest = read_json(out / "manifest.json")
        rot = manifest["rotation"]
        assert data[0, 1] == pytest.approx(rot["alpha_1"], abs=1e-10)
        assert data[-1, 1] == pytest.approx(rot["alpha_n"], abs=1e-10)
        assert np.max(np.abs(data[:, 1] - data[:, 2])) < 1e-10
        assert np.all(data[:, 3] == data[0, 3])
        assert 0 < rot["s_bar"] < np.pi / 2
        assert rot["residual_overlap"] < 1e-9

    def test_scan_crosses_zero_at_s_bar(self, tmp_path):
        out = tmp_path / "run"
        main(["overlap-scan", "--model", "all-to-all", "--n", "6", "--out", str(out)])
        _, data = read_csv(out / "overlap_scan.csv")
        s_bar = read_json(out / "manifest.json")["rotation"]["s_bar"]
        before = data[data[:, 0] < s_bar][-1, 1]
        after = data[data[:, 0] > s_bar][0, 1]
        assert before * after <= 0


class TestEvolveCommand:
    def test_unrotated_first_point(self, tmp_path):
        out = tmp_path / "run"
        code = main(["evolve", "--model", "dicke", "--n", "6", "--out", str(out)])
        assert code == 0
        header, data = read_csv(out / "trajectory_unrotated.csv")
        assert header == ["t", "distance", "abs_slow_overlap"]
        assert data[0, 0] == 0.0
        manifest = read_json(out / "manifest.json")
        assert manifest["rotated"] is False
        assert manifest["fit"]["rate"] > 0

    def test_rotated_overlap_column_small(self, tmp_path):
        out = tmp_path / "run"
        code = main(["evolve", "--rotated", "--model", "dicke", "--n", "6", "--out", str(out)])
        assert code == 0
        _, data = read_csv(out / "trajectory_rotated.csv")
        # the slow-mode overlap starts at numerical zero and stays there
        assert np.max(data[:, 2]) < 1e-8
        manifest = read_json(out / "manifest.json")
        assert manifest["rotation"]["branch"] == "rotation"

    def test_evolve_distance_zero_time(self, tmp_path):
        out = tmp_path / "run"
        main(["evolve", "--model", "all-to-all", "--n", "6", "--out", str(out)])
        _, data = read_csv(out / "trajectory_unrotated.csv")
        assert data[0, 1] > 0
        assert data[-1, 1] < data[0, 1]


class TestReproduceCommand:
    @pytest.mark.parametrize("figure", ["fig2", "fig3"])
    def test_bundle_structure_small(self, figure, tmp_path):
        out = tmp_path / "run"
        code = main(["reproduce", figure, "--n", "6", "--out", str(out)])
        bundle = out / figure
        files = sorted(p.name for p in bundle.iterdir())
        csvs = [f for f in files if f.endswith(".csv")]
        assert len(csvs) == 4
        assert "manifest.json" in files
        assert "assertions.json" in files
        result = read_json(bundle / "assertions.json")
        assert set(result) == {"figure", "passed", "checks", "values"}
        assert code in (0, 1)

    def test_fig2_small_passes_shared_checks(self, tmp_path):
        out = tmp_path / "run"
        main(["reproduce", "fig2", "--n", "8", "--out", str(out)])
        result = read_json(out / "fig2" / "assertions.json")
        checks = result["checks"]
        assert checks["lambda2_real_and_unique"]
        assert checks["residual_overlap_small"]
        assert checks["unitary"]
        assert checks["scan_matches_two_level_law"]
        assert checks["scan_endpoints"]
