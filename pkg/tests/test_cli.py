"""Tests for the campaign driver."""

from __future__ import annotations

import csv
import json

import pytest

from src.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, _datum_index, _pq_pairs, build_parser, main, overrides_from_args
from src.eigen import WaveIndex
from src.norms import INF


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("DIRAC_LAB_WORKERS", "1")


class TestParser:
    def test_section_overrides(self):
        args = build_parser().parse_args(["eigen", "eval", "--n", "2", "--nu", "2^-2", "--k", "0.5"])
        assert overrides_from_args(args) == {"eigen": {"n": 2, "nu": 0.25, "k": 0.5}}

    def test_global_flags(self, tmp_path):
        args = build_parser().parse_args(
            ["strichartz", "scan", "--output-dir", str(tmp_path), "--emit-plot-data", "--uniformity-tolerance", "0.2"]
        )
        overrides = overrides_from_args(args)
        assert "strichartz" not in overrides
        assert overrides["output"] == {"dir": str(tmp_path), "emit_plot_data": True}
        assert overrides["general"] == {"uniformity_tolerance": 0.2}

    def test_unknown_action(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["eigen", "plot"])

    def test_pq_pairs(self):
        assert len(_pq_pairs("default")) == 16
        assert _pq_pairs("inf,2; 4,2^3") == [(INF, 2.0), (4.0, 8.0)]

    def test_datum_index(self):
        assert _datum_index(2, 0.0) == WaveIndex(2, 0.5)
        assert _datum_index(3, 0.0) == WaveIndex(3, 1, 0.5)
        assert _datum_index(3, 0.0, nonradial=True) == WaveIndex(3, 2, 0.5)


class TestMain:
    def test_dry_run(self, tmp_path):
        assert main(["eigen", "bounds", "--dry-run", "--output-dir", str(tmp_path)]) == EXIT_OK
        assert not any(tmp_path.iterdir())

    def test_invalid_coupling(self, capsys):
        assert main(["eigen", "eval", "--n", "2", "--nu", "0.7", "--dry-run"]) == EXIT_CONFIG
        assert "Config validation failed" in capsys.readouterr().err

    def test_unreadable_campaign_file(self, tmp_path):
        assert main(["evolve", "run", "--config", str(tmp_path / "missing.ini")]) == EXIT_CONFIG

    def test_eigen_eval_writes_report(self, tmp_path):
        argv = ["eigen", "eval", "--n", "3", "--nu", "0.5", "--rho", "1e-2..10", "--rho-points", "20"]
        assert main(argv + ["--output-dir", str(tmp_path), "--emit-plot-data"]) == EXIT_OK

        with open(tmp_path / "eigen_eval_values.csv", newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["rho", "re_F", "im_F", "re_G", "im_G"]
        assert len(rows) == 21

        report = json.loads((tmp_path / "eigen_eval_report.json").read_text(encoding="utf-8"))
        assert report["pass"] is True
        assert report["results"]["gamma"] == pytest.approx(0.75**0.5)
        assert report["diagnostics"] == {"errors": [], "warnings": []}
        assert (tmp_path / "plot_data" / "eigen_eval_magnitude.dat").exists()

    def test_reports_are_deterministic(self, tmp_path):
        argv = ["eigen", "eval", "--n", "2", "--nu", "0.25", "--rho", "0.1..5", "--rho-points", "8"]
        assert main(argv + ["--output-dir", str(tmp_path)]) == EXIT_OK
        first = (tmp_path / "eigen_eval_report.json").read_bytes()
        assert main(argv + ["--output-dir", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "eigen_eval_report.json").read_bytes() == first

    @pytest.mark.slow
    def test_evolve_run(self, tmp_path):
        argv = [
            "evolve", "run", "--n", "3", "--nu", "0.5", "--support", "0.25..1.75", "--r-max", "50",
            "--rho-max", "2", "--t-max", "0.5", "--time-nodes", "3", "--save-trajectory",
            "--output-dir", str(tmp_path),
        ]
        assert main(argv) == EXIT_OK
        report = json.loads((tmp_path / "evolve_report.json").read_text(encoding="utf-8"))
        assert {check["case"] for check in report["checks"]} == {"unitarity", "group_law"}
        assert (tmp_path / "evolve_trajectory.json").exists()


class TestBaselines:
    ARGV = ["eigen", "bounds", "--n", "3", "--nu", "0", "--k-max", "1", "--rho-points", "200"]

    def test_first_run_writes_baseline_and_rerun_matches(self, tmp_path):
        argv = self.ARGV + ["--output-dir", str(tmp_path)]
        status = main(argv)
        assert status in (EXIT_OK, EXIT_FAILED)
        (path,) = (tmp_path / "baselines").glob("eigen_bounds_*_baseline.json")
        assert sorted(json.loads(path.read_text(encoding="utf-8"))["values"]) == ["C1 max", "C2 max", "C3 max"]
        first = (tmp_path / "eigen_bounds_report.json").read_bytes()

        assert main(argv) == status
        assert (tmp_path / "eigen_bounds_report.json").read_bytes() == first
        checks = [c for c in json.loads(first)["checks"] if c["case"].startswith("baseline ")]
        assert len(checks) == 3
        assert all(c["pass"] for c in checks)

    def test_drift_against_stored_baseline_fails(self, tmp_path):
        stored = tmp_path / "stored"
        argv = self.ARGV + ["--output-dir", str(tmp_path / "out"), "--baseline-dir", str(stored)]
        main(argv)
        (path,) = stored.glob("eigen_bounds_*_baseline.json")
        document = json.loads(path.read_text(encoding="utf-8"))
        document["values"] = {key: 0.5 * value for key, value in document["values"].items()}
        path.write_text(json.dumps(document), encoding="utf-8")

        assert main(argv) == EXIT_FAILED
        report = json.loads((tmp_path / "out" / "eigen_bounds_report.json").read_text(encoding="utf-8"))
        failed = {c["case"] for c in report["checks"] if not c["pass"]}
        assert {"baseline C1 max", "baseline C2 max", "baseline C3 max"} <= failed
        assert not (tmp_path / "out" / "baselines").exists()

    def test_baseline_dir_flag(self):
        args = build_parser().parse_args(["strichartz", "scan", "--baseline-dir", "ref"])
        assert overrides_from_args(args) == {"output": {"baseline_dir": "ref"}}


@pytest.mark.slow
class TestCampaigns:
    """Each command runs to a verdict; gate outcomes depend on grid resolution."""

    @pytest.fixture
    def campaign(self, tmp_path):
        path = tmp_path / "campaign.ini"
        path.write_text(
            "[transform]\nk_max = 1\nlog_points = 100\n\n"
            "[strichartz]\ngrid_pq = inf,2; 4,4\ntime_nodes = 5\n\n"
            "[smoothing]\nR = 2^-2..2^4\ntime_nodes = 5\n\n"
            "[hartree]\nT = 0.25\ntime_nodes = 3\n",
            encoding="utf-8",
        )
        return path

    @pytest.mark.parametrize(
        "command, table",
        [
            (["transform", "residuals"], "transform_residuals.csv"),
            (["strichartz", "scan"], "strichartz_admissibility.csv"),
            (["smoothing", "morrey"], "smoothing_morrey.csv"),
            (["hartree", "solve"], "hartree_iterations.csv"),
        ],
    )
    def test_command_reaches_verdict(self, campaign, tmp_path, command, table):
        out = tmp_path / "out"
        status = main(command + ["--config", str(campaign), "--output-dir", str(out)])
        assert status in (EXIT_OK, EXIT_FAILED)
        if status == EXIT_OK:
            report = json.loads((out / f"{command[0]}_report.json").read_text(encoding="utf-8"))
            assert report["pass"] is True
            assert (out / table).exists()
