"""End-to-end tests of the command-line entry point and its exit codes."""
import csv
import json

import pytest

from app.main import build_parser, main
from app.schemas import RECORD_COLUMNS

CHECK_NAMES = {
    "quadrature", "parseval_roundtrip", "self_adjoint", "positivity", "shift_equivalence", "bessel_eigenvalue",
    "hardy", "q_identity", "virial_collapse", "weights", "pohozaev", "sharpness", "gn_deficit", "conservation",
}
SMALL = ["--set", "grid.n_r=512", "--set", "diagnostics.check_fields=10"]


def _run(tmp_path, name, *args):
    out = tmp_path / name
    return main(["--output", str(out), *args]), out


class TestParser:
    """Test argument parsing."""

    def test_subcommands(self):
        """Test that every subcommand parses."""
        parser = build_parser()
        assert parser.parse_args(["check"]).command == "check"
        assert parser.parse_args(["evolve", "gaussian 2"]).initial == "gaussian 2"
        assert parser.parse_args(["dichotomy", "--amplitudes", "0.5", "1.5"]).amplitudes == [0.5, 1.5]

    def test_repeated_overrides(self):
        """Test that --set may be repeated."""
        args = build_parser().parse_args(["--set", "a.b=1", "--set", "c.d=2", "groundstate"])
        assert args.overrides == ["a.b=1", "c.d=2"]


class TestExitCodes:
    """Test the mapping of failures onto exit codes."""

    def test_mass_critical(self, tmp_path, capsys):
        """Test that p = 3 - rho exits with 2."""
        code, _ = _run(tmp_path, "mc", "--set", "params.p=2.5", "groundstate")
        assert code == 2
        assert "mass-critical" in capsys.readouterr().err

    def test_malformed_override(self, tmp_path):
        """Test that a malformed --set exits with 2."""
        code, _ = _run(tmp_path, "bad", "--set", "grid.n_r", "check")
        assert code == 2

    def test_invalid_value(self, tmp_path):
        """Test that a schema violation exits with 2."""
        code, _ = _run(tmp_path, "bad", "--set", "params.rho=2.5", "groundstate")
        assert code == 2

    def test_tiny_grid_check(self, tmp_path):
        """Test that an unbuildable grid makes the battery inconclusive and exits with 3."""
        code, out = _run(tmp_path, "tiny", "--set", "grid.n_r=4", "check")
        assert code == 3
        report = json.loads((out / "check-report.json").read_text())
        verdicts = {c["name"]: c["verdict"] for c in report["checks"]}
        assert verdicts["quadrature"] == "inconclusive"
        assert verdicts["pohozaev"] == "inconclusive"

    def test_missing_initial_file(self, tmp_path):
        """Test that a missing initial-data file exits with 4."""
        code, _ = _run(tmp_path, "io", "--set", "grid.n_r=256", "evolve", f"file {tmp_path / 'none.csv'}")
        assert code == 4

    def test_unknown_initial_data(self, tmp_path):
        """Test that an unknown initial-data kind exits with 2."""
        code, _ = _run(tmp_path, "kind", "--set", "grid.n_r=256", "evolve", "triangle")
        assert code == 2

    def test_missing_config_file(self, tmp_path):
        """Test that a missing --config file exits with 4."""
        code = main(["--config", str(tmp_path / "none.env"), "--output", str(tmp_path), "check"])
        assert code == 4

    def test_unexpected_failure(self, tmp_path, monkeypatch, capsys):
        """Test that an exception outside the lab hierarchy exits with 4 instead of a traceback."""
        def broken(config, output_dir):
            raise RuntimeError("solver exploded")

        monkeypatch.setattr("app.main.cmd_check", broken)
        code, _ = _run(tmp_path, "boom", "check")
        assert code == 4
        assert "unexpected failure: solver exploded" in capsys.readouterr().err


class TestSubcommands:
    """Test successful runs and their artifacts."""

    def test_groundstate(self, tmp_path):
        """Test profile, sidecar and manifest, and byte-identical reruns."""
        code, first = _run(tmp_path, "a", *SMALL, "groundstate")
        assert code == 0
        summary = json.loads((first / "groundstate.json").read_text())
        assert max(summary["pohozaev_residuals"]) <= 1e-5
        _, second = _run(tmp_path, "b", *SMALL, "groundstate")
        for name in ("profile.csv", "groundstate.json", "manifest.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_groundstate_json_only(self, tmp_path):
        """Test that output.formats=json skips the profile but keeps sidecar and manifest."""
        code, out = _run(tmp_path, "j", *SMALL, "--set", "output.formats=json", "groundstate")
        assert code == 0
        assert not (out / "profile.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["artifacts"]) == {"groundstate.json"}

    def test_check(self, tmp_path, capsys):
        """Test that the battery passes at desk scale."""
        code, out = _run(tmp_path, "check", *SMALL, "check")
        assert code == 0, capsys.readouterr().out
        report = json.loads((out / "check-report.json").read_text())
        assert {c["verdict"] for c in report["checks"]} <= {"holds", "skipped"}
        assert (out / "manifest.json").is_file()

    def test_check_integer_flux(self, tmp_path):
        """Test that alpha = 1 skips the Hardy check and still runs every other check."""
        code, out = _run(tmp_path, "int", *SMALL, "--set", "params.alpha=1.0", "check")
        assert code in (0, 3)
        report = json.loads((out / "check-report.json").read_text())
        verdicts = {c["name"]: c["verdict"] for c in report["checks"]}
        assert verdicts["hardy"] == "skipped"
        assert set(verdicts) == CHECK_NAMES
        assert verdicts["quadrature"] == "holds"
        assert verdicts["bessel_eigenvalue"] == "holds"

    def test_check_large_flux(self, tmp_path):
        """Test that alpha = 7.5 gets a Bessel eigenvalue verdict instead of a crash."""
        code, out = _run(tmp_path, "big", *SMALL, "--set", "params.alpha=7.5", "check")
        assert code in (0, 3)
        report = json.loads((out / "check-report.json").read_text())
        verdicts = {c["name"]: c["verdict"] for c in report["checks"]}
        assert verdicts["bessel_eigenvalue"] != "inconclusive"

    def test_evolve(self, tmp_path):
        """Test the trajectory header, report and snapshot files."""
        code, out = _run(
            tmp_path, "ev", "--set", "grid.n_r=256", "--set", "evolve.t_end=0.05",
            "--set", "evolve.snapshot_times=0.02", "evolve", "gaussian 0.5",
        )
        assert code == 0
        with (out / "trajectory.csv").open() as handle:
            header = next(csv.reader(handle))
        assert tuple(header) == RECORD_COLUMNS
        report = json.loads((out / "report.json").read_text())
        assert report["termination"] == "completed"
        assert set(report["monitors"]) == {"blowup", "morawetz", "scattering"}
        assert "bump_radius" in report["monitors"]["scattering"]["evidence"]
        localized = report["localized_final"]
        assert localized["radius"] == 1.0
        assert localized["bump_mass"] > 0.0
        assert localized["ball_potential"] > 0.0
        assert set(report["localized_virial"]) == {"value", "second_derivative", "flow_second_derivative"}
        assert (out / "field_t0.02.csv").is_file()

    @pytest.mark.slow
    def test_dichotomy(self, tmp_path):
        """Test predicted against observed outcomes over the full amplitude sweep, and determinism."""
        args = ["--set", "grid.n_r=512", "--set", "evolve.t_end=4.0", "dichotomy"]
        code, first = _run(tmp_path, "a", *args)
        assert code == 0
        with (first / "dichotomy.csv").open() as handle:
            rows = list(csv.DictReader(handle))
        assert [float(row["c"]) for row in rows] == [0.3, 0.5, 0.8, 1.0, 1.3, 1.5]
        assert [row["predicted"] for row in rows] == [
            "global-scattering", "global-scattering", "global-scattering", "outside-theory", "blowup", "blowup",
        ]
        assert all(row["mismatch"] == "false" for row in rows)
        for row in rows[:3]:
            assert row["termination"] == "completed"
            assert float(row["max_gm"]) < 1.0
            assert float(row["max_gm_alpha"]) < 1.0
        for row in rows[4:]:
            assert row["termination"] == "gradient_cap_hit"
            assert float(row["min_gm_alpha"]) > 1.0
            assert float(row["max_q"]) < 0.0
        _, second = _run(tmp_path, "b", *args)
        assert (first / "dichotomy.csv").read_bytes() == (second / "dichotomy.csv").read_bytes()
