"""Unit tests for the parameter and experiment schemas and configuration loading."""
import math
from pathlib import Path

import pytest
from pydantic import ValidationError

from app.config import (
    LabSettings,
    fold_dotted,
    load_experiment_config,
    parse_overrides,
    resolve_output_dir,
)
from app.exceptions import ConfigError, StorageError
from app.schemas import ExperimentConfig, PhysParams
from app.schemas.experiment import EvolveSection, GridSection


class TestPhysParams:
    """Test PhysParams validation and derived constants."""

    def test_defaults(self):
        """Test the reference quadruple and its constants."""
        params = PhysParams()
        assert params.big_b == pytest.approx(2.5)
        assert params.big_a == pytest.approx(1.5)
        assert params.s_c == pytest.approx(0.25)
        assert params.lambda_c == pytest.approx(3.0)
        assert params.dist_alpha == pytest.approx(0.5)
        assert params.theory_regime

    def test_rho_upper_bound(self):
        """Test that rho must stay below 2."""
        with pytest.raises(ValidationError) as exc_info:
            PhysParams(rho=2.0)
        assert "rho" in str(exc_info.value)

    def test_p_lower_bound(self):
        """Test that p must exceed 1."""
        with pytest.raises(ValidationError):
            PhysParams(p=1.0)

    def test_kappa_is_a_sign(self):
        """Test that kappa must be +1 or -1."""
        with pytest.raises(ValidationError) as exc_info:
            PhysParams(kappa=0)
        assert "kappa" in str(exc_info.value)

    def test_non_finite_alpha(self):
        """Test that NaN flux is rejected."""
        with pytest.raises(ValidationError):
            PhysParams(alpha=math.nan)

    def test_mass_critical(self):
        """Test that p = 3 - rho has no lambda_c and leaves the theory regime."""
        params = PhysParams(rho=0.5, p=2.5)
        assert params.mass_critical
        assert params.lambda_c is None
        assert not params.theory_regime

    @pytest.mark.parametrize("update", [{"alpha": 1.0}, {"rho": 0.0}, {"rho": 1.5}, {"p": 2.0}])
    def test_outside_theory_regime(self, update):
        """Test integer flux, rho outside (0, 1) and mass-subcritical powers."""
        assert not PhysParams(**update).theory_regime

    def test_negative_flux_distance(self):
        """Test dist(alpha, Z) for negative flux."""
        assert PhysParams(alpha=-0.3).dist_alpha == pytest.approx(0.3)

    def test_same_equation_ignores_kappa(self):
        """Test that kappa does not change the equation identity."""
        assert PhysParams(kappa=1).same_equation(PhysParams(kappa=-1))
        assert not PhysParams(alpha=0.25).same_equation(PhysParams())

    def test_frozen(self):
        """Test that parameters are immutable."""
        params = PhysParams()
        with pytest.raises(ValidationError):
            params.alpha = 0.1


class TestExperimentConfig:
    """Test the experiment schema sections."""

    def test_defaults(self):
        """Test the default configuration."""
        config = ExperimentConfig()
        assert config.grid.n_r == 2048
        assert config.grid.n_modes == 1
        assert config.evolve.dt == pytest.approx(1e-3)
        assert config.groundstate.seed == "gaussian"
        assert config.rng_seed == 20240607

    def test_even_modes(self):
        """Test that an even angular mode count is rejected."""
        with pytest.raises(ValidationError):
            GridSection(n_modes=2)

    def test_floor_above_dt(self):
        """Test that dt_floor must lie below dt."""
        with pytest.raises(ValidationError) as exc_info:
            EvolveSection(dt=1e-3, dt_floor=1e-2)
        assert "dt_floor" in str(exc_info.value)

    def test_unknown_section(self):
        """Test that unknown sections are rejected."""
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate({"plotting": {"dpi": 300}})


class TestConfigLoading:
    """Test key-value files, overrides and output resolution."""

    def test_fold_dotted(self):
        """Test folding of dotted keys and value coercion."""
        nested = fold_dotted({"params.alpha": "0.25", "evolve.adapt": "false", "evolve.snapshot_times": "0.1, 0.2"})
        assert nested == {"params": {"alpha": "0.25"}, "evolve": {"adapt": False, "snapshot_times": ["0.1", "0.2"]}}

    def test_fold_collision(self):
        """Test that a key colliding with a scalar is rejected."""
        with pytest.raises(ConfigError, match="collides"):
            fold_dotted({"grid": "1", "grid.n_r": "512"})

    def test_malformed_override(self):
        """Test that overrides need an equals sign."""
        with pytest.raises(ConfigError, match="section.key=value"):
            parse_overrides(["grid.n_r"])

    def test_file_and_overrides(self, tmp_path):
        """Test that overrides win over the file."""
        path = tmp_path / "experiment.env"
        path.write_text("params.alpha=0.25\ngrid.n_r=512\nevolve.snapshot_times=0.1,0.2\n")
        config = load_experiment_config(path, ["grid.n_r=1024", "params.kappa=1"])
        assert config.params.alpha == pytest.approx(0.25)
        assert config.params.kappa == 1
        assert config.grid.n_r == 1024
        assert config.evolve.snapshot_times == [0.1, 0.2]

    def test_missing_file(self, tmp_path):
        """Test that a missing configuration file is an I/O error."""
        with pytest.raises(StorageError, match="not found"):
            load_experiment_config(tmp_path / "missing.env")

    def test_invalid_value(self):
        """Test that a validation failure becomes a ConfigError."""
        with pytest.raises(ConfigError):
            load_experiment_config(None, ["params.rho=3"])

    def test_unknown_key(self):
        """Test that unknown sections surface as ConfigError."""
        with pytest.raises(ConfigError):
            load_experiment_config(None, ["plotting.dpi=300"])

    def test_output_precedence(self, tmp_path, monkeypatch):
        """Test CLI flag over environment over config."""
        config = ExperimentConfig()
        monkeypatch.delenv("ABLAB_OUTPUT_DIR", raising=False)
        assert resolve_output_dir(config) == Path("results")
        monkeypatch.setenv("ABLAB_OUTPUT_DIR", str(tmp_path / "env"))
        assert resolve_output_dir(config) == tmp_path / "env"
        assert resolve_output_dir(config, str(tmp_path / "cli")) == tmp_path / "cli"

    def test_settings_from_environment(self, monkeypatch):
        """Test that worker count and log level come from ABLAB_ variables."""
        monkeypatch.setenv("ABLAB_WORKERS", "3")
        monkeypatch.setenv("ABLAB_LOG_LEVEL", "DEBUG")
        settings = LabSettings()
        assert settings.workers == 3
        assert settings.log_level == "DEBUG"
