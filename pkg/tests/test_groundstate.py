"""Tests for the Weinstein descent, the Pohozaev rescale and the sharp constant."""
import numpy as np
import pytest

from app.exceptions import ConfigError, ConvergenceError
from app.models.grid import make_grid
from app.schemas.params import PhysParams
from app.utils.functionals import energy, mass, virial_quantity
from app.utils.groundstate import (
    GroundState,
    compute_ground_state,
    el_residual,
    is_nonincreasing_after_peak,
    minimize_weinstein,
    near_origin_exponent,
    pohozaev_residuals,
    probe_symmetry_breaking,
    rescale_factors,
    sector_mode,
    seed_profile,
    sharp_constant,
)


class TestSectorMode:
    """Test the choice of angular sector."""

    @pytest.mark.parametrize("alpha,mode", [(0.5, 0), (0.3, 0), (-0.4, 0), (1.2, -1), (-1.7, 2)])
    def test_minimizing_sector(self, alpha, mode):
        """Test that |m + alpha| = dist(alpha, Z) in the chosen sector."""
        params = PhysParams(alpha=alpha)
        assert sector_mode(params) == mode
        assert abs(mode + alpha) == pytest.approx(params.dist_alpha)


class TestSeedProfile:
    """Test the descent seeds."""

    @pytest.mark.parametrize("kind", ["gaussian", "plateau"])
    def test_positive(self, params, kind):
        """Test that seeds are strictly positive."""
        grid = make_grid(128, 10.0, 1)
        assert np.all(seed_profile(kind, params, grid) > 0.0)

    def test_unknown_kind(self, params):
        """Test that unknown seeds are rejected."""
        with pytest.raises(ConfigError, match="seed"):
            seed_profile("triangle", params, make_grid(128, 10.0, 1))


class TestMinimizeWeinstein:
    """Test the fixed-frequency Weinstein iteration."""

    def test_monotone_history(self, params):
        """Test that J never increases along the iteration."""
        grid = make_grid(512, 16.0, 1)
        result = minimize_weinstein(params, grid, seed_profile("gaussian", params, grid))
        assert np.all(np.diff(result.history) <= 0.0)
        assert result.iterations >= 1

    def test_converges_at_default_parameters(self, params):
        """Test that the iteration stops with a small fixed-point residual."""
        grid = make_grid(512, 16.0, 1)
        result = minimize_weinstein(params, grid, seed_profile("gaussian", params, grid))
        assert result.residual <= 1e-4
        assert np.all(result.profile > 0.0)
        assert result.history[-1] < result.history[0]

    def test_unit_mass_and_gradient(self, params):
        """Test that the minimizer comes back with M = G = 1 on its dilated grid."""
        grid = make_grid(512, 16.0, 1)
        result = minimize_weinstein(params, grid, seed_profile("gaussian", params, grid))
        normalized = GroundState.from_profile(params, result.grid, result.profile)
        assert normalized.mass == pytest.approx(1.0, rel=1e-12)
        assert normalized.grad_alpha_sq == pytest.approx(1.0, rel=1e-12)
        assert result.grid.n_r == grid.n_r

    def test_profile_does_not_concentrate(self, params):
        """Test that the peak stays away from the first radial nodes."""
        grid = make_grid(1024, 16.0, 1)
        result = minimize_weinstein(params, grid, seed_profile("plateau", params, grid))
        assert int(np.argmax(result.profile)) > 10

    def test_iteration_limit(self, params):
        """Test that an exhausted iteration budget is a convergence failure."""
        grid = make_grid(256, 16.0, 1)
        with pytest.raises(ConvergenceError, match="did not converge"):
            minimize_weinstein(params, grid, seed_profile("gaussian", params, grid), max_iters=1)

    def test_outside_regime_needs_validation(self):
        """Test that rho = 0 is refused without validation mode."""
        params = PhysParams(alpha=0.0, rho=0.0, p=3.0)
        grid = make_grid(128, 10.0, 1)
        with pytest.raises(ConfigError, match="validation"):
            minimize_weinstein(params, grid, seed_profile("gaussian", params, grid))

    def test_bad_seed(self, params):
        """Test that a seed with a zero is rejected."""
        grid = make_grid(128, 10.0, 1)
        seed = seed_profile("gaussian", params, grid)
        seed[5] = 0.0
        with pytest.raises(ConfigError, match="positive"):
            minimize_weinstein(params, grid, seed)


class TestGroundState:
    """Test the rescaled ground state on the desk-scale grid."""

    def test_pohozaev_identities(self, ground_state):
        """Test both Pohozaev residuals."""
        r1, r2 = pohozaev_residuals(ground_state)
        assert r1 <= 1e-5
        assert r2 <= 1e-5

    def test_euler_lagrange(self, ground_state):
        """Test that phi solves the elliptic equation on its grid."""
        assert el_residual(ground_state) <= 1e-4

    def test_sharp_constant(self, ground_state):
        """Test K_opt J(phi) = 1."""
        assert sharp_constant(ground_state) * ground_state.weinstein_value == pytest.approx(1.0, abs=1e-4)

    def test_virial_quantity_vanishes(self, params, ground_state):
        """Test Q[phi] = 0."""
        q = virial_quantity(ground_state.field(), params, ground_state.grid)
        assert abs(q) <= 1e-8 * ground_state.grad_alpha_sq

    def test_energy(self, params, ground_state):
        """Test E[phi] = (B - 2)/B ||nabla_alpha phi||^2."""
        expected = (params.big_b - 2.0) / params.big_b * ground_state.grad_alpha_sq
        assert energy(ground_state.field(), params, ground_state.grid) == pytest.approx(expected, rel=1e-10)
        assert ground_state.energy == pytest.approx(expected, rel=1e-10)

    def test_cached_mass(self, ground_state):
        """Test that the cached mass matches the field."""
        assert ground_state.mass == pytest.approx(mass(ground_state.field(), ground_state.grid), rel=1e-12)

    def test_shape(self, ground_state):
        """Test positivity and monotone decay after the peak."""
        assert np.all(ground_state.profile > 0.0)
        assert is_nonincreasing_after_peak(ground_state.profile)

    def test_near_origin_exponent(self, params, ground_state):
        """Test that phi behaves like r^{dist(alpha, Z)} at the origin."""
        exponent = near_origin_exponent(ground_state)
        assert exponent == pytest.approx(params.dist_alpha, rel=0.2)

    def test_rescale_is_idempotent(self, params, ground_state):
        """Test that phi needs no further rescaling."""
        lam, mu = rescale_factors(params, ground_state.mass, ground_state.grad_alpha_sq, ground_state.potential)
        assert lam == pytest.approx(1.0, rel=1e-8)
        assert mu == pytest.approx(1.0, rel=1e-8)

    def test_unscaled_profile_fails_gate(self, params, ground_state):
        """Test that 1.1 phi violates the first Pohozaev identity."""
        perturbed = GroundState.from_profile(params, ground_state.grid, 1.1 * ground_state.profile)
        r1, _ = pohozaev_residuals(perturbed)
        assert r1 > 1e-3

    def test_transfer_to_finer_grid(self, ground_state):
        """Test that resampling phi keeps its mass."""
        grid = make_grid(4096, ground_state.grid.r_max, 1)
        moved = ground_state.on_grid(grid)
        assert mass(moved, grid) == pytest.approx(ground_state.mass, rel=1e-3)

    def test_summary(self, ground_state):
        """Test the JSON sidecar contents."""
        summary = ground_state.summary()
        assert summary.n_r == 2048
        assert summary.mass == ground_state.mass
        assert summary.euler_lagrange_residual <= 1e-4


class TestSymmetryBreakingProbe:
    """Test the non-radial perturbation probe."""

    def test_report(self, ground_state):
        """Test that the probe evaluates J along the perturbation family."""
        grid = make_grid(1024, ground_state.grid.r_max, 3)
        report = probe_symmetry_breaking(ground_state, grid)
        assert report.name == "symmetry_breaking"
        assert report.evidence["j_by_amplitude"]["0"] == pytest.approx(report.evidence["reference_j"])
        assert report.evidence["reference_j"] == pytest.approx(ground_state.weinstein_value, rel=1e-3)

    def test_needs_angular_modes(self, ground_state):
        """Test that a single-mode grid cannot host the probe."""
        with pytest.raises(ConfigError, match="three angular modes"):
            probe_symmetry_breaking(ground_state, make_grid(256, 10.0, 1))


@pytest.mark.slow
class TestConvergence:
    """Desk-scale convergence and validation runs."""

    def test_seeds_agree(self, params, ground_state):
        """Test that the plateau seed reaches the same minimal J."""
        other = compute_ground_state(params, make_grid(2048, 16.0, 1), seed="plateau")
        assert other.weinstein_value == pytest.approx(ground_state.weinstein_value, rel=1e-4)
        assert other.mass == pytest.approx(ground_state.mass, rel=1e-3)

    def test_grid_refinement(self, params, ground_state):
        """Test that K_opt is stable under grid refinement."""
        coarse = compute_ground_state(params, make_grid(1024, 16.0, 1))
        assert coarse.k_opt == pytest.approx(ground_state.k_opt, rel=1e-3)

    def test_pohozaev_at_moderate_resolution(self, params):
        """Test that a 1024-node solve already passes the Pohozaev gate."""
        gs = compute_ground_state(params, make_grid(1024, 16.0, 1))
        assert max(pohozaev_residuals(gs)) <= 1e-5
        assert el_residual(gs) <= 1e-3

    def test_townes_mass(self):
        """Test the Townes soliton mass 11.7009 for alpha = rho = 0, p = 3."""
        params = PhysParams(alpha=0.0, rho=0.0, p=3.0)
        gs = compute_ground_state(params, make_grid(1024, 20.0, 1), validation=True)
        assert gs.mass == pytest.approx(11.7009, rel=1e-2)
