"""Unit tests for the polar grid, fields and quadrature."""
import math

import numpy as np
import pytest

from app.exceptions import ConfigError, GridMismatchError
from app.models.grid import (
    Field,
    analyze,
    integrate,
    make_grid,
    synthesize,
    transfer_profile,
)
from app.utils.initial_data import random_field


class TestMakeGrid:
    """Test grid construction and validation."""

    def test_staggered_nodes(self):
        """Test that nodes sit at cell midpoints and faces at cell edges."""
        grid = make_grid(8, 4.0, 1)
        assert grid.h == pytest.approx(0.5)
        assert grid.nodes[0] == pytest.approx(0.25)
        assert grid.nodes[-1] == pytest.approx(3.75)
        assert grid.faces[-1] == pytest.approx(4.0)

    def test_weights(self):
        """Test that quadrature weights are 2 pi r h."""
        grid = make_grid(16, 2.0, 3)
        np.testing.assert_allclose(grid.weights, 2.0 * math.pi * grid.nodes * grid.h)

    def test_modes_in_fft_order(self):
        """Test the column order of angular modes."""
        grid = make_grid(8, 1.0, 5)
        assert grid.modes.tolist() == [0, 1, 2, -2, -1]
        assert grid.mode_index(-1) == 4

    def test_even_modes_rejected(self):
        """Test that an even angular mode count is rejected."""
        with pytest.raises(ConfigError, match="odd"):
            make_grid(64, 10.0, 4)

    def test_too_few_nodes_rejected(self):
        """Test that fewer than eight radial nodes are rejected."""
        with pytest.raises(ConfigError, match="n_r"):
            make_grid(4, 10.0, 1)

    def test_nonpositive_radius_rejected(self):
        """Test that r_max must be positive."""
        with pytest.raises(ConfigError, match="r_max"):
            make_grid(64, 0.0, 1)

    def test_mode_outside_range(self):
        """Test that unresolved modes raise GridMismatchError."""
        grid = make_grid(16, 1.0, 3)
        with pytest.raises(GridMismatchError):
            grid.mode_index(2)

    def test_dilated(self):
        """Test that dilation keeps the node count and shrinks the radius."""
        grid = make_grid(64, 10.0, 3)
        dilated = grid.dilated(2.0)
        assert dilated.n_r == 64
        assert dilated.r_max == pytest.approx(5.0)
        with pytest.raises(ConfigError):
            grid.dilated(0.0)

    def test_require_same(self):
        """Test grid identity checks."""
        grid = make_grid(64, 10.0, 3)
        grid.require_same(make_grid(64, 10.0, 3))
        with pytest.raises(GridMismatchError):
            grid.require_same(make_grid(64, 10.0, 5))


class TestIntegrate:
    """Test the midpoint-trapezoid quadrature."""

    def test_constant(self):
        """Test that the disk area is exact."""
        grid = make_grid(256, 10.0, 1)
        assert integrate(np.ones(grid.n_r), grid) == pytest.approx(math.pi * 100.0, rel=1e-10)

    def test_gaussian(self):
        """Test int exp(-r^2) = pi."""
        grid = make_grid(1024, 16.0, 1)
        u = Field.radial(grid, np.exp(-grid.nodes**2 / 2.0))
        assert integrate(u.density, grid) == pytest.approx(math.pi, rel=1e-4)

    def test_vanishing_at_origin(self):
        """Test int r^2 exp(-r^2) = pi to high accuracy."""
        grid = make_grid(1024, 16.0, 1)
        u = Field.radial(grid, grid.nodes * np.exp(-grid.nodes**2 / 2.0))
        assert integrate(u.density, grid) == pytest.approx(math.pi, rel=1e-8)

    @pytest.mark.parametrize("power", [1, 2])
    def test_second_order(self, power):
        """Test that halving h divides the error of r^k by four."""
        errors = []
        for n_r in (64, 128):
            grid = make_grid(n_r, 2.0, 1)
            exact = 2.0 * math.pi * 2.0 ** (power + 2) / (power + 2)
            errors.append(abs(integrate(grid.nodes**power, grid) - exact))
        order = math.log2(errors[0] / errors[1])
        assert 1.8 <= order <= 2.2

    def test_zero_field(self):
        """Test that the zero field integrates to zero."""
        grid = make_grid(64, 4.0, 3)
        assert integrate(Field.zeros(grid).density, grid) == 0.0

    def test_shape_mismatch(self):
        """Test that foreign sample shapes are rejected."""
        grid = make_grid(64, 4.0, 3)
        with pytest.raises(GridMismatchError):
            integrate(np.ones((64, 5)), grid)


class TestField:
    """Test field construction."""

    def test_non_finite_rejected(self):
        """Test that NaN samples are rejected."""
        grid = make_grid(16, 1.0, 1)
        values = np.ones(16)
        values[3] = np.nan
        with pytest.raises(ConfigError, match="finite"):
            Field(grid, values)

    def test_shape_mismatch(self):
        """Test that a field must cover the grid."""
        grid = make_grid(16, 1.0, 3)
        with pytest.raises(GridMismatchError):
            Field(grid, np.ones((16, 5)))

    def test_read_only(self):
        """Test that field values cannot be modified in place."""
        grid = make_grid(16, 1.0, 3)
        u = Field.zeros(grid)
        with pytest.raises(ValueError):
            u.values[0, 0] = 1.0

    def test_one_dimensional_radial(self):
        """Test that a single-mode grid accepts radial vectors."""
        grid = make_grid(16, 1.0, 1)
        assert Field(grid, np.ones(16)).values.shape == (16, 1)


class TestAnalyzeSynthesize:
    """Test the angular Fourier transform."""

    def test_radial_field_is_mode_zero(self):
        """Test that a radial field lives in mode 0 only."""
        grid = make_grid(32, 4.0, 5)
        profile = np.exp(-grid.nodes**2)
        stack = analyze(Field.radial(grid, profile))
        np.testing.assert_allclose(stack.mode(0), profile, atol=1e-15)
        for m in (-2, -1, 1, 2):
            np.testing.assert_allclose(stack.mode(m), 0.0, atol=1e-15)

    def test_single_mode(self):
        """Test that g(r) e^{i theta} lives in mode 1 only."""
        grid = make_grid(32, 4.0, 5)
        profile = grid.nodes * np.exp(-grid.nodes**2)
        stack = analyze(Field.radial(grid, profile, mode=1))
        np.testing.assert_allclose(stack.mode(1), profile, atol=1e-15)
        np.testing.assert_allclose(stack.mode(-1), 0.0, atol=1e-15)

    def test_roundtrip(self, battery_grid, rng):
        """Test that synthesize inverts analyze."""
        u = random_field(battery_grid, rng)
        back = synthesize(analyze(u))
        np.testing.assert_allclose(back.values, u.values, rtol=0.0, atol=1e-12 * np.max(np.abs(u.values)))

    def test_parseval(self, battery_grid, rng):
        """Test that mass is the same in physical and mode space."""
        u = random_field(battery_grid, rng)
        direct = integrate(u.density, battery_grid)
        modal = integrate(np.abs(analyze(u).coeffs) ** 2, battery_grid, mode_space=True)
        assert modal == pytest.approx(direct, rel=1e-12)


class TestTransferProfile:
    """Test profile resampling between grids."""

    def test_smooth_profile(self):
        """Test that a smooth profile survives resampling."""
        source = make_grid(512, 10.0, 1)
        target = make_grid(700, 8.0, 1)
        moved = transfer_profile(np.exp(-source.nodes**2), source, target)
        np.testing.assert_allclose(moved, np.exp(-target.nodes**2), atol=1e-6)

    def test_zero_beyond_source(self):
        """Test that nodes beyond the source radius receive zero."""
        source = make_grid(64, 4.0, 1)
        target = make_grid(64, 8.0, 1)
        moved = transfer_profile(np.ones(64), source, target)
        assert np.all(moved[target.nodes >= 4.0] == 0.0)
