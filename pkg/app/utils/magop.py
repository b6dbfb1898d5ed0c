"""Aharonov-Bohm operator K_alpha in per-angular-mode radial form."""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from app.exceptions import ConvergenceError, GridMismatchError
from app.models.grid import Field, ModeStack, PolarGrid, analyze
from app.schemas.params import PhysParams

logger = logging.getLogger(__name__)


def face_coefficients(grid: PolarGrid) -> np.ndarray:
    """2 pi r_{j+1/2} / h per outer face; the Dirichlet face at r_max counts twice."""
    coeff = 2.0 * math.pi * grid.faces / grid.h
    coeff[-1] *= 2.0
    return coeff


def centrifugal_coefficients(grid: PolarGrid, nu) -> np.ndarray:
    """
    Diagonal centrifugal weights c_j that make each stiffness row exact on r^nu.

    c_j = F_j ((r_{j+1}/r_j)^nu - 1) - F_{j-1} (1 - (r_{j-1}/r_j)^nu) with the interior
    face coefficients F and F_{-1} = 0, so S annihilates the samples of r^nu away from
    the wall. Far from the origin c_j = nu^2 w_j / r_j^2 + O(h^2 / r_j^2).

    Args:
        grid: Polar grid
        nu: Scalar order or an array of orders

    Returns:
        Shape (n_r,) for a scalar nu, (n_r, len(nu)) for an array
    """
    orders = np.abs(np.atleast_1d(np.asarray(nu, dtype=float)))
    r = grid.nodes
    outer = 2.0 * math.pi * grid.faces / grid.h
    inner = np.concatenate(([0.0], outer[:-1]))
    rise = np.expm1(np.multiply.outer(np.log1p(grid.h / r), orders))
    fall = np.zeros_like(rise)
    fall[1:] = -np.expm1(np.multiply.outer(np.log1p(-grid.h / r[1:]), orders))
    coeff = outer[:, None] * rise - inner[:, None] * fall
    return coeff[:, 0] if np.ndim(nu) == 0 else coeff


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """
    Stiffness S of L_{m,alpha} = -(1/r)(r g')' + nu^2 g / r^2 with nu = |m + alpha|.

    S is symmetric tridiagonal and L = W^{-1} S with W the quadrature weights,
    so L is self-adjoint in the weighted inner product. The centrifugal diagonal
    is exact on r^nu, which keeps the innermost cells consistent with the
    regular branch of every mode.
    """
    m: int
    nu: float
    diag: np.ndarray
    offdiag: np.ndarray
    weights: np.ndarray

    def stiffness_apply(self, g: np.ndarray) -> np.ndarray:
        out = self.diag * g
        out[:-1] += self.offdiag * g[1:]
        out[1:] += self.offdiag * g[:-1]
        return out

    def apply(self, g: np.ndarray) -> np.ndarray:
        return self.stiffness_apply(g) / self.weights

    def symmetric_bands(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of W^{-1/2} S W^{-1/2}."""
        root = np.sqrt(self.weights)
        return self.diag / self.weights, self.offdiag / (root[:-1] * root[1:])


def stiffness_bands(grid: PolarGrid, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Stiffness bands for every mode at once.

    Returns:
        (diag, offdiag): diag has shape (n_r, n_modes) in FFT column order,
        offdiag has shape (n_r - 1,) and is shared by all modes
    """
    face = face_coefficients(grid)
    inner = np.concatenate(([0.0], face[:-1]))
    centrifugal = centrifugal_coefficients(grid, np.abs(grid.modes + alpha))
    diag = (face + inner)[:, None] + centrifugal
    return diag, -face[:-1]


def mode_operator(m: int, params: PhysParams, grid: PolarGrid) -> ModeOperator:
    """Build the radial stencil of mode m for flux params.alpha."""
    nu = abs(m + params.alpha)
    face = face_coefficients(grid)
    inner = np.concatenate(([0.0], face[:-1]))
    diag = face + inner + centrifugal_coefficients(grid, np.array([nu]))[:, 0]
    return ModeOperator(m=m, nu=nu, diag=diag, offdiag=-face[:-1], weights=grid.weights)


def apply_mode_operator(g: np.ndarray, m: int, params: PhysParams, grid: PolarGrid) -> np.ndarray:
    """
    Apply L_{m,alpha} to a radial vector.

    Args:
        g: Complex radial vector of length n_r
        m: Angular mode number
        params: Physical parameters (only alpha is used)
        grid: Polar grid

    Returns:
        The finite-difference image L_{m,alpha} g

    Raises:
        GridMismatchError: If g has the wrong length
    """
    g = np.asarray(g)
    if g.shape != (grid.n_r,):
        raise GridMismatchError(f"Radial vector of shape {g.shape} does not fit n_r={grid.n_r}")
    return mode_operator(m, params, grid).apply(g.astype(complex))


def _modes_of(u: Field | ModeStack) -> ModeStack:
    return analyze(u) if isinstance(u, Field) else u


def quadratic_form(u: Field | ModeStack, alpha: float) -> float:
    """sum_m g_m^H S_m g_m, written as a sum of squares."""
    stack = _modes_of(u)
    grid = stack.grid
    g = stack.coeffs
    face = face_coefficients(grid)
    jumps = np.sum(face[:-1, None] * np.abs(np.diff(g, axis=0)) ** 2)
    wall = np.sum(face[-1] * np.abs(g[-1]) ** 2)
    centrifugal = np.sum(centrifugal_coefficients(grid, np.abs(grid.modes + alpha)) * np.abs(g) ** 2)
    return float(jumps + wall + centrifugal)


def grad_alpha_sq(u: Field | ModeStack, params: PhysParams, grid: PolarGrid) -> float:
    """
    Magnetic gradient norm squared, the discrete form of ||nabla_alpha u||^2.

    Args:
        u: Field or its mode stack
        params: Physical parameters (alpha)
        grid: Grid u lives on

    Returns:
        Nonnegative real
    """
    grid.require_same(u.grid)
    return quadratic_form(u, params.alpha)


def grad_sq(u: Field | ModeStack, grid: PolarGrid) -> float:
    """Non-magnetic gradient norm squared ||nabla u||^2."""
    grid.require_same(u.grid)
    return quadratic_form(u, 0.0)


def inverse_square_integral(u: Field | ModeStack, grid: PolarGrid) -> float:
    """Integral of |u|^2 / |x|^2."""
    stack = _modes_of(u)
    return float(np.dot(grid.weights / grid.nodes**2, np.sum(np.abs(stack.coeffs) ** 2, axis=1)))


def hardy_check(u: Field | ModeStack, params: PhysParams, grid: PolarGrid) -> tuple[float, float]:
    """
    Both sides of the Hardy inequality.

    Returns:
        (lhs, rhs) with lhs = dist(alpha, Z)^2 * int |u|^2/|x|^2 and rhs = ||nabla_alpha u||^2
    """
    grid.require_same(u.grid)
    lhs = params.dist_alpha**2 * inverse_square_integral(u, grid)
    return lhs, grad_alpha_sq(u, params, grid)


def smallest_eigenvalue(
    m: int,
    params: PhysParams,
    grid: PolarGrid,
    tol: float = 1e-10,
    max_iters: int = 500,
) -> float:
    """
    Smallest eigenvalue of L_{m,alpha} by inverse iteration.

    Args:
        m: Angular mode number
        params: Physical parameters (alpha)
        grid: Polar grid
        tol: Relative change in the Rayleigh quotient at which to stop
        max_iters: Iteration limit

    Returns:
        The smallest eigenvalue (positive)

    Raises:
        ConvergenceError: If the Rayleigh quotient does not settle
    """
    op = mode_operator(m, params, grid)
    diag, off = op.symmetric_bands()
    banded = np.zeros((2, grid.n_r))
    banded[0, 1:] = off
    banded[1] = diag

    x = np.ones(grid.n_r) / math.sqrt(grid.n_r)
    value = math.inf
    for iteration in range(1, max_iters + 1):
        y = solveh_banded(banded, x)
        x = y / np.linalg.norm(y)
        tx = diag * x
        tx[:-1] += off * x[1:]
        tx[1:] += off * x[:-1]
        updated = float(np.dot(x, tx))
        if abs(updated - value) <= tol * abs(updated):
            logger.debug("Inverse iteration for m=%d converged in %d steps", m, iteration)
            return updated
        value = updated
    raise ConvergenceError(f"Inverse iteration for mode {m} did not converge in {max_iters} iterations")
