"""
Projected SOR reference solver for the deterministic obstacle problem.

Each implicit time step is the linear complementarity problem

    u >= v,  A u - rhs >= 0,  (u - v) . (A u - rhs) = 0,
    A = I - dt/2 Laplacian_h,  rhs = u_{k+1} + dt f(t_{k+1}, u_{k+1}, grad u_{k+1}),

solved by projected SOR sweeps over the interior nodes.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from ..config import DevelopmentConfig
from ..exceptions import DomainError, PsorConvergenceError
from ..models.grid import SpaceTimeGrid
from ..models.problem import ObstacleProblem

logger = logging.getLogger(__name__)


def optimal_omega(grid: SpaceTimeGrid, dt: Optional[float] = None) -> float:
    """SOR relaxation 2 / (1 + sqrt(1 - rho_J^2)) from the Jacobi spectral radius of A."""
    dt = grid.dt if dt is None else dt
    couplings = [dt / (2.0 * h ** 2) for h in grid.dx]
    diagonal = 1.0 + 2.0 * sum(couplings)
    rho = sum(2.0 * c * math.cos(math.pi / (grid.nx - 1)) for c in couplings) / diagonal
    return 2.0 / (1.0 + math.sqrt(1.0 - rho ** 2))


def _neighbours(grid: SpaceTimeGrid, dt: float):
    strides = np.cumprod((1,) + grid.shape[::-1])[:-1][::-1]
    pairs = []
    for axis in range(grid.dim):
        c = dt / (2.0 * grid.dx[axis] ** 2)
        pairs.append((int(strides[axis]), c))
        pairs.append((-int(strides[axis]), c))
    return pairs


def psor_step(rhs: np.ndarray, v: np.ndarray, grid: SpaceTimeGrid, initial: np.ndarray,
              omega: float, tol: float, max_iter: int, step: int = -1) -> Tuple[np.ndarray, List[float]]:
    """
    Solve one complementarity problem by projected SOR.

    Args:
        rhs: Right-hand side on the spatial nodes
        v: Obstacle on the spatial nodes
        grid: SpaceTimeGrid
        initial: Starting iterate
        omega: Relaxation factor in (0, 2)
        tol: Stop when the largest update falls below this value
        max_iter: Sweep cap
        step: Time index, for error reports

    Returns:
        Tuple (solution, history of largest updates)
    """
    dt = grid.dt
    pairs = _neighbours(grid, dt)
    diagonal = 1.0 + sum(c for _, c in pairs)

    u = np.where(grid.interior_mask, np.maximum(initial, v), 0.0).ravel().tolist()
    b = np.asarray(rhs, dtype=float).ravel().tolist()
    lower = np.asarray(v, dtype=float).ravel().tolist()
    nodes = np.flatnonzero(grid.interior_mask.ravel()).tolist()

    history = []
    for _ in range(max_iter):
        largest = 0.0
        for i in nodes:
            s = b[i]
            for offset, c in pairs:
                s += c * u[i + offset]
            old = u[i]
            new = old + omega * (s / diagonal - old)
            if new < lower[i]:
                new = lower[i]
            change = abs(new - old)
            if change > largest:
                largest = change
            u[i] = new
        history.append(largest)
        if largest < tol:
            return np.array(u).reshape(grid.shape), history

    raise PsorConvergenceError(step, history)


def lcp_defects(u: np.ndarray, rhs: np.ndarray, v: np.ndarray, grid: SpaceTimeGrid) -> Tuple[float, float]:
    """
    Residual diagnostics of one step on the interior nodes.

    Returns:
        Tuple (min of A u - rhs, max |(u - v)(A u - rhs)|)
    """
    dt = grid.dt
    laplacian = np.zeros(grid.shape)
    for axis in range(grid.dim):
        h2 = grid.dx[axis] ** 2
        laplacian += (np.roll(u, 1, axis) - 2.0 * u + np.roll(u, -1, axis)) / h2
    residual = u - 0.5 * dt * laplacian - rhs
    interior = grid.interior_mask
    return (float(np.min(residual[interior])),
            float(np.max(np.abs((u - v) * residual)[interior])))


def psor_oracle(problem: ObstacleProblem, settings=None) -> np.ndarray:
    """
    Reference solution of the deterministic obstacle problem.

    Args:
        problem: ObstacleProblem with g = 0 and h = 0
        settings: Settings class supplying PSOR_OMEGA, PSOR_TOL, PSOR_MAX_ITER

    Returns:
        Space-time field of shape (nt + 1, *grid.shape)
    """
    coeffs = problem.coeffs
    if not (coeffs.g.is_zero and coeffs.h.is_zero):
        raise DomainError('the PSOR oracle needs g = 0 and h = 0')

    settings = settings if settings is not None else DevelopmentConfig
    grid = problem.grid
    omega = settings.PSOR_OMEGA or optimal_omega(grid)
    tol, max_iter = settings.PSOR_TOL, settings.PSOR_MAX_ITER
    logger.info(f'PSOR oracle: omega={omega:.6f} tol={tol:.1e} max_iter={max_iter}')

    u = np.empty(grid.field_shape)
    u[-1] = problem.phi
    total_sweeps = 0
    for k in range(grid.nt - 1, -1, -1):
        rhs = u[k + 1].copy()
        if not coeffs.f.is_zero:
            t_next = grid.times[k + 1]
            rhs += grid.dt * coeffs.f(t_next, grid.coordinates, u[k + 1], grid.gradient(u[k + 1]))
        u[k], history = psor_step(rhs, problem.v[k], grid, u[k + 1], omega, tol, max_iter, step=k)
        total_sweeps += len(history)
        if logger.isEnabledFor(logging.DEBUG):
            min_residual, complementarity = lcp_defects(u[k], rhs, problem.v[k], grid)
            logger.debug(f'PSOR step {k}: {len(history)} sweeps, min residual {min_residual:.2e}, '
                         f'complementarity {complementarity:.2e}')

    logger.info(f'PSOR oracle finished after {total_sweeps} sweeps')
    return u
