"""
Backward time stepping for the penalized equation, penalization sweeps and
measure extraction.

One step from t_{k+1} to t_k solves

    (I - dt/2 Laplacian_h + dt n 1_active) u_k
        = u_{k+1} + dt (f + div_h g) + h . dB_k + dt n v_k 1_active

with f, g, h frozen at (t_{k+1}, u_{k+1}, grad u_{k+1}) and zero Dirichlet
data. The active set {u_k < v_k} starts from the unpenalized solve and is
updated until it stops changing.
"""

import logging
from types import SimpleNamespace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import DevelopmentConfig
from ..exceptions import DomainError, HypothesisViolation, NumericalError
from ..models.grid import DiscreteNorms, SpaceTimeGrid
from ..models.paths import BackwardNoisePath
from ..models.problem import ObstacleProblem
from ..models.solution import DiscreteRegularMeasure, PenalizedSolution, SweepReport
from ..utils.parallel import map_blocks
from .kernel import HeatStepper, heat_stepper
from .noise import zero_noise

logger = logging.getLogger(__name__)


def _setting(settings, name: str):
    return getattr(settings if settings is not None else DevelopmentConfig, name)


def _check_noise(problem: ObstacleProblem, noise: Optional[BackwardNoisePath]) -> BackwardNoisePath:
    grid = problem.grid
    if noise is None:
        if not problem.is_deterministic:
            raise DomainError('a stochastic problem needs a backward noise path')
        return zero_noise(grid.nt, problem.coeffs.d1, grid.dt)
    if noise.increments.shape != (grid.nt, problem.coeffs.d1):
        raise DomainError(
            f'noise increments {noise.increments.shape} do not match (nt, d1) = '
            f'({grid.nt}, {problem.coeffs.d1})'
        )
    if abs(noise.dt - grid.dt) > 1e-12 * grid.dt:
        raise DomainError(f'noise dt {noise.dt} differs from grid dt {grid.dt}')
    return noise


def explicit_terms(problem: ObstacleProblem, k: int, u_next: np.ndarray,
                   noise: BackwardNoisePath) -> np.ndarray:
    """dt (f + div_h g) + h . dB_k evaluated at (t_{k+1}, u_{k+1}, grad u_{k+1})."""
    grid, coeffs = problem.grid, problem.coeffs
    t_next = grid.times[k + 1]
    x = grid.coordinates
    grad_next = grid.gradient(u_next)
    out = np.zeros(grid.shape)
    if not coeffs.f.is_zero:
        out += grid.dt * coeffs.f(t_next, x, u_next, grad_next)
    if not coeffs.g.is_zero:
        out += grid.dt * grid.divergence(coeffs.g(t_next, x, u_next, grad_next))
    if not coeffs.h.is_zero:
        out += np.tensordot(noise.increments[k], coeffs.h(t_next, x, u_next, grad_next), axes=(0, 0))
    return out


def step_backward(u_next: np.ndarray, k: int, n: float, problem: ObstacleProblem,
                  noise: Optional[BackwardNoisePath], stepper: Optional[HeatStepper] = None,
                  max_passes: Optional[int] = None) -> np.ndarray:
    """
    One backward step of the penalized scheme.

    Args:
        u_next: Field at t_{k+1}
        k: Time index in [0, nt - 1]
        n: Penalization level (0 disables the penalty)
        problem: ObstacleProblem
        noise: Backward noise path (None for deterministic problems)
        stepper: Implicit solver for step dt, built when omitted
        max_passes: Cap on active-set passes

    Returns:
        Field at t_k
    """
    grid = problem.grid
    if not 0 <= k < grid.nt:
        raise DomainError(f'step index {k} outside [0, {grid.nt - 1}]')
    if n < 0:
        raise DomainError(f'penalization level must be >= 0, got {n}')
    noise = _check_noise(problem, noise)
    stepper = stepper or heat_stepper(grid, grid.dt)
    max_passes = max_passes or _setting(None, 'ACTIVE_SET_MAX_PASSES')

    u, _ = _step(np.asarray(u_next, dtype=float), k, n, problem, noise, stepper, max_passes)
    return u


def _step(u_next, k, n, problem, noise, stepper, max_passes) -> Tuple[np.ndarray, int]:
    grid = problem.grid
    rhs = u_next + explicit_terms(problem, k, u_next, noise)
    u = stepper.solve(rhs)
    passes = 0
    if n > 0 and problem.has_obstacle:
        v_k = problem.v[k]
        interior = grid.interior_mask
        active = np.zeros(grid.shape, dtype=bool)
        for passes in range(1, max_passes + 1):
            updated = (u < v_k) & interior
            if np.array_equal(updated, active):
                break
            active = updated
            penalty = grid.dt * n * active
            u = stepper.solve(rhs + penalty * v_k, reaction=penalty)
        else:
            logger.warning(f'Active set still changing after {max_passes} passes at step {k}')
        logger.debug(f'Step {k}: {int(active.sum())} active nodes after {passes} passes')

    if not np.all(np.isfinite(u)):
        raise NumericalError('non-finite values in backward step', step=k,
                             diagnostics={'level': n})
    return u, passes


def solve_penalized(problem: ObstacleProblem, n: float,
                    noise: Optional[BackwardNoisePath] = None, settings=None) -> PenalizedSolution:
    """
    Solve the penalized equation at level n backward from u_T = Phi.

    Args:
        problem: ObstacleProblem
        n: Penalization level (0 gives the unconstrained solution)
        noise: Backward noise path (None for deterministic problems)
        settings: Settings class (defaults to DevelopmentConfig)

    Returns:
        PenalizedSolution
    """
    grid = problem.grid
    if n < 0:
        raise DomainError(f'penalization level must be >= 0, got {n}')
    margin = problem.coeffs.contraction_margin
    if margin <= 0:
        raise HypothesisViolation('g/h', f'contraction margin {margin:.6g} is not positive')
    noise = _check_noise(problem, noise)
    max_passes = _setting(settings, 'ACTIVE_SET_MAX_PASSES')

    logger.info(f'Solving level n={n}: stiffness dt*n = {grid.dt * n:.6g}')
    stepper = heat_stepper(grid, grid.dt)
    u = np.empty(grid.field_shape)
    u[-1] = problem.phi
    most_passes = 0
    for k in range(grid.nt - 1, -1, -1):
        u[k], passes = _step(u[k + 1], k, n, problem, noise, stepper, max_passes)
        most_passes = max(most_passes, passes)

    rho = n * np.maximum(problem.v - u, 0.0) if problem.has_obstacle else np.zeros_like(u)
    return PenalizedSolution(
        level=n,
        u=u,
        grad=grid.gradient(u),
        rho=rho,
        grid=grid,
        obstacle=problem.v,
        noise_seed=noise.seed,
        active_passes=most_passes,
    )


def extract_measure(sol: PenalizedSolution, against: Optional[np.ndarray] = None) -> DiscreteRegularMeasure:
    """
    Cell masses rho * dt * dx^d and the complementarity defect sum nu (w - v)^+.

    ``w`` is the solution itself unless ``against`` supplies another field
    (the limit candidate of a sweep).
    """
    grid = sol.grid
    masses = sol.rho[:-1] * grid.dt * grid.cell_volume
    reference = sol.u if against is None else against
    gap = np.maximum(reference[:-1] - sol.obstacle[:-1], 0.0)
    return DiscreteRegularMeasure(
        masses=masses,
        level=sol.level,
        complementarity_defect=float(np.sum(masses * gap)),
    )


def comparison_defect(u: np.ndarray, u_prime: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    """max (u - u')^+, over the spatial ``mask`` when given."""
    u, u_prime = np.asarray(u), np.asarray(u_prime)
    if u.shape != u_prime.shape:
        raise DomainError(f'fields of shapes {u.shape} and {u_prime.shape} cannot be compared')
    excess = np.maximum(u - u_prime, 0.0)
    if mask is not None:
        excess = np.where(mask, excess, 0.0)
    return float(np.max(excess)) if excess.size else 0.0


def solve_linear(grid: SpaceTimeGrid, source=None, reaction: float = 0.0, divergence=None,
                 noise_field=None, noise: Optional[BackwardNoisePath] = None) -> np.ndarray:
    """
    Backward solve of du + (1/2 Laplacian u - reaction u + source + div g) dt + h . dB = 0, u_T = 0.

    Fields may be space-time (nt + 1, *shape) or spatial (time independent);
    ``divergence`` is the vector field g (components first) and
    ``noise_field`` is h with components first. Data are read at t_{k+1}.

    Returns:
        Space-time field
    """
    if reaction < 0:
        raise DomainError(f'reaction must be >= 0, got {reaction}')
    if noise_field is not None and noise is None:
        raise DomainError('a noise field needs a backward noise path')

    def at(field, k, spatial_ndim):
        field = np.asarray(field, dtype=float)
        return field[k] if field.ndim > spatial_ndim else field

    def vector_at(field, k):
        field = np.asarray(field, dtype=float)
        return field[:, k] if field.ndim > grid.dim + 1 else field

    stepper = heat_stepper(grid, grid.dt)
    u = np.zeros(grid.field_shape)
    for k in range(grid.nt - 1, -1, -1):
        rhs = u[k + 1].copy()
        if source is not None:
            rhs += grid.dt * at(source, k + 1, grid.dim)
        if divergence is not None:
            rhs += grid.dt * grid.divergence(vector_at(divergence, k + 1))
        if noise_field is not None:
            rhs += np.tensordot(noise.increments[k], vector_at(noise_field, k + 1), axes=(0, 0))
        u[k] = stepper.solve(rhs, reaction=reaction * grid.dt)
    if not np.all(np.isfinite(u)):
        raise NumericalError('non-finite values in linear solve')
    return u


def _count_inversions(values: Sequence[float], tolerance: float = 0.0) -> int:
    return sum(1 for a, b in zip(values, values[1:]) if b > a + tolerance)


def _solve_level(problem: ObstacleProblem, n: float, noise, max_passes: int) -> PenalizedSolution:
    # passed to worker processes, so it must pickle
    return solve_penalized(problem, n, noise, SimpleNamespace(ACTIVE_SET_MAX_PASSES=max_passes))


def penalization_sweep(problem: ObstacleProblem, schedule: Sequence[int],
                       noise: Optional[BackwardNoisePath] = None, workers: int = 1,
                       settings=None) -> Tuple[List[PenalizedSolution], SweepReport]:
    """
    Solve every level of a schedule with the same noise and record convergence.

    Args:
        problem: ObstacleProblem
        schedule: Strictly increasing levels
        noise: Backward noise path shared by all levels
        workers: Levels solved concurrently
        settings: Settings class

    Returns:
        Tuple (solutions, SweepReport); the last solution is the limit candidate
    """
    schedule = list(schedule)
    if not schedule:
        raise DomainError('schedule is empty')
    if any(n < 0 for n in schedule) or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError(f'schedule must be nonnegative and strictly increasing: {schedule}')

    grid = problem.grid
    noise = _check_noise(problem, noise)
    max_passes = _setting(settings, 'ACTIVE_SET_MAX_PASSES')
    solutions = map_blocks(_solve_level, [(problem, n, noise, max_passes) for n in schedule],
                           workers=workers)

    tolerance = _setting(settings, 'MONOTONE_TOL_DETERMINISTIC' if problem.is_deterministic
                         else 'MONOTONE_TOL_STOCHASTIC')
    core = grid.core_mask
    norms = DiscreteNorms(grid, core)
    limit = solutions[-1].u

    monotonicity, cauchy = [], []
    for lower, upper in zip(solutions, solutions[1:]):
        monotonicity.append(comparison_defect(lower.u, upper.u, core))
        cauchy.append(norms.l2_h1(upper.u - lower.u))

    obstacle_defects = [sol.obstacle_defect(core) for sol in solutions]
    measures = [extract_measure(sol, against=limit) for sol in solutions]

    report = SweepReport(
        schedule=schedule,
        monotonicity_defects=monotonicity,
        cauchy_increments=cauchy,
        obstacle_defects=obstacle_defects,
        skorokhod_defects=[m.complementarity_defect for m in measures],
        measure_masses=[m.total_mass for m in measures],
        monotone_tolerance=tolerance,
    )

    for (a, b), defect in zip(zip(schedule, schedule[1:]), monotonicity):
        if defect > tolerance:
            report.flags.append(f'monotonicity defect {defect:.3e} between n={a} and n={b}')
    if _count_inversions(obstacle_defects, 1e-14) > 0:
        report.flags.append('obstacle defect not decreasing along the schedule')
    if _count_inversions(cauchy) > _setting(settings, 'ALLOWED_INVERSIONS'):
        report.flags.append('Cauchy increments not decreasing along the schedule')
    if not report.finite:
        report.flags.append('non-finite sweep statistics')
    for flag in report.flags:
        logger.warning(f'Sweep flag: {flag}')

    logger.info(f'Sweep over {schedule} done: max monotonicity defect '
                f'{max(monotonicity, default=0.0):.3e}')
    return solutions, report
