"""
Monte Carlo verification of penalized solutions along forward Brownian paths.

Grid fields are read along the paths by multilinear interpolation. Paths
leaving the interior core are truncated at their exit; expectations under
the uniform core start carry the core volume as weight.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..config import DevelopmentConfig
from ..exceptions import DomainError, SeedMismatch
from ..models.coefficients import CoefficientSet, build_coefficient
from ..models.grid import SpaceTimeGrid
from ..models.paths import BackwardNoisePath, ForwardPathBatch, PathProcesses, ResidualStats
from ..models.problem import NO_OBSTACLE, ObstacleProblem
from ..models.reports import EnergyComparison, MeasureComparison, PenaltyBoundTable, SkorokhodTable
from ..models.solution import PenalizedSolution
from .kernel import apply_semigroup
from .noise import sample_field, zero_noise
from .solver import solve_linear, solve_penalized

logger = logging.getLogger(__name__)

TestFunction = Tuple[str, Callable[[float, np.ndarray], np.ndarray]]


def _settings(settings):
    return settings if settings is not None else DevelopmentConfig


def count_inversions(values: Sequence[float], errors: Optional[Sequence[float]] = None,
                     multiplier: float = 0.0) -> int:
    """Increases between neighbours larger than ``multiplier`` joint standard errors."""
    count = 0
    for i in range(len(values) - 1):
        slack = 0.0
        if errors is not None:
            slack = multiplier * float(np.hypot(errors[i], errors[i + 1]))
        if values[i + 1] > values[i] + slack:
            count += 1
    return count


def _spearman(schedule: Sequence[int], values: Sequence[float]) -> float:
    if len(values) < 2 or np.allclose(values, values[0]):
        return float('nan')
    return float(stats.spearmanr(schedule, values)[0])


def _mean_stderr(samples: np.ndarray, weight: float = 1.0) -> Tuple[float, float]:
    count = samples.shape[0]
    mean = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / np.sqrt(count)) if count > 1 else float('inf')
    return weight * mean, weight * stderr


def _check_grid(grid: SpaceTimeGrid, paths: ForwardPathBatch) -> None:
    if abs(paths.dt - grid.dt) > 1e-12 * grid.dt or paths.start_index + paths.steps != grid.nt:
        raise DomainError('forward paths do not live on the time mesh of the grid')
    if paths.dim != grid.dim:
        raise DomainError(f'paths have dimension {paths.dim}, grid has {grid.dim}')


def build_path_processes(sol: PenalizedSolution, problem: ObstacleProblem,
                         paths: ForwardPathBatch) -> PathProcesses:
    """
    Read Y, Z, S along the paths and accumulate K_k = n sum_{j<k} (Y_j - S_j)^- dt.

    K stops growing once a path leaves the core, so it is nondecreasing with K_0 = 0.
    """
    grid = problem.grid
    _check_grid(grid, paths)
    positions, start = paths.positions, paths.start_index
    Y = sample_field(sol.u, grid, positions, start)
    Z = np.stack([sample_field(sol.grad[a], grid, positions, start) for a in range(grid.dim)],
                 axis=-1)
    S = sample_field(problem.v, grid, positions, start, fill_value=None)

    valid = paths.valid
    negative = np.maximum(S - Y, 0.0) * valid
    K = np.zeros_like(Y)
    K[:, 1:] = np.cumsum(sol.level * negative[:, :-1] * grid.dt, axis=1)
    return PathProcesses(level=sol.level, dt=grid.dt, Y=Y, Z=Z, S=S, K=K, valid=valid)


def _along(values: np.ndarray) -> np.ndarray:
    """(M, L, d) path values to the component-first layout (d, M, L) of the coefficients."""
    return np.moveaxis(values, -1, 0)


def pathwise_residuals(sol: PenalizedSolution, problem: ObstacleProblem, paths: ForwardPathBatch,
                       noise: BackwardNoisePath) -> np.ndarray:
    """
    Residual of the reflected backward equation along every path, stopped at its core exit.

    R_k = Y_k - [Y_s + sum_{k<=j<s} (f_j dt + 1/2 (g_j + g_{j+1}) . dW_j
          + h_{j+1} . dB_j - Z_j . dW_j) + K_s - K_k]

    with s the last mesh index before the path leaves the core (L - 1 if it
    never does).

    Returns:
        Array (M, L); zero at s and past it
    """
    grid, coeffs = problem.grid, problem.coeffs
    proc = build_path_processes(sol, problem, paths)
    start, L = paths.start_index, paths.steps + 1
    times = grid.times[start:]
    x = _along(paths.positions)
    z = _along(proc.Z)
    dW = paths.increments
    dB = noise.increments[start:]

    terms = np.zeros((paths.count, L - 1))
    if not coeffs.f.is_zero:
        f = coeffs.f(times[None, :-1], x[:, :, :-1], proc.Y[:, :-1], z[:, :, :-1])
        terms += f * grid.dt
    if not coeffs.g.is_zero:
        g = np.moveaxis(coeffs.g(times[None, :], x, proc.Y, z), 0, -1)
        terms += 0.5 * np.sum((g[:, :-1] + g[:, 1:]) * dW, axis=-1)
    if not coeffs.h.is_zero:
        h = np.moveaxis(coeffs.h(times[None, 1:], x[:, :, 1:], proc.Y[:, 1:], z[:, :, 1:]), 0, -1)
        terms += np.sum(h * dB[None, :, :], axis=-1)
    terms -= np.sum(proc.Z[:, :-1] * dW, axis=-1)

    tail = np.zeros((paths.count, L))
    tail[:, :-1] = np.cumsum(terms[:, ::-1], axis=1)[:, ::-1]
    valid = paths.valid
    rows = np.arange(paths.count)
    stop = np.count_nonzero(valid, axis=1) - 1
    Y_stop = proc.Y[rows, stop][:, None]
    tail_stop = tail[rows, stop][:, None]
    K_stop = proc.K[rows, stop][:, None]
    residual = proc.Y - (Y_stop + tail - tail_stop + K_stop - proc.K)
    return np.where(valid, residual, 0.0)


def verify_bsde_residual(sol: PenalizedSolution, problem: ObstacleProblem, paths: ForwardPathBatch,
                         noise: Optional[BackwardNoisePath], allowance_c: Optional[float] = None,
                         settings=None) -> ResidualStats:
    """
    Slice statistics of the pathwise residual over the paths still in the core at each slice.

    A slice passes when |mean| <= multiplier * stderr + c (dt + dx).

    Raises:
        SeedMismatch: the noise is not the one the solution was computed with
    """
    settings = _settings(settings)
    grid = problem.grid
    if noise is None:
        if sol.noise_seed is not None or not problem.is_deterministic:
            raise SeedMismatch('verification needs the noise path used by the solution')
        noise = zero_noise(grid.nt, problem.coeffs.d1, grid.dt)
    elif noise.seed != sol.noise_seed:
        raise SeedMismatch(f'solution used noise seed {sol.noise_seed}, got {noise.seed}')

    residuals = pathwise_residuals(sol, problem, paths, noise)
    valid = paths.valid
    counts = np.count_nonzero(valid, axis=0)
    count = int(np.min(counts))
    if count < 2:
        raise DomainError('fewer than two paths stay in the interior core')
    kept = np.where(valid, residuals, np.nan)

    c = settings.RESIDUAL_ALLOWANCE_C if allowance_c is None else allowance_c
    stats_ = ResidualStats(
        times=grid.times[paths.start_index:],
        mean=np.nanmean(kept, axis=0),
        stderr=np.nanstd(kept, axis=0, ddof=1) / np.sqrt(counts),
        max_abs=np.nanmax(np.abs(kept), axis=0),
        count=count,
        allowance=c * (grid.dt + grid.max_dx),
        stderr_multiplier=settings.STDERR_MULTIPLIER,
        excluded_fraction=1.0 - count / paths.count,
    )
    logger.info(f'Residual check at n={sol.level}: max |mean| {np.max(np.abs(stats_.mean)):.3e}, '
                f'excluded {stats_.excluded_fraction:.2%}')
    return stats_


def calibrate_residual_allowance(problem: ObstacleProblem, paths: ForwardPathBatch,
                                 safety: float = 2.0, settings=None) -> float:
    """
    Residual allowance constant c measured on the linear f = 1 problem of the same grid.

    Returns ``safety`` times the largest slice bias beyond the statistical band,
    divided by dt + dx.
    """
    settings = _settings(settings)
    grid = problem.grid
    coeffs = CoefficientSet(
        f=build_coefficient('f', {'kind': 'constant', 'value': 1.0}, grid.dim),
        g=build_coefficient('g', {'kind': 'zero'}, grid.dim),
        h=build_coefficient('h', {'kind': 'zero'}, grid.dim),
        dim=grid.dim,
    )
    linear = ObstacleProblem(grid=grid, coeffs=coeffs, phi=np.zeros(grid.shape),
                             v=np.full(grid.field_shape, NO_OBSTACLE))
    sol = solve_penalized(linear, 0, None, settings)
    residual = verify_bsde_residual(sol, linear, paths, None, allowance_c=0.0, settings=settings)
    bias = np.maximum(np.abs(residual.mean) - residual.stderr_multiplier * residual.stderr, 0.0)
    c = safety * float(np.max(bias)) / (grid.dt + grid.max_dx)
    logger.info(f'Calibrated residual allowance constant c = {c:.4g}')
    return c


def verify_skorokhod(sols: Sequence[PenalizedSolution], problem: ObstacleProblem,
                     paths: ForwardPathBatch, settings=None) -> SkorokhodTable:
    """
    Skorokhod statistics per level along a sweep.

    Reports E sum (Y - S)^+ dK^n, with Y from the last (limit) level, and
    E sup ((Y^n - S)^-)^2. Both should decrease along the schedule.
    """
    settings = _settings(settings)
    if not sols:
        raise DomainError('no solutions to check')
    processes = [build_path_processes(sol, problem, paths) for sol in sols]
    limit = processes[-1]
    valid = paths.valid
    weight = paths.weight

    complementarity, comp_err, sup_neg, sup_err = [], [], [], []
    for proc in processes:
        dK = np.diff(proc.K, axis=1)
        above = np.maximum(limit.Y[:, :-1] - proc.S[:, :-1], 0.0)
        mean, err = _mean_stderr(np.sum(above * dK, axis=1), weight)
        complementarity.append(mean)
        comp_err.append(err)

        shortfall = np.where(valid, np.maximum(proc.S - proc.Y, 0.0), 0.0)
        mean, err = _mean_stderr(np.max(shortfall, axis=1) ** 2, weight)
        sup_neg.append(mean)
        sup_err.append(err)

    schedule = [sol.level for sol in sols]
    multiplier = settings.STDERR_MULTIPLIER
    table = SkorokhodTable(
        schedule=schedule,
        complementarity=complementarity,
        complementarity_stderr=comp_err,
        sup_negative=sup_neg,
        sup_negative_stderr=sup_err,
        complementarity_spearman=_spearman(schedule, complementarity),
        sup_negative_spearman=_spearman(schedule, sup_neg),
        complementarity_inversions=count_inversions(complementarity, comp_err, multiplier),
        sup_negative_inversions=count_inversions(sup_neg, sup_err, multiplier),
        allowed_inversions=settings.ALLOWED_INVERSIONS,
        excluded_fraction=float(1.0 - np.mean(paths.never_exits)),
    )
    logger.info(f'Skorokhod check over {schedule}: passed={table.passed}')
    return table


def verify_penalty_bound(sols: Sequence[PenalizedSolution], problem: ObstacleProblem,
                         paths: ForwardPathBatch, max_ratio: float = 10.0) -> PenaltyBoundTable:
    """E (K_T^n)^2 along the schedule, with the ratio of its largest value to the limit level."""
    if not sols:
        raise DomainError('the penalty bound needs at least one solution')
    moments, errors = [], []
    for sol in sols:
        proc = build_path_processes(sol, problem, paths)
        mean, err = _mean_stderr(proc.K[:, -1] ** 2, paths.weight)
        moments.append(mean)
        errors.append(err)

    last = moments[-1]
    if last > 0:
        ratio = max(moments) / last
    else:
        ratio = 1.0 if max(moments) == 0 else float('inf')
    return PenaltyBoundTable(schedule=[sol.level for sol in sols], second_moments=moments,
                             stderr=errors, ratio=ratio, max_ratio=max_ratio)


def source_field(grid: SpaceTimeGrid, block: Dict) -> np.ndarray:
    """A space-time source from an f registry block, evaluated at y = 0, z = 0."""
    coefficient = build_coefficient('f', block, grid.dim)
    zero_y = np.zeros(grid.shape)
    zero_z = np.zeros((grid.dim,) + grid.shape)
    return np.stack([coefficient(t, grid.coordinates, zero_y, zero_z) for t in grid.times])


def as_space_time(field, grid: SpaceTimeGrid) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    if field.shape == grid.shape:
        field = np.broadcast_to(field, grid.field_shape)
    if field.shape != grid.field_shape:
        raise DomainError(f'field shape {field.shape} does not fit grid {grid.field_shape}')
    return np.array(field)


def start_density(grid: SpaceTimeGrid, start_index: int) -> np.ndarray:
    """P_{t_k - t_start} 1_core for k >= start: the weighted density of W_{t_k} under the core start."""
    mask = grid.core_mask
    # Node sums of the indicator carry the same mass as the uniform start law.
    core = mask.astype(float) * (grid.core_volume / (np.count_nonzero(mask) * grid.cell_volume))
    density = np.zeros(grid.field_shape)
    for k in range(start_index, grid.nt + 1):
        density[k] = apply_semigroup(core, grid.times[k] - grid.times[start_index], grid,
                                     method='convolution')
    return density


def verify_energy_identity(f, grid: SpaceTimeGrid, paths: ForwardPathBatch, t_list: Sequence[float],
                           allowance_c: Optional[float] = None, settings=None) -> EnergyComparison:
    """
    Compare ||u_t||^2 + int_t^T ||grad u_s||^2 ds with E (A_T - A_t)^2.

    u is the potential of f (zero terminal data, no obstacle). Both sides are
    taken under the same core-start surrogate: the grid side is weighted by
    the density of W_s, the path side averages sum_{j>=k} f(t_j, W_j) dt
    squared and carries the core volume.

    Args:
        f: Nonnegative source, space-time or spatial
        grid: SpaceTimeGrid
        paths: Forward paths on the grid's mesh
        t_list: Times t >= the paths' start time

    Returns:
        EnergyComparison
    """
    settings = _settings(settings)
    _check_grid(grid, paths)
    f = as_space_time(f, grid)
    if np.any(f < 0):
        raise DomainError('the energy identity needs a nonnegative source')

    u = solve_linear(grid, source=f)
    density = start_density(grid, paths.start_index)
    vol, dt = grid.cell_volume, grid.dt
    grad_sq = np.sum(grid.gradient(u) ** 2, axis=0)
    axes = tuple(range(1, grid.dim + 1))
    kinetic = np.sum(density * grad_sq, axis=axes) * vol * dt
    potential = np.sum(density * u ** 2, axis=axes) * vol

    start = paths.start_index
    along = sample_field(f, grid, paths.positions, start)[:, :-1] * dt
    tails = np.cumsum(along[:, ::-1], axis=1)[:, ::-1]

    c = settings.RESIDUAL_ALLOWANCE_C if allowance_c is None else allowance_c
    times, lhs, rhs, errs, allowances, relative = [], [], [], [], [], []
    for t in t_list:
        k = grid.time_index(t)
        if k < start or k > grid.nt:
            raise DomainError(f't={t} lies before the start of the paths')
        left = float(potential[k] + np.sum(kinetic[k:grid.nt]))
        if k < grid.nt:
            right, err = _mean_stderr(tails[:, k - start] ** 2, paths.weight)
        else:
            right, err = 0.0, 0.0
        times.append(float(grid.times[k]))
        lhs.append(left)
        rhs.append(right)
        errs.append(err)
        allowances.append(c * (dt + grid.max_dx) * max(abs(left), abs(right)))
        relative.append(abs(left - right) / left if left > 0 else (0.0 if right == 0 else float('inf')))

    exit_fraction = float(1.0 - np.mean(np.all(paths.inside_domain, axis=1)))
    comparison = EnergyComparison(times=times, lhs=lhs, rhs=rhs, stderr=errs, allowance=allowances,
                                  relative_error=relative,
                                  stderr_multiplier=settings.STDERR_MULTIPLIER,
                                  exit_fraction=exit_fraction)
    logger.info(f'Energy identity at t={times}: relative errors {[f"{r:.3%}" for r in relative]}')
    return comparison


def default_test_functions(grid: SpaceTimeGrid) -> List[TestFunction]:
    """Three smooth test functions on [0, T] x domain."""
    T = grid.horizon

    def flat(t, x):
        return np.ones(x.shape[1:])

    def gaussian(t, x):
        return (1.0 + t) * np.exp(-np.sum(x ** 2, axis=0) / (2.0 * 0.5 ** 2))

    def wave(t, x):
        return (T - t + 0.1) * np.cos(x[0])

    return [('constant', flat), ('gaussian', gaussian), ('wave', wave)]


def verify_measure_representation(f, grid: SpaceTimeGrid, paths: ForwardPathBatch,
                                  test_functions: Optional[Sequence[TestFunction]] = None,
                                  allowance_c: Optional[float] = None,
                                  settings=None) -> MeasureComparison:
    """
    nu(phi) = E sum_j phi(t_j, W_j) f(t_j, W_j) dt against the grid integral of phi f.

    The grid side uses the same density of W_t under the core start as the
    energy identity.
    """
    settings = _settings(settings)
    _check_grid(grid, paths)
    f = as_space_time(f, grid)
    if np.any(f < 0):
        raise DomainError('the measure representation needs a nonnegative source')
    test_functions = list(test_functions or default_test_functions(grid))

    start, dt, vol = paths.start_index, grid.dt, grid.cell_volume
    density = start_density(grid, start)
    f_paths = sample_field(f, grid, paths.positions, start)[:, :-1]
    path_times = grid.times[start:-1]
    path_x = _along(paths.positions[:, :-1])

    c = settings.RESIDUAL_ALLOWANCE_C if allowance_c is None else allowance_c
    names, grid_values, mc_values, errs, allowances = [], [], [], [], []
    for name, phi in test_functions:
        phi_grid = np.stack([phi(t, grid.coordinates) for t in grid.times])
        grid_value = float(np.sum((phi_grid * f * density)[start:grid.nt]) * vol * dt)
        phi_paths = np.stack([phi(t, path_x[:, :, j]) for j, t in enumerate(path_times)], axis=1)
        mc, err = _mean_stderr(np.sum(phi_paths * f_paths, axis=1) * dt, paths.weight)
        names.append(name)
        grid_values.append(grid_value)
        mc_values.append(mc)
        errs.append(err)
        allowances.append(c * (dt + grid.max_dx) * abs(grid_value))

    return MeasureComparison(names=names, grid_values=grid_values, mc_values=mc_values, stderr=errs,
                             allowance=allowances, stderr_multiplier=settings.STDERR_MULTIPLIER)


def obstacle_path_samples(problem: ObstacleProblem, paths: ForwardPathBatch) -> np.ndarray:
    """S_k = v(t_k, W_k) along every path; shape (M, L)."""
    return sample_field(problem.v, problem.grid, paths.positions, paths.start_index, fill_value=None)
