"""
Numerical checks of the technical estimates behind the penalization argument:
gradient decay of n-damped heat equations, exponential smoothing of the
obstacle along paths, the exponential-average inequalities and the convex
combiner that turns weak limits into strong ones.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..config import DevelopmentConfig
from ..exceptions import DomainError
from ..models.grid import DiscreteNorms, SpaceTimeGrid
from ..models.reports import (
    CalculusCheck,
    CalculusSummary,
    GradientDecayReport,
    MazurResult,
    SmoothingTable,
)
from .kernel import continuity_modulus, exp_average, exp_average_path
from .noise import sample_backward_noise
from .solver import solve_linear
from .verify import as_space_time

logger = logging.getLogger(__name__)


def _check_schedule(schedule: Sequence[int]) -> List[int]:
    schedule = list(schedule)
    if not schedule or any(n < 1 for n in schedule):
        raise DomainError(f'schedule needs levels >= 1, got {schedule}')
    return schedule


def _gradient_energy(u: np.ndarray, grid: SpaceTimeGrid, norms: DiscreteNorms) -> float:
    return float(np.sum(grid.time_weights * norms.h1_sq_series(u)))


def lemma_gradient_decay(f, grid: SpaceTimeGrid, schedule: Sequence[int],
                         max_spread: float = 10.0) -> GradientDecayReport:
    """
    Gradient energy of du + (1/2 Laplacian u - n u + f) dt = 0, u_T = 0, against its bound.

    For every n the energy int ||grad u^n||^2 dt is divided by
    (1/n) int ||f||^2 dt + int e^{-2n(T-t)} ||f_t||^2 dt. One constant fits
    the whole schedule when the ratios stay within ``max_spread`` of each other.

    Args:
        f: Source, space-time or spatial
        grid: SpaceTimeGrid
        schedule: Damping levels, >= 1
        max_spread: Bound on max ratio / min ratio

    Returns:
        GradientDecayReport (variant 'source')
    """
    schedule = _check_schedule(schedule)
    f = as_space_time(f, grid)
    norms = DiscreteNorms(grid)
    weights = grid.time_weights
    f_sq = norms.l2_sq_series(f)
    remaining = grid.horizon - grid.times

    energies, brackets, ratios = [], [], []
    for n in schedule:
        u = solve_linear(grid, source=f, reaction=float(n))
        energy = _gradient_energy(u, grid, norms)
        bracket = float(np.sum(weights * f_sq) / n + np.sum(weights * np.exp(-2.0 * n * remaining) * f_sq))
        energies.append(energy)
        brackets.append(bracket)
        ratios.append(energy / bracket if bracket > 0 else 0.0)
        logger.debug(f'Gradient decay n={n}: energy {energy:.4e}, bracket {bracket:.4e}')

    return GradientDecayReport(variant='source', schedule=schedule, energies=energies,
                               brackets=brackets, ratios=ratios, max_spread=max_spread)


def primitive_field(f, grid: SpaceTimeGrid) -> np.ndarray:
    """Vector field g with div g = f, integrating f along the first spatial axis."""
    f = as_space_time(f, grid)
    g = np.zeros((grid.dim,) + f.shape)
    g[0] = cumulative_trapezoid(f, dx=grid.dx[0], axis=1, initial=0.0)
    return g


def lemma_divergence_gradient_decay(g, grid: SpaceTimeGrid,
                                    schedule: Sequence[int]) -> GradientDecayReport:
    """Gradient energy of the n-damped equation driven by div g; should decrease to zero."""
    schedule = _check_schedule(schedule)
    norms = DiscreteNorms(grid)
    energies = [_gradient_energy(solve_linear(grid, divergence=g, reaction=float(n)), grid, norms)
                for n in schedule]
    return GradientDecayReport(variant='divergence', schedule=schedule, energies=energies)


def lemma_noise_gradient_decay(h_field, grid: SpaceTimeGrid, schedule: Sequence[int],
                               seeds: Sequence[int]) -> GradientDecayReport:
    """
    Seed-averaged gradient energy of du + (1/2 Laplacian u - n u) dt + h . dB = 0, u_T = 0.

    The same noise paths are used at every level.
    """
    schedule = _check_schedule(schedule)
    seeds = list(seeds)
    if not seeds:
        raise DomainError('at least one noise seed is needed')
    h_field = np.asarray(h_field, dtype=float)
    d1 = h_field.shape[0]
    norms = DiscreteNorms(grid)
    noises = [sample_backward_noise(seed, grid.nt, d1, grid.dt) for seed in seeds]

    energies = []
    for n in schedule:
        per_seed = [
            _gradient_energy(solve_linear(grid, reaction=float(n), noise_field=h_field, noise=noise),
                             grid, norms)
            for noise in noises
        ]
        energies.append(float(np.mean(per_seed)))
    return GradientDecayReport(variant='noise', schedule=schedule, energies=energies)


def lemma_obstacle_smoothing(S: np.ndarray, dt: float, schedule: Sequence[int], delta: float,
                             allowed_inversions: int = 0) -> SmoothingTable:
    """
    Exponential smoothing of obstacle paths and its per-path error bound.

    For each n, Y^n_k is the exponential average of the future of the path
    from t_k at rate n. Every path must satisfy
    sup_k |Y^n_k - S_k| <= sup_{|s-r|<=delta} |S_s - S_r| + 2 e^{-n delta} sup |S|.

    Args:
        S: Obstacle samples along paths, shape (M, L)
        dt: Mesh step
        schedule: Rates, >= 1
        delta: Window of the continuity modulus
        allowed_inversions: Increases tolerated in the mean squared sup-error

    Returns:
        SmoothingTable
    """
    schedule = _check_schedule(schedule)
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if not np.all(np.isfinite(S)):
        raise DomainError('obstacle samples are not finite')
    modulus = continuity_modulus(S, dt, delta)
    peak = np.max(np.abs(S), axis=-1)
    count = S.shape[0]

    means, errors, violations = [], [], []
    for n in schedule:
        error = np.max(np.abs(exp_average_path(S, dt, float(n)) - S), axis=-1)
        bound = modulus + 2.0 * math.exp(-n * delta) * peak
        violations.append(int(np.count_nonzero(error > bound + 1e-12 * (1.0 + peak))))
        squared = error ** 2
        means.append(float(np.mean(squared)))
        errors.append(float(np.std(squared, ddof=1) / np.sqrt(count)) if count > 1 else 0.0)

    table = SmoothingTable(schedule=schedule, mean_sup_error=means, stderr=errors,
                           violations=violations, count=count, delta=float(delta),
                           allowed_inversions=allowed_inversions)
    logger.info(f'Obstacle smoothing over {schedule}: violations {violations}')
    return table


def lemma_calculus(phi, lam: float, delta: float, dt: Optional[float] = None,
                   tolerance: float = 1e-12) -> CalculusCheck:
    """
    Both exponential-average inequalities for a piecewise-linear function on [0, T].

    First: |lam int_0^delta e^{-lam t} phi dt + e^{-lam delta} phi(delta) - phi(0)|
    <= sup_{t<=delta} |phi(t) - phi(0)|. Second, at every mesh time t:
    |average of phi over [t, T] - phi(t)| <= sup_{|s-r|<=delta} |phi(s) - phi(r)| + 2 e^{-lam delta} ||phi||.

    Args:
        phi: Samples on a uniform mesh of [0, T]
        lam: Rate, > 0
        delta: Window in (0, T)
        dt: Mesh step (defaults to a mesh of [0, 1])
        tolerance: Margin below zero still counted as passing

    Returns:
        CalculusCheck with both margins (bound minus left side)
    """
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 1 or phi.size < 2:
        raise DomainError('phi needs at least two samples')
    if not lam > 0:
        raise DomainError(f'rate must be positive, got {lam}')
    dt = 1.0 / (phi.size - 1) if dt is None else dt
    times = np.arange(phi.size) * dt
    horizon = times[-1]
    if not 0 < delta < horizon:
        raise DomainError(f'delta must lie in (0, {horizon}), got {delta}')

    # phi restricted to [0, delta], cut at delta
    head = times < delta
    cut_times = np.append(times[head], delta)
    cut = np.append(phi[head], np.interp(delta, times, phi))
    average = exp_average(cut, lam, times=cut_times)
    first = float(np.max(np.abs(cut - phi[0])) - abs(average - phi[0]))

    averages = exp_average_path(phi, dt, lam)
    bound = continuity_modulus(phi, dt, delta) + 2.0 * math.exp(-lam * delta) * np.max(np.abs(phi))
    second = float(np.min(bound - np.abs(averages - phi)))
    return CalculusCheck(first_margin=first, second_margin=second, tolerance=tolerance)


def calculus_trials(trials: int, nodes: int, lambda_range: Tuple[float, float],
                    delta_range: Tuple[float, float], seed: int,
                    tolerance: float = 1e-12) -> CalculusSummary:
    """
    Seeded property run of ``lemma_calculus`` over random piecewise-linear functions on [0, 1].

    Functions are random walks with standard normal steps; rates are
    log-uniform and windows uniform over their ranges.
    """
    if trials < 1 or nodes < 2:
        raise DomainError('need at least one trial and two nodes')
    rng = np.random.default_rng(seed)
    log_lo, log_hi = math.log(lambda_range[0]), math.log(lambda_range[1])
    violations = 0
    min_first = min_second = math.inf
    for _ in range(trials):
        phi = np.cumsum(rng.standard_normal(nodes))
        lam = math.exp(rng.uniform(log_lo, log_hi))
        delta = rng.uniform(*delta_range)
        check = lemma_calculus(phi, lam, delta, tolerance=tolerance)
        violations += not check.passed
        min_first = min(min_first, check.first_margin)
        min_second = min(min_second, check.second_margin)

    summary = CalculusSummary(trials=trials, violations=violations, min_first_margin=min_first,
                              min_second_margin=min_second, seed=seed, tolerance=tolerance)
    logger.info(f'Calculus inequalities: {violations} violation(s) in {trials} trials')
    return summary


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1}."""
    v = np.asarray(v, dtype=float)
    ordered = np.sort(v)[::-1]
    excess = np.cumsum(ordered) - 1.0
    ranks = np.arange(1, v.size + 1)
    rho = np.nonzero(ordered - excess / ranks > 0)[0][-1]
    return np.maximum(v - excess[rho] / (rho + 1), 0.0)


def mazur_combine(vectors: Sequence[np.ndarray], target: np.ndarray,
                  iterations: Optional[int] = None, target_ratio: Optional[float] = None,
                  settings=None) -> MazurResult:
    """
    Convex combination of ``vectors`` closest to ``target`` in the Euclidean norm.

    Accelerated projected gradient on the simplex with step 1 / lambda_max of
    the Gram matrix, started from the best single vector; the best iterate is
    kept, so the result is never worse than that vector.

    Args:
        vectors: Fields of equal shape
        target: Field of the same shape
        iterations: Iteration budget (defaults to MAZUR_ITERATIONS)
        target_ratio: Required distance / best single distance, if any
        settings: Settings class

    Returns:
        MazurResult

    Raises:
        DomainError: no vectors or shape mismatch
    """
    if len(vectors) == 0:
        raise DomainError('mazur_combine needs at least one vector')
    target = np.asarray(target, dtype=float)
    if any(np.shape(x) != target.shape for x in vectors):
        raise DomainError('vectors and target must share one shape')
    if iterations is None:
        iterations = (settings or DevelopmentConfig).MAZUR_ITERATIONS

    X = np.stack([np.asarray(x, dtype=float).ravel() for x in vectors])
    b = target.ravel()
    m = X.shape[0]

    def distance(w):
        return float(np.linalg.norm(w @ X - b))

    singles = np.linalg.norm(X - b, axis=1)
    best_index = int(np.argmin(singles))
    best = np.zeros(m)
    best[best_index] = 1.0
    best_distance = float(singles[best_index])

    gram = X @ X.T
    Xb = X @ b
    lipschitz = float(np.linalg.eigvalsh(gram)[-1])
    done = 0
    if lipschitz > 0 and m > 1:
        w, momentum, s = best.copy(), best.copy(), 1.0
        for done in range(1, iterations + 1):
            w_next = project_simplex(momentum - (gram @ momentum - Xb) / lipschitz)
            s_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * s * s))
            momentum = w_next + ((s - 1.0) / s_next) * (w_next - w)
            w, s = w_next, s_next
            current = distance(w)
            if current < best_distance:
                best, best_distance = w.copy(), current

    result = MazurResult(weights=best, distance=best_distance,
                         best_single_distance=float(singles[best_index]),
                         best_single_index=best_index, iterations=done, target_ratio=target_ratio)
    logger.info(f'Convex combination distance {best_distance:.4e} '
                f'(best single {singles[best_index]:.4e}) after {done} iterations')
    return result


def oscillating_instance(size: int, length: int = 64, seed: int = 0) -> Tuple[List[np.ndarray], np.ndarray]:
    """
    x_i = (-1)^i e + z_i with |e| = 1 and |z_i| = 1 / (i + 1), target 0.

    Single vectors stay about |e| away from the target while averages of
    neighbouring tail vectors come within O(1 / size).
    """
    if size < 2:
        raise DomainError('the oscillating instance needs at least two vectors')
    rng = np.random.default_rng(seed)
    e = np.ones(length) / math.sqrt(length)
    vectors = []
    for i in range(size):
        direction = rng.standard_normal(length)
        direction /= np.linalg.norm(direction)
        vectors.append((-1) ** i * e + direction / (i + 1))
    return vectors, np.zeros(length)
