"""
Backward driving noise, forward Brownian paths and the discrete stochastic integrals.

Every path draws from its own counter-based stream
``Philox(SeedSequence(seed, spawn_key=(m,)))``, so path m is the same no
matter how paths are split into blocks or across workers. The backward
noise uses the root sequence of its seed.

Integral arguments put time on axis -2 and components on axis -1.
"""

import logging
from typing import Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..exceptions import DomainError
from ..models.grid import SpaceTimeGrid
from ..models.paths import BackwardNoisePath, ForwardPathBatch
from ..utils.export import write_table_csv
from ..utils.parallel import block_ranges, map_blocks

logger = logging.getLogger(__name__)


def _generator(seed: int, spawn_key: tuple = ()) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=spawn_key)))


def sample_backward_noise(seed: int, nt: int, d1: int, dt: float) -> BackwardNoisePath:
    """
    Sample the increments of the backward noise B.

    Args:
        seed: Stream seed
        nt: Number of time steps
        d1: Noise dimension
        dt: Time step (increment variance per component)

    Returns:
        BackwardNoisePath with increments of shape (nt, d1)
    """
    if nt < 1 or d1 < 1:
        raise DomainError(f'noise needs nt >= 1 and d1 >= 1, got nt={nt}, d1={d1}')
    if not dt > 0:
        raise DomainError(f'dt must be positive, got {dt}')
    increments = _generator(seed).standard_normal((nt, d1)) * np.sqrt(dt)
    return BackwardNoisePath(seed=seed, dt=dt, increments=increments)


def zero_noise(nt: int, d1: int, dt: float) -> BackwardNoisePath:
    """Noise path with zero increments for deterministic problems."""
    return BackwardNoisePath(seed=None, dt=dt, increments=np.zeros((nt, d1)))


def _sample_block(seed: int, start: int, stop: int, dim: int, steps: int, dt: float,
                  core_lo: np.ndarray, core_hi: np.ndarray):
    x0 = np.empty((stop - start, dim))
    increments = np.empty((stop - start, steps, dim))
    scale = np.sqrt(dt)
    for row, m in enumerate(range(start, stop)):
        rng = _generator(seed, (m,))
        x0[row] = rng.uniform(core_lo, core_hi)
        increments[row] = rng.standard_normal((steps, dim)) * scale
    return x0, increments


def sample_forward_paths(grid: SpaceTimeGrid, count: int, seed: int, start_index: int = 0,
                         workers: int = 1, block_size: int = 2048) -> ForwardPathBatch:
    """
    Sample forward Brownian paths started uniformly on the interior core.

    Args:
        grid: SpaceTimeGrid (time mesh and core)
        count: Number of paths
        seed: Batch seed
        start_index: Mesh index the paths start from
        workers: Process count for sampling
        block_size: Paths per block

    Returns:
        ForwardPathBatch
    """
    if count < 1:
        raise DomainError(f'path count must be >= 1, got {count}')
    if not 0 <= start_index < grid.nt:
        raise DomainError(f'start_index must lie in [0, {grid.nt - 1}], got {start_index}')

    core = grid.core_bounds
    core_lo = np.array([lo for lo, _ in core])
    core_hi = np.array([hi for _, hi in core])
    steps = grid.nt - start_index

    tasks = [(seed, start, stop, grid.dim, steps, grid.dt, core_lo, core_hi)
             for start, stop in block_ranges(count, block_size)]
    blocks = map_blocks(_sample_block, tasks, workers=workers)

    batch = ForwardPathBatch(
        seed=seed,
        start_index=start_index,
        dt=grid.dt,
        x0=np.concatenate([block[0] for block in blocks]),
        increments=np.concatenate([block[1] for block in blocks]),
        weight=grid.core_volume,
        core_bounds=core,
        domain_bounds=grid.bounds,
    )
    logger.info(f'Sampled {count} forward paths (seed {seed}, start index {start_index})')
    return batch


def _check_integrand(values: np.ndarray, increments: np.ndarray, lengths) -> int:
    if values.ndim < 2 or increments.ndim < 2:
        raise DomainError('integrands need a time axis and a component axis')
    nt = increments.shape[-2]
    if (values.shape[:-2] != increments.shape[:-2]
            or values.shape[-1] != increments.shape[-1]):
        raise DomainError(f'integrand shape {values.shape} does not match increments {increments.shape}')
    if values.shape[-2] not in tuple(nt + extra for extra in lengths):
        raise DomainError(f'integrand has {values.shape[-2]} times, increments have {nt}')
    return nt


def forward_ito_integral(values, dW):
    """sum_k z_k . dW_k with z at left endpoints (nt or nt + 1 values)."""
    values, dW = np.asarray(values, dtype=float), np.asarray(dW, dtype=float)
    nt = _check_integrand(values, dW, (0, 1))
    return np.sum(values[..., :nt, :] * dW, axis=(-2, -1))


def backward_ito_integral(values, dB):
    """sum_k value_{k+1} . dB_k; nt + 1 mesh values or nt right-endpoint values."""
    values, dB = np.asarray(values, dtype=float), np.asarray(dB, dtype=float)
    nt = _check_integrand(values, dB, (0, 1))
    right = values[..., 1:, :] if values.shape[-2] == nt + 1 else values
    return np.sum(right * dB, axis=(-2, -1))


def symmetric_integral(values, dW):
    """sum_k (g_k + g_{k+1}) . dW_k for g on all nt + 1 mesh points."""
    values, dW = np.asarray(values, dtype=float), np.asarray(dW, dtype=float)
    _check_integrand(values, dW, (1,))
    return forward_ito_integral(values, dW) + backward_ito_integral(values, dW)


def sample_field(field: np.ndarray, grid: SpaceTimeGrid, positions: np.ndarray,
                 start_index: int = 0, fill_value: Optional[float] = 0.0) -> np.ndarray:
    """
    Multilinear interpolation of a space-time field along paths.

    Args:
        field: Array of shape (nt + 1, *grid.shape)
        grid: SpaceTimeGrid
        positions: Path positions (M, L, d) at mesh times start_index..start_index + L - 1
        start_index: Mesh index of the first position
        fill_value: Value outside the truncated domain

    Returns:
        Array of shape (M, L)
    """
    steps = positions.shape[1]
    if start_index + steps > grid.nt + 1:
        raise DomainError('paths run past the time horizon of the field')
    out = np.empty(positions.shape[:2])
    for j in range(steps):
        interpolator = RegularGridInterpolator(grid.axes, field[start_index + j], method='linear',
                                               bounds_error=False, fill_value=fill_value)
        out[:, j] = interpolator(positions[:, j, :])
    return out


def export_path_csv(batch: ForwardPathBatch, noise: BackwardNoisePath, index: int, path):
    """Write one path as rows ``k, t_k, W components, B components``."""
    if not 0 <= index < batch.count:
        raise DomainError(f'path index {index} outside [0, {batch.count})')
    W = batch.positions[index]
    B = noise.values
    header = (['k', 't'] + [f'W{i + 1}' for i in range(batch.dim)]
              + [f'B{i + 1}' for i in range(noise.d1)])
    rows = []
    for j in range(W.shape[0]):
        k = batch.start_index + j
        rows.append([k, k * batch.dt] + list(W[j]) + list(B[k]))
    return write_table_csv(path, header, rows)
