"""
Problem construction and coefficient hypothesis checks.
"""

import logging
from typing import Any, Dict, Optional

import numpy as np

from ..exceptions import DomainError, HypothesisViolation, ObstacleViolation
from ..models.coefficients import CoefficientSet
from ..models.grid import DiscreteNorms, SpaceTimeGrid
from ..models.paths import ForwardPathBatch
from ..models.problem import HypothesisReport, ObstacleProblem, obstacle_field, terminal_field
from .kernel import continuity_modulus
from .noise import sample_field

logger = logging.getLogger(__name__)

# Probe range for y and each component of z
PROBE_RADIUS = 10.0

# Offending nodes listed in an obstacle violation
MAX_REPORTED_NODES = 10


def _lipschitz_entry(name: str, num: np.ndarray, bound: np.ndarray, dy: np.ndarray,
                     dz: np.ndarray, declared: float, slack: float) -> Dict[str, float]:
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(bound > 0, num / np.where(bound > 0, bound, 1.0),
                         np.where(num > 0, np.inf, 0.0))
        empirical = np.max(num / np.maximum(dy + dz, 1e-300))
    worst = float(np.max(ratio))
    return {
        'empirical': float(empirical),
        'declared': float(declared),
        'ratio': worst,
        'passed': bool(worst <= 1.0 + slack),
    }


def validate_hypotheses(c: CoefficientSet, probe_count: int, seed: int,
                        grid: Optional[SpaceTimeGrid] = None,
                        slack: float = 1e-9) -> HypothesisReport:
    """
    Probe the coefficient set against its declared constants.

    Reports the contraction margin 1/2 - alpha - beta^2/2, the worst ratio of
    observed increments to the declared Lipschitz bounds over ``probe_count``
    random (t, x, y, z, y', z') tuples, and finiteness and norms of f, g, h at
    y = 0, z = 0 on the grid.

    Args:
        c: CoefficientSet
        probe_count: Number of random probes, >= 1
        seed: Probe seed
        grid: Grid supplying the probe region and the finiteness check
        slack: Relative slack on the declared constants

    Returns:
        HypothesisReport

    Raises:
        HypothesisViolation: an observed ratio exceeds 1 + slack
    """
    if probe_count < 1:
        raise DomainError(f'probe_count must be >= 1, got {probe_count}')

    rng = np.random.default_rng(seed)
    dim = c.dim
    horizon = grid.horizon if grid is not None else 1.0
    bounds = grid.bounds if grid is not None else ((-1.0, 1.0),) * dim

    t = rng.uniform(0.0, horizon, probe_count)
    x = np.stack([rng.uniform(lo, hi, probe_count) for lo, hi in bounds])
    y = rng.uniform(-PROBE_RADIUS, PROBE_RADIUS, probe_count)
    y2 = rng.uniform(-PROBE_RADIUS, PROBE_RADIUS, probe_count)
    z = rng.uniform(-PROBE_RADIUS, PROBE_RADIUS, (dim, probe_count))
    z2 = rng.uniform(-PROBE_RADIUS, PROBE_RADIUS, (dim, probe_count))
    # Half of the pairs are close together so local slopes are seen too
    close = np.arange(probe_count) % 2 == 1
    y2 = np.where(close, y + rng.uniform(-1e-3, 1e-3, probe_count), y2)
    z2 = np.where(close, z + rng.uniform(-1e-3, 1e-3, (dim, probe_count)), z2)

    dy = np.abs(y - y2)
    dz = np.sqrt(np.sum((z - z2) ** 2, axis=0))

    def increment(coefficient):
        diff = coefficient(t, x, y, z) - coefficient(t, x, y2, z2)
        return np.abs(diff) if coefficient.role == 'f' else np.sqrt(np.sum(diff ** 2, axis=0))

    lipschitz = {
        'f': _lipschitz_entry('f', increment(c.f), c.lip_C * (dy + dz), dy, dz, c.lip_C, slack),
        'g': _lipschitz_entry('g', increment(c.g), c.lip_C * dy + c.lip_alpha * dz, dy, dz,
                              c.lip_alpha, slack),
        'h': _lipschitz_entry('h', increment(c.h), c.lip_C * dy + c.lip_beta * dz, dy, dz,
                              c.lip_beta, slack),
    }

    finite, hd2 = {}, {}
    if grid is not None:
        norms = DiscreteNorms(grid)
        coords = grid.coordinates
        zero_y = np.zeros(grid.shape)
        zero_z = np.zeros((dim,) + grid.shape)
        for name, coefficient in (('f', c.f), ('g', c.g), ('h', c.h)):
            values = np.stack([coefficient(tk, coords, zero_y, zero_z) for tk in grid.times])
            finite[f'{name}0'] = bool(np.all(np.isfinite(values)))
            if values.ndim > grid.dim + 1:
                # component axis after time: sum the squared norms of the components
                squared = sum(norms.l2_2(values[:, i]) ** 2 for i in range(values.shape[1]))
            else:
                squared = norms.l2_2(values) ** 2
            hd2[f'{name}0'] = float(np.sqrt(squared))
    else:
        for name, coefficient in (('f', c.f), ('g', c.g), ('h', c.h)):
            values = coefficient(t, x, np.zeros_like(y), np.zeros_like(z))
            finite[f'{name}0'] = bool(np.all(np.isfinite(values)))

    margin = c.contraction_margin
    report = HypothesisReport(
        contraction_margin=margin,
        margin_passed=margin > 0,
        lipschitz=lipschitz,
        finite=finite,
        hd2_norms=hd2,
        probe_count=probe_count,
        seed=seed,
    )

    if not report.margin_passed:
        logger.warning(f'Contraction margin {margin:.6g} is not positive')
    for name, entry in lipschitz.items():
        if not entry['passed']:
            raise HypothesisViolation(
                name,
                f'observed increment ratio {entry["ratio"]:.6g} exceeds the declared bound'
            )
    logger.info(f'Hypotheses probed with {probe_count} tuples: margin {margin:.6g}')
    return report


def build_problem(config: Dict[str, Any], core_margin_factor: float = 3.0) -> ObstacleProblem:
    """
    Build an obstacle problem from its config block.

    Args:
        config: Problem block with 'grid', 'coefficients', 'terminal', 'obstacle'
        core_margin_factor: Interior core margin in units of sqrt(T)

    Returns:
        ObstacleProblem

    Raises:
        ObstacleViolation: v(T, .) > Phi at some node
        DomainError: Phi or v not finite
    """
    if 'grid' not in config:
        raise DomainError('problem config needs a grid block')
    grid = SpaceTimeGrid.from_dict(config['grid'], core_margin_factor=core_margin_factor)
    coeffs = CoefficientSet.from_config(config.get('coefficients', {}), grid.dim)

    terminal_spec = dict(config.get('terminal') or {'kind': 'zero'})
    obstacle_spec = dict(config.get('obstacle') or {'kind': 'none'})
    phi = np.array(terminal_field(grid, terminal_spec), dtype=float)
    v = np.array(obstacle_field(grid, obstacle_spec, phi), dtype=float)

    if not np.all(np.isfinite(phi)):
        raise DomainError('terminal condition is not finite')
    if not np.all(np.isfinite(v)):
        raise DomainError('obstacle is not finite')

    offending = np.argwhere(v[-1] > phi)
    if offending.size:
        nodes = [
            (tuple(int(i) for i in index),
             tuple(float(grid.axes[a][i]) for a, i in enumerate(index)))
            for index in offending[:MAX_REPORTED_NODES]
        ]
        logger.error(f'Obstacle exceeds terminal condition at {len(offending)} node(s)')
        raise ObstacleViolation(nodes, len(offending))

    problem = ObstacleProblem(grid=grid, coeffs=coeffs, phi=phi, v=v,
                              terminal_spec=terminal_spec, obstacle_spec=obstacle_spec)
    logger.info(
        f'Built problem on {grid.dim}D grid nx={grid.nx} nt={grid.nt} T={grid.horizon} '
        f'(terminal {terminal_spec.get("kind")}, obstacle {obstacle_spec.get("kind")})'
    )
    return problem


def obstacle_continuity_diagnostic(problem: ObstacleProblem, paths: ForwardPathBatch,
                                   delta: float) -> Dict[str, float]:
    """
    Continuity modulus of t -> v(t, W_t) along the sampled paths.

    A diagnostic only: a mesh obstacle read along a path is always continuous,
    so the values show how rough it is at scale ``delta``.
    """
    samples = sample_field(problem.v, problem.grid, paths.positions, paths.start_index)
    modulus = continuity_modulus(samples, paths.dt, delta)
    return {
        'delta': float(delta),
        'max': float(np.max(modulus)),
        'mean': float(np.mean(modulus)),
        'q99': float(np.quantile(modulus, 0.99)),
    }
