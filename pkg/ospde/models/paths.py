"""
Noise paths, forward Brownian batches and the processes read off them.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Optional, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class BackwardNoisePath:
    """Increments dB_k, k = 0..nt-1, of the backward driving noise; shape (nt, d1)."""

    seed: Optional[int]
    dt: float
    increments: np.ndarray

    @property
    def nt(self) -> int:
        return self.increments.shape[0]

    @property
    def d1(self) -> int:
        return self.increments.shape[1]

    @property
    def values(self) -> np.ndarray:
        """B_k with B_0 = 0; shape (nt + 1, d1)."""
        return np.concatenate([np.zeros((1, self.d1)), np.cumsum(self.increments, axis=0)])

    def to_dict(self) -> Dict[str, Any]:
        return {'seed': self.seed, 'nt': self.nt, 'd1': self.d1, 'dt': self.dt}


@dataclass(frozen=True, eq=False)
class ForwardPathBatch:
    """M forward Brownian paths started uniformly on the interior core at t_{start_index}.

    ``increments`` has shape (M, nt - start_index, d). ``weight`` is the core
    volume, the mass the uniform start stands in for.
    """

    seed: int
    start_index: int
    dt: float
    x0: np.ndarray
    increments: np.ndarray
    weight: float
    core_bounds: Tuple[Tuple[float, float], ...]
    domain_bounds: Tuple[Tuple[float, float], ...]

    @property
    def count(self) -> int:
        return self.x0.shape[0]

    @property
    def steps(self) -> int:
        return self.increments.shape[1]

    @property
    def dim(self) -> int:
        return self.x0.shape[1]

    @cached_property
    def positions(self) -> np.ndarray:
        """W at the mesh times t_{start}..t_nt; shape (M, steps + 1, d)."""
        walk = np.cumsum(self.increments, axis=1)
        return np.concatenate([self.x0[:, None, :], self.x0[:, None, :] + walk], axis=1)

    def _inside(self, bounds) -> np.ndarray:
        positions = self.positions
        inside = np.ones(positions.shape[:2], dtype=bool)
        for axis, (lo, hi) in enumerate(bounds):
            inside &= (positions[..., axis] >= lo) & (positions[..., axis] <= hi)
        return inside

    @cached_property
    def inside_core(self) -> np.ndarray:
        return self._inside(self.core_bounds)

    @property
    def inside_domain(self) -> np.ndarray:
        return self._inside(self.domain_bounds)

    @cached_property
    def valid(self) -> np.ndarray:
        """True up to (excluding) the first exit from the core, per path and mesh time."""
        return np.cumprod(self.inside_core, axis=1).astype(bool)

    @property
    def never_exits(self) -> np.ndarray:
        return self.valid[:, -1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'count': self.count,
            'start_index': self.start_index,
            'weight': self.weight,
            'exit_fraction': float(1.0 - np.mean(self.never_exits)),
        }


@dataclass(frozen=True, eq=False)
class PathProcesses:
    """Y, Z, S and K read along a forward batch at penalization level n.

    Arrays are (M, L) with L = steps + 1, Z is (M, L, d).
    """

    level: int
    dt: float
    Y: np.ndarray
    Z: np.ndarray
    S: np.ndarray
    K: np.ndarray
    valid: np.ndarray

    @property
    def count(self) -> int:
        return self.Y.shape[0]


@dataclass
class ResidualStats:
    """Per time slice statistics of the pathwise backward-equation residual."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    max_abs: np.ndarray
    count: int
    allowance: float
    stderr_multiplier: float
    excluded_fraction: float

    @property
    def slack(self) -> np.ndarray:
        """Tolerance minus |mean| per slice; nonnegative where the slice passes."""
        return self.stderr_multiplier * self.stderr + self.allowance - np.abs(self.mean)

    @property
    def passed(self) -> bool:
        return bool(self.count >= 2 and np.all(self.slack >= 0))

    header = ['t', 'mean', 'stderr', 'max_abs', 'tolerance']

    def rows(self):
        tolerance = self.stderr_multiplier * self.stderr + self.allowance
        return [list(row) for row in zip(self.times, self.mean, self.stderr, self.max_abs, tolerance)]

    def to_dict(self) -> Dict[str, Any]:
        worst = int(np.argmin(self.slack)) if self.slack.size else 0
        return {
            'count': self.count,
            'allowance': self.allowance,
            'excluded_fraction': self.excluded_fraction,
            'max_abs_mean': float(np.max(np.abs(self.mean))) if self.mean.size else 0.0,
            'worst_slice_time': float(self.times[worst]) if self.times.size else 0.0,
            'passed': self.passed,
        }
