"""
Penalized solutions, their discrete measures and sweep bookkeeping.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .grid import SpaceTimeGrid


@dataclass(frozen=True, eq=False)
class PenalizedSolution:
    """Solution u^n of the penalized equation at level n.

    ``u`` and ``rho`` have shape (nt + 1, *grid.shape); ``grad`` has the
    gradient components first. ``rho`` is the penalty density n * (u - v)^-.
    """

    level: int
    u: np.ndarray
    grad: np.ndarray
    rho: np.ndarray
    grid: SpaceTimeGrid
    obstacle: np.ndarray
    noise_seed: Optional[int] = None
    active_passes: int = 0

    def obstacle_defect(self, mask: Optional[np.ndarray] = None) -> float:
        """max (v - u)^+ over all times, restricted to ``mask`` when given."""
        gap = np.maximum(self.obstacle - self.u, 0.0)
        if mask is not None:
            gap = np.where(mask, gap, 0.0)
        return float(np.max(gap))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'level': self.level,
            'noise_seed': self.noise_seed,
            'sup_abs_u': float(np.max(np.abs(self.u))),
            'obstacle_defect': self.obstacle_defect(),
            'max_penalty_density': float(np.max(self.rho)),
            'active_passes': self.active_passes,
        }


@dataclass(frozen=True, eq=False)
class DiscreteRegularMeasure:
    """Cell masses rho * dt * dx^d on the cells [t_k, t_{k+1}) x node, k < nt."""

    masses: np.ndarray
    level: int
    complementarity_defect: float

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    @property
    def support(self) -> np.ndarray:
        return self.masses > 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'level': self.level,
            'total_mass': self.total_mass,
            'charged_cells': int(np.count_nonzero(self.masses)),
            'complementarity_defect': self.complementarity_defect,
        }


@dataclass
class SweepReport:
    """Convergence bookkeeping along a penalization schedule.

    Pairwise entries (monotonicity, Cauchy) have one entry less than the
    schedule.
    """

    schedule: List[int]
    monotonicity_defects: List[float]
    cauchy_increments: List[float]
    obstacle_defects: List[float]
    skorokhod_defects: List[float]
    measure_masses: List[float]
    monotone_tolerance: float
    flags: List[str] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return all(d <= self.monotone_tolerance for d in self.monotonicity_defects)

    @property
    def finite(self) -> bool:
        values = (self.monotonicity_defects + self.cauchy_increments + self.obstacle_defects
                  + self.skorokhod_defects + self.measure_masses)
        return bool(np.all(np.isfinite(values)))

    def rows(self) -> List[list]:
        rows = []
        for i, n in enumerate(self.schedule):
            pairwise = i < len(self.schedule) - 1
            rows.append([
                n,
                self.monotonicity_defects[i] if pairwise else '',
                self.cauchy_increments[i] if pairwise else '',
                self.obstacle_defects[i],
                self.skorokhod_defects[i],
                self.measure_masses[i],
            ])
        return rows

    header = ['n', 'monotonicity_defect', 'cauchy_increment', 'obstacle_defect',
              'skorokhod_defect', 'measure_mass']

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schedule': list(self.schedule),
            'monotonicity_defects': list(self.monotonicity_defects),
            'cauchy_increments': list(self.cauchy_increments),
            'obstacle_defects': list(self.obstacle_defects),
            'skorokhod_defects': list(self.skorokhod_defects),
            'measure_masses': list(self.measure_masses),
            'monotone_tolerance': self.monotone_tolerance,
            'flags': list(self.flags),
        }
