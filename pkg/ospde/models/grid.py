"""
Space-time grid and discrete norms.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..exceptions import DomainError


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Truncated rectangular domain with a uniform time mesh on [0, T].

    Spatial nodes include the boundary, where homogeneous Dirichlet data
    holds. Time index k runs over 0..nt with t_k = k * dt.
    """

    dim: int
    bounds: Tuple[Tuple[float, float], ...]
    nx: int
    nt: int
    horizon: float
    core_margin_factor: float = 3.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError(f'dim must be 1 or 2, got {self.dim}')
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) != self.dim or any(lo >= hi for lo, hi in bounds):
            raise DomainError(f'bounds must give {self.dim} increasing (low, high) pairs')
        object.__setattr__(self, 'bounds', bounds)
        if self.nx < 3:
            raise DomainError(f'nx must be >= 3, got {self.nx}')
        if self.nt < 1:
            raise DomainError(f'nt must be >= 1, got {self.nt}')
        if not self.horizon > 0:
            raise DomainError(f'horizon must be positive, got {self.horizon}')

    @classmethod
    def from_dict(cls, block: Dict, core_margin_factor: float = 3.0) -> 'SpaceTimeGrid':
        return cls(
            dim=int(block['dim']),
            bounds=tuple(tuple(pair) for pair in block['bounds']),
            nx=int(block['nx']),
            nt=int(block['nt']),
            horizon=float(block['horizon']),
            core_margin_factor=core_margin_factor,
        )

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.nx,) * self.dim

    @property
    def field_shape(self) -> Tuple[int, ...]:
        """Shape of a space-time field."""
        return (self.nt + 1,) + self.shape

    @cached_property
    def axes(self) -> List[np.ndarray]:
        return [np.linspace(lo, hi, self.nx) for lo, hi in self.bounds]

    @cached_property
    def dx(self) -> Tuple[float, ...]:
        return tuple((hi - lo) / (self.nx - 1) for lo, hi in self.bounds)

    @property
    def max_dx(self) -> float:
        return max(self.dx)

    @property
    def dt(self) -> float:
        return self.horizon / self.nt

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.nt + 1) * self.dt

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    @cached_property
    def time_weights(self) -> np.ndarray:
        """Trapezoid weights of the time mesh."""
        weights = np.full(self.nt + 1, self.dt)
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return weights

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, component first: shape (dim, *shape)."""
        return np.stack(np.meshgrid(*self.axes, indexing='ij'))

    @cached_property
    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = True
        return mask

    @property
    def core_margin(self) -> float:
        return self.core_margin_factor * np.sqrt(self.horizon)

    @cached_property
    def core_bounds(self) -> Tuple[Tuple[float, float], ...]:
        """Box kept at distance core_margin from the truncated boundary."""
        margin = self.core_margin
        core = tuple((lo + margin, hi - margin) for lo, hi in self.bounds)
        if any(lo >= hi for lo, hi in core):
            raise DomainError(
                f'Domain too small for an interior core at margin {margin:.4g}'
            )
        return core

    @property
    def core_volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.core_bounds]))

    @cached_property
    def core_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        for axis, (lo, hi) in enumerate(self.core_bounds):
            inside = (self.coordinates[axis] >= lo) & (self.coordinates[axis] <= hi)
            mask &= inside
        return mask

    def gradient(self, field: np.ndarray) -> np.ndarray:
        """Central-difference gradient over the trailing spatial axes, component first."""
        offset = field.ndim - self.dim
        if offset < 0:
            raise DomainError(f'field of ndim {field.ndim} has no {self.dim} spatial axes')
        return np.stack([
            np.gradient(field, self.dx[a], axis=offset + a) for a in range(self.dim)
        ])

    def divergence(self, vector_field: np.ndarray) -> np.ndarray:
        """Central-difference divergence of a component-first vector field."""
        if vector_field.shape[0] != self.dim:
            raise DomainError(
                f'vector field has {vector_field.shape[0]} components, grid has dim {self.dim}'
            )
        offset = vector_field.ndim - 1 - self.dim
        return sum(
            np.gradient(vector_field[a], self.dx[a], axis=offset + a) for a in range(self.dim)
        )

    def time_index(self, t: float) -> int:
        """Nearest mesh index of a time in [0, T]."""
        if t < -1e-12 or t > self.horizon + 1e-12:
            raise DomainError(f't={t} outside [0, {self.horizon}]')
        return int(round(t / self.dt))

    def to_dict(self) -> Dict:
        return {
            'dim': self.dim,
            'bounds': [list(pair) for pair in self.bounds],
            'nx': self.nx,
            'nt': self.nt,
            'horizon': self.horizon,
            'dx': list(self.dx),
            'dt': self.dt,
            'core_margin_factor': self.core_margin_factor,
        }


class DiscreteNorms:
    """Grid versions of the spatial L2 norm, the space-time L2 norm and ||.||_T.

    Sums are cell-volume weighted and restricted to ``mask`` (all nodes when
    omitted). Time integrals use trapezoid weights.
    """

    def __init__(self, grid: SpaceTimeGrid, mask: Optional[np.ndarray] = None):
        self.grid = grid
        self.mask = np.ones(grid.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)

    @classmethod
    def on_core(cls, grid: SpaceTimeGrid) -> 'DiscreteNorms':
        return cls(grid, grid.core_mask)

    @property
    def core_mask(self) -> np.ndarray:
        return self.mask

    def _squared(self, values: np.ndarray) -> np.ndarray:
        axes = tuple(range(values.ndim - self.grid.dim, values.ndim))
        return np.sum(np.where(self.mask, values ** 2, 0.0), axis=axes) * self.grid.cell_volume

    def l2(self, u_t: np.ndarray) -> float:
        return float(np.sqrt(self._squared(np.asarray(u_t, dtype=float))))

    def h1_seminorm(self, u_t: np.ndarray) -> float:
        grad = self.grid.gradient(np.asarray(u_t, dtype=float))
        return float(np.sqrt(np.sum(self._squared(grad))))

    def l2_sq_series(self, u: np.ndarray) -> np.ndarray:
        """Squared spatial L2 norm of every time slice of a space-time field."""
        return self._squared(np.asarray(u, dtype=float))

    def h1_sq_series(self, u: np.ndarray) -> np.ndarray:
        """Squared H1 seminorm of every time slice of a space-time field."""
        grad = self.grid.gradient(np.asarray(u, dtype=float))
        return np.sum(self._squared(grad), axis=0)

    def l2_2(self, u: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self.grid.time_weights * self.l2_sq_series(u))))

    def l2_h1(self, u: np.ndarray) -> float:
        """Norm of L2(0, T; H1): time-integrated L2 plus H1 seminorm squares."""
        series = self.l2_sq_series(u) + self.h1_sq_series(u)
        return float(np.sqrt(np.sum(self.grid.time_weights * series)))

    def t_norm(self, u: np.ndarray) -> float:
        sup_l2 = float(np.sqrt(np.max(self.l2_sq_series(u))))
        energy = float(np.sqrt(np.sum(self.grid.time_weights * self.h1_sq_series(u))))
        return sup_l2 + energy
