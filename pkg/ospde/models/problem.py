"""
Obstacle problem instances and the terminal/obstacle registries.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional

import numpy as np

from ..exceptions import ConfigError
from .coefficients import CoefficientSet
from .grid import SpaceTimeGrid

# Value standing in for "no obstacle"
NO_OBSTACLE = -1.0e6


def _center(values: Dict[str, Any], dim: int) -> np.ndarray:
    center = np.atleast_1d(np.asarray(values.get('center', 0.0), dtype=float))
    if center.size == 1:
        center = np.full(dim, center[0])
    if center.size != dim:
        raise ConfigError(f'center must have {dim} components')
    return center.reshape((dim,) + (1,) * dim)


def _zero(x, values):
    return np.zeros(x.shape[1:])


def _constant(x, values):
    return np.full(x.shape[1:], float(values.get('value', 0.0)))


def _put(x, values):
    return np.maximum(float(values.get('strike', 1.0)) - np.exp(x[0]), 0.0)


def _bump(x, values):
    width = float(values.get('width', 0.2))
    if width <= 0:
        raise ConfigError('width must be positive')
    dist2 = np.sum((x - _center(values, x.shape[0])) ** 2, axis=0)
    return float(values.get('amplitude', 1.0)) * np.exp(-dist2 / (2.0 * width ** 2))


def _tent(x, values):
    dist = np.sqrt(np.sum((x - _center(values, x.shape[0])) ** 2, axis=0))
    return float(values.get('height', 0.0)) - float(values.get('slope', 1.0)) * dist


# name -> (evaluator, allowed parameters)
TERMINAL_FAMILIES = {
    'zero': (_zero, set()),
    'constant': (_constant, {'value'}),
    'put': (_put, {'strike'}),
    'bump': (_bump, {'amplitude', 'center', 'width'}),
    'tent': (_tent, {'height', 'slope', 'center'}),
}

OBSTACLE_FAMILIES = {
    'none': set(),
    'constant': {'value'},
    'put': {'strike'},
    'terminal': set(),
    'bump': {'amplitude', 'center', 'width'},
    'tent': {'height', 'slope', 'center'},
    'wave': {'amplitude', 'frequency', 'speed', 'level'},
}


def _split(block: Optional[Dict[str, Any]], default: str, allowed: Dict, where: str):
    block = dict(block or {'kind': default})
    kind = block.pop('kind', default)
    if kind not in allowed:
        raise ConfigError(f'{where}: unknown kind {kind!r}')
    params = allowed[kind] if isinstance(allowed[kind], set) else allowed[kind][1]
    unknown = sorted(set(block) - params)
    if unknown:
        raise ConfigError(f'{where}: unknown parameters for {kind!r}: {", ".join(unknown)}')
    return kind, block


def terminal_field(grid: SpaceTimeGrid, block: Optional[Dict[str, Any]]) -> np.ndarray:
    """Evaluate the terminal condition on the spatial nodes."""
    kind, values = _split(block, 'zero', TERMINAL_FAMILIES, 'terminal')
    return TERMINAL_FAMILIES[kind][0](grid.coordinates, values)


def obstacle_field(grid: SpaceTimeGrid, block: Optional[Dict[str, Any]], phi: np.ndarray) -> np.ndarray:
    """
    Evaluate the obstacle on the full space-time mesh.

    Args:
        grid: SpaceTimeGrid
        block: Obstacle registry block
        phi: Terminal field, used by the 'terminal' family

    Returns:
        Array of shape (nt + 1, *grid.shape)
    """
    kind, values = _split(block, 'none', OBSTACLE_FAMILIES, 'obstacle')
    x = grid.coordinates
    if kind == 'none':
        slice_ = np.full(grid.shape, NO_OBSTACLE)
    elif kind == 'terminal':
        slice_ = np.asarray(phi, dtype=float)
    elif kind == 'wave':
        amplitude = float(values.get('amplitude', 1.0))
        frequency = float(values.get('frequency', 1.0))
        speed = float(values.get('speed', 0.0))
        level = float(values.get('level', 0.0))
        phase = frequency * x[0]
        return np.stack([
            level + amplitude * np.sin(phase + speed * t) for t in grid.times
        ])
    else:
        slice_ = TERMINAL_FAMILIES[kind][0](x, values)
    return np.broadcast_to(slice_, grid.field_shape).copy()


@dataclass(frozen=True, eq=False)
class ObstacleProblem:
    """Terminal data, coefficients and obstacle on a grid."""

    grid: SpaceTimeGrid
    coeffs: CoefficientSet
    phi: np.ndarray
    v: np.ndarray
    terminal_spec: Dict[str, Any] = field(default_factory=lambda: {'kind': 'zero'})
    obstacle_spec: Dict[str, Any] = field(default_factory=lambda: {'kind': 'none'})

    def __post_init__(self):
        self.phi.setflags(write=False)
        self.v.setflags(write=False)

    @property
    def is_deterministic(self) -> bool:
        return self.coeffs.is_deterministic

    @cached_property
    def has_obstacle(self) -> bool:
        """True when v rises above the no-obstacle value anywhere."""
        return bool(np.any(self.v > NO_OBSTACLE))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'grid': self.grid.to_dict(),
            'coefficients': self.coeffs.to_dict(),
            'terminal': dict(self.terminal_spec),
            'obstacle': dict(self.obstacle_spec),
        }


@dataclass
class HypothesisReport:
    """Outcome of the coefficient hypothesis probe."""

    contraction_margin: float
    margin_passed: bool
    lipschitz: Dict[str, Dict[str, float]]
    finite: Dict[str, bool]
    hd2_norms: Dict[str, float]
    probe_count: int
    seed: int

    @property
    def passed(self) -> bool:
        return (self.margin_passed
                and all(entry['passed'] for entry in self.lipschitz.values())
                and all(self.finite.values()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'contraction_margin': self.contraction_margin,
            'margin_passed': self.margin_passed,
            'lipschitz': self.lipschitz,
            'finite': self.finite,
            'hd2_norms': self.hd2_norms,
            'probe_count': self.probe_count,
            'seed': self.seed,
            'passed': self.passed,
        }
