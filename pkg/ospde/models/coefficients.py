"""
Coefficient families for f, g and h, and the CoefficientSet carrying them.

Evaluators take ``(t, x, y, z)`` with component-first arrays: ``x`` and ``z``
have shape (d, *S), ``y`` has shape S. ``f`` returns shape S, ``g`` returns
(d, *S) and ``h`` returns (d1, *S). Families are plain classes so they pickle
into worker processes.
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from ..exceptions import ConfigError, DomainError

ROLES = ('f', 'g', 'h')


class CoefficientFamily:
    """Base class for registry families."""

    kind = 'base'
    params: Dict[str, Any] = {}
    roles = ROLES
    uses_solution = True

    def __init__(self, role: str, dim: int, d1: int = 1, **params):
        if role not in self.roles:
            raise ConfigError(f'coefficient family {self.kind!r} cannot be used for {role}')
        unknown = sorted(set(params) - set(self.params))
        if unknown:
            raise ConfigError(f'{role}: unknown parameters for {self.kind!r}: {", ".join(unknown)}')
        self.role = role
        self.dim = dim
        self.d1 = d1
        values = dict(self.params)
        values.update(params)
        self.values = values
        for name in ('c', 'value'):
            if name in self.values:
                self._offset(name)

    @property
    def out_dim(self) -> int:
        return {'f': 1, 'g': self.dim, 'h': self.d1}[self.role]

    @property
    def is_zero(self) -> bool:
        return False

    def _offset(self, name: str) -> np.ndarray:
        """Per-component constant, broadcast from a scalar or checked against out_dim."""
        value = np.atleast_1d(np.asarray(self.values[name], dtype=float))
        if value.size == 1:
            value = np.full(self.out_dim, value[0])
        if value.size != self.out_dim:
            raise ConfigError(f'{self.role}.{name} must have {self.out_dim} components')
        return value

    def __call__(self, t, x, y, z) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> Dict[str, Any]:
        data = {'kind': self.kind}
        data.update(self.values)
        return data

    def __repr__(self):
        return f'<{type(self).__name__} {self.role} {self.values}>'


def _expand(values: np.ndarray, like: np.ndarray) -> np.ndarray:
    """Reshape a per-component vector to broadcast against a field of shape S."""
    return values.reshape((-1,) + (1,) * np.ndim(like))


class ZeroCoefficient(CoefficientFamily):
    kind = 'zero'
    params = {}
    uses_solution = False

    @property
    def is_zero(self) -> bool:
        return True

    def __call__(self, t, x, y, z):
        y = np.asarray(y, dtype=float)
        if self.role == 'f':
            return np.zeros_like(y)
        return np.zeros((self.out_dim,) + y.shape)


class ConstantCoefficient(CoefficientFamily):
    kind = 'constant'
    params = {'value': 0.0}
    uses_solution = False

    @property
    def is_zero(self) -> bool:
        return not np.any(self._offset('value'))

    def __call__(self, t, x, y, z):
        y = np.asarray(y, dtype=float)
        value = self._offset('value')
        if self.role == 'f':
            return np.full(y.shape, value[0])
        return _expand(value, y) * np.ones((1,) + y.shape)


class BumpCoefficient(CoefficientFamily):
    """Gaussian bump in space: amplitude * exp(-|x - center|^2 / (2 width^2))."""

    kind = 'bump'
    params = {'amplitude': 1.0, 'center': 0.0, 'width': 0.2}
    roles = ('f',)
    uses_solution = False

    def __call__(self, t, x, y, z):
        x = np.asarray(x, dtype=float)
        center = np.atleast_1d(np.asarray(self.values['center'], dtype=float))
        if center.size == 1:
            center = np.full(x.shape[0], center[0])
        if center.size != x.shape[0]:
            raise ConfigError(f'f.center must have {x.shape[0]} components')
        width = float(self.values['width'])
        if width <= 0:
            raise ConfigError('f.width must be positive')
        dist2 = np.sum((x - _expand(center, x[0])) ** 2, axis=0)
        value = self.values['amplitude'] * np.exp(-dist2 / (2.0 * width ** 2))
        return value * np.ones(np.shape(y))


class LinearCoefficient(CoefficientFamily):
    """Affine in (y, z).

    f = c + a*y + b*sum_i z_i; g_i = c_i + a*y + b*z_i; h_j = c_j + a*y + b*z_1.
    """

    kind = 'linear'
    params = {'a': 0.0, 'b': 0.0, 'c': 0.0}

    def __call__(self, t, x, y, z):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        a, b = float(self.values['a']), float(self.values['b'])
        c = self._offset('c')
        if self.role == 'f':
            return c[0] + a * y + b * np.sum(z, axis=0)
        if self.role == 'g':
            return _expand(c, y) + a * y + b * z
        return _expand(c, y) + a * y + b * z[0]


class SineCoefficient(CoefficientFamily):
    """Saturating family.

    f = c + a*sin(y) + b*sin(z_1); g_i = c_i + a*sin(y) + b*sin(z_i);
    h_j = c_j + a*sin(y) + b*sin(z_1).
    """

    kind = 'sine'
    params = {'a': 0.0, 'b': 0.0, 'c': 0.0}

    def __call__(self, t, x, y, z):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        a, b = float(self.values['a']), float(self.values['b'])
        c = self._offset('c')
        if self.role == 'f':
            return c[0] + a * np.sin(y) + b * np.sin(z[0])
        if self.role == 'g':
            return _expand(c, y) + a * np.sin(y) + b * np.sin(z)
        return _expand(c, y) + a * np.sin(y) + b * np.sin(z[0])


COEFFICIENT_FAMILIES = {
    family.kind: family
    for family in (ZeroCoefficient, ConstantCoefficient, BumpCoefficient,
                   LinearCoefficient, SineCoefficient)
}


def build_coefficient(role: str, block: Dict[str, Any], dim: int, d1: int = 1) -> CoefficientFamily:
    """
    Instantiate a registry family from its config block.

    Args:
        role: 'f', 'g' or 'h'
        block: ``{"kind": ..., **params}``
        dim: Spatial dimension
        d1: Noise dimension

    Returns:
        Family instance
    """
    block = dict(block or {'kind': 'zero'})
    kind = block.pop('kind', 'zero')
    family = COEFFICIENT_FAMILIES.get(kind)
    if family is None:
        raise ConfigError(f'{role}: unknown coefficient kind {kind!r}')
    return family(role, dim, d1, **block)


@dataclass(frozen=True)
class CoefficientSet:
    """f, g, h with their declared constants (C, alpha, beta)."""

    f: CoefficientFamily
    g: CoefficientFamily
    h: CoefficientFamily
    lip_C: float = 0.0
    lip_alpha: float = 0.0
    lip_beta: float = 0.0
    d1: int = 1
    dim: int = 1

    def __post_init__(self):
        for name in ('lip_C', 'lip_alpha', 'lip_beta'):
            if getattr(self, name) < 0:
                raise DomainError(f'{name} must be nonnegative')

    @classmethod
    def from_config(cls, block: Dict[str, Any], dim: int) -> 'CoefficientSet':
        block = block or {}
        d1 = int(block.get('d1', 1))
        return cls(
            f=build_coefficient('f', block.get('f'), dim, d1),
            g=build_coefficient('g', block.get('g'), dim, d1),
            h=build_coefficient('h', block.get('h'), dim, d1),
            lip_C=float(block.get('lip_C', 0.0)),
            lip_alpha=float(block.get('lip_alpha', 0.0)),
            lip_beta=float(block.get('lip_beta', 0.0)),
            d1=d1,
            dim=dim,
        )

    @property
    def contraction_margin(self) -> float:
        return 0.5 - self.lip_alpha - 0.5 * self.lip_beta ** 2

    @property
    def is_deterministic(self) -> bool:
        return self.h.is_zero

    def to_dict(self) -> Dict[str, Any]:
        return {
            'f': self.f.to_dict(),
            'g': self.g.to_dict(),
            'h': self.h.to_dict(),
            'lip_C': self.lip_C,
            'lip_alpha': self.lip_alpha,
            'lip_beta': self.lip_beta,
            'd1': self.d1,
        }
