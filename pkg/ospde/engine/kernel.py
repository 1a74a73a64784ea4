"""
Heat semigroup, resolvent and exponential-averaging primitives.

Fields carry the spatial axes last; any leading axes are treated as a batch.
The implicit realizations reuse the backward Euler stencil of the solver
(zero Dirichlet data on the truncated boundary).
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy import ndimage

from ..exceptions import DomainError, NumericalError
from ..models.grid import SpaceTimeGrid

logger = logging.getLogger(__name__)

# Below this value of lambda*h the exponential weights switch to their Taylor series
TAYLOR_THRESHOLD = 1e-3

SEMIGROUP_METHODS = ('implicit', 'convolution')
RESOLVENT_SCHEMES = ('trapezoid', 'implicit')


@dataclass(frozen=True)
class HeatKernelParams:
    dim: int
    t: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError(f'dim must be 1 or 2, got {self.dim}')
        if not self.t > 0:
            raise DomainError(f'heat kernel needs t > 0, got {self.t}')


@dataclass(frozen=True, eq=False)
class ResolventQuery:
    alpha: float
    horizon: float
    field: np.ndarray

    def __post_init__(self):
        if self.alpha < 0:
            raise DomainError(f'resolvent rate must be >= 0, got {self.alpha}')


def heat_kernel_density(p: HeatKernelParams, x) -> Union[float, np.ndarray]:
    """
    Gaussian transition density (2 pi t)^(-d/2) exp(-|x|^2 / 2t).

    Args:
        p: Dimension and time
        x: Point(s); for d = 2 the components are on the last axis

    Returns:
        Density value(s)
    """
    x = np.asarray(x, dtype=float)
    r2 = x ** 2 if p.dim == 1 else np.sum(x ** 2, axis=-1)
    value = (2.0 * math.pi * p.t) ** (-p.dim / 2.0) * np.exp(-r2 / (2.0 * p.t))
    return float(value) if np.ndim(value) == 0 else value


class HeatStepper:
    """Solves (I - tau * 1/2 Laplacian_h + diag(reaction)) u = rhs with u = 0 on the boundary.

    ``reaction`` is the already tau-scaled zeroth-order coefficient: a scalar,
    or an array over the spatial nodes. 1D uses a banded solve, 2D a sparse LU
    of the 5-point operator (cached for scalar reactions).
    """

    def __init__(self, grid: SpaceTimeGrid, tau: float):
        if not tau > 0:
            raise DomainError(f'step size must be positive, got {tau}')
        self.grid = grid
        self.tau = tau
        self.n_int = grid.nx - 2
        self.coupling = tuple(tau / (2.0 * h ** 2) for h in grid.dx)
        self._lu_cache = {}

    def _interior(self, field: np.ndarray) -> np.ndarray:
        return field[(Ellipsis,) + (slice(1, -1),) * self.grid.dim]

    def _reaction_interior(self, reaction) -> Union[float, np.ndarray]:
        if reaction is None:
            return 0.0
        if np.ndim(reaction) == 0:
            return float(reaction)
        return self._interior(np.asarray(reaction, dtype=float)).ravel()

    def _banded(self, reaction) -> np.ndarray:
        c = self.coupling[0]
        ab = np.empty((3, self.n_int))
        ab[0, :] = -c
        ab[2, :] = -c
        ab[1, :] = 1.0 + 2.0 * c + reaction
        ab[0, 0] = 0.0
        ab[2, -1] = 0.0
        return ab

    def _operator(self, reaction) -> scipy.sparse.csc_matrix:
        n = self.n_int
        eye = scipy.sparse.identity(n, format='csr')
        second = [scipy.sparse.diags([-c, 2.0 * c, -c], [-1, 0, 1], shape=(n, n), format='csr')
                  for c in self.coupling]
        operator = scipy.sparse.kron(second[0], eye) + scipy.sparse.kron(eye, second[1])
        diagonal = np.ones(n * n) + reaction
        return (operator + scipy.sparse.diags(diagonal)).tocsc()

    def _factor(self, reaction):
        key = float(reaction) if np.ndim(reaction) == 0 else None
        if key is not None and key in self._lu_cache:
            return self._lu_cache[key]
        try:
            lu = scipy.sparse.linalg.splu(self._operator(reaction))
        except RuntimeError as e:
            raise NumericalError(f'Sparse factorization failed: {e}')
        if key is not None:
            self._lu_cache[key] = lu
        return lu

    def solve(self, rhs: np.ndarray, reaction=None) -> np.ndarray:
        """Return the solution with the shape of ``rhs`` (leading batch axes allowed)."""
        rhs = np.asarray(rhs, dtype=float)
        spatial = self.grid.shape
        batch = rhs.shape[:rhs.ndim - self.grid.dim]
        if rhs.shape[len(batch):] != spatial:
            raise DomainError(f'field shape {rhs.shape} does not end with grid shape {spatial}')

        interior = self._interior(rhs).reshape(-1, self.n_int ** self.grid.dim).T
        react = self._reaction_interior(reaction)
        try:
            if self.grid.dim == 1:
                solution = scipy.linalg.solve_banded((1, 1), self._banded(react), interior,
                                                     check_finite=False)
            else:
                solution = self._factor(react).solve(interior)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f'Implicit heat step failed: {e}')

        out = np.zeros(rhs.shape)
        out[(Ellipsis,) + (slice(1, -1),) * self.grid.dim] = (
            solution.T.reshape(batch + (self.n_int,) * self.grid.dim)
        )
        return out


@lru_cache(maxsize=32)
def heat_stepper(grid: SpaceTimeGrid, tau: float) -> HeatStepper:
    """Shared stepper per (grid, step size)."""
    return HeatStepper(grid, tau)


def _gaussian_weights(t: float, h: float, count: int) -> np.ndarray:
    offsets = np.arange(-(count - 1), count) * h
    return heat_kernel_density(HeatKernelParams(1, t), offsets) * h


def _convolve(field: np.ndarray, t: float, grid: SpaceTimeGrid) -> np.ndarray:
    out = np.asarray(field, dtype=float)
    first = out.ndim - grid.dim
    for a in range(grid.dim):
        axis = first + a
        trapezoid = np.ones(grid.nx)
        trapezoid[0] = trapezoid[-1] = 0.5
        shape = [1] * out.ndim
        shape[axis] = grid.nx
        weighted = out * trapezoid.reshape(shape)
        out = ndimage.convolve1d(weighted, _gaussian_weights(t, grid.dx[a], grid.nx),
                                 axis=axis, mode='constant', cval=0.0)
    return out


def apply_semigroup(field: np.ndarray, t: float, grid: SpaceTimeGrid,
                    method: str = 'implicit') -> np.ndarray:
    """
    Apply the heat semigroup P_t to a spatial field.

    Args:
        field: Array ending with the grid's spatial shape
        t: Duration, >= 0
        grid: SpaceTimeGrid
        method: 'implicit' (ceil(t/dt) backward Euler steps of equal size) or
            'convolution' (trapezoid-weighted discrete convolution with q_t)

    Returns:
        Array of the same shape
    """
    if t < 0:
        raise DomainError(f'semigroup time must be >= 0, got {t}')
    if method not in SEMIGROUP_METHODS:
        raise DomainError(f'unknown semigroup method {method!r}')
    field = np.asarray(field, dtype=float)
    if t == 0:
        return field.copy()

    if method == 'convolution':
        return _convolve(field, t, grid)

    steps = max(1, math.ceil(t / grid.dt - 1e-9))
    stepper = heat_stepper(grid, t / steps)
    out = field
    for _ in range(steps):
        out = stepper.solve(out)
    return out


def apply_resolvent(q: ResolventQuery, grid: SpaceTimeGrid, scheme: str = 'trapezoid',
                    method: str = 'implicit') -> np.ndarray:
    """
    Discrete resolvent (U_alpha psi)_t = int_t^T e^{-alpha (s-t)} P_{s-t} psi_s ds.

    'trapezoid' runs the trapezoid rule on the time mesh through a backward
    recursion composed with ``apply_semigroup(method=...)``. 'implicit' solves
    ((1 + alpha dt) I - dt 1/2 Laplacian_h) U_k = U_{k+1} + dt psi_k, the exact
    resolvent of the backward Euler generator; it satisfies the resolvent
    equation to round-off.

    Args:
        q: Rate, horizon and space-time field of shape (nt + 1, *grid.shape)
        grid: SpaceTimeGrid
        scheme: 'trapezoid' or 'implicit'
        method: Semigroup realization used by the trapezoid scheme

    Returns:
        Space-time field with U_nt = 0
    """
    if scheme not in RESOLVENT_SCHEMES:
        raise DomainError(f'unknown resolvent scheme {scheme!r}')
    if abs(q.horizon - grid.horizon) > 1e-12 * max(1.0, grid.horizon):
        raise DomainError(f'resolvent horizon {q.horizon} differs from grid horizon {grid.horizon}')
    psi = np.asarray(q.field, dtype=float)
    if psi.shape != grid.field_shape:
        raise DomainError(f'field shape {psi.shape} does not match {grid.field_shape}')
    if not np.all(np.isfinite(psi)):
        raise DomainError('resolvent input is not finite')

    dt = grid.dt
    out = np.zeros_like(psi)

    if scheme == 'implicit':
        stepper = heat_stepper(grid, dt)
        for k in range(grid.nt - 1, -1, -1):
            out[k] = stepper.solve(out[k + 1] + dt * psi[k], reaction=q.alpha * dt)
        return out

    decay = math.exp(-q.alpha * dt)
    carried = np.zeros(grid.shape)
    for k in range(grid.nt - 1, -1, -1):
        weight = 0.5 * dt if k + 1 == grid.nt else dt
        carried = decay * apply_semigroup(weight * psi[k + 1] + carried, dt, grid, method=method)
        out[k] = 0.5 * dt * psi[k] + carried
    return out


def approximate_potential(u: np.ndarray, n: int, grid: SpaceTimeGrid):
    """
    Resolvent approximation of a potential: u_n = n U_n u and f_n = n (u - u_n).

    Uses the implicit resolvent so that U_0 f_n reproduces u_n to round-off.

    Args:
        u: Space-time field
        n: Level, >= 1
        grid: SpaceTimeGrid

    Returns:
        Tuple (u_n, f_n)
    """
    if n < 1:
        raise DomainError(f'approximation level must be >= 1, got {n}')
    u = np.asarray(u, dtype=float)
    u_n = n * apply_resolvent(ResolventQuery(float(n), grid.horizon, u), grid, scheme='implicit')
    return u_n, n * (u - u_n)


def _exp_weights(a: np.ndarray):
    """Weights of the left and right node of one linear piece, per unit of e^{-lambda (s_i - t)}."""
    a = np.asarray(a, dtype=float)
    small = a < TAYLOR_THRESHOLD
    safe = np.where(small, 1.0, a)
    decay = np.exp(-a)
    ratio = -np.expm1(-safe) / safe
    w0 = np.where(small, a / 2 - a ** 2 / 6 + a ** 3 / 24, 1.0 - ratio)
    w1 = np.where(small, a / 2 - a ** 2 / 3 + a ** 3 / 8, ratio - decay)
    return w0, w1, decay


def exp_average(samples, lam: float, dt: Optional[float] = None,
                times: Optional[np.ndarray] = None) -> Union[float, np.ndarray]:
    """
    lam * int_t^T e^{-lam (s-t)} phi(s) ds + e^{-lam (T-t)} phi(T) for piecewise-linear phi.

    Args:
        samples: phi on the mesh of [t, T] (last axis is time)
        lam: Rate, > 0
        dt: Uniform mesh step (ignored when ``times`` is given)
        times: Mesh times, strictly increasing

    Returns:
        Average at t, with the leading shape of ``samples``
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 0 or samples.shape[-1] == 0:
        raise DomainError('exp_average needs a nonempty series')
    if not lam > 0:
        raise DomainError(f'rate must be positive, got {lam}')
    count = samples.shape[-1]
    if times is None:
        if dt is None:
            dt = 1.0 / max(count - 1, 1)
        times = np.arange(count) * dt
    times = np.asarray(times, dtype=float)
    if times.shape != (count,):
        raise DomainError('times and samples have different lengths')
    if count == 1:
        value = samples[..., 0]
        return float(value) if np.ndim(value) == 0 else value

    steps = np.diff(times)
    if np.any(steps <= 0):
        raise DomainError('times must be strictly increasing')
    w0, w1, _ = _exp_weights(lam * steps)
    offset = np.exp(-lam * (times[:-1] - times[0]))
    value = (np.sum(offset * (w0 * samples[..., :-1] + w1 * samples[..., 1:]), axis=-1)
             + math.exp(-lam * (times[-1] - times[0])) * samples[..., -1])
    return float(value) if np.ndim(value) == 0 else value


def exp_average_path(samples, dt: float, lam) -> np.ndarray:
    """
    ``exp_average`` of the future of the series at every mesh time.

    E_k = w0 phi_k + w1 phi_{k+1} + e^{-lam dt} E_{k+1}, E_last = phi_last.
    ``lam`` may be an array broadcasting against the leading axes.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 0 or samples.shape[-1] == 0:
        raise DomainError('exp_average_path needs a nonempty series')
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise DomainError('rate must be positive')
    w0, w1, decay = _exp_weights(lam * dt)

    out = np.empty_like(samples)
    out[..., -1] = samples[..., -1]
    for k in range(samples.shape[-1] - 2, -1, -1):
        out[..., k] = w0 * samples[..., k] + w1 * samples[..., k + 1] + decay * out[..., k + 1]
    return out


def continuity_modulus(samples, dt: float, delta: float) -> Union[float, np.ndarray]:
    """
    sup_{|s-r| <= delta} |phi(s) - phi(r)| for piecewise-linear phi on a uniform mesh.

    The supremum of a piecewise-linear function over the band is attained at
    node pairs or at a node paired with the point delta away, so those are the
    only candidates.
    """
    samples = np.asarray(samples, dtype=float)
    if not delta > 0:
        raise DomainError(f'delta must be positive, got {delta}')
    count = samples.shape[-1]
    best = np.zeros(samples.shape[:-1])
    if count == 1:
        return float(best) if best.ndim == 0 else best

    lags = int(math.floor(delta / dt + 1e-12))
    remainder = delta - lags * dt
    if remainder <= 1e-12 * dt:
        remainder = 0.0

    for lag in range(1, min(lags, count - 1) + 1):
        diff = np.abs(samples[..., lag:] - samples[..., :-lag])
        best = np.maximum(best, np.max(diff, axis=-1))

    if remainder > 0 and lags + 1 <= count - 1:
        theta = remainder / dt
        # phi(t_i + delta) against phi(t_i)
        ahead = (1 - theta) * samples[..., lags:count - 1] + theta * samples[..., lags + 1:]
        best = np.maximum(best, np.max(np.abs(ahead - samples[..., :count - 1 - lags]), axis=-1))
        # phi(t_j - delta) against phi(t_j)
        behind = theta * samples[..., :count - 1 - lags] + (1 - theta) * samples[..., 1:count - lags]
        best = np.maximum(best, np.max(np.abs(samples[..., lags + 1:] - behind), axis=-1))

    return float(best) if best.ndim == 0 else best
