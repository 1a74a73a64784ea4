"""
Result tables of the verification and lemma checks.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..utils.audit import to_plain


class TableMixin:
    """``to_dict`` through dataclass fields, with numpy values made JSON-safe."""

    def to_dict(self) -> Dict[str, Any]:
        data = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}
        data['passed'] = self.passed
        return to_plain(data)


@dataclass
class SkorokhodTable(TableMixin):
    """Per-level Skorokhod statistics along a sweep."""

    schedule: List[int]
    complementarity: List[float]
    complementarity_stderr: List[float]
    sup_negative: List[float]
    sup_negative_stderr: List[float]
    complementarity_spearman: float
    sup_negative_spearman: float
    complementarity_inversions: int
    sup_negative_inversions: int
    allowed_inversions: int
    excluded_fraction: float

    @property
    def passed(self) -> bool:
        return (self.complementarity_inversions <= self.allowed_inversions
                and self.sup_negative_inversions <= self.allowed_inversions)

    header = ['n', 'complementarity', 'complementarity_stderr', 'sup_negative', 'sup_negative_stderr']

    def rows(self):
        return [list(row) for row in zip(self.schedule, self.complementarity, self.complementarity_stderr,
                                         self.sup_negative, self.sup_negative_stderr)]


@dataclass
class PenaltyBoundTable(TableMixin):
    """E (K_T^n)^2 along the schedule."""

    schedule: List[int]
    second_moments: List[float]
    stderr: List[float]
    ratio: float
    max_ratio: float

    @property
    def passed(self) -> bool:
        return bool(np.all(np.isfinite(self.second_moments)) and self.ratio <= self.max_ratio)

    header = ['n', 'second_moment', 'stderr']

    def rows(self):
        return [list(row) for row in zip(self.schedule, self.second_moments, self.stderr)]


@dataclass
class EnergyComparison(TableMixin):
    """Grid energy against the Monte Carlo second moment of the additive functional."""

    times: List[float]
    lhs: List[float]
    rhs: List[float]
    stderr: List[float]
    allowance: List[float]
    relative_error: List[float]
    stderr_multiplier: float
    exit_fraction: float

    @property
    def passed(self) -> bool:
        return all(abs(l - r) <= self.stderr_multiplier * s + a
                   for l, r, s, a in zip(self.lhs, self.rhs, self.stderr, self.allowance))

    header = ['t', 'lhs', 'rhs', 'stderr', 'allowance', 'relative_error']

    def rows(self):
        return [list(row) for row in zip(self.times, self.lhs, self.rhs, self.stderr,
                                         self.allowance, self.relative_error)]


@dataclass
class MeasureComparison(TableMixin):
    """nu(phi) from the grid against its Monte Carlo representation."""

    names: List[str]
    grid_values: List[float]
    mc_values: List[float]
    stderr: List[float]
    allowance: List[float]
    stderr_multiplier: float

    @property
    def passed(self) -> bool:
        return all(abs(g - m) <= self.stderr_multiplier * s + a
                   for g, m, s, a in zip(self.grid_values, self.mc_values, self.stderr, self.allowance))

    header = ['test_function', 'grid', 'monte_carlo', 'stderr', 'allowance']

    def rows(self):
        return [list(row) for row in zip(self.names, self.grid_values, self.mc_values,
                                         self.stderr, self.allowance)]


@dataclass
class GradientDecayReport(TableMixin):
    """Time-integrated gradient energy of the n-damped solutions.

    ``ratios`` holds G_n = energy / bracket for the source variant and is
    empty for the divergence and noise variants, which only need the decay.
    """

    variant: str
    schedule: List[int]
    energies: List[float]
    brackets: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)
    max_spread: float = 10.0
    allowed_inversions: int = 0

    @property
    def spread(self) -> float:
        positive = [r for r in self.ratios if r > 0]
        if not positive:
            return 1.0
        return max(positive) / min(positive)

    @property
    def decreasing(self) -> bool:
        inversions = sum(1 for a, b in zip(self.energies, self.energies[1:]) if b > a)
        return inversions <= self.allowed_inversions

    @property
    def passed(self) -> bool:
        if not np.all(np.isfinite(self.energies)):
            return False
        if self.variant == 'source':
            return self.spread <= self.max_spread and self.decreasing
        return self.decreasing and (self.energies[-1] <= self.energies[0])

    header = ['n', 'energy', 'bracket', 'ratio']

    def rows(self):
        brackets = self.brackets or [''] * len(self.schedule)
        ratios = self.ratios or [''] * len(self.schedule)
        return [list(row) for row in zip(self.schedule, self.energies, brackets, ratios)]


@dataclass
class SmoothingTable(TableMixin):
    """Sup-error of the exponential average of the obstacle along paths."""

    schedule: List[int]
    mean_sup_error: List[float]
    stderr: List[float]
    violations: List[int]
    count: int
    delta: float
    allowed_inversions: int

    @property
    def inversions(self) -> int:
        return sum(1 for a, b in zip(self.mean_sup_error, self.mean_sup_error[1:]) if b > a)

    @property
    def passed(self) -> bool:
        return sum(self.violations) == 0 and self.inversions <= self.allowed_inversions

    header = ['n', 'mean_sup_error', 'stderr', 'violations']

    def rows(self):
        return [list(row) for row in zip(self.schedule, self.mean_sup_error, self.stderr, self.violations)]


@dataclass
class CalculusCheck(TableMixin):
    """Margins (bound minus left side) of the two exponential-average inequalities."""

    first_margin: float
    second_margin: float
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.first_margin >= -self.tolerance and self.second_margin >= -self.tolerance


@dataclass
class MazurResult(TableMixin):
    """Simplex weights of the best convex combination found."""

    weights: np.ndarray
    distance: float
    best_single_distance: float
    best_single_index: int
    iterations: int
    target_ratio: Optional[float] = None

    @property
    def passed(self) -> bool:
        on_simplex = bool(np.all(self.weights >= 0) and abs(np.sum(self.weights) - 1.0) <= 1e-12)
        not_worse = self.distance <= self.best_single_distance + 1e-12
        if self.target_ratio is None:
            return on_simplex and not_worse
        return on_simplex and not_worse and self.distance <= self.target_ratio * self.best_single_distance


@dataclass
class CalculusSummary(TableMixin):
    """Seeded property run of the exponential-average inequalities."""

    trials: int
    violations: int
    min_first_margin: float
    min_second_margin: float
    seed: int
    tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.violations == 0
