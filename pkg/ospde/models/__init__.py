"""
Data models for grids, problems, solutions, paths and reports.
"""

from .coefficients import CoefficientSet, build_coefficient, COEFFICIENT_FAMILIES
from .grid import DiscreteNorms, SpaceTimeGrid
from .paths import BackwardNoisePath, ForwardPathBatch, PathProcesses, ResidualStats
from .problem import NO_OBSTACLE, HypothesisReport, ObstacleProblem
from .reports import (
    CalculusCheck,
    CalculusSummary,
    EnergyComparison,
    GradientDecayReport,
    MazurResult,
    MeasureComparison,
    PenaltyBoundTable,
    SkorokhodTable,
    SmoothingTable,
)
from .solution import DiscreteRegularMeasure, PenalizedSolution, SweepReport

__all__ = [
    'SpaceTimeGrid', 'DiscreteNorms', 'CoefficientSet', 'build_coefficient',
    'COEFFICIENT_FAMILIES', 'ObstacleProblem', 'HypothesisReport', 'NO_OBSTACLE',
    'BackwardNoisePath', 'ForwardPathBatch', 'PathProcesses', 'ResidualStats',
    'PenalizedSolution', 'DiscreteRegularMeasure', 'SweepReport',
    'SkorokhodTable', 'PenaltyBoundTable', 'EnergyComparison', 'MeasureComparison',
    'GradientDecayReport', 'SmoothingTable', 'CalculusCheck', 'CalculusSummary', 'MazurResult',
]
