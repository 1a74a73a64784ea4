"""
Tests for the numerical lemma checks.
"""

import numpy as np
import pytest

from ospde.engine.lemmas import (
    calculus_trials,
    lemma_calculus,
    lemma_divergence_gradient_decay,
    lemma_gradient_decay,
    lemma_noise_gradient_decay,
    lemma_obstacle_smoothing,
    mazur_combine,
    oscillating_instance,
    primitive_field,
    project_simplex,
)
from ospde.engine.verify import source_field
from ospde.exceptions import DomainError


@pytest.mark.unit
class TestGradientDecay:
    """Test the gradient decay of damped heat equations."""

    def test_source_variant(self, grid_1d):
        """Energies fall with n and every ratio is positive."""
        f = source_field(grid_1d, {'kind': 'constant', 'value': 1.0})
        report = lemma_gradient_decay(f, grid_1d, [1, 10, 100])
        assert report.variant == 'source'
        assert report.decreasing
        assert all(ratio > 0.0 for ratio in report.ratios)
        assert len(report.rows()) == 3

    def test_divergence_variant(self, grid_1d):
        """Forcing by div g decays as well."""
        f = source_field(grid_1d, {'kind': 'bump', 'width': 0.3})
        g = primitive_field(f, grid_1d)
        report = lemma_divergence_gradient_decay(g, grid_1d, [1, 10, 100])
        assert report.variant == 'divergence'
        assert report.energies[-1] < report.energies[0]
        assert report.passed

    def test_primitive_field(self, grid_1d):
        """div g reproduces f to second order in the interior."""
        f = source_field(grid_1d, {'kind': 'bump', 'width': 0.5})
        g = primitive_field(f, grid_1d)
        div = grid_1d.divergence(g[:, 0])
        assert np.max(np.abs(div - f[0])[5:-5]) < 2e-2

    def test_noise_variant(self, grid_1d):
        """Seed-averaged energy under h . dB shrinks with n."""
        h = np.full((1,) + grid_1d.shape, 0.1)
        report = lemma_noise_gradient_decay(h, grid_1d, [1, 100], seeds=[1, 2, 3])
        assert report.variant == 'noise'
        assert report.energies[-1] < report.energies[0]

    def test_noise_needs_seeds(self, grid_1d):
        with pytest.raises(DomainError):
            lemma_noise_gradient_decay(np.zeros((1,) + grid_1d.shape), grid_1d, [1], seeds=[])

    @pytest.mark.parametrize('schedule', [[], [0, 1]])
    def test_invalid_schedule(self, grid_1d, schedule):
        with pytest.raises(DomainError):
            lemma_gradient_decay(np.ones(grid_1d.shape), grid_1d, schedule)


@pytest.mark.unit
class TestObstacleSmoothing:
    """Test exponential smoothing along obstacle paths."""

    def test_random_walks_within_bound(self, rng):
        """Every path obeys the modulus bound at every rate."""
        dt = 0.01
        S = np.cumsum(rng.standard_normal((200, 101)) * np.sqrt(dt), axis=1)
        table = lemma_obstacle_smoothing(S, dt, [1, 10, 100, 1000], delta=0.05)
        assert sum(table.violations) == 0
        assert table.count == 200
        assert table.mean_sup_error[-1] < table.mean_sup_error[0]

    def test_non_finite(self):
        with pytest.raises(DomainError):
            lemma_obstacle_smoothing(np.array([[0.0, np.nan]]), 0.1, [1], delta=0.1)


@pytest.mark.unit
class TestCalculus:
    """Test the exponential-average inequalities."""

    def test_linear_function(self):
        """Both margins are nonnegative on a line."""
        check = lemma_calculus(np.linspace(0.0, 1.0, 101), lam=5.0, delta=0.3)
        assert check.passed
        assert check.first_margin >= 0.0

    @pytest.mark.parametrize('delta', [0.0, 1.0, 2.0])
    def test_delta_window(self, delta):
        """delta must lie strictly inside (0, T)."""
        with pytest.raises(DomainError):
            lemma_calculus(np.linspace(0.0, 1.0, 11), lam=1.0, delta=delta)

    def test_rate_positive(self):
        with pytest.raises(DomainError):
            lemma_calculus(np.linspace(0.0, 1.0, 11), lam=0.0, delta=0.5)

    def test_random_trials(self):
        """Seeded random walks never break either inequality."""
        summary = calculus_trials(200, 21, (1.0, 200.0), (0.01, 0.3), seed=3)
        assert summary.violations == 0
        assert summary.passed
        assert summary.trials == 200


@pytest.mark.unit
class TestMazur:
    """Test the simplex projection and the convex combiner."""

    def test_projection_clips(self):
        assert np.allclose(project_simplex(np.array([0.5, 2.0, -1.0])), [0.0, 1.0, 0.0])

    def test_projection_on_simplex(self, rng):
        """Outputs are probability vectors; simplex points stay put."""
        w = project_simplex(rng.standard_normal(8))
        assert w.sum() == pytest.approx(1.0)
        assert np.all(w >= 0.0)
        point = np.array([0.2, 0.3, 0.5])
        assert np.allclose(project_simplex(point), point)

    def test_oscillating_instance(self):
        """Averages beat every single vector by an order of magnitude."""
        vectors, target = oscillating_instance(40)
        result = mazur_combine(vectors, target, iterations=5000, target_ratio=0.1)
        assert result.passed
        assert result.distance <= result.best_single_distance
        assert result.weights.sum() == pytest.approx(1.0)

    def test_opposite_pair(self, rng):
        """x and -x average to the origin with equal weights."""
        x = rng.standard_normal(8)
        result = mazur_combine([x, -x], np.zeros(8), iterations=50)
        assert result.weights == pytest.approx([0.5, 0.5], abs=1e-9)
        assert result.distance < 1e-9
        assert result.best_single_distance == pytest.approx(np.linalg.norm(x))

    def test_single_vector(self, rng):
        """One vector is its own best combination."""
        x = rng.standard_normal(5)
        result = mazur_combine([x], np.zeros(5), iterations=10)
        assert result.distance == pytest.approx(np.linalg.norm(x))
        assert result.iterations == 0

    def test_errors(self):
        with pytest.raises(DomainError):
            mazur_combine([], np.zeros(3))
        with pytest.raises(DomainError):
            mazur_combine([np.zeros(3)], np.zeros(4))
        with pytest.raises(DomainError):
            oscillating_instance(1)
