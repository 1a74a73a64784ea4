"""
Tests for noise sampling, forward paths and the discrete stochastic integrals.
"""

import csv

import numpy as np
import pytest

from ospde.engine.noise import (
    backward_ito_integral,
    export_path_csv,
    forward_ito_integral,
    sample_backward_noise,
    sample_field,
    sample_forward_paths,
    symmetric_integral,
    zero_noise,
)
from ospde.exceptions import DomainError
from ospde.models.grid import SpaceTimeGrid


@pytest.mark.unit
class TestBackwardNoise:
    """Test the backward driving noise."""

    def test_reproducible(self):
        """One seed, one path."""
        a = sample_backward_noise(3, 50, 2, 0.01)
        b = sample_backward_noise(3, 50, 2, 0.01)
        assert np.array_equal(a.increments, b.increments)
        assert a.increments.shape == (50, 2)

    def test_values_start_at_zero(self):
        """B_0 = 0 and B_k sums the increments."""
        noise = sample_backward_noise(3, 10, 1, 0.1)
        assert np.all(noise.values[0] == 0.0)
        assert noise.values[-1, 0] == pytest.approx(np.sum(noise.increments))

    def test_increment_variance(self):
        """Increments have variance dt."""
        noise = sample_backward_noise(11, 20000, 1, 0.01)
        assert np.var(noise.increments) == pytest.approx(0.01, rel=0.05)

    def test_zero_noise(self):
        noise = zero_noise(5, 1, 0.1)
        assert noise.seed is None
        assert not np.any(noise.increments)

    def test_invalid_sizes(self):
        with pytest.raises(DomainError):
            sample_backward_noise(1, 0, 1, 0.1)
        with pytest.raises(DomainError):
            sample_backward_noise(1, 5, 1, 0.0)


@pytest.mark.unit
class TestForwardPaths:
    """Test forward path batches."""

    def test_independent_of_block_size(self, grid_1d):
        """Per-path streams make blocking irrelevant."""
        a = sample_forward_paths(grid_1d, 100, seed=9, block_size=7)
        b = sample_forward_paths(grid_1d, 100, seed=9, block_size=64)
        assert np.array_equal(a.x0, b.x0)
        assert np.array_equal(a.increments, b.increments)

    def test_prefix_stable(self, grid_1d):
        """Path m does not depend on the batch size."""
        small = sample_forward_paths(grid_1d, 10, seed=9)
        large = sample_forward_paths(grid_1d, 30, seed=9)
        assert np.array_equal(small.positions, large.positions[:10])

    def test_start_in_core(self, grid_1d, paths):
        """Paths start uniformly on the interior core."""
        assert np.all(np.abs(paths.x0) <= 1.5)
        assert paths.weight == pytest.approx(3.0)
        assert np.all(paths.valid[:, 0])

    def test_valid_is_absorbing(self, paths):
        """Once a path leaves the core it stays invalid."""
        valid = paths.valid.astype(int)
        assert np.all(np.diff(valid, axis=1) <= 0)
        assert np.array_equal(paths.never_exits, paths.valid[:, -1])

    def test_positions_shape(self, grid_1d):
        """Paths started at t_k run to T."""
        batch = sample_forward_paths(grid_1d, 5, seed=1, start_index=10)
        assert batch.positions.shape == (5, grid_1d.nt - 10 + 1, 1)
        assert np.array_equal(batch.positions[:, 0], batch.x0)

    def test_invalid_start(self, grid_1d):
        with pytest.raises(DomainError):
            sample_forward_paths(grid_1d, 5, seed=1, start_index=grid_1d.nt)

    def test_summary(self, paths):
        data = paths.to_dict()
        assert data['count'] == 400
        assert 0.0 <= data['exit_fraction'] <= 1.0


@pytest.mark.unit
class TestIntegrals:
    """Test the discrete stochastic integrals."""

    def test_forward_left_endpoint(self):
        """sum z_k dW_k uses the left values."""
        values = np.array([[1.0], [2.0], [3.0]])
        dW = np.array([[0.5], [-1.0]])
        assert forward_ito_integral(values, dW) == pytest.approx(1.0 * 0.5 - 2.0)

    def test_backward_right_endpoint(self):
        """sum h_{k+1} dB_k uses the right values."""
        values = np.array([[1.0], [2.0], [3.0]])
        dB = np.array([[0.5], [-1.0]])
        assert backward_ito_integral(values, dB) == pytest.approx(2.0 * 0.5 - 3.0)

    def test_symmetric_is_sum(self):
        """Both endpoints, unhalved."""
        values = np.array([[1.0], [2.0], [3.0]])
        dW = np.array([[0.5], [-1.0]])
        assert symmetric_integral(values, dW) == pytest.approx(3.0 * 0.5 - 5.0)

    def test_batched_paths(self, rng):
        """Leading axes are paths."""
        values = rng.standard_normal((4, 6, 2))
        dW = rng.standard_normal((4, 5, 2))
        out = forward_ito_integral(values, dW)
        assert out.shape == (4,)
        assert out[2] == pytest.approx(np.sum(values[2, :5] * dW[2]))

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            symmetric_integral(np.ones((2, 1)), np.ones((2, 1)))

    def test_component_mismatch(self):
        with pytest.raises(DomainError):
            forward_ito_integral(np.ones((3, 2)), np.ones((2, 1)))


@pytest.mark.unit
class TestIntegralProperties:
    """Monte Carlo properties of the integrals along sampled forward paths."""

    @pytest.fixture(scope='class')
    def walks(self):
        grid = SpaceTimeGrid.from_dict(
            {'dim': 1, 'bounds': [[-3.0, 3.0]], 'nx': 61, 'nt': 20, 'horizon': 0.25})
        return sample_forward_paths(grid, 10000, seed=21)

    @staticmethod
    def _band(samples):
        return 3.0 * np.std(samples, ddof=1) / np.sqrt(samples.size)

    def test_forward_is_centered(self, walks):
        """E sum W_k dW_k = 0."""
        samples = forward_ito_integral(walks.positions, walks.increments)
        assert abs(np.mean(samples)) <= self._band(samples)

    def test_backward_correction(self, walks):
        """E sum W_{k+1} dW_k = T."""
        samples = backward_ito_integral(walks.positions, walks.increments)
        assert abs(np.mean(samples) - 0.25) <= self._band(samples)

    def test_quadratic_covariation(self, walks):
        """Backward minus forward is sum dW_k^2, whose mean is T."""
        dW = walks.increments
        difference = (backward_ito_integral(walks.positions, dW)
                      - forward_ito_integral(walks.positions, dW))
        squares = np.sum(dW ** 2, axis=(1, 2))
        assert np.allclose(difference, squares, atol=1e-12)
        assert abs(np.mean(squares) - 0.25) <= self._band(squares)

    def test_symmetric_telescopes(self, walks):
        """sum (W_k + W_{k+1}) dW_k = W_T^2 - W_0^2 on every path."""
        W = walks.positions[..., 0]
        samples = symmetric_integral(walks.positions, walks.increments)
        assert np.allclose(samples, W[:, -1] ** 2 - W[:, 0] ** 2, atol=1e-12)


@pytest.mark.unit
class TestSampleField:
    """Test reading fields along paths."""

    def test_linear_field_exact(self, grid_1d, paths):
        """Multilinear interpolation reproduces affine fields."""
        field = np.broadcast_to(grid_1d.axes[0], grid_1d.field_shape)
        values = sample_field(field, grid_1d, paths.positions)
        inside = paths.inside_domain
        assert np.allclose(values[inside], paths.positions[..., 0][inside])

    def test_fill_outside(self, grid_1d):
        """Positions outside the domain read the fill value."""
        positions = np.full((1, grid_1d.nt + 1, 1), 10.0)
        values = sample_field(np.ones(grid_1d.field_shape), grid_1d, positions)
        assert np.all(values == 0.0)

    def test_past_horizon(self, grid_1d):
        positions = np.zeros((1, grid_1d.nt + 1, 1))
        with pytest.raises(DomainError):
            sample_field(np.ones(grid_1d.field_shape), grid_1d, positions, start_index=1)

    def test_export_path(self, grid_1d, paths, tmp_path):
        """One row per mesh time with W and B components."""
        noise = sample_backward_noise(4, grid_1d.nt, 1, grid_1d.dt)
        path = export_path_csv(paths, noise, 3, tmp_path / 'path.csv')
        with open(path) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ['k', 't', 'W1', 'B1']
        assert len(rows) == grid_1d.nt + 2
        assert float(rows[1][2]) == paths.x0[3, 0]
