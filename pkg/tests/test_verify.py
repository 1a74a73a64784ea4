"""
Tests for the Monte Carlo verification along forward paths.
"""

import numpy as np
import pytest

from ospde.engine.noise import sample_backward_noise, sample_forward_paths, zero_noise
from ospde.engine.problem import obstacle_continuity_diagnostic
from ospde.engine.solver import penalization_sweep, solve_penalized
from ospde.engine.verify import (
    build_path_processes,
    calibrate_residual_allowance,
    count_inversions,
    pathwise_residuals,
    source_field,
    start_density,
    verify_bsde_residual,
    verify_energy_identity,
    verify_measure_representation,
    verify_penalty_bound,
    verify_skorokhod,
)
from ospde.exceptions import DomainError, SeedMismatch


@pytest.mark.unit
class TestCountInversions:
    """Test the inversion counter."""

    def test_decreasing(self):
        assert count_inversions([3.0, 2.0, 1.0]) == 0

    def test_increasing(self):
        assert count_inversions([1.0, 2.0, 3.0]) == 2

    def test_within_errors(self):
        """Increases inside the joint standard error band are not counted."""
        assert count_inversions([1.0, 1.1, 1.2], [0.1, 0.1, 0.1], multiplier=3.0) == 0
        assert count_inversions([1.0, 2.0], [0.1, 0.1], multiplier=3.0) == 1


@pytest.mark.unit
class TestPathProcesses:
    """Test Y, Z, S, K along paths."""

    def test_penalty_process(self, put_problem, paths):
        """K starts at zero and never decreases."""
        sol = solve_penalized(put_problem, 100)
        proc = build_path_processes(sol, put_problem, paths)
        assert np.all(proc.K[:, 0] == 0.0)
        assert np.all(np.diff(proc.K, axis=1) >= 0.0)
        assert proc.Y.shape == (400, put_problem.grid.nt + 1)
        assert proc.Z.shape == (400, put_problem.grid.nt + 1, 1)

    def test_terminal_value(self, put_problem, paths):
        """Y_T = Phi(W_T)."""
        sol = solve_penalized(put_problem, 100)
        proc = build_path_processes(sol, put_problem, paths)
        terminal = np.interp(paths.positions[:, -1, 0], put_problem.grid.axes[0], put_problem.phi,
                             left=0.0, right=0.0)
        inside = paths.inside_domain[:, -1]
        assert np.allclose(proc.Y[inside, -1], terminal[inside])

    def test_mesh_mismatch(self, put_problem, grid_2d):
        sol = solve_penalized(put_problem, 10)
        other = sample_forward_paths(grid_2d, 10, seed=1)
        with pytest.raises(DomainError):
            build_path_processes(sol, put_problem, other)


@pytest.mark.unit
class TestResidual:
    """Test the backward-equation residual."""

    def test_last_column_zero(self, put_problem, paths):
        sol = solve_penalized(put_problem, 100)
        residuals = pathwise_residuals(sol, put_problem, paths, sample_backward_noise(1, 20, 1, 0.0125))
        assert np.allclose(residuals[:, -1], 0.0)

    def test_linear_problem_passes(self, heat_problem, paths):
        """u = T - t solves the linear equation along every path."""
        sol = solve_penalized(heat_problem, 0)
        stats = verify_bsde_residual(sol, heat_problem, paths, None)
        assert stats.passed
        assert stats.count >= 2
        assert np.max(np.abs(stats.mean)) < 1e-3
        assert len(stats.rows()) == heat_problem.grid.nt + 1

    def test_exiting_paths_truncated(self, heat_problem, paths):
        """Paths leaving the core count until their exit and read zero after it."""
        sol = solve_penalized(heat_problem, 0)
        residuals = pathwise_residuals(sol, heat_problem, paths, zero_noise(20, 1, heat_problem.grid.dt))
        exiting = ~paths.never_exits
        assert np.any(exiting)
        assert np.all(residuals[~paths.valid] == 0.0)
        assert np.max(np.abs(residuals[exiting, 0])) < 5e-3
        stats = verify_bsde_residual(sol, heat_problem, paths, None)
        assert stats.count == int(np.count_nonzero(paths.never_exits))
        first = residuals[:, 0]
        assert stats.mean[0] == pytest.approx(np.mean(first))

    def test_stochastic_residual(self, noisy_problem, noise, paths):
        """Residual statistics are finite under backward noise."""
        sol = solve_penalized(noisy_problem, 100, noise)
        stats = verify_bsde_residual(sol, noisy_problem, paths, noise)
        assert np.all(np.isfinite(stats.mean))
        assert np.all(stats.stderr >= 0.0)
        assert 0.0 <= stats.excluded_fraction < 1.0

    def test_seed_mismatch(self, noisy_problem, noise, paths):
        """Verification with another noise path is refused."""
        sol = solve_penalized(noisy_problem, 10, noise)
        other = sample_backward_noise(noise.seed + 1, noise.nt, 1, noise.dt)
        with pytest.raises(SeedMismatch):
            verify_bsde_residual(sol, noisy_problem, paths, other)

    def test_missing_noise(self, noisy_problem, noise, paths):
        sol = solve_penalized(noisy_problem, 10, noise)
        with pytest.raises(SeedMismatch):
            verify_bsde_residual(sol, noisy_problem, paths, None)

    def test_calibrated_allowance(self, put_problem, paths):
        """The calibration constant is finite and nonnegative."""
        c = calibrate_residual_allowance(put_problem, paths)
        assert 0.0 <= c < np.inf


@pytest.mark.unit
class TestSkorokhod:
    """Test the Skorokhod and penalty statistics."""

    @pytest.fixture
    def sweep(self, put_problem):
        solutions, _ = penalization_sweep(put_problem, [1, 10, 100])
        return solutions

    def test_statistics_nonnegative(self, sweep, put_problem, paths):
        table = verify_skorokhod(sweep, put_problem, paths)
        assert table.schedule == [1, 10, 100]
        assert all(value >= 0.0 for value in table.complementarity)
        assert all(value >= 0.0 for value in table.sup_negative)
        assert len(table.rows()) == 3

    def test_shortfall_decreases(self, sweep, put_problem, paths):
        """E sup ((Y^n - S)^-)^2 falls from n = 1 to n = 100."""
        table = verify_skorokhod(sweep, put_problem, paths)
        assert table.sup_negative[-1] < table.sup_negative[0]

    def test_penalty_bound(self, sweep, put_problem, paths):
        """The ratio compares the largest moment with the limit level."""
        bound = verify_penalty_bound(sweep, put_problem, paths)
        assert bound.ratio >= 1.0
        assert bound.ratio == pytest.approx(max(bound.second_moments) / bound.second_moments[-1])
        assert all(np.isfinite(bound.second_moments))

    def test_empty_sweep(self, put_problem, paths):
        with pytest.raises(DomainError):
            verify_skorokhod([], put_problem, paths)

    def test_continuity_diagnostic(self, make_problem, paths):
        """A constant obstacle has no modulus."""
        problem = make_problem(terminal={'kind': 'zero'}, obstacle={'kind': 'constant', 'value': 0.0})
        diagnostic = obstacle_continuity_diagnostic(problem, paths, 0.05)
        assert diagnostic['max'] == 0.0


@pytest.mark.unit
class TestEnergyAndMeasure:
    """Test the energy identity and the measure representation."""

    @pytest.fixture
    def energy_paths(self, grid_1d):
        return sample_forward_paths(grid_1d, 2000, seed=21)

    def test_start_density(self, grid_1d):
        """At the start time the density is the core indicator carrying the core volume."""
        density = start_density(grid_1d, 0)
        assert np.all(density[0][~grid_1d.core_mask] == 0.0)
        assert np.sum(density[0]) * grid_1d.cell_volume == pytest.approx(grid_1d.core_volume)
        assert np.all(density >= 0.0)

    def test_unit_source_identity(self, grid_1d, energy_paths):
        """Both sides of the identity agree for f = 1."""
        f = source_field(grid_1d, {'kind': 'constant', 'value': 1.0})
        comparison = verify_energy_identity(f, grid_1d, energy_paths, [0.0, 0.125])
        assert max(comparison.relative_error) < 0.05
        assert comparison.times == pytest.approx([0.0, 0.125])

    def test_negative_source(self, grid_1d, energy_paths):
        with pytest.raises(DomainError):
            verify_energy_identity(-np.ones(grid_1d.shape), grid_1d, energy_paths, [0.0])

    def test_measure_representation(self, grid_1d, energy_paths):
        """Grid and path integrals of phi f agree for the default test functions."""
        f = source_field(grid_1d, {'kind': 'constant', 'value': 1.0})
        comparison = verify_measure_representation(f, grid_1d, energy_paths)
        assert comparison.names == ['constant', 'gaussian', 'wave']
        assert comparison.passed
