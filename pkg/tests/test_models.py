"""
Tests for grids, coefficient families, problem registries and run configs.
"""

import numpy as np
import pytest

from ospde.engine.problem import build_problem, validate_hypotheses
from ospde.exceptions import ConfigError, DomainError, HypothesisViolation, ObstacleViolation
from ospde.models.coefficients import CoefficientSet, build_coefficient
from ospde.models.grid import DiscreteNorms, SpaceTimeGrid
from ospde.models.problem import NO_OBSTACLE, ObstacleProblem
from ospde.models.run import RunConfig


@pytest.mark.unit
class TestSpaceTimeGrid:
    """Test the space-time grid."""

    def test_mesh_sizes(self, grid_1d):
        """Steps follow from bounds, node count and horizon."""
        assert grid_1d.dx == pytest.approx((0.1,))
        assert grid_1d.dt == pytest.approx(0.0125)
        assert grid_1d.times[-1] == pytest.approx(0.25)
        assert grid_1d.field_shape == (21, 61)

    def test_time_weights_integrate_constants(self, grid_1d):
        """Trapezoid weights sum to the horizon."""
        assert np.sum(grid_1d.time_weights) == pytest.approx(grid_1d.horizon)

    def test_core_keeps_margin(self, grid_1d):
        """The core sits three sqrt(T) inside the domain."""
        assert grid_1d.core_bounds == ((pytest.approx(-1.5), pytest.approx(1.5)),)
        x = grid_1d.axes[0]
        assert np.all(np.abs(x[grid_1d.core_mask]) <= 1.5 + 1e-12)
        assert grid_1d.core_volume == pytest.approx(3.0)

    def test_domain_too_small_for_core(self):
        """A domain narrower than twice the margin has no core."""
        grid = SpaceTimeGrid(dim=1, bounds=((-1.0, 1.0),), nx=11, nt=4, horizon=1.0)
        with pytest.raises(DomainError):
            grid.core_bounds

    @pytest.mark.parametrize('kwargs', [
        {'dim': 3, 'bounds': ((0, 1),) * 3, 'nx': 5, 'nt': 2, 'horizon': 1.0},
        {'dim': 1, 'bounds': ((1, 0),), 'nx': 5, 'nt': 2, 'horizon': 1.0},
        {'dim': 1, 'bounds': ((0, 1),), 'nx': 2, 'nt': 2, 'horizon': 1.0},
        {'dim': 1, 'bounds': ((0, 1),), 'nx': 5, 'nt': 0, 'horizon': 1.0},
        {'dim': 1, 'bounds': ((0, 1),), 'nx': 5, 'nt': 2, 'horizon': 0.0},
    ])
    def test_invalid_grid(self, kwargs):
        """Malformed grids are rejected."""
        with pytest.raises(DomainError):
            SpaceTimeGrid(**kwargs)

    def test_gradient_of_linear_field(self, grid_2d):
        """Central differences are exact on affine fields."""
        x = grid_2d.coordinates
        grad = grid_2d.gradient(2.0 * x[0] - 3.0 * x[1])
        assert np.allclose(grad[0], 2.0)
        assert np.allclose(grad[1], -3.0)

    def test_divergence_of_linear_field(self, grid_2d):
        """div (x, y) = 2."""
        assert np.allclose(grid_2d.divergence(grid_2d.coordinates), 2.0)

    def test_time_index(self, grid_1d):
        """Times map to the nearest mesh index."""
        assert grid_1d.time_index(0.125) == 10
        with pytest.raises(DomainError):
            grid_1d.time_index(1.0)


@pytest.mark.unit
class TestDiscreteNorms:
    """Test the grid norms."""

    def test_l2_of_ones(self, grid_1d):
        """Cell-volume weighted sum over all nodes."""
        norms = DiscreteNorms(grid_1d)
        assert norms.l2(np.ones(grid_1d.shape)) == pytest.approx(np.sqrt(61 * 0.1))

    def test_mask_restricts_sums(self, grid_1d):
        """Nodes outside the core do not count."""
        norms = DiscreteNorms.on_core(grid_1d)
        field = np.where(grid_1d.core_mask, 0.0, 5.0)
        assert norms.l2(field) == 0.0

    def test_h1_seminorm_of_constant(self, grid_1d):
        """Constants have no gradient energy."""
        norms = DiscreteNorms(grid_1d)
        assert norms.h1_seminorm(np.full(grid_1d.shape, 3.0)) == pytest.approx(0.0)

    def test_space_time_norm_of_constant(self, grid_1d):
        """The L2(0, T; L2) norm of 1 is sqrt(T |D|)."""
        norms = DiscreteNorms(grid_1d)
        u = np.ones(grid_1d.field_shape)
        assert norms.l2_2(u) == pytest.approx(np.sqrt(0.25 * 6.1))
        assert norms.t_norm(u) == pytest.approx(np.sqrt(6.1))


@pytest.mark.unit
class TestCoefficients:
    """Test the coefficient registry."""

    def test_unknown_kind(self):
        """Unknown families are config errors."""
        with pytest.raises(ConfigError):
            build_coefficient('f', {'kind': 'cubic'}, 1)

    def test_unknown_parameter(self):
        """Parameters outside the family are rejected."""
        with pytest.raises(ConfigError):
            build_coefficient('f', {'kind': 'constant', 'slope': 1.0}, 1)

    def test_bump_only_as_source(self):
        """The bump family is a source term only."""
        with pytest.raises(ConfigError):
            build_coefficient('g', {'kind': 'bump'}, 1)

    def test_output_shapes(self, grid_2d):
        """f returns S, g returns (d, *S), h returns (d1, *S)."""
        x = grid_2d.coordinates
        y = np.zeros(grid_2d.shape)
        z = np.zeros((2,) + grid_2d.shape)
        f = build_coefficient('f', {'kind': 'sine', 'a': 1.0}, 2)
        g = build_coefficient('g', {'kind': 'linear', 'c': [1.0, 2.0]}, 2)
        h = build_coefficient('h', {'kind': 'constant', 'value': 0.5}, 2, d1=3)
        assert f(0.0, x, y, z).shape == grid_2d.shape
        assert g(0.0, x, y, z).shape == (2,) + grid_2d.shape
        assert h(0.0, x, y, z).shape == (3,) + grid_2d.shape
        assert np.allclose(g(0.0, x, y, z)[1], 2.0)

    def test_offset_length_checked(self):
        """Vector offsets must match the output dimension."""
        with pytest.raises(ConfigError):
            build_coefficient('g', {'kind': 'linear', 'c': [1.0, 2.0, 3.0]}, 2)

    def test_contraction_margin(self):
        """1/2 - alpha - beta^2 / 2."""
        coeffs = CoefficientSet.from_config({'lip_alpha': 0.2, 'lip_beta': 0.5}, 1)
        assert coeffs.contraction_margin == pytest.approx(0.175)
        assert coeffs.is_deterministic

    def test_negative_constant(self):
        """Declared constants are nonnegative."""
        with pytest.raises(DomainError):
            CoefficientSet.from_config({'lip_C': -1.0}, 1)


@pytest.mark.unit
class TestProblems:
    """Test problem assembly."""

    def test_terminal_obstacle(self, put_problem):
        """The 'terminal' obstacle copies Phi at every time."""
        assert np.array_equal(put_problem.v[0], put_problem.phi)
        assert put_problem.has_obstacle
        assert put_problem.is_deterministic

    def test_no_obstacle(self, heat_problem):
        """'none' is the sentinel value everywhere."""
        assert np.all(heat_problem.v == NO_OBSTACLE)
        assert not heat_problem.has_obstacle

    def test_obstacle_read_from_field(self, put_problem):
        """has_obstacle follows v, not the registry spec."""
        direct = ObstacleProblem(grid=put_problem.grid, coeffs=put_problem.coeffs,
                                 phi=np.array(put_problem.phi), v=np.array(put_problem.v))
        assert direct.obstacle_spec == {'kind': 'none'}
        assert direct.has_obstacle
        empty = ObstacleProblem(grid=put_problem.grid, coeffs=put_problem.coeffs,
                                phi=np.array(put_problem.phi),
                                v=np.full(put_problem.grid.field_shape, NO_OBSTACLE))
        assert not empty.has_obstacle

    def test_obstacle_above_terminal(self, make_problem):
        """v(T, .) > Phi is refused with the offending nodes."""
        with pytest.raises(ObstacleViolation) as excinfo:
            make_problem(terminal={'kind': 'zero'}, obstacle={'kind': 'constant', 'value': 0.5})
        assert excinfo.value.count == 61
        assert len(excinfo.value.nodes) == 10

    def test_wave_obstacle_moves(self, make_problem):
        """The wave family depends on time."""
        problem = make_problem(terminal={'kind': 'constant', 'value': 1.0},
                               obstacle={'kind': 'wave', 'amplitude': 0.5, 'frequency': 3.0,
                                         'speed': 2.0})
        assert problem.v.shape == problem.grid.field_shape
        assert not np.allclose(problem.v[0], problem.v[-1])

    def test_unknown_terminal_parameter(self, make_problem):
        """Registry parameters are checked."""
        with pytest.raises(ConfigError):
            make_problem(terminal={'kind': 'put', 'strike': 1.0, 'vol': 0.2})

    def test_tent_in_two_dimensions(self):
        """Tents are radial around their center."""
        problem = build_problem({
            'grid': {'dim': 2, 'bounds': [[-2, 2], [-2, 2]], 'nx': 21, 'nt': 4, 'horizon': 0.1},
            'terminal': {'kind': 'tent', 'height': 0.5, 'slope': 0.5},
            'obstacle': {'kind': 'tent', 'height': 0.3, 'slope': 0.5},
        })
        assert problem.phi[10, 10] == pytest.approx(0.5)
        assert problem.phi[10, 14] == pytest.approx(0.5 - 0.5 * 0.8)

    def test_to_dict(self, put_problem):
        """Problem summaries carry the registry blocks."""
        data = put_problem.to_dict()
        assert data['terminal'] == {'kind': 'put', 'strike': 1.0}
        assert data['grid']['nx'] == 61


@pytest.mark.unit
class TestHypotheses:
    """Test the coefficient hypothesis probe."""

    def test_declared_constants_hold(self, grid_1d):
        """Sine families stay within their declared constants."""
        coeffs = CoefficientSet.from_config({
            'f': {'kind': 'sine', 'a': 0.5, 'b': 0.5},
            'g': {'kind': 'sine', 'a': 0.1, 'b': 0.2},
            'h': {'kind': 'sine', 'a': 0.1, 'b': 0.5},
            'lip_C': 1.0, 'lip_alpha': 0.2, 'lip_beta': 0.5,
        }, 1)
        report = validate_hypotheses(coeffs, 500, seed=1, grid=grid_1d)
        assert report.passed
        assert report.contraction_margin == pytest.approx(0.175)
        assert all(report.finite.values())

    def test_understated_constant(self):
        """A slope of 2 against a declared C of 1 is caught."""
        coeffs = CoefficientSet.from_config({'f': {'kind': 'linear', 'a': 2.0}, 'lip_C': 1.0}, 1)
        with pytest.raises(HypothesisViolation) as excinfo:
            validate_hypotheses(coeffs, 500, seed=1)
        assert excinfo.value.coefficient == 'f'

    def test_nonpositive_margin_reported(self):
        """alpha + beta^2 / 2 >= 1/2 fails the report without raising."""
        coeffs = CoefficientSet.from_config({'lip_alpha': 0.45, 'lip_beta': 0.5}, 1)
        report = validate_hypotheses(coeffs, 50, seed=1)
        assert not report.margin_passed
        assert not report.passed

    def test_probe_count(self):
        """At least one probe is needed."""
        coeffs = CoefficientSet.from_config({}, 1)
        with pytest.raises(DomainError):
            validate_hypotheses(coeffs, 0, seed=1)


@pytest.mark.unit
class TestRunConfig:
    """Test experiment config loading."""

    def test_defaults_filled(self, make_config):
        """Missing blocks take their defaults."""
        cfg = RunConfig.from_dict(make_config())
        assert cfg.verify['t_fractions'] == [0.0, 0.5]
        assert cfg.lemmas['mazur_size'] == 40
        assert cfg.enabled('residual')

    def test_seed_override(self, make_config):
        """An override replaces every seed."""
        cfg = RunConfig.from_dict(make_config(), seed_override=99)
        assert cfg.seeds == {'noise': 99, 'paths': 99, 'probes': 99}

    def test_tolerance_fallback(self, make_config):
        """Unset tolerances fall back to the settings value."""
        cfg = RunConfig.from_dict(make_config(tolerances={'oracle_sup': 0.01}))
        assert cfg.tolerance('oracle_sup', 5e-3) == 0.01
        assert cfg.tolerance('residual_allowance_c', 2.0) == 2.0

    def test_hash_ignores_key_order(self, make_config):
        """The config hash is taken over canonical JSON."""
        config = make_config()
        reordered = dict(reversed(list(config.items())))
        assert RunConfig.from_dict(config).config_hash == RunConfig.from_dict(reordered).config_hash

    def test_invalid_json(self, tmp_path):
        """Unparseable files are config errors."""
        path = tmp_path / 'broken.json'
        path.write_text('{"schema_version": 1,')
        with pytest.raises(ConfigError):
            RunConfig.from_file(path)
