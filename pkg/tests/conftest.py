"""
Pytest configuration and fixtures for ospde tests.
"""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from ospde import create_cli
from ospde.config import DevelopmentConfig
from ospde.engine.noise import sample_backward_noise, sample_forward_paths
from ospde.engine.problem import build_problem
from ospde.models.grid import SpaceTimeGrid


GRID_1D = {'dim': 1, 'bounds': [[-3.0, 3.0]], 'nx': 61, 'nt': 20, 'horizon': 0.25}


def problem_block(**overrides):
    """Problem block on the small 1D grid; keyword arguments replace whole entries."""
    block = {
        'grid': dict(GRID_1D),
        'terminal': {'kind': 'put', 'strike': 1.0},
        'obstacle': {'kind': 'terminal'},
    }
    block.update(overrides)
    return block


def run_config(**overrides):
    """Minimal valid experiment config around ``problem_block``."""
    config = {
        'schema_version': 1,
        'name': 'test',
        'problem': problem_block(),
        'level': 100,
        'schedule': [1, 4, 16],
        'seeds': {'noise': 1, 'paths': 2, 'probes': 3},
        'monte_carlo': {'paths': 200, 'energy_paths': 200, 'probe_count': 100},
    }
    config.update(overrides)
    return config


@pytest.fixture
def make_problem():
    """Build a problem on the small 1D grid from block overrides."""

    def make(**overrides):
        return build_problem(problem_block(**overrides))

    return make


@pytest.fixture
def make_config():
    """Experiment config dict with overrides."""
    return run_config


@pytest.fixture
def grid_1d():
    """Small 1D grid with an interior core of [-1.5, 1.5]."""
    return SpaceTimeGrid.from_dict(GRID_1D)


@pytest.fixture
def grid_2d():
    """Small 2D grid."""
    return SpaceTimeGrid(dim=2, bounds=((-2.0, 2.0), (-2.0, 2.0)), nx=21, nt=10, horizon=0.1)


@pytest.fixture
def put_problem():
    """American put payoff in log price, obstacle equal to the payoff."""
    return build_problem(problem_block())


@pytest.fixture
def heat_problem():
    """Unit source, zero terminal data, no obstacle."""
    return build_problem(problem_block(
        coefficients={'f': {'kind': 'constant', 'value': 1.0}},
        terminal={'kind': 'zero'},
        obstacle={'kind': 'none'},
    ))


@pytest.fixture
def noisy_problem():
    """Constant backward noise coefficient on the put problem."""
    return build_problem(problem_block(
        coefficients={'h': {'kind': 'constant', 'value': 0.1}},
    ))


@pytest.fixture
def noise(noisy_problem):
    grid = noisy_problem.grid
    return sample_backward_noise(7, grid.nt, 1, grid.dt)


@pytest.fixture
def paths(grid_1d):
    """Forward paths on the small 1D grid."""
    return sample_forward_paths(grid_1d, 400, seed=5)


@pytest.fixture
def cli():
    """The command line group under the testing profile."""
    return create_cli('conftest.TestingConfig')


@pytest.fixture
def runner():
    """A runner for the Click commands."""
    return CliRunner()


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict to a JSON file and return its path."""

    def write(config, name='config.json'):
        path = tmp_path / name
        path.write_text(json.dumps(config))
        return str(path)

    return write


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Custom test markers
def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line(
        "markers", "integration: marks tests as integration tests"
    )
    config.addinivalue_line(
        "markers", "unit: marks tests as unit tests"
    )


# Test configuration class for testing
class TestingConfig(DevelopmentConfig):
    """Testing configuration."""

    TESTING = True
    DEBUG = False
    LOG_LEVEL = 'WARNING'
    LOG_FILE = None
    OUTPUT_ROOT = 'runs-test'
    WORKERS = 1
    PATH_BLOCK_SIZE = 128
    PSOR_TOL = 1e-10
    MAZUR_ITERATIONS = 5000
