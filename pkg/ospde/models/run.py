"""
Experiment config and run manifest.
"""

import copy
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import scipy

from ..exceptions import ConfigError
from ..utils.audit import CheckRecord
from ..utils.export import write_json_atomic
from ..utils.hashing import config_hash
from ..utils.validators import check_config

DEFAULT_MONTE_CARLO = {'paths': 10000, 'energy_paths': 100000, 'probe_count': 1000}

DEFAULT_VERIFY = {
    't_fractions': [0.0, 0.5],
    'energy_source': {'kind': 'constant', 'value': 1.0},
    'measure_source': {'kind': 'bump', 'amplitude': 1.0, 'center': 0.0, 'width': 0.3},
    'delta': 0.05,
}

DEFAULT_LEMMAS = {
    'calculus_trials': 10000,
    'calculus_nodes': 21,
    'lambda_range': [1.0, 200.0],
    'delta_range': [0.01, 0.3],
    'smoothing_schedule': [1, 4, 16, 64, 256],
    'smoothing_paths': 10000,
    'delta': 0.05,
    'decay_schedule': [4, 16, 64, 256],
    'bump_width': 0.1,
    'noise_seeds': [11, 12, 13],
    'mazur_size': 40,
}

DEFAULT_TOLERANCES = {
    'monotone': None,
    'oracle_sup': 5e-3,
    'energy_relative': 0.05,
    'gradient_ratio': 10.0,
    'mazur_ratio': 0.1,
    'residual_allowance_c': None,
    'stderr_multiplier': None,
    'allowed_inversions': None,
    'calculus_margin': 1e-12,
}

ALL_CHECKS = (
    'hypotheses', 'oracle', 'monotonicity', 'cauchy', 'residual', 'skorokhod',
    'penalty_bound', 'energy', 'measure', 'calculus', 'smoothing',
    'gradient_decay', 'noise_gradient_decay', 'mazur',
)

# Built-in config of the lemma suite; only the grid and the obstacle are read
DEFAULT_LEMMA_CONFIG = {
    'schema_version': 1,
    'name': 'lemmas',
    'problem': {
        'grid': {'dim': 1, 'bounds': [[-2.0, 2.0]], 'nx': 401, 'nt': 200, 'horizon': 0.25},
        'terminal': {'kind': 'constant', 'value': 1.0},
        'obstacle': {'kind': 'wave', 'amplitude': 0.5, 'frequency': 3.0, 'speed': 2.0, 'level': 0.0},
    },
    'seeds': {'noise': 11, 'paths': 2024, 'probes': 7},
}


def _merged(defaults: Dict[str, Any], overrides: Optional[Dict[str, Any]]) -> Dict[str, Any]:
    merged = copy.deepcopy(defaults)
    merged.update(copy.deepcopy(overrides or {}))
    return merged


@dataclass
class RunConfig:
    """A validated experiment config with defaults filled in."""

    raw: Dict[str, Any]
    name: str
    problem: Dict[str, Any]
    level: int
    schedule: List[int]
    seeds: Dict[str, int]
    monte_carlo: Dict[str, int]
    verify: Dict[str, Any]
    lemmas: Dict[str, Any]
    tolerances: Dict[str, Any]
    checks: Dict[str, bool]
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, config: Dict[str, Any], seed_override: Optional[int] = None) -> 'RunConfig':
        """
        Validate and normalize a parsed config.

        Args:
            config: Parsed JSON document
            seed_override: Replaces every seed when given

        Returns:
            RunConfig
        """
        config = copy.deepcopy(config)
        if seed_override is not None:
            config['seeds'] = {name: int(seed_override) for name in ('noise', 'paths', 'probes')}
        check_config(config)

        schedule = list(config.get('schedule', [1, 4, 16, 64, 256]))
        return cls(
            raw=config,
            name=config.get('name', 'run'),
            problem=config['problem'],
            level=int(config.get('level', schedule[-1])),
            schedule=schedule,
            seeds=dict(config['seeds']),
            monte_carlo=_merged(DEFAULT_MONTE_CARLO, config.get('monte_carlo')),
            verify=_merged(DEFAULT_VERIFY, config.get('verify')),
            lemmas=_merged(DEFAULT_LEMMAS, config.get('lemmas')),
            tolerances=_merged(DEFAULT_TOLERANCES, config.get('tolerances')),
            checks=_merged({name: True for name in ALL_CHECKS}, config.get('checks')),
            output=config.get('output'),
        )

    @classmethod
    def from_file(cls, path, seed_override: Optional[int] = None) -> 'RunConfig':
        try:
            with open(path) as handle:
                config = json.load(handle)
        except json.JSONDecodeError as e:
            raise ConfigError(f'{path}: invalid JSON: {e}')
        except OSError as e:
            raise ConfigError(f'{path}: {e.strerror}')
        return cls.from_dict(config, seed_override=seed_override)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def tolerance(self, name: str, fallback: Any) -> Any:
        """Config tolerance, or the settings default when the config leaves it unset."""
        value = self.tolerances.get(name)
        return fallback if value is None else value

    def enabled(self, check: str) -> bool:
        return bool(self.checks.get(check, True))


def package_versions() -> Dict[str, str]:
    from .. import __version__

    return {
        'ospde': __version__,
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'python': platform.python_version(),
    }


@dataclass
class RunManifest:
    """Everything needed to audit or reproduce a run."""

    command: str
    config_hash: str
    seeds: Dict[str, int]
    grid: Dict[str, Any]
    schedule: List[int]
    checks: List[CheckRecord] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)
    wall_time: float = 0.0
    versions: Dict[str, str] = field(default_factory=package_versions)

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'config_hash': self.config_hash,
            'versions': self.versions,
            'seeds': self.seeds,
            'grid': self.grid,
            'schedule': self.schedule,
            'checks': [record.to_dict() for record in self.checks],
            'artifacts': dict(sorted(self.artifacts.items())),
            'wall_time': self.wall_time,
            'pass': self.passed,
        }

    def write(self, directory) -> Path:
        """Write ``manifest.json`` atomically into the run directory."""
        return write_json_atomic(Path(directory) / 'manifest.json', self.to_dict())
