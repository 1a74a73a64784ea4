"""
Shared plumbing of the subcommands: options, run directories, artifacts and
the manifest with its exit-status contract.
"""

import functools
import json
import logging
import time
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import click
import numpy as np

from ..engine.noise import export_path_csv, sample_backward_noise
from ..engine.problem import build_problem, validate_hypotheses
from ..exceptions import ConfigError, HypothesisViolation, NumericalError
from ..models.run import RunConfig, RunManifest
from ..utils.audit import CheckRecord, failed_checks, log_check
from ..utils.export import write_field_csv, write_measure_csv, write_table_csv
from ..utils.hashing import calculate_checksum
from ..utils.logger import StageTimer, log_error

logger = logging.getLogger(__name__)

# Exit status when every step ran but at least one check failed
EXIT_CHECKS_FAILED = 3


def run_options(config_required: bool = True):
    """--config, --out, --workers and --seed-override, shared by every subcommand."""

    def decorator(fn):
        fn = click.option('--seed-override', type=int, default=None,
                          help='Replace every seed of the config.')(fn)
        fn = click.option('--workers', type=click.IntRange(min=1), default=None,
                          help='Worker processes (defaults to the settings profile).')(fn)
        fn = click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
                          help='Run directory.')(fn)
        fn = click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                          required=config_required, help='Experiment config (JSON).')(fn)
        return fn

    return decorator


# Config tolerances that override settings attributes for one run
SETTING_OVERRIDES = {
    'residual_allowance_c': 'RESIDUAL_ALLOWANCE_C',
    'stderr_multiplier': 'STDERR_MULTIPLIER',
    'allowed_inversions': 'ALLOWED_INVERSIONS',
}


def _with_overrides(settings, tolerances: Dict[str, Any]):
    overrides = {attr: tolerances[key] for key, attr in SETTING_OVERRIDES.items()
                 if tolerances.get(key) is not None}
    if not overrides:
        return settings
    return type(f'{settings.__name__}Run', (settings,), overrides)


class RunContext:
    """One subcommand run: config, settings, output directory and check records."""

    def __init__(self, command: str, config: RunConfig, settings, out_dir: Optional[str] = None,
                 workers: Optional[int] = None):
        self.command = command
        self.config = config
        self.settings = _with_overrides(settings, config.tolerances)
        self.workers = workers or settings.WORKERS
        root = out_dir or config.output or Path(settings.OUTPUT_ROOT) / config.name / command
        self.out_dir = Path(root)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.records = []
        self.artifacts: Dict[str, str] = {}
        self.started = time.perf_counter()

    def stage(self, name: str) -> StageTimer:
        return StageTimer(logger, f'{self.command}:{name}')

    def tolerance(self, name: str, setting: str) -> Any:
        return self.config.tolerance(name, getattr(self.settings, setting))

    def _register(self, path: Path) -> Path:
        self.artifacts[path.name] = calculate_checksum(path)
        return path

    def write_table(self, filename: str, header: Sequence[str], rows) -> Path:
        return self._register(write_table_csv(self.out_dir / filename, header, rows))

    def write_field(self, filename: str, grid, field: np.ndarray) -> Path:
        return self._register(write_field_csv(self.out_dir / filename, grid, field))

    def write_measure(self, filename: str, grid, measure) -> Path:
        return self._register(write_measure_csv(self.out_dir / filename, grid, measure))

    def write_path(self, filename: str, batch, noise, index: int) -> Path:
        return self._register(export_path_csv(batch, noise, index, self.out_dir / filename))

    def check(self, name: str, statistic: float, tolerance: float, passed: bool,
              details: Optional[Dict[str, Any]] = None) -> CheckRecord:
        record = log_check(name, statistic, tolerance, passed, details)
        self.records.append(record)
        return record

    def finish(self, grid: Dict[str, Any], schedule: Sequence[int]) -> RunManifest:
        """Write the manifest, print failures as JSON and exit with the status contract."""
        manifest = RunManifest(
            command=self.command,
            config_hash=self.config.config_hash,
            seeds=self.config.seeds,
            grid=grid,
            schedule=list(schedule),
            checks=self.records,
            artifacts=self.artifacts,
            wall_time=round(time.perf_counter() - self.started, 3),
        )
        path = manifest.write(self.out_dir)
        failures = failed_checks(self.records)
        click.echo(f'{self.command}: {len(self.records) - len(failures)}/{len(self.records)} '
                   f'checks passed, manifest {path}')
        if failures:
            click.echo(json.dumps({'failed': [record.to_dict() for record in failures]},
                                  sort_keys=True))
            raise click.exceptions.Exit(EXIT_CHECKS_FAILED)
        return manifest


def load_run(config_path: Optional[str], seed_override: Optional[int],
             default: Optional[Dict[str, Any]] = None) -> RunConfig:
    if config_path is None:
        if default is None:
            raise ConfigError('--config is required')
        return RunConfig.from_dict(default, seed_override=seed_override)
    return RunConfig.from_file(config_path, seed_override=seed_override)


def guarded(command: str):
    """Turn package errors into a one-line message and a nonzero exit."""

    def decorator(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (ValueError, NumericalError) as e:
                log_error(logger, e, command)
                raise click.ClickException(f'{type(e).__name__}: {e}')

        return wrapper

    return decorator


def prepare_problem(run: RunContext):
    """
    Build the config's problem, gate it on the coefficient hypotheses and sample its noise.

    A failed gate ends the run through ``finish``.

    Returns:
        Tuple (ObstacleProblem, BackwardNoisePath or None)
    """
    cfg, settings = run.config, run.settings
    problem = build_problem(cfg.problem, settings.CORE_MARGIN_FACTOR)
    grid = problem.grid

    if cfg.enabled('hypotheses'):
        try:
            report = validate_hypotheses(problem.coeffs, cfg.monte_carlo['probe_count'],
                                         cfg.seeds['probes'], grid, settings.LIPSCHITZ_SLACK)
            run.check('hypotheses', report.contraction_margin, 0.0, report.passed, report.to_dict())
        except HypothesisViolation as e:
            run.check('hypotheses', float('nan'), 0.0, False,
                      {'coefficient': e.coefficient, 'message': str(e)})
        if not run.records[-1].passed:
            run.finish(grid.to_dict(), cfg.schedule)

    noise = None
    if not problem.is_deterministic:
        noise = sample_backward_noise(cfg.seeds['noise'], grid.nt, problem.coeffs.d1, grid.dt)
        b = noise.values
        run.write_table('noise.csv', ['k', 't'] + [f'B{i + 1}' for i in range(noise.d1)],
                        ([k, t] + list(b[k]) for k, t in enumerate(grid.times)))
    return problem, noise
