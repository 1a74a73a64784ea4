"""
``ospde solve``: one penalized solve with its measure.
"""

import click
import numpy as np

from ..engine.psor import psor_oracle
from ..engine.solver import extract_measure, solve_penalized
from .common import RunContext, guarded, load_run, prepare_problem, run_options


@click.command('solve')
@run_options()
@click.option('--level', type=click.IntRange(min=0), default=None,
              help='Penalization level (defaults to the config level).')
@click.pass_obj
@guarded('solve')
def cmd_solve(settings, config_path, out_dir, workers, seed_override, level):
    """Solve the penalized equation at one level and write u, its measure and the manifest."""
    cfg = load_run(config_path, seed_override)
    run = RunContext('solve', cfg, settings, out_dir, workers)
    settings = run.settings
    problem, noise = prepare_problem(run)
    grid = problem.grid
    n = cfg.level if level is None else level

    with run.stage('solve'):
        sol = solve_penalized(problem, n, noise, settings)
    run.write_field('solution.csv', grid, sol.u)
    run.write_measure('measure.csv', grid, extract_measure(sol))

    coeffs = problem.coeffs
    if cfg.enabled('oracle') and coeffs.g.is_zero and coeffs.h.is_zero:
        with run.stage('oracle'):
            reference = psor_oracle(problem, settings)
        distance = float(np.max(np.abs(sol.u - reference)[:, grid.core_mask]))
        tolerance = cfg.tolerance('oracle_sup', 5e-3)
        run.check('oracle', distance, tolerance, distance <= tolerance, {'level': n})

    run.finish(grid.to_dict(), [n])
