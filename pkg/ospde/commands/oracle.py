"""
``ospde oracle``: penalized sweep against the projected SOR reference.
"""

import click
import numpy as np

from ..engine.psor import psor_oracle
from ..engine.solver import penalization_sweep
from ..engine.verify import count_inversions
from .common import RunContext, guarded, load_run, prepare_problem, run_options


@click.command('oracle')
@run_options()
@click.pass_obj
@guarded('oracle')
def cmd_oracle(settings, config_path, out_dir, workers, seed_override):
    """Sup-distance on the core between every level and the PSOR solution."""
    cfg = load_run(config_path, seed_override)
    run = RunContext('oracle', cfg, settings, out_dir, workers)
    settings = run.settings
    problem, _ = prepare_problem(run)
    grid = problem.grid

    with run.stage('psor'):
        reference = psor_oracle(problem, settings)
    with run.stage('sweep'):
        solutions, _ = penalization_sweep(problem, cfg.schedule, None, run.workers, settings)
    run.write_field('psor.csv', grid, reference)

    core = grid.core_mask
    distances = [float(np.max(np.abs(sol.u - reference)[:, core])) for sol in solutions]
    run.write_table('oracle.csv', ['n', 'sup_distance'], zip(cfg.schedule, distances))

    if cfg.enabled('oracle'):
        tolerance = cfg.tolerance('oracle_sup', 5e-3)
        inversions = count_inversions(distances)
        run.check('oracle', distances[-1], tolerance,
                  distances[-1] <= tolerance and inversions == 0,
                  {'distances': distances, 'inversions': inversions})

    run.finish(grid.to_dict(), cfg.schedule)
