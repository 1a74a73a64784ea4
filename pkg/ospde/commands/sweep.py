"""
``ospde sweep``: penalization sweep with shared noise.
"""

import click

from ..engine.solver import extract_measure, penalization_sweep
from ..engine.verify import count_inversions
from .common import RunContext, guarded, load_run, prepare_problem, run_options


@click.command('sweep')
@run_options()
@click.pass_obj
@guarded('sweep')
def cmd_sweep(settings, config_path, out_dir, workers, seed_override):
    """Solve every level of the schedule and check monotonicity and convergence."""
    cfg = load_run(config_path, seed_override)
    run = RunContext('sweep', cfg, settings, out_dir, workers)
    settings = run.settings
    problem, noise = prepare_problem(run)
    grid = problem.grid

    with run.stage('sweep'):
        solutions, report = penalization_sweep(problem, cfg.schedule, noise, run.workers, settings)
    run.write_table('sweep.csv', report.header, report.rows())
    run.write_field('limit.csv', grid, solutions[-1].u)
    run.write_measure('measure.csv', grid, extract_measure(solutions[-1]))

    if cfg.enabled('monotonicity'):
        setting = 'MONOTONE_TOL_DETERMINISTIC' if problem.is_deterministic else 'MONOTONE_TOL_STOCHASTIC'
        tolerance = run.tolerance('monotone', setting)
        worst = max(report.monotonicity_defects, default=0.0)
        run.check('monotonicity', worst, tolerance, worst <= tolerance and report.finite,
                  {'flags': report.flags})
    if cfg.enabled('cauchy'):
        allowed = run.tolerance('allowed_inversions', 'ALLOWED_INVERSIONS')
        inversions = count_inversions(report.cauchy_increments)
        run.check('cauchy', inversions, allowed, inversions <= allowed,
                  {'increments': report.cauchy_increments})

    run.finish(grid.to_dict(), cfg.schedule)
