"""
``ospde verify``: Monte Carlo verification of a sweep along forward paths.
"""

import click
import numpy as np

from ..engine.noise import sample_forward_paths, zero_noise
from ..engine.problem import obstacle_continuity_diagnostic
from ..engine.solver import penalization_sweep
from ..engine.verify import (
    calibrate_residual_allowance,
    source_field,
    verify_bsde_residual,
    verify_energy_identity,
    verify_measure_representation,
    verify_penalty_bound,
    verify_skorokhod,
)
from .common import RunContext, guarded, load_run, prepare_problem, run_options


def _band_excess(values, references, stderr, allowance, multiplier) -> float:
    """Largest |value - reference| beyond multiplier * stderr + allowance."""
    return max(abs(v - r) - (multiplier * s + a)
               for v, r, s, a in zip(values, references, stderr, allowance))


@click.command('verify')
@run_options()
@click.pass_obj
@guarded('verify')
def cmd_verify(settings, config_path, out_dir, workers, seed_override):
    """Residual, Skorokhod, penalty bound, energy identity and measure representation checks."""
    cfg = load_run(config_path, seed_override)
    run = RunContext('verify', cfg, settings, out_dir, workers)
    settings = run.settings
    problem, noise = prepare_problem(run)
    grid = problem.grid
    mc, seeds = cfg.monte_carlo, cfg.seeds

    with run.stage('sweep'):
        solutions, _ = penalization_sweep(problem, cfg.schedule, noise, run.workers, settings)
    with run.stage('paths'):
        paths = sample_forward_paths(grid, mc['paths'], seeds['paths'], workers=run.workers,
                                     block_size=settings.PATH_BLOCK_SIZE)
    path_noise = noise if noise is not None else zero_noise(grid.nt, problem.coeffs.d1, grid.dt)
    for index in range(min(settings.EXPORT_PATHS, paths.count)):
        run.write_path(f'path_{index}.csv', paths, path_noise, index)

    if cfg.enabled('residual'):
        allowance_c = cfg.tolerances.get('residual_allowance_c')
        if allowance_c is None:
            with run.stage('calibration'):
                allowance_c = calibrate_residual_allowance(problem, paths, settings=settings)
        with run.stage('residual'):
            residual = verify_bsde_residual(solutions[-1], problem, paths, noise, allowance_c, settings)
        run.write_table('residual.csv', residual.header, residual.rows())
        details = residual.to_dict()
        details['allowance_c'] = allowance_c
        run.check('residual', float(-np.min(residual.slack)), 0.0, residual.passed, details)

    if cfg.enabled('skorokhod'):
        with run.stage('skorokhod'):
            table = verify_skorokhod(solutions, problem, paths, settings)
        run.write_table('skorokhod.csv', table.header, table.rows())
        details = table.to_dict()
        details['obstacle_continuity'] = obstacle_continuity_diagnostic(
            problem, paths, cfg.verify['delta'])
        run.check('skorokhod',
                  max(table.complementarity_inversions, table.sup_negative_inversions),
                  table.allowed_inversions, table.passed, details)

    if cfg.enabled('penalty_bound'):
        bound = verify_penalty_bound(solutions, problem, paths)
        run.write_table('penalty_bound.csv', bound.header, bound.rows())
        run.check('penalty_bound', bound.ratio, bound.max_ratio, bound.passed, bound.to_dict())

    if cfg.enabled('energy') or cfg.enabled('measure'):
        with run.stage('energy paths'):
            energy_paths = sample_forward_paths(grid, mc['energy_paths'], seeds['paths'],
                                                workers=run.workers,
                                                block_size=settings.PATH_BLOCK_SIZE)

    if cfg.enabled('energy'):
        t_list = [fraction * grid.horizon for fraction in cfg.verify['t_fractions']]
        with run.stage('energy'):
            energy = verify_energy_identity(source_field(grid, cfg.verify['energy_source']), grid,
                                            energy_paths, t_list, settings=settings)
        run.write_table('energy.csv', energy.header, energy.rows())
        tolerance = cfg.tolerance('energy_relative', 0.05)
        worst = max(energy.relative_error)
        run.check('energy', worst, tolerance, worst <= tolerance, energy.to_dict())

    if cfg.enabled('measure'):
        with run.stage('measure'):
            measure = verify_measure_representation(source_field(grid, cfg.verify['measure_source']),
                                                    grid, energy_paths, settings=settings)
        run.write_table('measure_representation.csv', measure.header, measure.rows())
        excess = _band_excess(measure.mc_values, measure.grid_values, measure.stderr,
                              measure.allowance, measure.stderr_multiplier)
        run.check('measure', excess, 0.0, measure.passed, measure.to_dict())

    run.finish(grid.to_dict(), cfg.schedule)
