"""
``ospde lemmas``: the technical-estimate suite on a built-in or given grid.
"""

import click
import numpy as np

from ..engine.lemmas import (
    calculus_trials,
    lemma_divergence_gradient_decay,
    lemma_gradient_decay,
    lemma_noise_gradient_decay,
    lemma_obstacle_smoothing,
    mazur_combine,
    oscillating_instance,
    primitive_field,
)
from ..engine.noise import sample_forward_paths
from ..engine.problem import build_problem
from ..engine.verify import obstacle_path_samples, source_field
from ..models.run import DEFAULT_LEMMA_CONFIG
from .common import RunContext, guarded, load_run, run_options


def _decay_check(run, name, report):
    if report.variant == 'source':
        run.check(name, report.spread, report.max_spread, report.passed, report.to_dict())
    else:
        first = report.energies[0]
        ratio = report.energies[-1] / first if first > 0 else 0.0
        run.check(name, ratio, 1.0, report.passed, report.to_dict())


@click.command('lemmas')
@run_options(config_required=False)
@click.pass_obj
@guarded('lemmas')
def cmd_lemmas(settings, config_path, out_dir, workers, seed_override):
    """Calculus inequalities, obstacle smoothing, gradient decay and the convex combiner."""
    cfg = load_run(config_path, seed_override, default=DEFAULT_LEMMA_CONFIG)
    run = RunContext('lemmas', cfg, settings, out_dir, workers)
    settings = run.settings
    lem, seeds = cfg.lemmas, cfg.seeds
    problem = build_problem(cfg.problem, settings.CORE_MARGIN_FACTOR)
    grid = problem.grid

    if cfg.enabled('calculus'):
        with run.stage('calculus'):
            summary = calculus_trials(lem['calculus_trials'], lem['calculus_nodes'],
                                      lem['lambda_range'], lem['delta_range'], seeds['probes'],
                                      tolerance=cfg.tolerance('calculus_margin', 1e-12))
        run.check('calculus', summary.violations, 0, summary.passed, summary.to_dict())

    if cfg.enabled('smoothing'):
        with run.stage('smoothing'):
            paths = sample_forward_paths(grid, lem['smoothing_paths'], seeds['paths'],
                                         workers=run.workers, block_size=settings.PATH_BLOCK_SIZE)
            table = lemma_obstacle_smoothing(obstacle_path_samples(problem, paths), grid.dt,
                                             lem['smoothing_schedule'], lem['delta'],
                                             allowed_inversions=settings.ALLOWED_INVERSIONS)
        run.write_table('smoothing.csv', table.header, table.rows())
        run.check('smoothing', sum(table.violations), 0, table.passed, table.to_dict())

    schedule = lem['decay_schedule']
    bump = source_field(grid, {'kind': 'bump', 'amplitude': 1.0, 'center': 0.0,
                               'width': lem['bump_width']})
    if cfg.enabled('gradient_decay'):
        spread = cfg.tolerance('gradient_ratio', 10.0)
        with run.stage('gradient decay'):
            sources = (('constant', np.ones(grid.shape)), ('bump', bump))
            for name, f in sources:
                report = lemma_gradient_decay(f, grid, schedule, max_spread=spread)
                run.write_table(f'gradient_decay_{name}.csv', report.header, report.rows())
                _decay_check(run, f'gradient_decay[{name}]', report)
            report = lemma_divergence_gradient_decay(primitive_field(bump, grid), grid, schedule)
            run.write_table('gradient_decay_divergence.csv', report.header, report.rows())
            _decay_check(run, 'gradient_decay[divergence]', report)

    if cfg.enabled('noise_gradient_decay'):
        with run.stage('noise gradient decay'):
            report = lemma_noise_gradient_decay(bump[0][None], grid, schedule, lem['noise_seeds'])
        run.write_table('gradient_decay_noise.csv', report.header, report.rows())
        _decay_check(run, 'noise_gradient_decay', report)

    if cfg.enabled('mazur'):
        vectors, target = oscillating_instance(lem['mazur_size'], seed=seeds['probes'])
        result = mazur_combine(vectors, target, settings.MAZUR_ITERATIONS,
                               target_ratio=cfg.tolerance('mazur_ratio', 0.1), settings=settings)
        run.write_table('mazur_weights.csv', ['index', 'weight'], enumerate(result.weights))
        ratio = result.distance / result.best_single_distance if result.best_single_distance else 0.0
        run.check('mazur', ratio, result.target_ratio, result.passed, result.to_dict())

    run.finish(grid.to_dict(), schedule)
