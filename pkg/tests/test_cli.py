"""
End-to-end tests of the ``ospde`` command line.
"""

import json

import pytest

from conftest import problem_block, run_config


def _manifest(out):
    with open(out / 'manifest.json') as handle:
        return json.load(handle)


@pytest.mark.integration
class TestCommandLine:
    """Test the exit-status contract of the subcommands."""

    def test_version(self, cli, runner):
        result = runner.invoke(cli, ['--version'])
        assert result.exit_code == 0
        assert '1.0.0' in result.output

    def test_solve_zero_problem(self, cli, runner, write_config, tmp_path):
        """Zero data gives u = 0 and every check passes."""
        config = run_config(problem=problem_block(terminal={'kind': 'zero'}, obstacle={'kind': 'none'}),
                            level=16)
        out = tmp_path / 'solve'
        result = runner.invoke(cli, ['solve', '--config', write_config(config), '--out', str(out)])
        assert result.exit_code == 0, result.output
        manifest = _manifest(out)
        assert manifest['pass'] is True
        assert manifest['schedule'] == [16]
        assert [check['name'] for check in manifest['checks']] == ['hypotheses', 'oracle']
        assert set(manifest['artifacts']) == {'solution.csv', 'measure.csv'}

    def test_obstacle_above_terminal(self, cli, runner, write_config, tmp_path):
        """v(T) > Phi is a package error."""
        config = run_config(problem=problem_block(terminal={'kind': 'zero'},
                                                  obstacle={'kind': 'constant', 'value': 1.0}))
        result = runner.invoke(cli, ['solve', '--config', write_config(config),
                                     '--out', str(tmp_path / 'bad')])
        assert result.exit_code == 1
        assert 'ObstacleViolation' in result.output

    def test_schema_version(self, cli, runner, write_config, tmp_path):
        config = run_config(schema_version=2)
        result = runner.invoke(cli, ['sweep', '--config', write_config(config),
                                     '--out', str(tmp_path / 'bad')])
        assert result.exit_code == 1
        assert 'ConfigError' in result.output

    def test_contraction_gate(self, cli, runner, write_config, tmp_path):
        """alpha + beta^2 / 2 >= 1/2 fails the hypotheses check and stops the run."""
        config = run_config(problem=problem_block(coefficients={'lip_alpha': 0.45, 'lip_beta': 0.5}))
        out = tmp_path / 'gate'
        result = runner.invoke(cli, ['solve', '--config', write_config(config), '--out', str(out)])
        assert result.exit_code == 3
        assert '"failed"' in result.output
        manifest = _manifest(out)
        assert manifest['pass'] is False
        assert 'solution.csv' not in manifest['artifacts']

    def test_sweep_reproducible(self, cli, runner, write_config, tmp_path):
        """Two runs of one config write byte-identical tables."""
        path = write_config(run_config(schedule=[1, 10, 100]))
        outputs = []
        for name in ('first', 'second'):
            out = tmp_path / name
            result = runner.invoke(cli, ['sweep', '--config', path, '--out', str(out)])
            assert result.exit_code == 0, result.output
            outputs.append(out)
        first, second = outputs
        assert (first / 'sweep.csv').read_bytes() == (second / 'sweep.csv').read_bytes()
        assert _manifest(first)['artifacts'] == _manifest(second)['artifacts']
        assert _manifest(first)['config_hash'] == _manifest(second)['config_hash']

    def test_seed_override(self, cli, runner, write_config, tmp_path):
        """--seed-override replaces every seed in the manifest."""
        config = run_config(problem=problem_block(terminal={'kind': 'zero'}, obstacle={'kind': 'none'}))
        out = tmp_path / 'seeded'
        result = runner.invoke(cli, ['solve', '--config', write_config(config), '--out', str(out),
                                     '--seed-override', '42'])
        assert result.exit_code == 0, result.output
        assert _manifest(out)['seeds'] == {'noise': 42, 'paths': 42, 'probes': 42}

    @pytest.mark.parametrize('tolerances', [{}, {'residual_allowance_c': 2.0}])
    def test_verify_paths_and_allowance(self, cli, runner, write_config, tmp_path, tolerances):
        """Sampled paths are exported and the allowance is calibrated unless the config fixes it."""
        config = run_config(
            problem=problem_block(terminal={'kind': 'zero'}, obstacle={'kind': 'none'}),
            tolerances=tolerances,
            checks={'skorokhod': False, 'penalty_bound': False, 'energy': False, 'measure': False},
        )
        out = tmp_path / 'verify'
        result = runner.invoke(cli, ['verify', '--config', write_config(config), '--out', str(out)])
        assert result.exit_code == 0, result.output
        manifest = _manifest(out)
        assert [check['name'] for check in manifest['checks']] == ['hypotheses', 'residual']
        assert {'path_0.csv', 'path_1.csv', 'residual.csv'} <= set(manifest['artifacts'])
        allowance_c = manifest['checks'][1]['details']['allowance_c']
        if tolerances:
            assert allowance_c == 2.0
        else:
            assert allowance_c >= 0.0
        assert (out / 'path_0.csv').read_text().startswith('k,t,W1,B1\n')

    @pytest.mark.slow
    def test_oracle(self, cli, runner, write_config, tmp_path):
        """Large levels approach the PSOR reference monotonically."""
        out = tmp_path / 'oracle'
        config = run_config(schedule=[100, 1000, 10000])
        result = runner.invoke(cli, ['oracle', '--config', write_config(config), '--out', str(out)])
        assert result.exit_code == 0, result.output
        assert (out / 'oracle.csv').read_text().startswith('n,sup_distance\n')

    @pytest.mark.slow
    def test_verify_linear(self, cli, runner, write_config, tmp_path):
        """The residual of the linear problem stays inside its band."""
        config = run_config(
            problem=problem_block(coefficients={'f': {'kind': 'constant', 'value': 1.0}},
                                  terminal={'kind': 'zero'}, obstacle={'kind': 'none'}),
            level=0,
            schedule=[0],
            monte_carlo={'paths': 500, 'energy_paths': 200, 'probe_count': 100},
            checks={'skorokhod': False, 'penalty_bound': False, 'energy': False, 'measure': False},
        )
        out = tmp_path / 'verify'
        result = runner.invoke(cli, ['verify', '--config', write_config(config), '--out', str(out)])
        assert result.exit_code == 0, result.output
        names = [check['name'] for check in _manifest(out)['checks']]
        assert names == ['hypotheses', 'residual']
        assert (out / 'residual.csv').exists()

    @pytest.mark.slow
    def test_lemmas(self, cli, runner, write_config, tmp_path):
        """The lemma suite on a reduced grid."""
        config = {
            'schema_version': 1,
            'name': 'lemmas-small',
            'problem': {
                'grid': {'dim': 1, 'bounds': [[-2.0, 2.0]], 'nx': 201, 'nt': 100, 'horizon': 0.25},
                'terminal': {'kind': 'constant', 'value': 1.0},
                'obstacle': {'kind': 'wave', 'amplitude': 0.5, 'frequency': 3.0, 'speed': 2.0,
                             'level': 0.0},
            },
            'seeds': {'noise': 11, 'paths': 2024, 'probes': 7},
            'lemmas': {'calculus_trials': 200, 'smoothing_paths': 500},
            'tolerances': {'gradient_ratio': 1000.0},
            'checks': {'noise_gradient_decay': False},
        }
        out = tmp_path / 'lemmas'
        result = runner.invoke(cli, ['lemmas', '--config', write_config(config), '--out', str(out)])
        assert result.exit_code == 0, result.output
        names = [check['name'] for check in _manifest(out)['checks']]
        assert names == ['calculus', 'smoothing', 'gradient_decay[constant]', 'gradient_decay[bump]',
                         'gradient_decay[divergence]', 'mazur']
