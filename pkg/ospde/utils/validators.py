"""
Schema validation for experiment configs.

Every validator returns ``(is_valid, error_message)``; ``validate_run_config``
collects all messages so a config with several typos is reported at once.
"""

import numbers
from typing import Any, Dict, Iterable, List, Tuple

SCHEMA_VERSION = 1

RUN_KEYS = {
    'schema_version', 'name', 'problem', 'level', 'schedule', 'seeds',
    'monte_carlo', 'verify', 'lemmas', 'tolerances', 'checks', 'output',
}
PROBLEM_KEYS = {'grid', 'coefficients', 'terminal', 'obstacle'}
GRID_KEYS = {'dim', 'bounds', 'nx', 'nt', 'horizon'}
COEFFICIENT_KEYS = {'f', 'g', 'h', 'lip_C', 'lip_alpha', 'lip_beta', 'd1'}
SEED_KEYS = {'noise', 'paths', 'probes'}
MONTE_CARLO_KEYS = {'paths', 'energy_paths', 'probe_count'}
VERIFY_KEYS = {'t_fractions', 'energy_source', 'measure_source', 'delta'}
LEMMA_KEYS = {
    'calculus_trials', 'calculus_nodes', 'lambda_range', 'delta_range',
    'smoothing_schedule', 'smoothing_paths', 'delta', 'decay_schedule',
    'bump_width', 'noise_seeds', 'mazur_size',
}
TOLERANCE_KEYS = {
    'monotone', 'oracle_sup', 'energy_relative', 'gradient_ratio',
    'mazur_ratio', 'residual_allowance_c', 'stderr_multiplier',
    'allowed_inversions', 'calculus_margin',
}
CHECK_KEYS = {
    'hypotheses', 'oracle', 'monotonicity', 'cauchy', 'residual', 'skorokhod',
    'penalty_bound', 'energy', 'measure', 'calculus', 'smoothing',
    'gradient_decay', 'noise_gradient_decay', 'mazur',
}


def _is_int(value: Any) -> bool:
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def validate_known_keys(block: Any, allowed: Iterable[str], where: str) -> Tuple[bool, str]:
    """
    Reject unknown keys in a config block.

    Args:
        block: Parsed JSON object
        allowed: Permitted key names
        where: Dotted location used in the message

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(block, dict):
        return False, f"{where} must be an object"

    unknown = sorted(set(block) - set(allowed))
    if unknown:
        return False, f"{where} has unknown keys: {', '.join(unknown)}"

    return True, ""


def validate_schema_version(version: Any) -> Tuple[bool, str]:
    """Only the current schema version is accepted."""
    if version is None:
        return False, "schema_version is required"
    if not _is_int(version) or version != SCHEMA_VERSION:
        return False, f"Unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"
    return True, ""


def validate_grid(grid: Any) -> Tuple[bool, str]:
    """
    Validate the grid block: dimension, per-axis bounds, node and step counts.

    Args:
        grid: Grid block

    Returns:
        Tuple of (is_valid, error_message)
    """
    is_valid, message = validate_known_keys(grid, GRID_KEYS, 'problem.grid')
    if not is_valid:
        return is_valid, message

    missing = sorted(GRID_KEYS - set(grid))
    if missing:
        return False, f"problem.grid is missing: {', '.join(missing)}"

    dim = grid['dim']
    if not _is_int(dim) or dim not in (1, 2):
        return False, "problem.grid.dim must be 1 or 2"

    bounds = grid['bounds']
    if not isinstance(bounds, list) or len(bounds) != dim:
        return False, f"problem.grid.bounds must list {dim} [low, high] pairs"
    for axis, pair in enumerate(bounds):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(_is_number(b) for b in pair)):
            return False, f"problem.grid.bounds[{axis}] must be [low, high]"
        if not pair[0] < pair[1]:
            return False, f"problem.grid.bounds[{axis}] must satisfy low < high"

    if not _is_int(grid['nx']) or grid['nx'] < 3:
        return False, "problem.grid.nx must be an integer >= 3"
    if not _is_int(grid['nt']) or grid['nt'] < 1:
        return False, "problem.grid.nt must be an integer >= 1"
    if not _is_number(grid['horizon']) or grid['horizon'] <= 0:
        return False, "problem.grid.horizon must be positive"

    return True, ""


def validate_family_block(block: Any, where: str) -> Tuple[bool, str]:
    """A registry selection: an object with a string ``kind``; parameters are checked by the registry."""
    if not isinstance(block, dict):
        return False, f"{where} must be an object"
    if not isinstance(block.get('kind'), str):
        return False, f"{where}.kind must be a string"
    for key, value in block.items():
        if key == 'kind':
            continue
        if not (_is_number(value) or (isinstance(value, list) and all(_is_number(v) for v in value))):
            return False, f"{where}.{key} must be a number or a list of numbers"
    return True, ""


def validate_coefficients(block: Any) -> Tuple[bool, str]:
    """
    Validate the coefficient block and its declared Lipschitz constants.

    Args:
        block: Coefficient block

    Returns:
        Tuple of (is_valid, error_message)
    """
    is_valid, message = validate_known_keys(block, COEFFICIENT_KEYS, 'problem.coefficients')
    if not is_valid:
        return is_valid, message

    for name in ('f', 'g', 'h'):
        if name in block:
            is_valid, message = validate_family_block(block[name], f'problem.coefficients.{name}')
            if not is_valid:
                return is_valid, message

    for name in ('lip_C', 'lip_alpha', 'lip_beta'):
        value = block.get(name, 0.0)
        if not _is_number(value) or value < 0:
            return False, f"problem.coefficients.{name} must be a nonnegative number"

    d1 = block.get('d1', 1)
    if not _is_int(d1) or d1 < 1:
        return False, "problem.coefficients.d1 must be an integer >= 1"

    return True, ""


def validate_schedule(schedule: Any, where: str = 'schedule', minimum: int = 0) -> Tuple[bool, str]:
    """Penalization schedules are nonempty, integer and strictly increasing."""
    if not isinstance(schedule, list) or not schedule:
        return False, f"{where} must be a nonempty list"
    if not all(_is_int(n) for n in schedule):
        return False, f"{where} entries must be integers"
    if schedule[0] < minimum:
        return False, f"{where} entries must be >= {minimum}"
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        return False, f"{where} must be strictly increasing"
    return True, ""


def validate_seeds(seeds: Any) -> Tuple[bool, str]:
    """Every seed must be spelled out; there are no wall-clock defaults."""
    is_valid, message = validate_known_keys(seeds, SEED_KEYS, 'seeds')
    if not is_valid:
        return is_valid, message

    missing = sorted(SEED_KEYS - set(seeds))
    if missing:
        return False, f"seeds is missing: {', '.join(missing)}"

    for name, value in seeds.items():
        if not _is_int(value) or value < 0:
            return False, f"seeds.{name} must be a nonnegative integer"

    return True, ""


def validate_counts(block: Any, allowed: Iterable[str], where: str, minimum: int = 1) -> Tuple[bool, str]:
    """Validate a block of positive integer sizes."""
    is_valid, message = validate_known_keys(block, allowed, where)
    if not is_valid:
        return is_valid, message

    for name, value in block.items():
        if not _is_int(value) or value < minimum:
            return False, f"{where}.{name} must be an integer >= {minimum}"

    return True, ""


def validate_verify_block(block: Any) -> Tuple[bool, str]:
    is_valid, message = validate_known_keys(block, VERIFY_KEYS, 'verify')
    if not is_valid:
        return is_valid, message

    fractions = block.get('t_fractions', [0.0])
    if (not isinstance(fractions, list) or not fractions
            or not all(_is_number(t) and 0 <= t < 1 for t in fractions)):
        return False, "verify.t_fractions must be a nonempty list in [0, 1)"

    for name in ('energy_source', 'measure_source'):
        if name in block:
            is_valid, message = validate_family_block(block[name], f'verify.{name}')
            if not is_valid:
                return is_valid, message

    delta = block.get('delta', 0.05)
    if not _is_number(delta) or delta <= 0:
        return False, "verify.delta must be positive"

    return True, ""


def validate_lemmas_block(block: Any) -> Tuple[bool, str]:
    is_valid, message = validate_known_keys(block, LEMMA_KEYS, 'lemmas')
    if not is_valid:
        return is_valid, message

    for name in ('calculus_trials', 'smoothing_paths', 'mazur_size'):
        if name in block and (not _is_int(block[name]) or block[name] < 1):
            return False, f"lemmas.{name} must be an integer >= 1"

    if 'calculus_nodes' in block and (not _is_int(block['calculus_nodes']) or block['calculus_nodes'] < 2):
        return False, "lemmas.calculus_nodes must be an integer >= 2"

    for name in ('lambda_range', 'delta_range'):
        if name in block:
            pair = block[name]
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(_is_number(b) for b in pair) or not 0 < pair[0] <= pair[1]):
                return False, f"lemmas.{name} must be [low, high] with 0 < low <= high"

    for name in ('smoothing_schedule', 'decay_schedule'):
        if name in block:
            is_valid, message = validate_schedule(block[name], f'lemmas.{name}', minimum=1)
            if not is_valid:
                return is_valid, message

    for name in ('delta', 'bump_width'):
        if name in block and (not _is_number(block[name]) or block[name] <= 0):
            return False, f"lemmas.{name} must be positive"

    if 'noise_seeds' in block:
        seeds = block['noise_seeds']
        if not isinstance(seeds, list) or not seeds or not all(_is_int(s) and s >= 0 for s in seeds):
            return False, "lemmas.noise_seeds must be a nonempty list of nonnegative integers"

    return True, ""


def validate_tolerances(block: Any) -> Tuple[bool, str]:
    is_valid, message = validate_known_keys(block, TOLERANCE_KEYS, 'tolerances')
    if not is_valid:
        return is_valid, message

    for name, value in block.items():
        if name == 'allowed_inversions':
            if not _is_int(value) or value < 0:
                return False, "tolerances.allowed_inversions must be a nonnegative integer"
        elif not _is_number(value) or value < 0:
            return False, f"tolerances.{name} must be a nonnegative number"

    return True, ""


def validate_checks(block: Any) -> Tuple[bool, str]:
    is_valid, message = validate_known_keys(block, CHECK_KEYS, 'checks')
    if not is_valid:
        return is_valid, message

    for name, value in block.items():
        if not isinstance(value, bool):
            return False, f"checks.{name} must be true or false"

    return True, ""


def validate_run_config(config: Any) -> List[str]:
    """
    Validate a whole experiment config.

    Args:
        config: Parsed JSON document

    Returns:
        List of error messages (empty when the config is valid)
    """
    errors: List[str] = []

    def collect(result: Tuple[bool, str]) -> None:
        is_valid, message = result
        if not is_valid:
            errors.append(message)

    collect(validate_known_keys(config, RUN_KEYS, 'config'))
    if errors:
        return errors

    collect(validate_schema_version(config.get('schema_version')))

    problem = config.get('problem')
    if problem is None:
        errors.append("problem is required")
    else:
        collect(validate_known_keys(problem, PROBLEM_KEYS, 'problem'))
        if isinstance(problem, dict):
            if 'grid' not in problem:
                errors.append("problem.grid is required")
            else:
                collect(validate_grid(problem['grid']))
            collect(validate_coefficients(problem.get('coefficients', {})))
            for name in ('terminal', 'obstacle'):
                if name in problem:
                    collect(validate_family_block(problem[name], f'problem.{name}'))

    if 'seeds' not in config:
        errors.append("seeds is required")
    else:
        collect(validate_seeds(config['seeds']))

    if 'schedule' in config:
        collect(validate_schedule(config['schedule']))
    if 'level' in config and (not _is_int(config['level']) or config['level'] < 0):
        errors.append("level must be a nonnegative integer")
    if 'name' in config and not isinstance(config['name'], str):
        errors.append("name must be a string")
    if 'output' in config and not isinstance(config['output'], str):
        errors.append("output must be a string")

    if 'monte_carlo' in config:
        collect(validate_counts(config['monte_carlo'], MONTE_CARLO_KEYS, 'monte_carlo', minimum=2))
    if 'verify' in config:
        collect(validate_verify_block(config['verify']))
    if 'lemmas' in config:
        collect(validate_lemmas_block(config['lemmas']))
    if 'tolerances' in config:
        collect(validate_tolerances(config['tolerances']))
    if 'checks' in config:
        collect(validate_checks(config['checks']))

    return errors


def check_config(config: Dict[str, Any]) -> Dict[str, Any]:
    """Raise ``ConfigError`` listing every problem, or return the config unchanged."""
    from ..exceptions import ConfigError

    errors = validate_run_config(config)
    if errors:
        raise ConfigError(errors)
    return config
