"""
Development profile for obstacle SPDE runs.
"""

import os


class DevelopmentConfig:
    """Desk-scale defaults with verbose logging."""

    DEBUG = True
    TESTING = False

    # Logging configuration
    LOG_LEVEL = os.getenv('OSPDE_LOG', 'DEBUG')
    LOG_FILE = os.getenv('OSPDE_LOG_FILE')

    # Output
    OUTPUT_ROOT = os.getenv('OSPDE_OUTPUT_ROOT', 'runs')

    # Parallelism: per-path streams keep results independent of this value
    WORKERS = int(os.getenv('OSPDE_WORKERS', 1))
    PATH_BLOCK_SIZE = int(os.getenv('OSPDE_PATH_BLOCK_SIZE', 2048))

    # Forward paths written out by verify runs
    EXPORT_PATHS = int(os.getenv('OSPDE_EXPORT_PATHS', 2))

    # Interior core sits this many sqrt(T) away from the truncated boundary
    CORE_MARGIN_FACTOR = 3.0

    # Penalized time stepping
    ACTIVE_SET_MAX_PASSES = 50

    # Projected SOR oracle (None selects the optimal Jacobi-based omega)
    PSOR_OMEGA = None
    PSOR_TOL = 1e-10
    PSOR_MAX_ITER = 20000

    # Verification tolerances
    MONOTONE_TOL_DETERMINISTIC = 1e-8
    MONOTONE_TOL_STOCHASTIC = 1e-6
    RESIDUAL_ALLOWANCE_C = 2.0
    STDERR_MULTIPLIER = 3.0
    ALLOWED_INVERSIONS = 1
    LIPSCHITZ_SLACK = 1e-9

    # Mazur combiner
    MAZUR_ITERATIONS = 5000
