"""
Production profile for acceptance-scale obstacle SPDE runs.
"""

import os

from .development import DevelopmentConfig


class ProductionConfig(DevelopmentConfig):
    """Acceptance runs: quieter logs, rotating log file, explicit output root."""

    DEBUG = False

    OUTPUT_ROOT = os.environ.get('OSPDE_OUTPUT_ROOT')
    if not OUTPUT_ROOT:
        raise ValueError('OSPDE_OUTPUT_ROOT environment variable is required in production')

    LOG_LEVEL = os.environ.get('OSPDE_LOG', 'INFO')
    LOG_FILE = os.environ.get('OSPDE_LOG_FILE', os.path.join(OUTPUT_ROOT, 'logs', 'ospde.log'))

    WORKERS = int(os.environ.get('OSPDE_WORKERS', os.cpu_count() or 1))
