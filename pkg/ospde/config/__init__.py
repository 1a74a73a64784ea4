"""
Run-profile settings for the obstacle SPDE toolkit.
"""

import importlib
import os

from .development import DevelopmentConfig

try:
    from .production import ProductionConfig
except ValueError:
    # Production profile requires environment variables
    ProductionConfig = None

__all__ = ['DevelopmentConfig', 'ProductionConfig', 'load_settings']


def load_settings(config_name: str = None):
    """
    Resolve a settings class by profile name.

    Args:
        config_name: Profile name ('development', 'production') or a dotted
            'module.ClassName' path; defaults to $OSPDE_ENV

    Returns:
        Settings class
    """
    if config_name and '.' in config_name:
        module_name, class_name = config_name.rsplit('.', 1)
        return getattr(importlib.import_module(module_name), class_name)

    name = (config_name or os.getenv('OSPDE_ENV', 'development')).lower()
    if name == 'production':
        if ProductionConfig is None:
            # Re-import to surface the missing-variable message
            from .production import ProductionConfig as settings
            return settings
        return ProductionConfig
    if name == 'development':
        return DevelopmentConfig
    raise ValueError(f'Unknown settings profile: {name}')
