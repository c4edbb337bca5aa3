"""
Distributed MAC Toolkit Configuration

This module contains runtime settings for the computation modules and the CLI.
Values come from environment variables (optionally loaded from a .env file);
everything numeric has a default that reproduces the documented behaviour.
"""

import os
from typing import Dict, Any, Optional

from dotenv import load_dotenv

load_dotenv()


class Config:
    """Base configuration class"""

    # Optimizer defaults
    GRID_POINTS = 101
    RHO_FLOOR = 1e-6
    REFINE_ROUNDS = 3
    GOLDEN_TOLERANCE = 1e-10

    # Enumeration and memory caps
    EXHAUSTIVE_CAP = 10 ** 6
    ORACLE_CAP = 10 ** 7
    CODEBOOK_CAP = 2 ** 20
    VECTOR_CAP = 10 ** 6
    MAX_USERS = 16
    GREEDY_MAX_PASSES = 10

    # Numerical tolerances
    PROBABILITY_TOLERANCE = 1e-12
    JOINT_TOLERANCE = 1e-10
    WEIGHT_TOLERANCE = 1e-9

    # Emission
    CSV_SIGNIFICANT_DIGITS = 12
    CACHE_SIZE = 65536
    MAX_REPORTED_ROWS = 10

    TESTING = False

    def __init__(self):
        self.CACHE_DIR = os.environ.get('DMAC_CACHE_DIR') or None
        self.THREADS = max(1, int(os.environ.get('DMAC_THREADS', 1)))
        self.LOG_LEVEL = os.environ.get('DMAC_LOG_LEVEL', self.default_log_level()).upper()

    def default_log_level(self) -> str:
        return 'INFO'

    def to_dict(self) -> Dict[str, Any]:
        """Resolved settings, as recorded in run manifests"""
        names = [name for name in dir(self) if name.isupper()]
        return {name: getattr(self, name) for name in sorted(names)}


class FastConfig(Config):
    """Coarse optimizer for exploratory runs"""
    GRID_POINTS = 33
    REFINE_ROUNDS = 1


class ProductionConfig(Config):
    """Production configuration"""

    def default_log_level(self) -> str:
        return 'WARNING'


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True

    def default_log_level(self) -> str:
        return 'WARNING'


# Configuration mapping
config_map: Dict[str, Any] = {
    'fast': FastConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': Config
}


def get_config(env: Optional[str] = None) -> Config:
    """Get configuration instance based on environment"""
    env = env or os.environ.get('DMAC_ENV', 'default')
    return config_map.get(env, Config)()
