"""
Configuration for the residue difference sieve: defaults per concern,
environment overrides from .env and the shared logging setup
"""

import os
import sys
from pathlib import Path
from typing import Optional
import logging

from dotenv import load_dotenv

from modules.criteria import DEFAULT_PIPELINE
from modules.search import DEFAULT_SEARCH_BOUND, DEFAULT_VERIFY_BOUND
from modules.sieve import DEFAULT_CHUNK_SIZE, DEFAULT_CYCLOTOMIC_BASES, DEFAULT_K_MAX

logger = logging.getLogger(__name__)

# Base directory
BASE_DIR = Path(__file__).parent

load_dotenv(BASE_DIR / '.env')

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Sieve run defaults
SIEVE_DEFAULTS = {
    'n_from': 2,
    'enabled_tests': [t.value for t in DEFAULT_PIPELINE],
    'worker_count': 1,
    'chunk_size': DEFAULT_CHUNK_SIZE,
    'checkpoint_path': None,
    'output_format': 'json',
}

# Cyclotomic elimination defaults
CYCLOTOMIC_DEFAULTS = {
    'bases': list(DEFAULT_CYCLOTOMIC_BASES),  # first 25 primes
    'k_max': DEFAULT_K_MAX,
}

# Brute-force search defaults
SEARCH_DEFAULTS = {
    'bound': DEFAULT_SEARCH_BOUND,
    'verify_bound': DEFAULT_VERIFY_BOUND,
    'mode': 'canonical',
}

# HTTP service settings
SERVICE_CONFIG = {
    'host': 'localhost',
    'port': 5000,
    'cors_origins': ['http://localhost:3000', 'http://127.0.0.1:3000'],
}

LOGGING_CONFIG = {
    'level': 'INFO',
    'format': LOG_FORMAT,
    'log_file': None,
}


def _int_override(name: str, target: dict, key: str, minimum: int = 1) -> None:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == '':
        return
    try:
        value = int(raw)
        if value < minimum:
            raise ValueError(f"below {minimum}")
    except ValueError as e:
        logger.warning(f"Ignoring {name}={raw!r}: {e}")
        return
    target[key] = value


def apply_env_overrides() -> None:
    """Read the QRSIEVE_* environment variables into the default tables"""
    _int_override('QRSIEVE_JOBS', SIEVE_DEFAULTS, 'worker_count')
    _int_override('QRSIEVE_SEARCH_BOUND', SEARCH_DEFAULTS, 'bound', minimum=5)
    _int_override('QRSIEVE_PORT', SERVICE_CONFIG, 'port')
    if os.environ.get('QRSIEVE_HOST'):
        SERVICE_CONFIG['host'] = os.environ['QRSIEVE_HOST']
    level = os.environ.get('QRSIEVE_LOG_LEVEL')
    if level:
        if isinstance(logging.getLevelName(level.upper()), int):
            LOGGING_CONFIG['level'] = level.upper()
        else:
            logger.warning(f"Ignoring QRSIEVE_LOG_LEVEL={level!r}: unknown level")
    if os.environ.get('QRSIEVE_LOG_FILE'):
        LOGGING_CONFIG['log_file'] = os.environ['QRSIEVE_LOG_FILE']


def configure_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """
    Install the project log format on stderr, plus a file handler if configured

    Args:
        level: log level name, defaults to LOGGING_CONFIG
        log_file: optional path for a UTF-8 log file
    """
    level = (level or LOGGING_CONFIG['level']).upper()
    log_file = log_file or LOGGING_CONFIG['log_file']
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(level=level, format=LOGGING_CONFIG['format'], handlers=handlers, force=True)


def get_sieve_defaults() -> dict:
    """
    Get default sieve parameters

    Returns:
        Sieve defaults dictionary
    """
    return SIEVE_DEFAULTS.copy()


def get_cyclotomic_defaults() -> dict:
    return {'bases': list(CYCLOTOMIC_DEFAULTS['bases']), 'k_max': CYCLOTOMIC_DEFAULTS['k_max']}


def get_search_defaults() -> dict:
    return SEARCH_DEFAULTS.copy()


def get_service_config() -> dict:
    """
    Get HTTP service configuration

    Returns:
        Service configuration dictionary
    """
    config = SERVICE_CONFIG.copy()
    config['cors_origins'] = list(SERVICE_CONFIG['cors_origins'])
    return config


# Environment overrides are applied once, on import
apply_env_overrides()
