"""
Utilities module for erpbench.

This module provides logging configuration helpers.
"""

from .logger import attach_package_loggers, configure_third_party_loggers, parse_level, setup_logger

__all__ = [
    'setup_logger',
    'attach_package_loggers',
    'parse_level',
    'configure_third_party_loggers',
]

__version__ = '0.1.0'
