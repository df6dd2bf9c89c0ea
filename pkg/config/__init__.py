"""
irrsum Configuration Module
"""

from .settings import (
    PrecisionConfig,
    DippConfig,
    SummationConfig,
    OutputConfig,
    ServerConfig,
    IrrsumSettings,
    get_settings,
    get_precision_bits,
    get_dipp_settings,
    get_summation_settings,
    reload_settings
)

__all__ = [
    'PrecisionConfig',
    'DippConfig',
    'SummationConfig',
    'OutputConfig',
    'ServerConfig',
    'IrrsumSettings',
    'get_settings',
    'get_precision_bits',
    'get_dipp_settings',
    'get_summation_settings',
    'reload_settings'
]
