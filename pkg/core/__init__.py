"""
irrsum Core Module
"""

from .errors import (
    IrrsumError,
    InvalidParameter,
    DomainViolation,
    OrderDeficiencyError,
    PrecisionExhausted,
    SeriesFileError,
)
from .exponents import ExponentSet, admissible_sequence, generate_r_alpha, integer_support
from .distributions import DiscreteDistribution, VandermondeNodes, decompose_nested
from .packages import eval_package, eval_nested_packages
from .series import SeriesSpec, load_series_file, series_from_dict
from .dipp import DippResult, dipp_sum
from .summation import PackageDecomposition, eval_decomposition, summate_by_packages
from .domains import LogDomain, QuadDomain

__version__ = "0.1.0"

__all__ = [
    'IrrsumError',
    'InvalidParameter',
    'DomainViolation',
    'OrderDeficiencyError',
    'PrecisionExhausted',
    'SeriesFileError',
    'ExponentSet',
    'admissible_sequence',
    'generate_r_alpha',
    'integer_support',
    'DiscreteDistribution',
    'VandermondeNodes',
    'decompose_nested',
    'eval_package',
    'eval_nested_packages',
    'SeriesSpec',
    'load_series_file',
    'series_from_dict',
    'DippResult',
    'dipp_sum',
    'PackageDecomposition',
    'eval_decomposition',
    'summate_by_packages',
    'LogDomain',
    'QuadDomain',
]
