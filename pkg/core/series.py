"""
irrsum Series Descriptions
Formal series sum a_beta e^{beta w}: support, coefficient rule and truncation cutoff
"""

import bisect
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Union

import mpmath
from mpmath import mpf
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from core.distributions import Atom, DiscreteDistribution
from core.errors import InvalidParameter, SeriesFileError
from core.exponents import (
    ExponentSet,
    explicit_support,
    generate_r_alpha,
    integer_support,
)
from core.numerics import from_decimal

logger = logging.getLogger(__name__)


@dataclass
class SeriesSpec:
    """Support points with one coefficient each, truncated at cutoff"""
    support: ExponentSet
    coefficients: List
    cutoff: mpf
    label: str = ""
    rule: str = "explicit"
    mu_hint: Optional[mpf] = None

    def __post_init__(self):
        if len(self.coefficients) != len(self.support):
            raise InvalidParameter(
                f"{len(self.coefficients)} coefficients for {len(self.support)} support points")
        self.cutoff = mpf(self.cutoff)
        if len(self.support) and self.support.values[-1] > self.cutoff:
            raise InvalidParameter("cutoff must not lie below the last support point")

    @property
    def values(self) -> List[mpf]:
        return self.support.values

    @property
    def is_integer_supported(self) -> bool:
        return self.support.is_integer

    def __len__(self) -> int:
        return len(self.support)

    def count_upto(self, t) -> int:
        return bisect.bisect_right(self.support.values, t)

    def distribution(self) -> DiscreteDistribution:
        return DiscreteDistribution(
            Atom(beta, 0, a) for beta, a in zip(self.support.values, self.coefficients))

    def describe(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "rule": self.rule,
            "points": len(self.support),
            "cutoff": str(self.cutoff),
            "support_kind": self.support.kind,
        }


def unit_series(support: ExponentSet, cutoff=None, label: str = "") -> SeriesSpec:
    return SeriesSpec(support, [mpf(1)] * len(support), _cutoff(support, cutoff), label,
                      rule="unit", mu_hint=support.alpha)


def geometric_series(support: ExponentSet, ratio, cutoff=None, label: str = "") -> SeriesSpec:
    """a_beta = ratio^beta"""
    ratio = mpmath.mpmathify(ratio)
    return SeriesSpec(support, [ratio ** beta for beta in support.values], _cutoff(support, cutoff),
                      label, rule="geometric", mu_hint=support.alpha)


def explicit_series(support: ExponentSet, values: Sequence, cutoff=None, label: str = "") -> SeriesSpec:
    coefficients = [from_decimal(v) if isinstance(v, (str, list, tuple)) else mpmath.mpmathify(v)
                    for v in values]
    return SeriesSpec(support, coefficients, _cutoff(support, cutoff), label,
                      rule="explicit", mu_hint=support.alpha)


def paired_difference_series(support: ExponentSet, delta, pairs: int, cutoff=None,
                             label: str = "") -> SeriesSpec:
    """
    (e^{(beta+delta) w} - e^{beta w})/delta on the first `pairs` support points

    Coefficients of size 1/delta cancel to an O(1) sum.
    """
    delta = mpf(delta)
    if delta <= 0:
        raise InvalidParameter(f"delta must be positive, got {delta}")
    if pairs < 1 or pairs > len(support):
        raise InvalidParameter(f"pairs must be between 1 and {len(support)}, got {pairs}")
    bases = support.values[:pairs]
    gap = support.min_gap()
    if gap is not None and delta >= gap / 2:
        raise InvalidParameter(f"delta {delta} collides with the support gap {gap}")
    weights = {}
    for beta in bases:
        weights[beta] = -1 / delta
        weights[beta + delta] = 1 / delta
    points = sorted(weights)
    paired = explicit_support(points, cutoff=max(support.cutoff or 0, points[-1]))
    return SeriesSpec(paired, [weights[p] for p in paired.values], _cutoff(paired, cutoff),
                      label, rule="paired_difference", mu_hint=None)


def _cutoff(support: ExponentSet, cutoff) -> mpf:
    if cutoff is not None:
        return mpf(cutoff)
    if support.cutoff is not None:
        return support.cutoff
    return support.values[-1] if len(support) else mpf(0)


# ---------------------------------------------------------------------------
# Series files
# ---------------------------------------------------------------------------

def _as_decimal_string(v):
    if isinstance(v, bool):
        raise ValueError("booleans are not numbers here")
    if isinstance(v, (int, float)):
        return repr(v)
    return v


class RAlphaSupport(BaseModel):
    """Points p + q/alpha up to cutoff"""
    kind: Literal["r_alpha"]
    alpha: str = Field(..., description="Decimal string, number or a name such as 'sqrt2'")
    cutoff: float = Field(..., gt=0, description="Largest support point generated")

    @field_validator('alpha', mode='before')
    @classmethod
    def parse_alpha_field(cls, v):
        return _as_decimal_string(v)


class IntegerSupport(BaseModel):
    """Nonnegative integers up to cutoff"""
    kind: Literal["integers"]
    cutoff: float = Field(..., gt=0)


class ExplicitSupport(BaseModel):
    """Listed points"""
    kind: Literal["explicit"]
    points: List[str] = Field(..., min_length=1)

    @field_validator('points', mode='before')
    @classmethod
    def parse_points_field(cls, v):
        if not isinstance(v, list):
            raise ValueError("points must be a list")
        return [_as_decimal_string(p) for p in v]


class UnitCoefficients(BaseModel):
    kind: Literal["unit"] = "unit"


class GeometricCoefficients(BaseModel):
    """a_beta = ratio^beta"""
    kind: Literal["geometric"]
    ratio: str

    @field_validator('ratio', mode='before')
    @classmethod
    def parse_ratio_field(cls, v):
        return _as_decimal_string(v)


class ExplicitCoefficients(BaseModel):
    """One value per support point; complex values as [re, im]"""
    kind: Literal["explicit"]
    values: List[Union[str, List[str]]]

    @field_validator('values', mode='before')
    @classmethod
    def parse_values_field(cls, v):
        if not isinstance(v, list):
            raise ValueError("values must be a list")
        parsed = []
        for item in v:
            if isinstance(item, (list, tuple)):
                if len(item) != 2:
                    raise ValueError(f"complex values are [re, im] pairs, got {item!r}")
                parsed.append([_as_decimal_string(x) for x in item])
            else:
                parsed.append(_as_decimal_string(item))
        return parsed


class PairedDifferenceCoefficients(BaseModel):
    """+-1/delta pairs on the first `pairs` support points"""
    kind: Literal["paired_difference"]
    delta: str
    pairs: int = Field(..., ge=1)

    @field_validator('delta', mode='before')
    @classmethod
    def parse_delta_field(cls, v):
        return _as_decimal_string(v)

    @field_validator('delta')
    @classmethod
    def check_delta_positive(cls, v):
        if mpf(v) <= 0:
            raise ValueError("delta must be positive")
        return v


class SeriesFile(BaseModel):
    """JSON description of a formal series"""
    support: Union[RAlphaSupport, IntegerSupport, ExplicitSupport] = Field(..., discriminator='kind')
    coefficients: Union[UnitCoefficients, GeometricCoefficients, ExplicitCoefficients,
                        PairedDifferenceCoefficients] = Field(default_factory=UnitCoefficients,
                                                              discriminator='kind')
    label: str = ""
    cutoff: Optional[str] = Field(None, description="Truncation cutoff T when above the support")

    @field_validator('cutoff', mode='before')
    @classmethod
    def parse_cutoff_field(cls, v):
        return None if v is None else _as_decimal_string(v)

    @model_validator(mode='after')
    def check_explicit_lengths(self):
        if isinstance(self.coefficients, ExplicitCoefficients) and isinstance(self.support, ExplicitSupport):
            if len(self.coefficients.values) != len(self.support.points):
                raise ValueError(
                    f"{len(self.coefficients.values)} coefficient values for "
                    f"{len(self.support.points)} support points")
        return self

    def build(self) -> SeriesSpec:
        """SeriesSpec at the working precision"""
        if isinstance(self.support, RAlphaSupport):
            support = generate_r_alpha(self.support.alpha, self.support.cutoff)
        elif isinstance(self.support, IntegerSupport):
            support = integer_support(self.support.cutoff)
        else:
            support = explicit_support(self.support.points)

        cutoff = None if self.cutoff is None else mpf(self.cutoff)
        coefficients = self.coefficients
        if isinstance(coefficients, UnitCoefficients):
            return unit_series(support, cutoff, self.label)
        if isinstance(coefficients, GeometricCoefficients):
            return geometric_series(support, mpf(coefficients.ratio), cutoff, self.label)
        if isinstance(coefficients, ExplicitCoefficients):
            if len(coefficients.values) != len(support):
                raise SeriesFileError(
                    f"{len(coefficients.values)} coefficient values for {len(support)} support points")
            return explicit_series(support, coefficients.values, cutoff, self.label)
        return paired_difference_series(support, mpf(coefficients.delta), coefficients.pairs,
                                        cutoff, self.label)


def series_from_dict(data: Dict) -> SeriesSpec:
    try:
        return SeriesFile.model_validate(data).build()
    except ValidationError as e:
        raise SeriesFileError(f"Invalid series description: {e}") from e
    except InvalidParameter as e:
        raise SeriesFileError(str(e)) from e


def load_series_file(path: Union[str, Path]) -> SeriesSpec:
    """Parse and build a series file"""
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except OSError as e:
        raise SeriesFileError(f"Cannot read series file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise SeriesFileError(f"Malformed JSON in {path}: {e}") from e
    if not isinstance(data, dict):
        raise SeriesFileError(f"Series file {path} must hold a JSON object")
    series = series_from_dict(data)
    logger.debug("loaded series %r: %d points up to %s", series.label, len(series), series.cutoff)
    return series
