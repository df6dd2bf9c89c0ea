"""
irrsum Exponent Sets
Support sets R, the family R_alpha = N + N/alpha, linear density and admissible DIPP cut sequences
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Union

import mpmath
from mpmath import mp, mpf

from core.errors import InvalidParameter

logger = logging.getLogger(__name__)


def _merge_tolerance(value) -> mpf:
    return mpf(2) ** (8 - mp.prec) * max(1, abs(value))


def parse_alpha(alpha: Union[str, float, int, mpf]) -> mpf:
    """Accept 'sqrt2'-style names, decimal strings and numbers"""
    if isinstance(alpha, str):
        name = alpha.strip().lower()
        if name.startswith('sqrt'):
            return mpmath.sqrt(mpf(name[4:].strip('()')))
        if name in ('phi', 'golden'):
            return (1 + mpmath.sqrt(5)) / 2
        return mpf(name)
    return mpf(alpha)


@dataclass(frozen=True)
class Exponent:
    """A support point, optionally remembered as p + q/alpha"""
    value: mpf
    p: Optional[int] = None
    q: Optional[int] = None

    @property
    def is_exact(self) -> bool:
        return self.p is not None


@dataclass
class ExponentSet:
    """Sorted, deduplicated finite support set"""
    points: List[Exponent]
    cutoff: Optional[mpf] = None
    kind: str = "explicit"
    alpha: Optional[mpf] = None
    _values: List[mpf] = field(init=False, repr=False)

    def __post_init__(self):
        self._values = [pt.value for pt in self.points]
        for a, b in zip(self._values, self._values[1:]):
            if not a < b:
                raise InvalidParameter("support points must be strictly increasing")
        if self._values and self._values[0] < 0:
            raise InvalidParameter("support points must be nonnegative")

    @property
    def values(self) -> List[mpf]:
        return self._values

    @property
    def is_integer(self) -> bool:
        return all(v == int(v) for v in self._values)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[mpf]:
        return iter(self._values)

    def contains(self, t, tol=None) -> bool:
        tol = _merge_tolerance(t) if tol is None else tol
        i = bisect.bisect_left(self._values, t - tol)
        return i < len(self._values) and abs(self._values[i] - t) <= tol

    def next_above(self, t) -> Optional[mpf]:
        """Smallest support point strictly greater than t"""
        i = bisect.bisect_right(self._values, t + _merge_tolerance(t))
        return self._values[i] if i < len(self._values) else None

    def count_upto(self, t) -> int:
        """Number of points <= t"""
        return bisect.bisect_right(self._values, t)

    def min_gap(self) -> Optional[mpf]:
        gaps = [b - a for a, b in zip(self._values, self._values[1:])]
        return min(gaps) if gaps else None


def _merged(candidates: Iterable[Exponent]) -> List[Exponent]:
    merged: List[Exponent] = []
    for pt in sorted(candidates, key=lambda e: e.value):
        if merged and pt.value - merged[-1].value <= _merge_tolerance(pt.value):
            continue
        merged.append(pt)
    return merged


def generate_r_alpha(alpha, cutoff) -> ExponentSet:
    """
    All points p + q/alpha <= cutoff

    Rational alpha produces coinciding points; they are merged keeping the first (p, q).
    """
    alpha = parse_alpha(alpha)
    cutoff = mpf(cutoff)
    if alpha <= 0:
        raise InvalidParameter(f"alpha must be positive, got {alpha}")
    if cutoff < 0:
        raise InvalidParameter(f"cutoff must be nonnegative, got {cutoff}")
    slack = _merge_tolerance(cutoff)
    candidates = []
    q = 0
    while True:
        base = mpf(q) / alpha
        if base > cutoff + slack:
            break
        p = 0
        while base + p <= cutoff + slack:
            candidates.append(Exponent(base + p, p, q))
            p += 1
        q += 1
    points = _merged(candidates)
    logger.debug("R_alpha with alpha=%s up to %s: %d points", alpha, cutoff, len(points))
    return ExponentSet(points, cutoff=cutoff, kind="r_alpha", alpha=alpha)


def integer_support(cutoff) -> ExponentSet:
    """N up to cutoff"""
    cutoff = mpf(cutoff)
    if cutoff < 0:
        raise InvalidParameter(f"cutoff must be nonnegative, got {cutoff}")
    points = [Exponent(mpf(p), p, 0) for p in range(int(mpmath.floor(cutoff)) + 1)]
    return ExponentSet(points, cutoff=cutoff, kind="integers", alpha=None)


def explicit_support(points: Sequence, cutoff=None) -> ExponentSet:
    """Arbitrary nonnegative points; duplicates merged"""
    values = [mpf(p) for p in points]
    if any(v < 0 for v in values):
        raise InvalidParameter("support points must be nonnegative")
    merged = _merged(Exponent(v) for v in values)
    if cutoff is None:
        cutoff = merged[-1].value if merged else mpf(0)
    return ExponentSet(merged, cutoff=mpf(cutoff), kind="explicit")


def r_alpha_closed_form(alpha, w):
    """Unit series on R_alpha: 1/((1 - e^{w/alpha})(1 - e^w))"""
    alpha = parse_alpha(alpha)
    w = mpmath.mpmathify(w)
    return 1 / ((1 - mpmath.exp(w / alpha)) * (1 - mpmath.exp(w)))


def geometric_closed_form(q, w):
    """sum_{n >= 0} q^n e^{n w}"""
    w = mpmath.mpmathify(w)
    return 1 / (1 - mpmath.mpmathify(q) * mpmath.exp(w))


# ---------------------------------------------------------------------------
# Linear density
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityParams:
    mu: mpf
    nu: mpf
    window: mpf

    def to_dict(self) -> Dict[str, str]:
        return {"mu": str(self.mu), "nu": str(self.nu), "window": str(self.window)}


def _window_counts(values: List[mpf], window: mpf) -> List[tuple]:
    """
    (count, smallest sup) for the half-open windows [s, s+L) anchored at each point

    Sliding s left of the anchor keeps the count until it reaches the previous point
    or the last included point leaves, whichever comes first.
    """
    rows = []
    j = 0
    n = len(values)
    for i, start in enumerate(values):
        if j < i:
            j = i
        while j < n and values[j] < start + window:
            j += 1
        count = j - i
        last = values[j - 1]
        previous = values[i - 1] if i > 0 else mpf(0)
        lowest_start = max(previous, last - window, mpf(0))
        rows.append((count, lowest_start + window))
    return rows


def density_params(R: ExponentSet, window, mu=None) -> DensityParams:
    """
    Linear density (mu, nu) with #(R n I) <= mu L sup(I) + nu L for windows of length L

    Without mu the lexicographic minimum is returned (mu = 0, smallest nu). With mu given,
    the smallest nu compatible with it.
    """
    window = mpf(window)
    if window <= 0:
        raise InvalidParameter(f"density window must be positive, got {window}")
    if len(R) == 0:
        raise InvalidParameter("density of an empty support is undefined")
    rows = _window_counts(R.values, window)
    mu = mpf(0) if mu is None else mpf(mu)
    if mu < 0:
        raise InvalidParameter(f"mu must be nonnegative, got {mu}")
    nu = max(max(mpf(count) / window - mu * sup for count, sup in rows), mpf(0))
    return DensityParams(mu=mu, nu=nu, window=window)


def density_holds(R: ExponentSet, params: DensityParams) -> bool:
    """Check the density inequality on every anchored window"""
    slack = _merge_tolerance(params.nu + params.mu)
    for count, sup in _window_counts(R.values, params.window):
        if count > params.mu * params.window * sup + params.nu * params.window + slack:
            return False
    return True


# ---------------------------------------------------------------------------
# Admissible sequences
# ---------------------------------------------------------------------------

@dataclass
class AdmissibleSequence:
    """
    Cut points t_0 = ... = t_3 = 0, t_n = (n - 3.5)/k, moved off the support

    A rule value lying on the support is replaced by t + g/2, g the distance to the next
    larger support point or rule value, capped at 1/(4k). t_0 stays at 0.
    """
    k: mpf
    support: Optional[ExponentSet] = None
    nudges: Dict[int, mpf] = field(default_factory=dict)

    def __post_init__(self):
        self.k = mpf(self.k)
        if self.k <= 0:
            raise InvalidParameter(f"k must be positive, got {self.k}")
        if self.support is not None and len(self.support):
            self._compute_nudges()

    def rule(self, n: int) -> mpf:
        if n <= 3:
            return mpf(0)
        return (n - mpf(7) / 2) / self.k

    def _next_rule_above(self, n: int, value: mpf) -> mpf:
        m = n + 1
        while self.rule(m) <= value:
            m += 1
        return self.rule(m)

    def _compute_nudges(self):
        last = self.support.values[-1]
        cap = 1 / (4 * self.k)
        n = 1
        while self.rule(n) <= last:
            value = self.rule(n)
            if self.support.contains(value):
                gap = self._next_rule_above(n, value) - value
                above = self.support.next_above(value)
                if above is not None:
                    gap = min(gap, above - value)
                self.nudges[n] = min(gap / 2, cap)
            n += 1
        if self.nudges:
            logger.debug("admissible sequence k=%s: nudged %d cut points", self.k, len(self.nudges))

    def __call__(self, n: int) -> mpf:
        if n < 0:
            raise InvalidParameter(f"cut index must be nonnegative, got {n}")
        return self.rule(n) + self.nudges.get(n, mpf(0))

    def cuts(self, n_max: int) -> List[mpf]:
        """t_0 .. t_{n_max + 1}"""
        return [self(n) for n in range(n_max + 2)]

    def max_index_within(self, cutoff) -> int:
        """Largest n_max with t_{n_max + 1} <= cutoff (at least 0 when t_1 fits)"""
        n = 0
        while self(n + 2) <= cutoff:
            n += 1
        return n


def admissible_sequence(k, R: Optional[ExponentSet] = None) -> AdmissibleSequence:
    return AdmissibleSequence(k=mpf(k), support=R)
