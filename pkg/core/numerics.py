"""
irrsum Numerics
Precision control, shifted polynomials, piecewise polynomials and closed-form exponential integrals
"""

import bisect
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import mpmath
from mpmath import mp, mpf, mpc

from core.errors import InvalidParameter, PrecisionExhausted, RootIsolationError

logger = logging.getLogger(__name__)

Number = Union[mpf, mpc]

DEFAULT_BITS = 256
MAX_BITS = 8192
# |w|*(t1 - t0) below this uses the power series instead of the 1/w recurrence
SERIES_SWITCH = mpf(1) / 4
ROOT_SCAN_MIN = 8


# ---------------------------------------------------------------------------
# Precision
# ---------------------------------------------------------------------------

@contextmanager
def workprec_bits(bits: int) -> Iterator[int]:
    """Run a block at a fixed binary precision"""
    if bits < 53:
        raise InvalidParameter(f"precision must be at least 53 bits, got {bits}")
    with mpmath.workprec(bits):
        yield bits


def _relative_gap(x, y):
    scale = max(abs(x), abs(y))
    if scale == 0:
        return mpf(0)
    return abs(x - y) / scale


def adaptive_precision(fn: Callable[[], object], tol: float,
                       start_bits: int = DEFAULT_BITS, max_bits: int = MAX_BITS,
                       key: Optional[Callable[[object], Number]] = None) -> Tuple[object, int]:
    """
    Evaluate fn at doubling precision until two successive results agree

    Args:
        fn: Zero-argument callable evaluated under the working precision
        tol: Relative agreement required between successive evaluations
        start_bits: First precision tried
        max_bits: Ceiling; exceeding it raises PrecisionExhausted
        key: Extracts the number compared from fn's result (identity by default)

    Returns:
        Tuple of (result at the final precision, final precision in bits)
    """
    key = key or (lambda value: value)
    bits = start_bits
    with workprec_bits(bits):
        previous = fn()
    while True:
        bits *= 2
        if bits > max_bits:
            raise PrecisionExhausted(
                f"no agreement to {tol} below {max_bits} bits", bits=bits // 2)
        logger.debug("adaptive precision retry at %d bits", bits)
        with workprec_bits(bits):
            current = fn()
            gap = _relative_gap(key(current), key(previous))
        if gap <= tol:
            return current, bits
        previous = current


def to_decimal(x: Number, bits: Optional[int] = None, extra_digits: int = 5) -> Union[str, List[str]]:
    """Decimal string carrying enough digits to reproduce x at `bits` precision"""
    bits = bits or mp.prec
    digits = int(math.ceil(bits * math.log10(2))) + extra_digits
    if isinstance(x, mpc) or isinstance(x, complex):
        x = mpmath.mpmathify(x)
        return [mpmath.nstr(x.real, digits, strip_zeros=False),
                mpmath.nstr(x.imag, digits, strip_zeros=False)]
    return mpmath.nstr(mpmath.mpmathify(x), digits, strip_zeros=False)


def from_decimal(value: Union[str, float, int, Sequence]) -> Number:
    """Parse a decimal string, a number or a [re, im] pair at the working precision"""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InvalidParameter(f"complex values are [re, im] pairs, got {value!r}")
        return mpc(mpf(value[0]), mpf(value[1]))
    if isinstance(value, complex):
        return mpc(value)
    return mpf(value)


def is_complex(x) -> bool:
    return isinstance(x, (mpc, complex))


def real_if_possible(x: Number) -> Number:
    if isinstance(x, mpc) and x.imag == 0:
        return x.real
    return x


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polynomial:
    """Polynomial sum_j c_j (t - shift)^j stored around an explicit shift point"""
    coefficients: Tuple[Number, ...] = ()
    shift: mpf = mpf(0)

    def __post_init__(self):
        coeffs = list(self.coefficients)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, 'coefficients', tuple(coeffs))

    @classmethod
    def constant(cls, value, shift=0) -> 'Polynomial':
        return cls((value,), mpf(shift))

    @classmethod
    def monomial(cls, degree: int, center=0, scale=1) -> 'Polynomial':
        """scale * (t - center)^degree / degree!"""
        coeffs = [0] * degree + [mpmath.mpmathify(scale) / mpmath.factorial(degree)]
        return cls(tuple(coeffs), mpf(center))

    @classmethod
    def truncated_power_at(cls, beta, degree: int, center, scale=1) -> 'Polynomial':
        """scale * (t - beta)^degree / degree!, expanded around `center` directly"""
        d = mpf(center) - beta
        coeffs = []
        # coefficient of (t - center)^j is scale * d^(degree-j) / ((degree-j)! j!)
        for j in range(degree + 1):
            coeffs.append(scale * d ** (degree - j)
                          / (mpmath.factorial(degree - j) * mpmath.factorial(j)))
        return cls(tuple(coeffs), mpf(center))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    def __call__(self, t) -> Number:
        x = t - self.shift
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative_at(self, t, r: int = 0) -> Number:
        """r-th derivative evaluated at t"""
        if r == 0:
            return self(t)
        x = t - self.shift
        acc = 0
        for j in range(self.degree, r - 1, -1):
            acc = acc * x + self.coefficients[j] * mpmath.ff(j, r)
        return acc

    def derivative(self) -> 'Polynomial':
        coeffs = tuple(j * c for j, c in enumerate(self.coefficients) if j > 0)
        return Polynomial(coeffs, self.shift)

    def shifted(self, s) -> 'Polynomial':
        """Same polynomial re-expanded around s (Taylor shift)"""
        s = mpf(s)
        if s == self.shift or self.is_zero:
            return Polynomial(self.coefficients, s)
        d = s - self.shift
        coeffs = list(self.coefficients)
        n = len(coeffs)
        # repeated synthetic division by (t - s)
        for i in range(n):
            for j in range(n - 2, i - 1, -1):
                coeffs[j] = coeffs[j] + d * coeffs[j + 1]
        return Polynomial(tuple(coeffs), s)

    def __add__(self, other: 'Polynomial') -> 'Polynomial':
        if other.shift != self.shift:
            other = other.shifted(self.shift)
        n = max(len(self.coefficients), len(other.coefficients))
        a = list(self.coefficients) + [0] * (n - len(self.coefficients))
        b = list(other.coefficients) + [0] * (n - len(other.coefficients))
        return Polynomial(tuple(x + y for x, y in zip(a, b)), self.shift)

    def scale(self, c) -> 'Polynomial':
        return Polynomial(tuple(c * x for x in self.coefficients), self.shift)

    def add_term(self, j: int, c) -> 'Polynomial':
        """Add c * (t - shift)^j"""
        coeffs = list(self.coefficients) + [0] * max(0, j + 1 - len(self.coefficients))
        coeffs[j] = coeffs[j] + c
        return Polynomial(tuple(coeffs), self.shift)

    def magnitude(self, width) -> mpf:
        """sum_j |c_j| width^j, an upper bound of |p| on [shift, shift + width]"""
        return sum((abs(c) * mpf(width) ** j for j, c in enumerate(self.coefficients)), mpf(0))

    def sign_variations(self) -> int:
        """Descartes count of the coefficients around the shift point"""
        signs = [mpmath.sign(c) for c in self.coefficients if c != 0]
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


# ---------------------------------------------------------------------------
# Root isolation
# ---------------------------------------------------------------------------

def _bisect_root(q: Polynomial, lo: mpf, hi: mpf, f_lo) -> mpf:
    iterations = mp.prec // 2 + 8
    for _ in range(iterations):
        mid = (lo + hi) / 2
        f_mid = q(mid)
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return (lo + hi) / 2


def _bracket_root(q: Polynomial, a: mpf, b: mpf, f_a) -> mpf:
    try:
        root = mpmath.findroot(q, (a, b), solver='illinois', verify=False, maxsteps=mp.prec)
        root = mpmath.re(root)
        if not (a <= root <= b):
            raise ValueError("bracketing solver left the interval")
    except (ValueError, ZeroDivisionError):
        root = _bisect_root(q, a, b, f_a)
    return root


def interval_variations(q: Polynomial, a, b) -> int:
    """
    Descartes bound on the roots of q in (a, b)

    Sign variations of (1 + x)^d q((a + b x) / (1 + x)); 0 means no root, 1 exactly one.
    Coefficients below the precision floor count as zero.
    """
    a, b = mpf(a), mpf(b)
    width = b - a
    scaled = [c * width ** j for j, c in enumerate(q.shifted(a).coefficients)]
    mobius = Polynomial(tuple(reversed(scaled))).shifted(1).coefficients
    if not mobius:
        return 0
    floor = max(abs(c) for c in mobius) * mpf(2) ** (8 - mp.prec)
    signs = [mpmath.sign(c) for c in mobius if abs(c) > floor]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def real_roots_in(q: Polynomial, lo, hi, scan_min: int = ROOT_SCAN_MIN) -> List[mpf]:
    """
    Roots of odd multiplicity of a real polynomial inside the open interval (lo, hi)

    The interval is cut into at least scan_min cells; each cell is bisected until its
    Descartes bound is 0 or 1, then the single root is bracketed. Root pairs closer than
    the precision floor are sign-neutral and dropped.
    """
    lo, hi = mpf(lo), mpf(hi)
    if q.degree < 1 or hi <= lo:
        return []
    if any(is_complex(c) for c in q.coefficients):
        raise RootIsolationError("root isolation needs real coefficients")
    if q.shift == lo and q.sign_variations() == 0:
        return []

    subdivisions = 1
    while subdivisions < scan_min:
        subdivisions *= 2
    width = hi - lo
    floor = q.shifted(lo).magnitude(width) * mpf(2) ** (8 - mp.prec)
    max_depth = mp.prec // 2
    points = [lo + width * i / subdivisions for i in range(subdivisions + 1)]

    roots: List[mpf] = [p for p in points[1:-1] if q(p) == 0]
    stack = [(a, b, 0) for a, b in zip(points, points[1:])]
    while stack:
        a, b, depth = stack.pop()
        variations = interval_variations(q, a, b)
        if variations == 0:
            continue
        f_a, f_b = q(a), q(b)
        if abs(f_a) <= floor and abs(f_b) <= floor and depth > 0:
            continue
        changes = f_a * f_b < 0 and abs(f_a) > floor and abs(f_b) > floor
        if changes and (variations == 1 or depth >= max_depth):
            roots.append(_bracket_root(q, a, b, f_a))
            continue
        if depth >= max_depth:
            continue
        mid = (a + b) / 2
        if q(mid) == 0:
            roots.append(mid)
        stack.append((a, mid, depth + 1))
        stack.append((mid, b, depth + 1))

    roots.sort()
    if len(roots) > q.degree:
        raise RootIsolationError(
            f"found {len(roots)} sign changes for a degree {q.degree} piece on [{lo}, {hi}]")
    return roots


# ---------------------------------------------------------------------------
# Polynomial times exponential
# ---------------------------------------------------------------------------

def _series_moments(m: int, w, h) -> List[Number]:
    """G_j = int_0^h s^j e^{s w} ds by the exponential series (|w| h small)"""
    wh = w * h
    stop = mpf(2) ** (-(mp.prec + 10))
    moments = []
    for j in range(m + 1):
        term = mpf(1)
        acc = mpf(0)
        i = 0
        while True:
            acc += term / (j + i + 1)
            i += 1
            term = term * wh / i
            if abs(term) < stop:
                break
        moments.append(acc * h ** (j + 1))
    return moments


def _recurrence_moments(m: int, w, h) -> List[Number]:
    """G_0 = (e^{hw} - 1)/w, G_j = h^j e^{hw}/w - (j/w) G_{j-1}"""
    guard = 16
    ratio = m / (abs(w) * h)
    if ratio > 1:
        guard += int(m * math.log2(float(ratio))) + 1
    with mp.extraprec(guard):
        ehw = mpmath.exp(h * w)
        moments = [mpmath.expm1(h * w) / w]
        hp = mpf(1)
        for j in range(1, m + 1):
            hp *= h
            moments.append(hp * ehw / w - j * moments[-1] / w)
    return [+g for g in moments]


def poly_exp_integral(q: Polynomial, w, t0, t1) -> Number:
    """
    Closed form of int_{t0}^{t1} q(t) e^{t w} dt

    Args:
        q: Polynomial integrand factor
        w: Real or complex exponent
        t0, t1: Integration bounds with t0 <= t1

    Returns:
        The integral at the working precision
    """
    t0, t1 = mpf(t0), mpf(t1)
    if t1 < t0:
        raise InvalidParameter(f"integration bounds out of order: {t0} > {t1}")
    if t1 == t0 or q.is_zero:
        return mpf(0)
    w = mpmath.mpmathify(w)
    p = q.shifted(t0)
    h = t1 - t0
    m = p.degree
    if w == 0:
        return mpmath.fsum(c * h ** (j + 1) / (j + 1) for j, c in enumerate(p.coefficients))
    if abs(w) * h < SERIES_SWITCH:
        moments = _series_moments(m, w, h)
    else:
        moments = _recurrence_moments(m, w, h)
    return mpmath.exp(t0 * w) * mpmath.fsum(c * g for c, g in zip(p.coefficients, moments))


# ---------------------------------------------------------------------------
# Piecewise polynomials
# ---------------------------------------------------------------------------

@dataclass
class PiecewisePolynomial:
    """
    Polynomial pieces on [b_i, b_{i+1}); zero left of b_0

    `tail` covers [b_m, inf). A zero tail means the function vanishes past the last breakpoint.
    Each piece is stored around its left endpoint.
    """
    breakpoints: List[mpf]
    pieces: List[Polynomial]
    tail: Polynomial = field(default_factory=Polynomial)
    smoothness: int = -1

    def __post_init__(self):
        if self.breakpoints and len(self.pieces) != len(self.breakpoints) - 1:
            raise InvalidParameter("piecewise polynomial needs one piece per interval")

    @property
    def support_end(self) -> Optional[mpf]:
        """Right end of the support, None when the tail does not vanish"""
        if not self.tail.is_zero:
            return None
        return self.breakpoints[-1] if self.breakpoints else None

    def __call__(self, t) -> Number:
        if not self.breakpoints or t < self.breakpoints[0]:
            return mpf(0)
        i = bisect.bisect_right(self.breakpoints, t) - 1
        if i >= len(self.pieces):
            return self.tail(t)
        return self.pieces[i](t)

    def intervals(self) -> Iterator[Tuple[mpf, mpf, Polynomial]]:
        for i, piece in enumerate(self.pieces):
            yield self.breakpoints[i], self.breakpoints[i + 1], piece

    def pieces_on(self, lo, hi) -> List[Tuple[mpf, mpf, Polynomial]]:
        """Pieces clipped to [lo, hi], the tail included when it reaches in"""
        lo, hi = mpf(lo), mpf(hi)
        clipped = []
        spans = list(self.intervals())
        if self.breakpoints and not self.tail.is_zero:
            spans.append((self.breakpoints[-1], mpmath.inf, self.tail))
        for a, b, piece in spans:
            a2, b2 = max(a, lo), min(b, hi)
            if b2 > a2 and not piece.is_zero:
                clipped.append((a2, b2, piece))
        return clipped

    def restrict(self, lo, hi) -> 'PiecewisePolynomial':
        spans = self.pieces_on(lo, hi)
        if not spans:
            return PiecewisePolynomial([], [], smoothness=self.smoothness)
        breakpoints = [spans[0][0]]
        pieces = []
        for a, b, piece in spans:
            if a != breakpoints[-1]:
                pieces.append(Polynomial())
                breakpoints.append(a)
            pieces.append(piece.shifted(a))
            breakpoints.append(b)
        return PiecewisePolynomial(breakpoints, pieces, smoothness=self.smoothness)


def pw_weighted_l1(f: PiecewisePolynomial, a=0, scan_min: int = ROOT_SCAN_MIN) -> mpf:
    """int |f(t)| e^{a t} dt, exact per piece after splitting at sign changes"""
    if not f.tail.is_zero:
        raise InvalidParameter("weighted L1 norm needs finite support; restrict the function first")
    a = mpf(a)
    total = []
    for lo, hi, piece in f.intervals():
        if piece.is_zero:
            continue
        try:
            roots = real_roots_in(piece, lo, hi, scan_min=scan_min)
        except RootIsolationError as e:
            raise RootIsolationError(f"{e} (piece {piece.coefficients} around {piece.shift})") from e
        cuts = [lo] + roots + [hi]
        for u, v in zip(cuts, cuts[1:]):
            if v <= u:
                continue
            integral = poly_exp_integral(piece, a, u, v)
            total.append(abs(mpmath.re(integral)))
    return mpmath.fsum(total)


def pw_l1_norm(f: PiecewisePolynomial, scan_min: int = ROOT_SCAN_MIN) -> mpf:
    """int |f|"""
    return pw_weighted_l1(f, 0, scan_min=scan_min)
