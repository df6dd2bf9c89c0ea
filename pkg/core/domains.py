"""
irrsum Neighborhoods of -infinity
Logarithmic neighborhoods H_{a,k}, straight half-planes and quadratic domains Omega_C
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import mpmath
from mpmath import mp, mpf

from core.errors import DomainViolation, InvalidParameter

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogDomain:
    """H_{a,k} = {x + iy : x + (k/2) log(x^2 + y^2) < a}"""
    a: mpf
    k: mpf

    def __post_init__(self):
        object.__setattr__(self, 'a', mpf(self.a))
        object.__setattr__(self, 'k', mpf(self.k))
        if self.k <= 0:
            raise InvalidParameter(f"k must be positive, got {self.k}")

    def defining_function(self, w):
        w = mpmath.mpmathify(w)
        return mpmath.re(w) + self.k / 2 * mpmath.log(mpmath.re(w) ** 2 + mpmath.im(w) ** 2)

    def __contains__(self, w) -> bool:
        return log_contains(self, w)


@dataclass(frozen=True)
class QuadDomain:
    """Omega_C = Phi_C({Re < a}), Phi_C(w) = w - C sqrt(1 + w^2) on the principal branch"""
    C: mpf
    a: mpf

    def __post_init__(self):
        object.__setattr__(self, 'C', mpf(self.C))
        object.__setattr__(self, 'a', mpf(self.a))
        if self.C <= 0:
            raise InvalidParameter(f"C must be positive, got {self.C}")
        if self.a > 0:
            raise InvalidParameter(f"quadratic domains need a <= 0, got {self.a}")

    def phi(self, w):
        w = mpmath.mpmathify(w)
        return w - self.C * mpmath.sqrt(1 + w * w)

    def __contains__(self, w) -> bool:
        return quad_contains(self, w) is True


def halfplane_contains(a, w) -> bool:
    return bool(mpmath.re(mpmath.mpmathify(w)) < mpf(a))


def log_contains(H: LogDomain, w) -> bool:
    """Strict: boundary points are outside"""
    w = mpmath.mpmathify(w)
    if w == 0:
        raise DomainViolation("H_{a,k} is not defined at w = 0")
    return bool(H.defining_function(w) < H.a)


def cle_check(w, a, k, beta, p: int) -> bool:
    """
    |w^p e^{beta w}| <= e^{a beta} for w in H_{a,k} and integer 0 <= p <= k beta

    For p < k beta the bound also needs |w| >= 1; that case raises instead of returning False.
    Compared in logarithms so large beta does not underflow.
    """
    w = mpmath.mpmathify(w)
    a, k, beta = mpf(a), mpf(k), mpf(beta)
    if beta <= 0:
        raise DomainViolation(f"beta must be positive, got {beta}")
    if p < 0 or p > k * beta:
        raise DomainViolation(f"p = {p} is outside [0, k beta] = [0, {k * beta}]")
    if not log_contains(LogDomain(a, k), w):
        raise DomainViolation(f"w = {w} is not in H_({a}, {k})")
    modulus = abs(w)
    if p < k * beta and modulus < 1:
        raise DomainViolation(f"|w| = {modulus} < 1 with p < k beta")
    lhs = p * mpmath.log(modulus) + beta * mpmath.re(w)
    return bool(lhs <= a * beta)


def quad_contains(Q: QuadDomain, w, tol=None) -> Optional[bool]:
    """
    Membership of w in Omega_C by inverting Phi_C

    Re Phi_C(z) <= Re z, so Re(w) >= a is rejected outright. Otherwise Newton from
    w/(1 + C) solves Phi_C(z) = w. None means the solve did not settle.
    """
    w = mpmath.mpmathify(w)
    if mpmath.re(w) >= Q.a:
        return False
    C = Q.C

    def f(z):
        return z - C * mpmath.sqrt(1 + z * z) - w

    def df(z):
        return 1 - C * z / mpmath.sqrt(1 + z * z)

    tol = mpf(2) ** (-mp.prec // 2) if tol is None else mpf(tol)
    try:
        z = mpmath.findroot(f, mpmath.mpc(w) / (1 + C), solver='newton', df=df)
    except (ValueError, ZeroDivisionError) as e:
        logger.warning("Phi_C inversion did not converge at w = %s: %s", mpmath.nstr(w, 8), e)
        return None
    if abs(f(z)) > tol * max(1, abs(w)):
        logger.warning("Phi_C inversion left residual %s at w = %s",
                       mpmath.nstr(abs(f(z)), 5), mpmath.nstr(w, 8))
        return None
    return bool(mpmath.re(z) < Q.a)


def quad_halfplane_margin(Q: QuadDomain, y) -> mpf:
    """C/|w - sqrt(1 + w^2)| at w = a + iy, which equals |(1 + C) w - Phi_C(w)|"""
    w = mpmath.mpc(Q.a, y)
    return Q.C / abs(w - mpmath.sqrt(1 + w * w))


def _log_boundary_x(H: LogDomain, y) -> mpf:
    """Largest x with x + (k/2) log(x^2 + y^2) = a"""
    y = mpf(y)

    def g(x):
        return x + H.k / 2 * mpmath.log(x * x + y * y) - H.a

    if y == 0 or g(mpf(0)) < 0:
        lo, hi = mpf(0), mpf(1)
        while g(hi) <= 0:
            hi *= 2
    else:
        lo, hi = mpf(-1), mpf(0)
        while g(lo) >= 0:
            lo *= 2
    for _ in range(mp.prec + 16):
        mid = (lo + hi) / 2
        if mid == lo or mid == hi:
            break
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def boundary_samples(domain: Union[LogDomain, QuadDomain], y_range: Sequence, count: int) -> List:
    """
    Boundary points over evenly spaced heights

    LogDomain: the rightmost boundary point x + iy at each height y.
    QuadDomain: Phi_C(a + iy).
    """
    if count < 2:
        raise InvalidParameter(f"count must be at least 2, got {count}")
    ymin, ymax = mpf(y_range[0]), mpf(y_range[1])
    ys = mpmath.linspace(ymin, ymax, count)
    if isinstance(domain, LogDomain):
        return [mpmath.mpc(_log_boundary_x(domain, y), y) for y in ys]
    if isinstance(domain, QuadDomain):
        return [domain.phi(mpmath.mpc(domain.a, y)) for y in ys]
    raise InvalidParameter(f"unknown domain type {type(domain).__name__}")


def boundary_rows(domain: Union[LogDomain, QuadDomain], y_range: Sequence, count: int) -> List[Tuple]:
    """(y, x) pairs of boundary_samples, the region export"""
    return [(mpmath.im(p), mpmath.re(p)) for p in boundary_samples(domain, y_range, count)]
