"""
irrsum Vandermonde Packages
Stable evaluation of <Delta_R, e^{tw}>, bounds, and the hyperfunction view of distributions
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import mpmath
from mpmath import mp, mpf, mpc

from core.distributions import (
    DiscreteDistribution,
    VandermondeNodes,
    vandermonde_coefficients,
)
from core.errors import DomainViolation, InvalidParameter, PoleError, PrecisionExhausted

logger = logging.getLogger(__name__)

LOG2_E = 1 / math.log(2)
CONTOUR_MIN_NODES = 16
CONTOUR_MAX_NODES = 2 ** 16


@dataclass
class PackageTerm:
    """b * <Delta_nodes, e^{tw}>, with the window and nested index it came from"""
    nodes: VandermondeNodes
    b: object
    window: Optional[int] = None
    index: Optional[int] = None

    @property
    def n(self) -> int:
        return self.nodes.n

    @property
    def beta_min(self):
        return self.nodes[0]


def _nodes(R) -> VandermondeNodes:
    return R if isinstance(R, VandermondeNodes) else VandermondeNodes(tuple(R))


# ---------------------------------------------------------------------------
# Series method
# ---------------------------------------------------------------------------

def _series_length(z: float, bits: int) -> int:
    """Smallest M > z with z^M/M! < 2^-bits"""
    if z == 0:
        return 0
    target = -bits * math.log(2)
    m = max(1, int(math.ceil(z)))
    while m * math.log(z) - math.lgamma(m + 1) >= target:
        m += 1
    return m


def complete_homogeneous_prefixes(xs: Sequence, m_max: int):
    """
    Yield h_0..h_M of the prefixes x_0..x_i, i = 0, 1, ...

    Uses h_m(x_0..x_i) = h_m(x_0..x_{i-1}) + x_i h_{m-1}(x_0..x_i). All terms are
    nonnegative for nonnegative x, so the recurrence never cancels.
    """
    h = [mpf(1)] + [mpf(0)] * m_max
    for i, x in enumerate(xs):
        for m in range(1, m_max + 1):
            h[m] = h[m] + x * h[m - 1]
        yield h


def complete_homogeneous(xs: Sequence, m_max: int) -> List[mpf]:
    """h_0..h_{m_max} of all of xs"""
    last = [mpf(1)] + [mpf(0)] * m_max
    for h in complete_homogeneous_prefixes(xs, m_max):
        last = h
    return list(last)


def eval_nested_packages(nodes, w) -> List:
    """
    <Delta_{beta_0..beta_i}, e^{tw}> for every prefix i = 0..n in one pass

    Shifting by beta_0 gives i! sum_q w^(i+q)/(i+q)! h_q(x) with x_j = beta_j - beta_0 >= 0.
    """
    R = _nodes(nodes)
    w = mpmath.mpmathify(w)
    s = R[0]
    xs = [b - s for b in R.nodes]
    z = float(abs(w) * xs[-1])
    guard = int(z * LOG2_E) + 20
    with mp.extraprec(guard):
        M = _series_length(z, mp.prec)
        logger.debug("nested packages: %d nodes, |w|d=%.3g, %d series terms", len(xs), z, M)
        values = []
        for i, h in enumerate(complete_homogeneous_prefixes(xs, M)):
            c = w ** i
            terms = [c * h[0]]
            for q in range(1, M + 1):
                c = c * w / (i + q)
                terms.append(c * h[q])
            values.append(mpmath.exp(s * w) * mpmath.fsum(terms))
    return [+v for v in values]


# ---------------------------------------------------------------------------
# Product method
# ---------------------------------------------------------------------------

def _product_terms(R: VandermondeNodes, w) -> List:
    scale = mpmath.factorial(R.n)
    return [scale * c * mpmath.exp(b * w) for b, c in zip(R.nodes, vandermonde_coefficients(R))]


def _product_guard_bits(R: VandermondeNodes, w) -> int:
    """Bits lost to cancellation: largest term over the smallest mean-value size of the result"""
    with mp.workprec(64):
        terms = _product_terms(R, w)
        largest = max(abs(t) for t in terms)
        x = mpmath.re(w)
        edge = R[-1] if x <= 0 else R[0]
        expected = abs(w) ** R.n * mpmath.exp(edge * x)
        if expected == 0 or largest == 0:
            return 16
        lost = mpmath.log(largest / expected, 2)
    return max(0, int(mpmath.ceil(lost))) + 16


def _eval_product(R: VandermondeNodes, w):
    guard = _product_guard_bits(R, w)
    with mp.extraprec(guard):
        value = mpmath.fsum(_product_terms(R, w))
    return +value


def _eval_naive_double(R: VandermondeNodes, w) -> complex:
    nodes = [float(b) for b in R.nodes]
    wc = complex(w)
    total = 0j
    for i, bi in enumerate(nodes):
        denominator = 1.0
        for p, bp in enumerate(nodes):
            if p != i:
                denominator *= bi - bp
        total += cmath.exp(bi * wc) / denominator
    return total * math.factorial(len(nodes) - 1)


def eval_package(R, w, method: str = "auto"):
    """
    <Delta_R, e^{tw}>

    Args:
        R: Vandermonde nodes
        w: Evaluation point
        method: "product", "series", "naive_double" or "auto"

    Returns:
        The package value at the working precision (naive_double rounds through Python complex)
    """
    R = _nodes(R)
    w = mpmath.mpmathify(w)
    if method == "naive_double":
        value = _eval_naive_double(R, w)
        return mpc(value.real, value.imag) if isinstance(w, mpc) else mpf(value.real)
    if w == 0:
        return mpf(1) if R.n == 0 else mpf(0)
    if method == "auto":
        z = abs(w) * R.diameter
        series_bits = float(z) * LOG2_E
        if z < 1 or series_bits <= _product_guard_bits(R, w):
            method = "series"
        else:
            method = "product"
    if method == "series":
        return eval_nested_packages(R, w)[-1]
    if method == "product":
        return _eval_product(R, w)
    raise InvalidParameter(f"unknown package evaluation method {method!r}")


def package_bound(R, w) -> mpf:
    """sqrt(2) |w|^n e^{beta_min Re w}, valid for Re w < 0"""
    R = _nodes(R)
    w = mpmath.mpmathify(w)
    if mpmath.re(w) >= 0:
        raise DomainViolation(f"package bound needs Re(w) < 0, got {w}")
    return mpmath.sqrt(2) * abs(w) ** R.n * mpmath.exp(R[0] * mpmath.re(w))


def vandermonde_pairing_bound(R, sup_derivative, sup_next_derivative=None) -> Tuple:
    """
    |Delta_R(phi)| <= sup |phi^(n)| on the hull, and the perturbation bound 2 L sup |phi^(n+1)|

    Returns:
        (value bound, perturbation bound or None)
    """
    R = _nodes(R)
    perturbation = None
    if sup_next_derivative is not None:
        perturbation = 2 * R.diameter * sup_next_derivative
    return sup_derivative, perturbation


# ---------------------------------------------------------------------------
# Hyperfunctions
# ---------------------------------------------------------------------------

def hyperfunction_eval(D: DiscreteDistribution, p):
    """h(p) = sum r! a / (p - beta)^(r+1)"""
    p = mpmath.mpmathify(p)
    for beta in D.support:
        if p == beta:
            raise PoleError(f"hyperfunction has a pole at {beta}")
    return mpmath.fsum(math.factorial(atom.r) * atom.a / (p - atom.beta) ** (atom.r + 1)
                       for atom in D.atoms)


def vandermonde_hyperfunction(R, p):
    """h_R(p) = prod 1/(p - beta), the product form for D_R"""
    R = _nodes(R)
    p = mpmath.mpmathify(p)
    value = mpf(1)
    for beta in R.nodes:
        if p == beta:
            raise PoleError(f"hyperfunction has a pole at {beta}")
        value = value / (p - beta)
    return value


def _trapezoid(D: DiscreteDistribution, phi: Callable, center, radius, count: int):
    total = []
    for j in range(count):
        offset = radius * mpmath.expjpi(mpf(2 * j) / count)
        p = center + offset
        total.append(hyperfunction_eval(D, p) * phi(p) * offset)
    return mpmath.fsum(total) / count


def contour_pairing(D: DiscreteDistribution, phi: Callable, center, radius,
                    nodes: Optional[int] = None, tol=None):
    """
    (1/2 pi i) contour integral of h(p) phi(p) dp on a circle enclosing the support

    With nodes given, a single trapezoid rule; otherwise the node count doubles from 16
    until two successive values agree to tol.
    """
    center, radius = mpf(center), mpf(radius)
    if radius <= 0:
        raise InvalidParameter(f"radius must be positive, got {radius}")
    for beta in D.support:
        if abs(beta - center) >= radius:
            raise DomainViolation(f"support point {beta} is not inside the circle")
    if D.is_zero:
        return mpf(0)
    if nodes is not None:
        return _trapezoid(D, phi, center, radius, nodes)

    tol = mpf(2) ** (-mp.prec // 2) if tol is None else mpf(tol)
    count = CONTOUR_MIN_NODES
    previous = _trapezoid(D, phi, center, radius, count)
    while count < CONTOUR_MAX_NODES:
        count *= 2
        current = _trapezoid(D, phi, center, radius, count)
        if abs(current - previous) <= tol * max(1, abs(current)):
            return current
        previous = current
    raise PrecisionExhausted(f"contour quadrature did not settle within {CONTOUR_MAX_NODES} nodes")
