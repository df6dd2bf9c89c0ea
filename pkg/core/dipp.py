"""
irrsum Diagonal Integration by Parts
Window distributions D_n, closed-form window terms, convergence and boundedness diagnostics
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import mpmath
from mpmath import mpf

from core.distributions import Atom, DiscreteDistribution, order_of
from core.errors import CutPointCollision, InvalidParameter, OrderDeficiencyError
from core.exponents import AdmissibleSequence, admissible_sequence
from core.numerics import (
    ROOT_SCAN_MIN,
    PiecewisePolynomial,
    Polynomial,
    is_complex,
    poly_exp_integral,
    pw_weighted_l1,
    to_decimal,
)
from core.series import SeriesSpec

logger = logging.getLogger(__name__)


@dataclass
class Window:
    """D_n on [t_n, t_{n+1}]"""
    n: int
    start: mpf
    end: mpf
    distribution: DiscreteDistribution


@dataclass
class DippState:
    """
    Everything the window terms need: cut points, primitive values at the cuts and D_n

    primitives[m][k-1] holds I^kD(t_m) for k = 1..m.
    """
    series: SeriesSpec
    seq: AdmissibleSequence
    n_max: int
    cuts: List[mpf]
    primitives: Dict[int, List]
    windows: List[Window]

    def primitive_at(self, m: int, k: int):
        """I^kD(t_m)"""
        return self.primitives[m][k - 1]

    def border(self, m: int) -> DiscreteDistribution:
        """BT_m: (-1)^k I^kD(t_m) at derivative order k-1, k = 1..m"""
        if m == 0:
            return DiscreteDistribution()
        t = self.cuts[m]
        return DiscreteDistribution(
            Atom(t, k - 1, (-1) ** k * value)
            for k, value in enumerate(self.primitives[m], start=1))

    def window_atoms(self, n: int):
        """(betas, coefficients) of the support inside window n"""
        values, coefficients = self.series.values, self.series.coefficients
        if n == 0:
            lo = 0
        else:
            lo = self.series.count_upto(self.cuts[n])
        hi = self.series.count_upto(self.cuts[n + 1])
        return values[lo:hi], coefficients[lo:hi]


def _primitive_values(series: SeriesSpec, t, k_max: int) -> List:
    """I^kD(t) = sum_{beta <= t} a (t - beta)^(k-1)/(k-1)! for k = 1..k_max"""
    count = series.count_upto(t)
    columns: List[List] = [[] for _ in range(k_max)]
    for beta, a in zip(series.values[:count], series.coefficients[:count]):
        s = t - beta
        term = a
        columns[0].append(term)
        for k in range(2, k_max + 1):
            term = term * s / (k - 1)
            columns[k - 1].append(term)
    return [mpmath.fsum(column) for column in columns]


def window_distributions(series: SeriesSpec, seq: AdmissibleSequence, n_max: int,
                         check_orders: bool = False, tol=None) -> DippState:
    """
    Build D_n = sum_{t_n < beta <= t_{n+1}} a delta_beta + BT_{n+1} - BT_n for n = 0..n_max

    Window 0 also holds beta = 0. Repeated cut points give empty windows whose
    distribution is only the new highest border atom.
    """
    if n_max < 0:
        raise InvalidParameter(f"n_max must be nonnegative, got {n_max}")
    cuts = seq.cuts(n_max)
    if cuts[-1] > series.cutoff:
        raise InvalidParameter(
            f"t_{n_max + 1} = {cuts[-1]} exceeds the series cutoff {series.cutoff}")
    for m, t in enumerate(cuts):
        if m >= 1 and series.support.contains(t):
            raise CutPointCollision(f"cut point t_{m} = {t} lies on the support")

    # one pass per distinct cut value, sized for the largest index sharing it
    largest_index: Dict[mpf, int] = {}
    for m in range(1, n_max + 2):
        largest_index[cuts[m]] = m
    by_value = {t: _primitive_values(series, t, m) for t, m in largest_index.items()}
    primitives = {0: []}
    for m in range(1, n_max + 2):
        primitives[m] = by_value[cuts[m]][:m]

    state = DippState(series=series, seq=seq, n_max=n_max, cuts=cuts,
                      primitives=primitives, windows=[])
    for n in range(n_max + 1):
        betas, coefficients = state.window_atoms(n)
        D = DiscreteDistribution.diracs(betas, coefficients) + state.border(n + 1) - state.border(n)
        if check_orders and not D.is_zero:
            found = order_of(D, tol)
            if found < n:
                raise OrderDeficiencyError(found, "nonzero", n)
        state.windows.append(Window(n, cuts[n], cuts[n + 1], D))
        logger.debug("window %d [%s, %s]: %d atoms", n, mpmath.nstr(cuts[n], 8),
                     mpmath.nstr(cuts[n + 1], 8), len(D))
    return state


def _window_taylor(state: DippState, n: int) -> Polynomial:
    """Contribution of atoms <= t_n to I^nD, expanded at t_n (n >= 1)"""
    t = state.cuts[n]
    coefficients = [state.primitive_at(n, n - j) / mpmath.factorial(j) for j in range(n)]
    return Polynomial(tuple(coefficients), t)


def dipp_term(state: DippState, n: int, w):
    """
    (-1)^n int_{t_n}^{t_{n+1}} I^nD(t) w^n e^{tw} dt + (-1)^{n+1} I^{n+1}D(t_{n+1}) w^n e^{t_{n+1} w}

    Window 0 pairs the atoms directly. The integral is split by linearity into the part
    carried in from atoms <= t_n and one closed form per atom inside the window.
    """
    if n > state.n_max:
        raise InvalidParameter(f"window {n} beyond n_max {state.n_max}")
    w = mpmath.mpmathify(w)
    start, end = state.cuts[n], state.cuts[n + 1]
    border = (-1) ** (n + 1) * state.primitive_at(n + 1, n + 1) * w ** n * mpmath.exp(end * w)
    if n == 0:
        betas, coefficients = state.window_atoms(0)
        direct = mpmath.fsum(a * mpmath.exp(beta * w) for beta, a in zip(betas, coefficients))
        return direct + border

    parts = []
    if end > start:
        parts.append(poly_exp_integral(_window_taylor(state, n), w, start, end))
        betas, coefficients = state.window_atoms(n)
        for beta, a in zip(betas, coefficients):
            parts.append(a * poly_exp_integral(Polynomial.monomial(n - 1, center=beta), w, beta, end))
    integral = mpmath.fsum(parts)
    return (-1) ** n * w ** n * integral + border


def window_pairing(state: DippState, n: int, w):
    """<D_n, e^{tw}> by direct pairing, the independent path to dipp_term"""
    return state.windows[n].distribution.pair_exp(w)


def _window_pieces(state: DippState, n: int) -> PiecewisePolynomial:
    """I^nD on [t_n, t_{n+1}] as pieces between the window atoms"""
    start, end = state.cuts[n], state.cuts[n + 1]
    running = _window_taylor(state, n)
    breakpoints, pieces = [start], []
    betas, coefficients = state.window_atoms(n)
    scale = 1 / mpmath.factorial(n - 1)
    for beta, a in zip(betas, coefficients):
        if beta > breakpoints[-1]:
            pieces.append(running)
            breakpoints.append(beta)
        running = running.shifted(beta).add_term(n - 1, a * scale)
    if end > breakpoints[-1]:
        pieces.append(running)
        breakpoints.append(end)
    return PiecewisePolynomial(breakpoints, pieces)


def _real_part_pieces(f: PiecewisePolynomial, part) -> PiecewisePolynomial:
    return PiecewisePolynomial(
        f.breakpoints,
        [Polynomial(tuple(part(c) for c in p.coefficients), p.shift) for p in f.pieces])


def window_abs_integral(state: DippState, n: int, a, scan_min: int = ROOT_SCAN_MIN) -> mpf:
    """
    int_{t_n}^{t_{n+1}} |I^nD(t)| e^{a t} dt; window 0 is sum_{beta <= t_1} |a_beta| e^{a beta}

    Complex coefficients are bounded by the real and imaginary parts separately.
    """
    a = mpf(a)
    if n == 0:
        betas, coefficients = state.window_atoms(0)
        return mpmath.fsum(abs(c) * mpmath.exp(a * beta) for beta, c in zip(betas, coefficients))
    start, end = state.cuts[n], state.cuts[n + 1]
    if end <= start:
        return mpf(0)
    f = _window_pieces(state, n)
    if any(is_complex(c) for p in f.pieces for c in p.coefficients):
        return (pw_weighted_l1(_real_part_pieces(f, mpmath.re), a, scan_min)
                + pw_weighted_l1(_real_part_pieces(f, mpmath.im), a, scan_min))
    return pw_weighted_l1(f, a, scan_min)


def border_residual(state: DippState, n: int, w) -> mpf:
    """sum_k |I^kD(t_{n+1})| |w|^(k-1) e^{Re(w) t_{n+1}}: the border still open after window n"""
    w = mpmath.mpmathify(w)
    m = n + 1
    t = state.cuts[m]
    r = abs(w)
    weight = mpmath.exp(mpmath.re(w) * t)
    return mpmath.fsum(abs(value) * r ** (k - 1) * weight
                       for k, value in enumerate(state.primitives[m], start=1))


def unreached_tail(state: DippState, n: int, a) -> mpf:
    """sum_{beta > t_{n+1}} |a_beta| e^{a beta}: atoms no window up to n has paired"""
    a = mpf(a)
    series = state.series
    lo = series.count_upto(state.cuts[n + 1])
    return mpmath.fsum(abs(c) * mpmath.exp(a * beta)
                       for beta, c in zip(series.values[lo:], series.coefficients[lo:]))


def dipp_bound_partials(state: DippState, a, n_max: Optional[int] = None,
                        scan_min: int = ROOT_SCAN_MIN) -> List[mpf]:
    """Partial sums of the boundedness functional, one per window"""
    a = mpf(a)
    n_max = state.n_max if n_max is None else n_max
    partials, total = [], mpf(0)
    for n in range(n_max + 1):
        total += window_abs_integral(state, n, a, scan_min)
        if n >= 1:
            total += abs(state.primitive_at(n, n)) * mpmath.exp(a * state.cuts[n])
        partials.append(total)
    return partials


def dipp_bound_estimate(state: DippState, a, n_max: Optional[int] = None,
                        scan_min: int = ROOT_SCAN_MIN) -> mpf:
    """
    sum_{n <= n_max} int |I^nD| e^{at} + sum_{1 <= n <= n_max} |I^nD(t_n)| e^{a t_n}

    Monotone in n_max; the constant C of the package certificate.
    """
    return dipp_bound_partials(state, a, n_max, scan_min)[-1]


@dataclass
class DippResult:
    """Partial DIPP sum with its diagnostics; converged is False when n_max ran out"""
    value: object
    converged: bool
    n_used: int
    n_max: int
    k: mpf
    tail: mpf
    border_residual: mpf
    unreached: mpf
    absolute_sum: mpf
    bound_estimate: mpf
    cutoff: mpf
    partial_sums: List = field(default_factory=list)

    def to_dict(self, bits: Optional[int] = None, extra_digits: int = 5) -> Dict[str, object]:
        def fmt(x):
            return to_decimal(x, bits, extra_digits)
        return {
            "value": fmt(self.value),
            "converged": self.converged,
            "n_used": self.n_used,
            "n_max": self.n_max,
            "k": fmt(self.k),
            "tail": fmt(self.tail),
            "border_residual": fmt(self.border_residual),
            "unreached_tail": fmt(self.unreached),
            "absolute_sum": fmt(self.absolute_sum),
            "bound_estimate": fmt(self.bound_estimate),
            "support_truncation_at": fmt(self.cutoff),
        }


def dipp_sum(series: SeriesSpec, seq: AdmissibleSequence, w, tol=1e-12, n_max: Optional[int] = None,
             scan_min: int = ROOT_SCAN_MIN, order_tol=None) -> DippResult:
    """
    Sum window terms until the increment, the open border and the unreached atoms fall below tol

    Args:
        series: Truncated formal series
        seq: Admissible cut sequence
        w: Evaluation point, nonzero
        tol: Absolute tolerance, scaled by max(1, |partial sum|)
        n_max: Last window allowed; clipped to the series cutoff
        scan_min: Minimum sign-scan subdivisions for the absolute integrals
        order_tol: When given, every window is checked to have order n at this relative tolerance

    Returns:
        DippResult; a non-converged result still carries the partial data
    """
    w = mpmath.mpmathify(w)
    if w == 0:
        raise InvalidParameter("the DIPP sum needs w != 0")
    allowed = seq.max_index_within(series.cutoff)
    if n_max is None or n_max > allowed:
        if n_max is not None:
            logger.warning("n_max %d clipped to %d by the series cutoff %s", n_max, allowed,
                           mpmath.nstr(series.cutoff, 8))
        n_max = allowed
    state = window_distributions(series, seq, n_max, check_orders=order_tol is not None, tol=order_tol)

    x, r = mpmath.re(w), abs(w)
    terms, partial_sums = [], []
    absolute, bound = mpf(0), mpf(0)
    increment, residual, unreached = mpf(0), mpf(0), mpf(0)
    converged = False
    n = 0
    for n in range(n_max + 1):
        terms.append(dipp_term(state, n, w))
        partial_sums.append(mpmath.fsum(terms))
        window_abs = window_abs_integral(state, n, x, scan_min)
        increment = r ** n * window_abs
        bound += window_abs
        if n >= 1:
            edge = abs(state.primitive_at(n, n)) * mpmath.exp(x * state.cuts[n])
            increment += edge * r ** (n - 1)
            bound += edge
        absolute += increment
        residual = border_residual(state, n, w)
        unreached = unreached_tail(state, n, x)
        threshold = tol * max(1, abs(partial_sums[-1]))
        if increment < threshold and residual < threshold and unreached < threshold:
            converged = True
            break

    if not converged:
        logger.warning("DIPP not converged after %d windows: tail %s, border %s, unreached %s", n_max + 1,
                       mpmath.nstr(increment, 5), mpmath.nstr(residual, 5), mpmath.nstr(unreached, 5))
    else:
        logger.info("DIPP converged at window %d", n)
    return DippResult(
        value=partial_sums[-1],
        converged=converged,
        n_used=n,
        n_max=n_max,
        k=seq.k,
        tail=increment,
        border_residual=residual,
        unreached=unreached,
        absolute_sum=absolute,
        bound_estimate=bound,
        cutoff=series.cutoff,
        partial_sums=partial_sums,
    )


def sequence_independence(series: SeriesSpec, k_values: Sequence, w, tol=1e-12,
                          n_max: Optional[int] = None) -> Dict[str, object]:
    """Run dipp_sum for several admissible sequences and report the largest disagreement"""
    results = {}
    for k in k_values:
        results[k] = dipp_sum(series, admissible_sequence(k, series.support), w, tol, n_max)
    values = [res.value for res in results.values()]
    spread = max((abs(u - v) for u in values for v in values), default=mpf(0))
    return {"results": results, "max_difference": spread}
