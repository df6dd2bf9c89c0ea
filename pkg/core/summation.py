"""
irrsum Summation by Packages
From a formal series to a certified list of Vandermonde packages, plus evaluation and
comparison harnesses
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
from mpmath import mp, mpf, mpc

from core.dipp import (
    DippState,
    border_residual,
    dipp_bound_estimate,
    dipp_sum,
    unreached_tail,
    window_distributions,
)
from core.distributions import (
    DiscreteDistribution,
    NestedDecomposition,
    VandermondeNodes,
    cluster_nodes,
    decompose_nested,
    reconstruct,
)
from core.errors import DomainViolation, InvalidParameter, IrrsumError
from core.exponents import DensityParams, admissible_sequence, density_params
from core.numerics import from_decimal, real_if_possible, to_decimal, workprec_bits
from core.packages import PackageTerm, eval_nested_packages, eval_package, package_bound
from core.series import SeriesSpec

logger = logging.getLogger(__name__)

ORACLE_BITS = 4096
PACKAGES_MIN_BITS = 128


@dataclass
class PackageDecomposition:
    """
    g = sum b <Delta_R, e^{tw}> with the certificate N <= k_prime beta_min + c

    tail_report holds the partial sums of |b| r^beta_min in term order.
    """
    terms: List[PackageTerm]
    a: mpf
    k: mpf
    mu: mpf
    nu: mpf
    k_prime: mpf
    c: mpf
    c_a_priori: mpf
    a_priori_applies: bool
    r: mpf
    r_clipped: bool
    eps: mpf
    n_max: int
    cuts: List[mpf] = field(default_factory=list)
    tail_report: List[mpf] = field(default_factory=list)
    integer_support: bool = False

    def to_dict(self, bits: Optional[int] = None, extra_digits: int = 5) -> Dict[str, object]:
        def fmt(x):
            return to_decimal(x, bits, extra_digits)

        def fmt_complex(x):
            x = mpmath.mpmathify(x)
            return fmt(x) if isinstance(x, mpc) else [fmt(x), "0"]

        return {
            "terms": [
                {"b": fmt_complex(term.b), "nodes": [fmt(b) for b in term.nodes],
                 "window": term.window, "index": term.index}
                for term in self.terms
            ],
            "a": fmt(self.a),
            "k": fmt(self.k),
            "mu": fmt(self.mu),
            "nu": fmt(self.nu),
            "k_prime": fmt(self.k_prime),
            "c": fmt(self.c),
            "c_a_priori": fmt(self.c_a_priori),
            "a_priori_applies": self.a_priori_applies,
            "r": fmt(self.r),
            "r_clipped": self.r_clipped,
            "eps": fmt(self.eps),
            "n_max": self.n_max,
            "cuts": [fmt(t) for t in self.cuts],
            "tail": [fmt(s) for s in self.tail_report],
            "integer_support": self.integer_support,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> 'PackageDecomposition':
        """Parse at the working precision"""
        terms = [
            PackageTerm(VandermondeNodes.from_sorted([mpf(b) for b in item["nodes"]]),
                        real_if_possible(from_decimal(item["b"])),
                        window=item.get("window"), index=item.get("index"))
            for item in data.get("terms", [])
        ]
        return cls(
            terms=terms,
            a=mpf(data["a"]), k=mpf(data["k"]), mu=mpf(data["mu"]), nu=mpf(data["nu"]),
            k_prime=mpf(data["k_prime"]), c=mpf(data["c"]), c_a_priori=mpf(data["c_a_priori"]),
            a_priori_applies=bool(data["a_priori_applies"]),
            r=mpf(data["r"]), r_clipped=bool(data["r_clipped"]), eps=mpf(data["eps"]),
            n_max=int(data["n_max"]),
            cuts=[mpf(t) for t in data.get("cuts", [])],
            tail_report=[mpf(s) for s in data.get("tail", [])],
            integer_support=bool(data.get("integer_support", False)),
        )


def _point_gap(series: SeriesSpec, cuts: Sequence[mpf]) -> Optional[mpf]:
    """Minimal gap among support points and cut points up to the last cut"""
    end = cuts[-1]
    points = sorted(set(list(series.values[:series.count_upto(end)]) + list(cuts)))
    gaps = [b - a for a, b in zip(points, points[1:])]
    return min(gaps) if gaps else None


def summate_by_packages(series: SeriesSpec, a=0, k=1, eps_degen=None, n_max: Optional[int] = None,
                        density_window=None, verify_bounds: bool = False,
                        eps_cap_exponent=3, return_state: bool = False):
    """
    Decompose the DIPP windows of a series into nested Vandermonde packages

    k is used as given. For k < 1 the a-priori constant does not apply and the
    decomposition reports a_priori_applies = False; the fitted c still certifies it.

    Args:
        series: Truncated formal series
        a: Boundedness level of H_{a,k}
        k: Slope of H_{a,k} and of the admissible sequence
        eps_degen: Cluster spread for the border atoms; default min(gap/4, 2^(-bits/eps_cap_exponent))
        n_max: Last window; clipped to the series cutoff
        density_window: Window length for the density fit; default the longest DIPP window
        verify_bounds: Check the factorial bound on every non-degenerate window
        eps_cap_exponent: See eps_degen
        return_state: Also return the DippState

    Returns:
        PackageDecomposition, or (PackageDecomposition, DippState) with return_state
    """
    a, k = mpf(a), mpf(k)
    seq = admissible_sequence(k, series.support)
    allowed = seq.max_index_within(series.cutoff)
    if n_max is None or n_max > allowed:
        if n_max is not None:
            logger.warning("n_max %d clipped to %d by the series cutoff", n_max, allowed)
        n_max = allowed
    state = window_distributions(series, seq, n_max)
    cuts = state.cuts

    gap = _point_gap(series, cuts)
    cap = mpf(2) ** (-mpf(mp.prec) / eps_cap_exponent)
    if eps_degen is None:
        eps = min(gap / 4, cap) if gap is not None else cap
    else:
        eps = mpf(eps_degen)
        if eps <= 0:
            raise InvalidParameter(f"eps_degen must be positive, got {eps}")
        if gap is not None and eps >= gap / 2:
            raise InvalidParameter(
                f"eps_degen {eps} is not below half the minimal point gap {gap}")

    lengths = [cuts[n + 1] - cuts[n] for n in range(1, n_max + 1)]
    window = mpf(density_window) if density_window is not None else max(lengths + [1 / k])
    if len(series):
        density = density_params(series.support, window, mu=series.mu_hint)
    else:
        density = DensityParams(mu=mpf(0), nu=mpf(0), window=window)

    terms: List[PackageTerm] = []
    for n, win in enumerate(state.windows):
        D = win.distribution
        if D.is_zero:
            continue
        nodes = cluster_nodes(D, eps, geometry="shared")
        dec = decompose_nested(D, n, nodes=nodes,
                               verify_bound=verify_bounds and not D.is_degenerate)
        if dec.max_bound_ratio is not None and dec.max_bound_ratio > 1:
            logger.warning("window %d: coefficient bound exceeded by factor %s", n,
                           mpmath.nstr(dec.max_bound_ratio, 5))
        for i, b in dec.terms:
            terms.append(PackageTerm(VandermondeNodes.from_sorted(nodes[:i + 1]), b, window=n, index=i))
        logger.debug("window %d: %d nodes, %d packages", n, len(nodes), len(dec.terms))

    k_prime = density.mu + 2 * k
    c = max((mpf(term.n) - k_prime * term.beta_min for term in terms), default=mpf(0))
    c_a_priori = mpf(7) / 2 * (density.mu / k + 2) + density.nu
    if a < 1:
        r, r_clipped = mpmath.exp(a - 1), False
    else:
        r, r_clipped = mpf(1) / 2, True
        logger.warning("a = %s >= 1: package weight r clipped to 1/2", mpmath.nstr(a, 5))
    tail_report, running = [], mpf(0)
    for term in terms:
        running += abs(term.b) * r ** term.beta_min
        tail_report.append(running)

    decomposition = PackageDecomposition(
        terms=terms, a=a, k=k, mu=density.mu, nu=density.nu, k_prime=k_prime, c=c,
        c_a_priori=c_a_priori, a_priori_applies=bool(k >= 1), r=r, r_clipped=r_clipped,
        eps=eps, n_max=n_max, cuts=list(cuts), tail_report=tail_report,
        integer_support=series.is_integer_supported,
    )
    logger.info("package decomposition: %d packages over %d windows, k'=%s, c=%s",
                len(terms), n_max + 1, mpmath.nstr(k_prime, 6), mpmath.nstr(c, 6))
    if return_state:
        return decomposition, state
    return decomposition


def _window_groups(dec: PackageDecomposition) -> List[List[PackageTerm]]:
    groups: List[List[PackageTerm]] = []
    for term in dec.terms:
        if groups and groups[-1][0].window == term.window and term.window is not None:
            groups[-1].append(term)
        else:
            groups.append([term])
    return groups


def _is_nested(group: List[PackageTerm]) -> bool:
    longest = max(group, key=lambda t: t.n)
    return all(term.nodes[0] == longest.nodes[0] and term.nodes[-1] == longest.nodes[term.n]
               for term in group)


def eval_decomposition(dec: PackageDecomposition, w, max_window: Optional[int] = None) -> Tuple:
    """
    sum b <Delta_R, e^{tw}> and the package tail

    Each window is evaluated in one nested pass. With max_window, later windows are left out
    and bounded; otherwise the tail is the bound of the last window's packages.

    Returns:
        (value, package_tail)
    """
    w = mpmath.mpmathify(w)
    groups = _window_groups(dec)
    parts = []
    evaluated, skipped = [], []
    for group in groups:
        if max_window is not None and group[0].window is not None and group[0].window > max_window:
            skipped.extend(group)
            continue
        evaluated.append(group)
        if _is_nested(group):
            longest = max(group, key=lambda t: t.n)
            values = eval_nested_packages(longest.nodes, w)
            parts.extend(term.b * values[term.n] for term in group)
        else:
            parts.extend(term.b * eval_package(term.nodes, w) for term in group)
    value = mpmath.fsum(parts) if parts else mpf(0)

    bounded = skipped if max_window is not None else (evaluated[-1] if evaluated else [])
    if not bounded:
        tail = mpf(0)
    elif mpmath.re(w) >= 0:
        tail = mpmath.inf
    else:
        tail = mpmath.fsum(abs(term.b) * package_bound(term.nodes, w) for term in bounded)
    return value, tail


def expand_to_atoms(dec: PackageDecomposition) -> DiscreteDistribution:
    """Formal coefficients sum b Delta_R expanded back into diracs"""
    total = DiscreteDistribution()
    for group in _window_groups(dec):
        longest = max(group, key=lambda t: t.n)
        coefficients = [0] * (longest.n + 1)
        for term in group:
            coefficients[term.n] = coefficients[term.n] + term.b
        nested = NestedDecomposition(nodes=longest.nodes.nodes, coefficients=coefficients, k=0)
        total = total + reconstruct(nested)
    return total


def naive_sum(series: SeriesSpec, w, bits: int = 53):
    """Left-to-right partial sum at the given precision; 53 bits goes through Python complex"""
    if bits <= 53:
        wc = complex(mpmath.mpmathify(w))
        total = 0j
        for beta, a in zip(series.values, series.coefficients):
            total += complex(a) * cmath.exp(float(beta) * wc)
        return mpc(total.real, total.imag)
    with workprec_bits(bits):
        w = mpmath.mpmathify(w)
        total = mpf(0)
        for beta, a in zip(series.values, series.coefficients):
            total = total + a * mpmath.exp(beta * w)
        return total


def _error_row(method: str, bits: int, value, oracle, converged: bool = True,
               residual=0) -> Dict[str, object]:
    error = abs(value - oracle)
    scale = abs(oracle)
    relative = error / scale if scale != 0 else error
    if relative == 0:
        digits = float(bits * math.log10(2))
    else:
        digits = max(0.0, min(float(-mpmath.log10(relative)), bits * math.log10(2)))
    return {"method": method, "bits": bits, "value": value,
            "relative_error": relative, "digits": digits,
            "converged": converged, "residual": mpf(residual)}


def _failed_row(method: str, bits: int, error: Exception) -> Dict[str, object]:
    logger.warning("%s at %d bits failed: %s", method, bits, error)
    return {"method": method, "bits": bits, "value": None,
            "relative_error": mpmath.inf, "digits": 0.0, "converged": False,
            "residual": mpmath.inf, "error": str(error)}


def package_convergence(dec: PackageDecomposition, state: DippState, w, value, tol) -> Tuple[bool, mpf]:
    """
    (converged, residual) for a package sum at w

    The residual is the open border after the last window plus the atoms beyond it.
    """
    w = mpmath.mpmathify(w)
    residual = border_residual(state, dec.n_max, w) + unreached_tail(state, dec.n_max, mpmath.re(w))
    return bool(residual < tol * max(1, abs(value))), residual


def compare_methods(series: SeriesSpec, w, precisions: Sequence[int] = (53, 128, 256),
                    k=None, a=0, n_max: Optional[int] = None, tol=1e-30) -> Dict[str, object]:
    """
    Naive sums, DIPP and packages against a 4096-bit naive oracle

    DIPP and packages run only when k is given; packages need at least 128 bits. Every row
    carries its converged flag and residual.
    """
    w = mpmath.mpmathify(w)
    if mpmath.re(w) >= 0:
        raise DomainViolation(f"comparison needs Re(w) < 0, got {w}")
    oracle = naive_sum(series, w, ORACLE_BITS)
    rows = []
    for bits in precisions:
        rows.append(_error_row("naive", bits, naive_sum(series, w, bits), oracle))
        if k is None:
            continue
        with workprec_bits(bits):
            seq = admissible_sequence(k, series.support)
            try:
                result = dipp_sum(series, seq, w, tol=tol, n_max=n_max)
                rows.append(_error_row("dipp", bits, result.value, oracle, result.converged,
                                        result.border_residual + result.unreached))
            except (IrrsumError, ZeroDivisionError) as e:
                rows.append(_failed_row("dipp", bits, e))
            if bits >= PACKAGES_MIN_BITS:
                try:
                    dec, state = summate_by_packages(series, a=a, k=k, n_max=n_max, return_state=True)
                    value, _ = eval_decomposition(dec, w)
                    converged, residual = package_convergence(dec, state, w, value, tol)
                    rows.append(_error_row("packages", bits, value, oracle, converged, residual))
                except (IrrsumError, ZeroDivisionError) as e:
                    rows.append(_failed_row("packages", bits, e))
    return {"oracle": oracle, "oracle_bits": ORACLE_BITS, "rows": rows}


def periodicity_check(dec: PackageDecomposition, w, tol=1e-10) -> bool:
    """|g(w) - g(w + 2 pi i)| <= tol for an N-supported series"""
    if not dec.integer_support:
        raise DomainViolation("2 pi i periodicity needs a support inside N")
    w = mpmath.mpmathify(w)
    first, _ = eval_decomposition(dec, w)
    second, _ = eval_decomposition(dec, w + 2j * mpmath.pi)
    return bool(abs(first - second) <= tol)


def weight_bound_report(dec: PackageDecomposition, state: DippState, a=None) -> List[Dict[str, object]]:
    """
    Per window: sum |b| e^{(a-1) beta_min} against C e^L max(e^{-a t_n}, e^{-a t_{n+1}}) e^{(a-1) t_n}

    C is the boundedness functional through window n_max plus the last open border, L the
    diameter of the window's nodes. For L <= 1 and a <= 0 the right side is at most
    C e e^{-a/k} e^{-t_n}, reported as display_rhs.
    """
    a = dec.a if a is None else mpf(a)
    n_max = state.n_max
    C = dipp_bound_estimate(state, a)
    last = state.cuts[n_max + 1]
    C += abs(state.primitive_at(n_max + 1, n_max + 1)) * mpmath.exp(a * last)
    rows = []
    for group in _window_groups(dec):
        n = group[0].window
        t_n, t_next = state.cuts[n], state.cuts[n + 1]
        longest = max(group, key=lambda t: t.n)
        L = longest.nodes.diameter
        lhs = mpmath.fsum(abs(term.b) * mpmath.exp((a - 1) * term.beta_min) for term in group)
        spread = max(mpmath.exp(-a * t_n), mpmath.exp(-a * t_next))
        rhs = C * mpmath.exp(L) * spread * mpmath.exp((a - 1) * t_n)
        display = C * mpmath.e * mpmath.exp(-a / dec.k) * mpmath.exp(-t_n)
        rows.append({"window": n, "lhs": lhs, "rhs": rhs, "display_rhs": display,
                     "holds": bool(lhs <= rhs * (1 + mpf(2) ** (-mp.prec // 2)))})
    return rows
