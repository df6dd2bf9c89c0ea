"""
irrsum Discrete Distributions
Finite sums of diracs and dirac derivatives: Vandermonde distributions, moments, order,
primitives, norms, nested decompositions and de-degeneration

The exact-structure operations (vandermonde, moment, decompose_nested, reconstruct) only use
field arithmetic, so they run unchanged on fractions.Fraction nodes and coefficients.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from mpmath import mp, mpf
from scipy.optimize import linprog

from core.errors import (
    DuplicateNodesError,
    InvalidParameter,
    LinearProgramError,
    OrderDeficiencyError,
)
from core.numerics import PiecewisePolynomial, Polynomial, pw_l1_norm, real_roots_in

logger = logging.getLogger(__name__)

LP_SUPPORT_LIMIT = 12


@dataclass(frozen=True)
class Atom:
    """(-1)^r a delta_beta^(r); pairs with e^{tw} as a w^r e^{beta w}"""
    beta: object
    r: int
    a: object


class DiscreteDistribution:
    """Sorted atoms with no repeated (beta, r); exact zeros dropped"""

    def __init__(self, atoms: Iterable[Atom] = ()):
        merged: Dict[Tuple[object, int], object] = {}
        for atom in atoms:
            if atom.r < 0:
                raise InvalidParameter(f"derivative order must be nonnegative, got {atom.r}")
            key = (atom.beta, atom.r)
            merged[key] = merged[key] + atom.a if key in merged else atom.a
        self.atoms: Tuple[Atom, ...] = tuple(
            Atom(beta, r, a) for (beta, r), a in sorted(merged.items(), key=lambda kv: kv[0])
            if a != 0
        )

    @classmethod
    def diracs(cls, betas: Sequence, coefficients: Sequence) -> 'DiscreteDistribution':
        if len(betas) != len(coefficients):
            raise InvalidParameter("one coefficient per support point required")
        return cls(Atom(b, 0, a) for b, a in zip(betas, coefficients))

    def __repr__(self) -> str:
        body = ", ".join(f"({a.beta}, {a.r}, {a.a})" for a in self.atoms)
        return f"DiscreteDistribution([{body}])"

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    @property
    def is_zero(self) -> bool:
        return not self.atoms

    @property
    def support(self) -> List:
        seen = []
        for atom in self.atoms:
            if not seen or seen[-1] != atom.beta:
                seen.append(atom.beta)
        return seen

    @property
    def is_degenerate(self) -> bool:
        return any(atom.r > 0 for atom in self.atoms)

    def coefficient(self, beta, r: int = 0):
        for atom in self.atoms:
            if atom.beta == beta and atom.r == r:
                return atom.a
        return 0

    def __add__(self, other: 'DiscreteDistribution') -> 'DiscreteDistribution':
        return DiscreteDistribution(self.atoms + other.atoms)

    def __neg__(self) -> 'DiscreteDistribution':
        return DiscreteDistribution(Atom(a.beta, a.r, -a.a) for a in self.atoms)

    def __sub__(self, other: 'DiscreteDistribution') -> 'DiscreteDistribution':
        return self + (-other)

    def scale(self, c) -> 'DiscreteDistribution':
        return DiscreteDistribution(Atom(a.beta, a.r, c * a.a) for a in self.atoms)

    def total_variation(self):
        return sum((abs(a.a) for a in self.atoms), 0)

    def pair_exp(self, w):
        """<D, e^{tw}> = sum a w^r e^{beta w}"""
        w = mpmath.mpmathify(w)
        return mpmath.fsum(a.a * w ** a.r * mpmath.exp(a.beta * w) for a in self.atoms)


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpKernel:
    """t -> e^{t w}"""
    w: object

    def __call__(self, t):
        return mpmath.exp(t * self.w)

    def derivative_at(self, t, r: int = 0):
        return self.w ** r * mpmath.exp(t * self.w)


def pair(D: DiscreteDistribution, phi) -> object:
    """<D, phi> = sum a phi^(r)(beta) for phi exposing derivative_at(t, r)"""
    return mpmath.fsum(atom.a * phi.derivative_at(atom.beta, atom.r) for atom in D.atoms)


# ---------------------------------------------------------------------------
# Vandermonde distributions
# ---------------------------------------------------------------------------

def node_value(x):
    """Python ints and floats become mpf; Fraction and mpmath values pass through"""
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return mpf(x)
    return x


@dataclass(frozen=True)
class VandermondeNodes:
    """Distinct nonnegative nodes beta_0 < ... < beta_n"""
    nodes: Tuple

    def __post_init__(self):
        ordered = tuple(sorted(node_value(b) for b in self.nodes))
        for a, b in zip(ordered, ordered[1:]):
            if a == b:
                raise DuplicateNodesError(f"repeated Vandermonde node {a}")
        if ordered and ordered[0] < 0:
            raise InvalidParameter("Vandermonde nodes must be nonnegative")
        object.__setattr__(self, 'nodes', ordered)

    @classmethod
    def from_sorted(cls, nodes: Sequence) -> 'VandermondeNodes':
        """Wrap nodes already known to be strictly increasing"""
        obj = cls.__new__(cls)
        object.__setattr__(obj, 'nodes', tuple(nodes))
        return obj

    @property
    def n(self) -> int:
        return len(self.nodes) - 1

    @property
    def diameter(self):
        return self.nodes[-1] - self.nodes[0]

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def __getitem__(self, i):
        return self.nodes[i]


def _as_nodes(R) -> VandermondeNodes:
    return R if isinstance(R, VandermondeNodes) else VandermondeNodes(tuple(R))


def vandermonde_coefficients(R) -> List:
    """a_i = prod_{p != i} 1/(beta_i - beta_p)"""
    nodes = _as_nodes(R).nodes
    coefficients = []
    for i, bi in enumerate(nodes):
        denominator = bi ** 0
        for p, bp in enumerate(nodes):
            if p != i:
                denominator = denominator * (bi - bp)
        coefficients.append(1 / denominator)
    return coefficients


def vandermonde(R) -> DiscreteDistribution:
    """D_R: moments 0, ..., 0, 1 on the nodes"""
    nodes = _as_nodes(R)
    return DiscreteDistribution.diracs(nodes.nodes, vandermonde_coefficients(nodes))


def normalized_vandermonde(R) -> DiscreteDistribution:
    """Delta_R = n! D_R"""
    nodes = _as_nodes(R)
    return vandermonde(nodes).scale(math.factorial(nodes.n))


def merge_vandermonde(Rprime, b1, b2) -> DiscreteDistribution:
    """(D_{R' + b1} - D_{R' + b2}) / (b1 - b2), which equals D_{R' + b1 + b2}"""
    b1, b2 = node_value(b1), node_value(b2)
    if b1 == b2:
        raise DuplicateNodesError(f"merge needs two distinct extra nodes, got {b1} twice")
    base = tuple(_as_nodes(Rprime).nodes) if len(tuple(Rprime)) else ()
    if b1 in base or b2 in base:
        raise DuplicateNodesError("extra nodes must not belong to the base set")
    first = vandermonde(base + (b1,))
    second = vandermonde(base + (b2,))
    return (first - second).scale(1 / (b1 - b2))


def moment(D: DiscreteDistribution, k: int):
    """D(t^k) = sum a k!/(k-r)! beta^(k-r)"""
    total = 0
    for atom in D.atoms:
        if atom.r > k:
            continue
        falling = math.factorial(k) // math.factorial(k - atom.r)
        total = total + falling * atom.a * atom.beta ** (k - atom.r)
    return total


def _moment_scale(D: DiscreteDistribution, p: int):
    top = max(1, max(abs(atom.beta) for atom in D.atoms))
    scale = 0
    for atom in D.atoms:
        if atom.r <= p:
            falling = math.factorial(p) // math.factorial(p - atom.r)
            scale = scale + abs(atom.a) * falling * top ** (p - atom.r)
    return scale


def _default_tol():
    return mpf(2) ** (-(mp.prec * 3) // 8)


def order_of(D: DiscreteDistribution, tol=None) -> int:
    """Largest k with vanishing moments below k (relative tolerance)"""
    if D.is_zero:
        raise InvalidParameter("the zero distribution has no finite order")
    tol = _default_tol() if tol is None else tol
    # a nonzero distribution with total multiplicity m has a nonzero moment below m
    ceiling = sum(atom.r + 1 for atom in D.atoms)
    for p in range(ceiling):
        if abs(moment(D, p)) > tol * _moment_scale(D, p):
            return p
    return ceiling


def check_order(D: DiscreteDistribution, k: int, tol=None):
    """Raise OrderDeficiencyError naming the first nonvanishing moment below k"""
    tol = _default_tol() if tol is None else tol
    for p in range(k):
        value = moment(D, p)
        if abs(value) > tol * _moment_scale(D, p):
            raise OrderDeficiencyError(p, value, k)


# ---------------------------------------------------------------------------
# Primitives and norms
# ---------------------------------------------------------------------------

def primitive(D: DiscreteDistribution, k: int, tol=None) -> PiecewisePolynomial:
    """
    I^kD(t) = sum_{beta <= t} (-1)^r a (t - beta)^(k-r-1)/(k-r-1)!

    Breakpoints sit at the support; each piece is stored around its left endpoint.
    The tail past the last point is dropped when D has order >= k.
    """
    if k < 1:
        raise InvalidParameter(f"primitive order must be positive, got {k}")
    if any(atom.r >= k for atom in D.atoms):
        raise InvalidParameter(f"a derivative atom of order >= {k} has no {k}-th primitive function")
    if D.is_zero:
        return PiecewisePolynomial([], [], smoothness=k - 2)
    tol = _default_tol() if tol is None else tol

    breakpoints = [mpf(b) for b in D.support]
    pieces: List[Polynomial] = []
    running = Polynomial((), breakpoints[0])
    atoms = list(D.atoms)
    index = 0
    for bp in breakpoints:
        running = running.shifted(bp)
        while index < len(atoms) and atoms[index].beta == bp:
            atom = atoms[index]
            degree = k - atom.r - 1
            sign = -1 if atom.r % 2 else 1
            running = running.add_term(degree, sign * atom.a / mpmath.factorial(degree))
            index += 1
        pieces.append(running)

    tail = pieces.pop()
    if tail.magnitude(max(1, breakpoints[-1] - breakpoints[0])) <= tol * max(
            1, D.total_variation()) * max(1, abs(breakpoints[-1])) ** (k - 1):
        tail = Polynomial((), breakpoints[-1])
    return PiecewisePolynomial(breakpoints, pieces, tail=tail, smoothness=k - 2)


def functional_norm(D: DiscreteDistribution, k: int, interval: Optional[Tuple] = None, tol=None):
    """
    N_k(D) = int_I |I^kD| for k >= 1, total variation for k = 0

    Args:
        D: Distribution with order >= k
        k: Norm order
        interval: Integration interval, defaults to the convex hull of the support
        tol: Relative tolerance of the order check

    Returns:
        The norm at the working precision
    """
    if k == 0:
        return D.total_variation()
    if D.is_zero:
        return mpf(0)
    check_order(D, k, tol)
    f = primitive(D, k, tol)
    support = D.support
    lo, hi = (support[0], support[-1]) if interval is None else interval
    if mpf(lo) > support[0] or mpf(hi) < support[-1]:
        raise InvalidParameter("norm interval must contain the support")
    return pw_l1_norm(f.restrict(lo, hi))


def combinatorial_norm_lp(D: DiscreteDistribution, k: int, rho=None, mode: str = "exact_order") -> float:
    """
    min sum_S rho^(k+1-#S) |b_S| subject to sum_S b_S Delta_S = D over subsets of the support

    Solved as a linear program in double precision with b_S split into positive and negative parts.
    """
    if mode not in ("exact_order", "geq_order"):
        raise InvalidParameter(f"unknown mode {mode!r}")
    if D.is_zero:
        return 0.0
    if D.is_degenerate:
        raise InvalidParameter("the combinatorial norm is defined on order-0 atoms")
    support = D.support
    if len(support) > LP_SUPPORT_LIMIT:
        raise InvalidParameter(f"LP norm limited to {LP_SUPPORT_LIMIT} support points, got {len(support)}")
    if any(isinstance(atom.a, (complex, mpmath.mpc)) and atom.a.imag != 0 for atom in D.atoms):
        raise InvalidParameter("the LP norm needs real coefficients")
    check_order(D, k)
    rho = float(support[-1] - support[0]) if rho is None else float(rho)
    if rho <= 0:
        rho = 1.0

    sizes = [k + 1] if mode == "exact_order" else list(range(k + 1, len(support) + 1))
    columns, weights = [], []
    for size in sizes:
        for subset in itertools.combinations(range(len(support)), size):
            column = np.zeros(len(support))
            packed = normalized_vandermonde([support[i] for i in subset]).atoms
            # nodes come back sorted, matching the increasing index tuple
            for i, atom in zip(subset, packed):
                column[i] = float(atom.a)
            columns.append(column)
            weights.append(rho ** (k + 1 - size))
    if not columns:
        raise LinearProgramError(f"no subsets of size >= {k + 1} in a support of {len(support)} points")

    A = np.array(columns).T
    target = np.array([float(mpmath.re(D.coefficient(beta))) for beta in support])
    cost = np.concatenate([weights, weights])
    A_eq = np.hstack([A, -A])
    result = linprog(cost, A_eq=A_eq, b_eq=target, bounds=(0, None), method="highs")
    if not result.success:
        raise LinearProgramError(f"norm LP failed: {result.message}")
    logger.debug("combinatorial norm LP over %d subsets: %g", len(columns), result.fun)
    return float(result.fun)


# ---------------------------------------------------------------------------
# Nested decomposition
# ---------------------------------------------------------------------------

@dataclass
class NestedDecomposition:
    """D = sum_i b_i Delta_{beta_0..beta_i}"""
    nodes: Tuple
    coefficients: List
    k: int
    bound_constant: Optional[object] = None
    max_bound_ratio: Optional[object] = None

    @property
    def terms(self) -> List[Tuple[int, object]]:
        return [(i, b) for i, b in enumerate(self.coefficients) if i >= self.k and b != 0]


def _taylor_updates(nodes: Sequence, D: DiscreteDistribution):
    """
    Yield (i, D(P_i), sum |a P_i^(r)|) for P_i = prod_{j<i} (t - beta_j)

    Each support point keeps the Taylor coefficients of P_i around itself up to the
    highest derivative order it carries.
    """
    groups: Dict[object, List[Atom]] = {}
    for atom in D.atoms:
        groups.setdefault(atom.beta, []).append(atom)
    state = []
    for beta, atoms in groups.items():
        depth = max(atom.r for atom in atoms)
        taylor = [1] + [0] * depth
        factors = [(atom.r, atom.a * math.factorial(atom.r)) for atom in atoms]
        state.append((beta, taylor, factors))

    for i in range(len(nodes)):
        value, scale = 0, 0
        for beta, taylor, factors in state:
            for r, weight in factors:
                term = weight * taylor[r]
                value = value + term
                scale = scale + abs(term)
        yield i, value, scale
        node = nodes[i]
        for beta, taylor, _ in state:
            d = beta - node
            for j in range(len(taylor) - 1, 0, -1):
                taylor[j] = taylor[j - 1] + d * taylor[j]
            taylor[0] = d * taylor[0]


def decompose_nested(D: DiscreteDistribution, k: int, nodes: Optional[Sequence] = None,
                     tol=None, verify_bound: bool = False) -> NestedDecomposition:
    """
    Newton coefficients b_i = D(P_i)/i! on nested node sets

    Args:
        D: Distribution of order >= k; derivative atoms allowed when nodes are given
        k: Order; b_0 .. b_{k-1} are checked to vanish and set to zero
        nodes: Node list containing the support, defaults to the support
        tol: Relative tolerance for the vanishing coefficients
        verify_bound: Also compute |b_i| against N_k(D) L^(i-k)/(i-k)!

    Returns:
        NestedDecomposition with one coefficient per node
    """
    if nodes is None:
        if D.is_degenerate:
            raise InvalidParameter("derivative atoms need an explicit node list")
        nodes = tuple(D.support)
    nodes = VandermondeNodes(tuple(nodes)).nodes
    node_set = set(nodes)
    for beta in D.support:
        if node_value(beta) not in node_set:
            raise InvalidParameter(f"support point {beta} is not a node")
    tol = _default_tol() if tol is None else tol

    coefficients = []
    for i, value, scale in _taylor_updates(nodes, D):
        if i < k:
            if abs(value) > tol * scale:
                raise OrderDeficiencyError(i, value, k)
            coefficients.append(0)
        else:
            coefficients.append(value / math.factorial(i))

    result = NestedDecomposition(nodes=nodes, coefficients=coefficients, k=k)
    if verify_bound and not D.is_zero:
        C = functional_norm(D, k, (nodes[0], nodes[-1]), tol)
        L = nodes[-1] - nodes[0]
        ratios = []
        for i in range(k, len(nodes)):
            bound = C * mpf(L) ** (i - k) / math.factorial(i - k)
            if bound > 0:
                ratios.append(abs(coefficients[i]) / bound)
        result.bound_constant = C
        result.max_bound_ratio = max(ratios, default=mpf(0))
    return result


def reconstruct(dec: NestedDecomposition) -> DiscreteDistribution:
    """sum_i b_i Delta_{beta_0..beta_i} as order-0 atoms"""
    nodes = dec.nodes
    atoms = []
    for j, bj in enumerate(nodes):
        total = 0
        weight = bj ** 0    # prod_{p <= i, p != j} 1/(beta_j - beta_p) for the current i
        for p in range(j):
            weight = weight / (bj - nodes[p])
        for i in range(j, len(nodes)):
            if i > j:
                weight = weight / (bj - nodes[i])
            b = dec.coefficients[i]
            if b != 0:
                total = total + b * math.factorial(i) * weight
        atoms.append(Atom(bj, 0, total))
    return DiscreteDistribution(atoms)


# ---------------------------------------------------------------------------
# Degenerate distributions
# ---------------------------------------------------------------------------

def cluster_nodes(D: DiscreteDistribution, eps, geometry: str = "shared") -> List:
    """Node set of undegenerate(D, eps, geometry)"""
    eps = mpf(eps)
    nodes = set()
    by_point: Dict[object, int] = {}
    for atom in D.atoms:
        by_point[atom.beta] = max(by_point.get(atom.beta, 0), atom.r)
    for atom in D.atoms:
        nodes.add(atom.beta)
        if atom.r == 0:
            continue
        if geometry == "shared":
            h = eps / by_point[atom.beta]
        else:
            h = eps / atom.r
        for j in range(1, atom.r + 1):
            nodes.add(atom.beta + j * h)
    return sorted(nodes)


def undegenerate(D: DiscreteDistribution, eps, geometry: str = "spread") -> DiscreteDistribution:
    """
    Replace each derivative atom (beta, r, a) by a Delta over r+1 forward-clustered nodes

    geometry "spread" uses the step eps/r per atom; "shared" uses eps/r_max per support point,
    so all atoms at one point share a single grid.
    """
    if geometry not in ("spread", "shared"):
        raise InvalidParameter(f"unknown cluster geometry {geometry!r}")
    eps = mpf(eps)
    if eps <= 0:
        raise InvalidParameter(f"eps must be positive, got {eps}")
    support = D.support
    gaps = [b - a for a, b in zip(support, support[1:])]
    if gaps and eps >= min(gaps) / 2:
        raise InvalidParameter(f"eps {eps} is not below half the minimal support gap {min(gaps)}")

    r_max: Dict[object, int] = {}
    for atom in D.atoms:
        r_max[atom.beta] = max(r_max.get(atom.beta, 0), atom.r)
    atoms = []
    for atom in D.atoms:
        if atom.r == 0:
            atoms.append(atom)
            continue
        h = eps / (r_max[atom.beta] if geometry == "shared" else atom.r)
        grid = [atom.beta + j * h for j in range(atom.r + 1)]
        for replacement in normalized_vandermonde(grid).atoms:
            atoms.append(Atom(replacement.beta, 0, atom.a * replacement.a))
    return DiscreteDistribution(atoms)


# ---------------------------------------------------------------------------
# Mean value
# ---------------------------------------------------------------------------

def mean_value_interval(R, phi: Polynomial) -> Tuple:
    """(min, max) of phi^(n) on the convex hull of R, n = #R - 1"""
    nodes = _as_nodes(R)
    lo, hi = mpf(nodes[0]), mpf(nodes[-1])
    d = phi
    for _ in range(nodes.n):
        d = d.derivative()
    candidates = [lo, hi] + real_roots_in(d.derivative(), lo, hi)
    values = [d(t) for t in candidates]
    return min(values), max(values)
