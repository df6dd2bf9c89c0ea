import itertools
import math
import random
from fractions import Fraction

import mpmath
import pytest
from mpmath import mpf

from core.distributions import (
    Atom,
    DiscreteDistribution,
    ExpKernel,
    VandermondeNodes,
    check_order,
    cluster_nodes,
    combinatorial_norm_lp,
    decompose_nested,
    functional_norm,
    mean_value_interval,
    merge_vandermonde,
    moment,
    normalized_vandermonde,
    order_of,
    pair,
    primitive,
    reconstruct,
    undegenerate,
    vandermonde,
    vandermonde_coefficients,
)
from core.errors import DuplicateNodesError, InvalidParameter, OrderDeficiencyError
from core.numerics import Polynomial


def _solve_exact(matrix, rhs):
    """Gauss-Jordan elimination over Fractions"""
    n = len(rhs)
    rows = [list(row) + [value] for row, value in zip(matrix, rhs)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [x / lead for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col]
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[col])]
    return [row[-1] for row in rows]


def _complete_homogeneous(xs, degree):
    return sum((math.prod(combo) for combo in itertools.combinations_with_replacement(xs, degree)),
               Fraction(0))


def _random_fraction_nodes(rng, count):
    nodes = set()
    while len(nodes) < count:
        nodes.add(Fraction(rng.randint(0, 60), rng.randint(1, 6)))
    return sorted(nodes)


def _worked_instance():
    return DiscreteDistribution.diracs([mpf(0), mpf(1), mpf(2), mpf(3)], [1, -1, -1, 1])


class TestVandermonde:
    def test_three_nodes(self):
        D = vandermonde([Fraction(0), Fraction(1), Fraction(2)])
        assert [atom.a for atom in D] == [Fraction(1, 2), -1, Fraction(1, 2)]
        assert [moment(D, k) for k in range(3)] == [0, 0, 1]

    def test_against_exact_linear_solve(self):
        rng = random.Random(3)
        for _ in range(200):
            nodes = _random_fraction_nodes(rng, rng.randint(1, 9))
            n = len(nodes) - 1
            matrix = [[b ** k for b in nodes] for k in range(n + 1)]
            rhs = [Fraction(0)] * n + [Fraction(1)]
            assert vandermonde_coefficients(nodes) == _solve_exact(matrix, rhs)

    def test_moments_are_complete_homogeneous(self):
        rng = random.Random(5)
        for _ in range(50):
            nodes = _random_fraction_nodes(rng, rng.randint(1, 6))
            n = len(nodes) - 1
            D = vandermonde(nodes)
            for j in range(4):
                assert moment(D, n + j) == _complete_homogeneous(nodes, j)

    def test_merge_identity(self):
        base = [Fraction(0), Fraction(1)]
        merged = merge_vandermonde(base, Fraction(2), Fraction(3))
        direct = vandermonde(base + [Fraction(2), Fraction(3)])
        assert merged.atoms == direct.atoms

    def test_duplicate_nodes(self):
        with pytest.raises(DuplicateNodesError):
            VandermondeNodes((1, 1))
        with pytest.raises(DuplicateNodesError):
            merge_vandermonde([0, 1], 1, 2)

    def test_negative_nodes(self):
        with pytest.raises(InvalidParameter):
            VandermondeNodes((-1, 1))


class TestOrder:
    def test_worked_instance_has_order_two(self):
        D = _worked_instance()
        assert order_of(D) == 2
        check_order(D, 2)
        with pytest.raises(OrderDeficiencyError) as info:
            check_order(D, 3)
        assert info.value.moment_index == 2

    def test_derivative_atoms_count_in_moments(self):
        # central difference against the derivative at 1: exact on quadratics
        D = DiscreteDistribution([Atom(mpf(1), 1, mpf(-1)), Atom(mpf(2), 0, mpf("0.5")),
                                  Atom(mpf(0), 0, mpf("-0.5"))])
        assert [moment(D, p) for p in range(4)] == [0, 0, 0, 1]
        assert order_of(D) == 3

    def test_zero_distribution_has_no_order(self):
        with pytest.raises(InvalidParameter):
            order_of(DiscreteDistribution())


class TestNorms:
    def test_worked_instance_functional_norm(self):
        D = _worked_instance()
        f = primitive(D, 2)
        assert f(mpf("0.5")) == mpf("0.5")
        assert f(mpf("1.5")) == 1
        assert f(mpf("2.5")) == mpf("0.5")
        assert f(mpf(4)) == 0
        assert abs(functional_norm(D, 2) - 2) < mpf(10) ** -60
        assert functional_norm(D, 0) == 4

    def test_worked_instance_combinatorial_norm(self):
        D = _worked_instance()
        assert combinatorial_norm_lp(D, 2) == pytest.approx(2.0, abs=1e-9)
        assert combinatorial_norm_lp(D, 2, mode="geq_order") <= 2.0 + 1e-9

    def test_functional_norm_below_combinatorial(self):
        rng = random.Random(11)
        for _ in range(10):
            support = sorted(rng.sample(range(12), 6))
            nodes = [mpf(b) for b in support]
            D = normalized_vandermonde(nodes[:4]).scale(mpf(rng.randint(1, 3))) \
                - normalized_vandermonde(nodes[2:]).scale(mpf(rng.randint(1, 3)))
            fun = functional_norm(D, 3)
            comb = combinatorial_norm_lp(D, 3, rho=nodes[-1] - nodes[0])
            assert float(fun) <= comb * (1 + 1e-9) + 1e-9

    def test_normalized_vandermonde_primitive_has_a_fixed_sign(self):
        rng = random.Random(7)
        for _ in range(20):
            n = rng.randint(1, 6)
            while True:
                nodes = sorted(mpf(rng.uniform(0, 5)) for _ in range(n + 1))
                if min(b - a for a, b in zip(nodes, nodes[1:])) > mpf("0.05"):
                    break
            Delta = normalized_vandermonde(nodes)
            f = primitive(Delta, n)
            sign = (-1) ** n
            assert f.support_end == nodes[-1]
            for j in range(50):
                t = nodes[0] + (nodes[-1] - nodes[0]) * mpf(j) / 49
                assert sign * f(t) >= -mpf(10) ** -40
            assert abs(functional_norm(Delta, n) - 1) < mpf(10) ** -30

    def test_lp_rejects_large_supports(self):
        D = normalized_vandermonde([mpf(i) for i in range(14)])
        with pytest.raises(InvalidParameter):
            combinatorial_norm_lp(D, 13)


class TestNestedDecomposition:
    def test_worked_instance(self):
        dec = decompose_nested(_worked_instance(), 2)
        assert dec.coefficients == [0, 0, 2, 1]
        assert dec.terms == [(2, 2), (3, 1)]
        rebuilt = reconstruct(dec)
        for beta, a in zip([0, 1, 2, 3], [1, -1, -1, 1]):
            assert abs(rebuilt.coefficient(beta) - a) < mpf(10) ** -60

    def test_order_deficiency(self):
        D = DiscreteDistribution.diracs([mpf(0)], [mpf(1)])
        with pytest.raises(OrderDeficiencyError) as info:
            decompose_nested(D, 1)
        assert info.value.moment_index == 0

    def test_random_distributions_reconstruct_and_obey_the_bound(self):
        rng = random.Random(2024)
        for _ in range(100):
            m = rng.randint(2, 10)
            pool = sorted({mpf(rng.randint(0, 400)) / 40 for _ in range(m)})
            if len(pool) < 2:
                continue
            k = rng.randint(0, len(pool) - 2)
            D = DiscreteDistribution()
            for _ in range(3):
                size = rng.randint(k + 1, len(pool))
                subset = sorted(rng.sample(pool, size))
                D = D + normalized_vandermonde(subset).scale(mpf(rng.uniform(-2, 2)))
            if D.is_zero:
                continue
            dec = decompose_nested(D, k, verify_bound=True)
            residual = reconstruct(dec) - D
            assert residual.total_variation() <= mpf(10) ** -20 * max(1, D.total_variation())
            assert dec.max_bound_ratio <= 1 + mpf(10) ** -10

    def test_explicit_nodes_preserve_moments_of_derivative_atoms(self):
        D = DiscreteDistribution([Atom(mpf(1), 1, mpf(1)), Atom(mpf(3), 0, mpf(2))])
        nodes = [mpf(1), mpf(1) + mpf(10) ** -30, mpf(3)]
        dec = decompose_nested(D, 0, nodes=nodes)
        rebuilt = reconstruct(dec)
        for degree in range(3):
            phi = Polynomial.monomial(degree)
            assert abs(pair(rebuilt, phi) - pair(D, phi)) < mpf(10) ** -20

    def test_derivative_atoms_need_nodes(self):
        with pytest.raises(InvalidParameter):
            decompose_nested(DiscreteDistribution([Atom(mpf(1), 1, mpf(1))]), 0)

    def test_support_must_be_in_the_nodes(self):
        with pytest.raises(InvalidParameter):
            decompose_nested(_worked_instance(), 2, nodes=[mpf(0), mpf(1), mpf(2)])


class TestDegenerate:
    def test_undegenerate_single_second_derivative(self):
        D = DiscreteDistribution([Atom(mpf(1), 2, mpf(1))])
        w = mpf(-1)
        approx = pair(undegenerate(D, mpf(10) ** -20), ExpKernel(w))
        assert abs(approx - w ** 2 * mpmath.exp(w)) < mpf(10) ** -15

    def test_shared_geometry(self):
        D = DiscreteDistribution([Atom(mpf(1), 2, mpf(1)), Atom(mpf(1), 3, mpf(1))])
        eps = mpf(2) ** -30
        shared = cluster_nodes(D, eps)
        assert len(shared) == 4
        assert shared[0] == 1
        assert abs(shared[-1] - (1 + eps)) < mpf(10) ** -60
        assert len(cluster_nodes(D, eps, geometry="spread")) == 5

    def test_eps_must_stay_below_half_the_gap(self):
        D = DiscreteDistribution([Atom(mpf(0), 1, mpf(1)), Atom(mpf(1), 0, mpf(1))])
        with pytest.raises(InvalidParameter):
            undegenerate(D, mpf("0.6"))

    def test_pair_matches_pair_exp(self):
        D = DiscreteDistribution([Atom(mpf("0.5"), 2, mpf(3)), Atom(mpf(2), 0, mpf(-1))])
        w = mpmath.mpc(-1, 2)
        assert abs(pair(D, ExpKernel(w)) - D.pair_exp(w)) < mpf(10) ** -60


def test_mean_value_interval_contains_the_pairing():
    nodes = [mpf(0), mpf(1), mpf(2)]
    phi = Polynomial.monomial(3, scale=6)
    lo, hi = mean_value_interval(nodes, phi)
    value = pair(normalized_vandermonde(nodes), phi)
    assert value == 6
    assert lo <= value <= hi
    assert (lo, hi) == (0, 12)
