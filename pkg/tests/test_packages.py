import math
import random

import mpmath
import pytest
from mpmath import mpf

from core.distributions import ExpKernel, vandermonde
from core.errors import DomainViolation, InvalidParameter, PoleError
from core.packages import (
    complete_homogeneous,
    contour_pairing,
    eval_nested_packages,
    eval_package,
    hyperfunction_eval,
    package_bound,
    vandermonde_hyperfunction,
    vandermonde_pairing_bound,
)


def _close(a, b, tol):
    return abs(a - b) <= tol * max(1, abs(b))


class TestEvalPackage:
    def test_single_node(self):
        w = mpmath.mpc(-1, 2)
        assert _close(eval_package([mpf("1.5")], w), mpmath.exp(mpf("1.5") * w), mpf(10) ** -70)

    def test_two_nodes_is_a_difference_quotient(self):
        w = mpf(-2)
        a, b = mpf("0.5"), mpf("1.75")
        expected = (mpmath.exp(b * w) - mpmath.exp(a * w)) / (b - a)
        assert _close(eval_package([a, b], w), expected, mpf(10) ** -70)

    def test_series_and_product_agree(self):
        R = [mpf(0), mpf("0.5"), mpf("1.3"), mpf(2)]
        w = mpmath.mpc(-1, mpf("0.5"))
        series = eval_package(R, w, method="series")
        product = eval_package(R, w, method="product")
        assert _close(series, product, mpf(10) ** -60)

    def test_clustered_nodes_give_the_derivative(self):
        beta, w = mpf(1), mpf(-1)
        R = [beta, beta + mpf(10) ** -30]
        value = eval_package(R, w, method="series")
        assert _close(value, w * mpmath.exp(beta * w), mpf(10) ** -25)

    def test_double_precision_loses_clustered_packages(self):
        beta, w = mpf(1), mpf(-1)
        R = [beta, beta + mpf(10) ** -12]
        exact = eval_package(R, w)
        naive = eval_package(R, w, method="naive_double")
        assert abs(naive - exact) / abs(exact) > 1e-9

    def test_zero_exponent(self):
        assert eval_package([mpf(2)], 0) == 1
        assert eval_package([mpf(0), mpf(1)], 0) == 0

    def test_unknown_method(self):
        with pytest.raises(InvalidParameter):
            eval_package([mpf(0), mpf(1)], -1, method="fast")

    def test_nested_prefixes_match_single_packages(self):
        rng = random.Random(17)
        nodes = sorted(mpf(rng.uniform(0, 6)) for _ in range(12))
        w = mpmath.mpc(-mpf("1.5"), mpf("2.5"))
        prefixes = eval_nested_packages(nodes, w)
        assert len(prefixes) == len(nodes)
        for i in (0, 3, 7, 11):
            assert _close(prefixes[i], eval_package(nodes[:i + 1], w, method="product"), mpf(10) ** -50)

    def test_complete_homogeneous(self):
        xs = [mpf(1), mpf(2)]
        assert complete_homogeneous(xs, 3) == [1, 3, 7, 15]

    def test_complete_homogeneous_is_nonnegative(self):
        rng = random.Random(23)
        for _ in range(20):
            xs = [mpf(rng.uniform(0, 3)) for _ in range(rng.randint(1, 10))]
            h = complete_homogeneous(xs, 30)
            assert all(value >= 0 for value in h)
            top = max(xs)
            assert all(h[m] >= top ** m * (1 - mpf(10) ** -60) for m in range(31))

    def test_methods_agree_on_random_nodes(self):
        rng = random.Random(29)
        for _ in range(25):
            n = rng.randint(1, 10)
            R = [mpf(rng.uniform(0, 1))]
            for _ in range(n):
                R.append(R[-1] + mpf(rng.uniform(0.3, 0.6)))
            w = mpmath.mpc(rng.uniform(-3, -1.5), rng.uniform(-3, 3))
            product = eval_package(R, w, method="product")
            series = eval_package(R, w, method="series")
            naive = eval_package(R, w, method="naive_double")
            assert _close(series, product, mpf(10) ** -40)
            assert abs(naive - product) <= 1e-6 * abs(product)


class TestBounds:
    def test_package_bound_holds(self):
        rng = random.Random(23)
        for _ in range(30):
            n = rng.randint(0, 6)
            nodes = sorted({mpf(rng.randint(0, 100)) / 10 for _ in range(n + 1)})
            w = mpmath.mpc(-rng.uniform(0.1, 4), rng.uniform(-6, 6))
            assert abs(eval_package(nodes, w)) <= package_bound(nodes, w)

    def test_package_bound_needs_left_half_plane(self):
        with pytest.raises(DomainViolation):
            package_bound([mpf(0), mpf(1)], mpmath.mpc(0, 1))

    def test_pairing_bound(self):
        R = [mpf(0), mpf(1), mpf(3)]
        value, perturbation = vandermonde_pairing_bound(R, 5, 7)
        assert value == 5
        assert perturbation == 2 * 3 * 7
        assert vandermonde_pairing_bound(R, 5)[1] is None


class TestHyperfunctions:
    def test_product_form_matches_partial_fractions(self):
        R = [mpf(0), mpf("0.5"), mpf(2)]
        p = mpmath.mpc(1, 1)
        assert _close(hyperfunction_eval(vandermonde(R), p), vandermonde_hyperfunction(R, p), mpf(10) ** -70)

    def test_pole(self):
        with pytest.raises(PoleError):
            vandermonde_hyperfunction([mpf(0), mpf(1)], mpf(1))
        with pytest.raises(PoleError):
            hyperfunction_eval(vandermonde([mpf(0), mpf(1)]), mpf(0))

    def test_contour_pairing_recovers_the_package(self):
        R = [mpf(0), mpf("0.5"), mpf(1)]
        w = mpmath.mpc(-1, mpf("0.5"))
        value = contour_pairing(vandermonde(R), ExpKernel(w), center=mpf("0.5"), radius=2,
                                tol=mpf(10) ** -35)
        expected = eval_package(R, w) / math.factorial(2)
        assert _close(value, expected, mpf(10) ** -30)

    def test_contour_must_enclose_the_support(self):
        with pytest.raises(DomainViolation):
            contour_pairing(vandermonde([mpf(0), mpf(3)]), ExpKernel(-1), center=0, radius=1)
