import json

import mpmath
import pytest
from mpmath import mpf

from core.dipp import dipp_sum, window_pairing
from core.errors import DomainViolation, InvalidParameter
from core.exponents import (
    admissible_sequence,
    generate_r_alpha,
    geometric_closed_form,
    integer_support,
    r_alpha_closed_form,
)
from core.series import paired_difference_series, unit_series
from core.summation import (
    PackageDecomposition,
    compare_methods,
    eval_decomposition,
    expand_to_atoms,
    naive_sum,
    periodicity_check,
    summate_by_packages,
    weight_bound_report,
)


def _empty_decomposition(**overrides):
    fields = dict(terms=[], a=mpf(0), k=mpf(1), mu=mpf(0), nu=mpf(0), k_prime=mpf(2), c=mpf(0),
                  c_a_priori=mpf(7), a_priori_applies=True, r=mpmath.exp(-1), r_clipped=False,
                  eps=mpf(10) ** -30, n_max=0)
    fields.update(overrides)
    return PackageDecomposition(**fields)


class TestSummateByPackages:
    def test_naturals_match_the_closed_form(self, naturals_unit):
        dec = summate_by_packages(naturals_unit, k=mpf(1) / 16)
        assert dec.n_max == 9
        value, _ = eval_decomposition(dec, mpf("-0.5"))
        assert abs(value - geometric_closed_form(1, mpf("-0.5"))) < 1e-8

    def test_empty_decomposition_is_zero(self):
        assert eval_decomposition(_empty_decomposition(), -1) == (0, 0)

    def test_certificate(self, r_sqrt2_small):
        dec = summate_by_packages(r_sqrt2_small, a=0, k=1)
        assert dec.k_prime == mpmath.sqrt(2) + 2
        assert dec.a_priori_applies
        assert all(term.n <= dec.k_prime * term.beta_min + dec.c for term in dec.terms)
        assert dec.c <= dec.c_a_priori
        assert all(x <= y for x, y in zip(dec.tail_report, dec.tail_report[1:]))
        assert dec.r == mpmath.exp(-1)

    def test_slopes_below_one_are_kept(self):
        series = unit_series(integer_support(16))
        dec = summate_by_packages(series, k=mpf("0.5"))
        assert dec.k == mpf("0.5")
        assert not dec.a_priori_applies
        assert all(term.n <= dec.k_prime * term.beta_min + dec.c for term in dec.terms)

    def test_weight_is_clipped_for_large_a(self):
        series = unit_series(integer_support(6))
        dec = summate_by_packages(series, a=2, k=1)
        assert dec.r_clipped
        assert dec.r == mpf("0.5")

    def test_eps_must_stay_below_half_the_gap(self):
        series = unit_series(integer_support(10))
        with pytest.raises(InvalidParameter):
            summate_by_packages(series, k=1, eps_degen="0.2")

    def test_decomposition_survives_json(self):
        series = unit_series(integer_support(30))
        dec = summate_by_packages(series, k=mpf("0.5"))
        restored = PackageDecomposition.from_dict(json.loads(json.dumps(dec.to_dict())))
        w = mpmath.mpc(mpf("-1.5"), mpf("0.5"))
        assert eval_decomposition(restored, w) == eval_decomposition(dec, w)
        assert restored.n_max == dec.n_max
        assert len(restored.terms) == len(dec.terms)

    def test_expansion_recovers_the_coefficients(self):
        series = unit_series(integer_support(10))
        dec = summate_by_packages(series, k=1, n_max=5)
        atoms = expand_to_atoms(dec)
        for beta in (0, 1, 2):
            assert abs(atoms.coefficient(mpf(beta)) - 1) < mpf(10) ** -15

    def test_packages_agree_with_the_windows(self):
        series = unit_series(integer_support(10))
        dec, state = summate_by_packages(series, k=1, n_max=5, return_state=True)
        w = mpmath.mpc(-1, 2)
        value, _ = eval_decomposition(dec, w)
        direct = mpmath.fsum(window_pairing(state, n, w) for n in range(state.n_max + 1))
        assert abs(value - direct) < mpf(10) ** -20 * abs(direct)

    def test_max_window_bounds_the_rest(self):
        series = unit_series(integer_support(10))
        dec = summate_by_packages(series, k=1, n_max=5)
        w = mpf(-2)
        full, _ = eval_decomposition(dec, w)
        partial, tail = eval_decomposition(dec, w, max_window=3)
        assert abs(full - partial) <= tail * (1 + mpf(10) ** -30)

    def test_weight_bound_report(self):
        series = unit_series(integer_support(10))
        dec, state = summate_by_packages(series, a=-1, k=1, return_state=True)
        rows = weight_bound_report(dec, state)
        assert rows
        assert all(row["holds"] for row in rows)


class TestRSqrt2:
    @pytest.fixture(scope="class")
    def decomposition(self):
        with mpmath.workprec(256):
            series = unit_series(generate_r_alpha("sqrt2", 16))
            return summate_by_packages(series, k=mpf("0.5"), n_max=10)

    @pytest.mark.parametrize("w", [mpf(-4), mpmath.mpc(-4, 3)])
    def test_closed_form(self, decomposition, w):
        value, _ = eval_decomposition(decomposition, w)
        expected = r_alpha_closed_form("sqrt2", w)
        assert abs(value - expected) < 1e-8 * abs(expected)


@pytest.mark.slow
class TestRSqrt2Long:
    """Cutoff 40 with windows of length 15"""

    K = mpf(1) / 15

    @pytest.fixture(scope="class")
    def series(self):
        with mpmath.workprec(256):
            return unit_series(generate_r_alpha("sqrt2", 40))

    @pytest.fixture(scope="class")
    def decomposition(self, series):
        with mpmath.workprec(256):
            return summate_by_packages(series, k=self.K)

    @pytest.mark.parametrize("w", [mpf(-1), mpmath.mpc(-2, 3)])
    def test_dipp_closed_form(self, series, w):
        result = dipp_sum(series, admissible_sequence(self.K, series.support), w, tol=1e-14)
        expected = r_alpha_closed_form("sqrt2", w)
        assert result.n_max == 5
        assert abs(result.value - expected) < 1e-8 * abs(expected)

    @pytest.mark.parametrize("w", [mpf(-1), mpmath.mpc(-2, 3)])
    def test_packages_closed_form(self, decomposition, w):
        value, _ = eval_decomposition(decomposition, w)
        expected = r_alpha_closed_form("sqrt2", w)
        assert abs(value - expected) < 1e-8 * abs(expected)


class TestPeriodicity:
    def test_integer_support_is_periodic(self):
        series = unit_series(integer_support(16))
        dec = summate_by_packages(series, k=mpf("0.5"))
        assert periodicity_check(dec, -4, tol=1e-9)

    def test_needs_integer_support(self):
        with pytest.raises(DomainViolation):
            periodicity_check(_empty_decomposition(), -1)


class TestCompareMethods:
    def test_all_methods_agree_on_a_geometric_series(self, naturals_geometric):
        report = compare_methods(naturals_geometric, -2, precisions=(128, 256), k=mpf("0.25"), tol=1e-14)
        methods = {row["method"] for row in report["rows"]}
        assert methods == {"naive", "dipp", "packages"}
        for row in report["rows"]:
            assert "error" not in row
            assert row["converged"]
            assert row["relative_error"] < (1e-12 if row["bits"] == 256 else 1e-9)

    def test_truncated_rows_are_flagged(self, naturals_geometric):
        report = compare_methods(naturals_geometric, -2, precisions=(256,), k=mpf("0.25"), n_max=5, tol=1e-14)
        rows = {row["method"]: row for row in report["rows"]}
        assert rows["naive"]["converged"]
        for method in ("dipp", "packages"):
            assert not rows[method]["converged"]
            assert rows[method]["residual"] > 1e-14

    def test_naive_only(self, naturals_geometric):
        report = compare_methods(naturals_geometric, mpmath.mpc(-1, 1))
        assert [row["bits"] for row in report["rows"]] == [53, 128, 256]
        assert all(row["relative_error"] < 1e-12 for row in report["rows"])

    def test_right_half_plane_is_rejected(self, naturals_geometric):
        with pytest.raises(DomainViolation):
            compare_methods(naturals_geometric, mpmath.mpc(0, 1))

    def test_packages_survive_cancelling_pairs(self):
        support = generate_r_alpha("sqrt2", 3)
        series = paired_difference_series(support, mpf(10) ** -16, 10, cutoff=50)
        report = compare_methods(series, -1, precisions=(256,), k=mpf(1) / 20, n_max=5)
        oracle = report["oracle"]
        assert abs(naive_sum(series, -1, 53) - oracle) > 1e-2 * abs(oracle)
        packages = next(row for row in report["rows"] if row["method"] == "packages")
        assert packages["relative_error"] < 1e-10


def test_naive_sum_precisions(naturals_geometric):
    w = mpf(-1)
    low = naive_sum(naturals_geometric, w, 53)
    high = naive_sum(naturals_geometric, w, 256)
    assert abs(low - high) < 1e-14
