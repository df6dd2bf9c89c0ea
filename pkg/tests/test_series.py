import json
from pathlib import Path

import mpmath
import pytest
from mpmath import mpf

from core.errors import InvalidParameter, SeriesFileError
from core.exponents import explicit_support, integer_support
from core.series import (
    SeriesSpec,
    geometric_series,
    load_series_file,
    paired_difference_series,
    series_from_dict,
    unit_series,
)


class TestBuilders:
    def test_unit_series(self):
        series = unit_series(integer_support(10))
        assert len(series) == 11
        assert all(a == 1 for a in series.coefficients)
        assert series.cutoff == 10
        assert series.is_integer_supported

    def test_geometric_series(self):
        series = geometric_series(integer_support(4), mpf("0.5"))
        assert series.coefficients[3] == mpf("0.125")

    def test_paired_difference(self):
        delta = mpf("0.001")
        series = paired_difference_series(integer_support(10), delta, 3)
        assert len(series) == 6
        assert series.coefficients[0] == -1 / delta
        assert series.coefficients[1] == 1 / delta
        w = mpf(-1)
        value = series.distribution().pair_exp(w)
        derivative = sum(w * mpmath.exp(b * w) for b in range(3))
        assert abs(value - derivative) < mpf("0.01")

    def test_paired_delta_must_fit_the_gaps(self):
        with pytest.raises(InvalidParameter):
            paired_difference_series(integer_support(10), mpf("0.6"), 3)
        with pytest.raises(InvalidParameter):
            paired_difference_series(integer_support(10), mpf("0.1"), 20)

    def test_cutoff_below_support_raises(self):
        with pytest.raises(InvalidParameter):
            SeriesSpec(integer_support(5), [mpf(1)] * 6, cutoff=3)


class TestSeriesFiles:
    def test_r_alpha_unit(self):
        series = series_from_dict({"support": {"kind": "r_alpha", "alpha": "sqrt2", "cutoff": 3}})
        assert len(series) == 11
        assert series.mu_hint == mpmath.sqrt(2)
        assert series.rule == "unit"

    def test_numeric_alpha(self):
        series = series_from_dict({"support": {"kind": "r_alpha", "alpha": 1.5, "cutoff": 2}})
        assert series.support.alpha == mpf("1.5")

    def test_explicit_complex_coefficients(self):
        series = series_from_dict({
            "support": {"kind": "explicit", "points": [0, "0.5", 2]},
            "coefficients": {"kind": "explicit", "values": [[1, 2], "3", 0.25]},
            "label": "mixed",
        })
        assert series.coefficients[0] == mpmath.mpc(1, 2)
        assert series.coefficients[1] == 3
        assert series.label == "mixed"

    def test_geometric_from_file(self):
        series = series_from_dict({"support": {"kind": "integers", "cutoff": 5},
                                   "coefficients": {"kind": "geometric", "ratio": "0.5"}})
        assert series.coefficients[2] == mpf("0.25")

    def test_top_level_cutoff(self):
        series = series_from_dict({"support": {"kind": "integers", "cutoff": 5}, "cutoff": 10})
        assert series.cutoff == 10
        assert len(series) == 6

    @pytest.mark.parametrize("data", [
        {},
        {"support": {"kind": "spiral", "cutoff": 3}},
        {"support": {"kind": "integers", "cutoff": -1}},
        {"support": {"kind": "explicit", "points": [0, 1]},
         "coefficients": {"kind": "explicit", "values": [1]}},
        {"support": {"kind": "integers", "cutoff": 5},
         "coefficients": {"kind": "paired_difference", "delta": "-0.1", "pairs": 2}},
        {"support": {"kind": "integers", "cutoff": 5},
         "coefficients": {"kind": "paired_difference", "delta": "0.1", "pairs": 9}},
        {"support": {"kind": "explicit", "points": [0, -1]}},
        {"support": {"kind": "integers", "cutoff": 5}, "cutoff": 2},
    ])
    def test_invalid_descriptions(self, data):
        with pytest.raises(SeriesFileError):
            series_from_dict(data)

    def test_load_from_disk(self, write_series):
        path = write_series({"support": {"kind": "integers", "cutoff": 4}, "label": "n"})
        series = load_series_file(path)
        assert series.label == "n"
        assert len(series) == 5

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(SeriesFileError):
            load_series_file(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(SeriesFileError):
            load_series_file(str(tmp_path / "absent.json"))

    def test_non_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text(json.dumps([1, 2, 3]))
        with pytest.raises(SeriesFileError):
            load_series_file(str(path))


@pytest.mark.parametrize("name", ["naturals", "r_sqrt2", "paired_difference", "geometric"])
def test_shipped_series_files_load(name):
    path = Path(__file__).resolve().parent.parent / "series" / f"{name}.json"
    series = load_series_file(path)
    assert len(series) > 0
    assert series.label
