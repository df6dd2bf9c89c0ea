import json

import mpmath
import pytest
from mpmath import mpf

from cli import EXIT_INPUT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main, parse_precisions, parse_w
from core.errors import InvalidParameter
from core.exponents import geometric_closed_form, integer_support
from core.series import unit_series
from core.summation import PackageDecomposition, eval_decomposition, summate_by_packages

NATURALS = {"support": {"kind": "integers", "cutoff": 110}, "label": "naturals"}


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr().out


class TestParsing:
    def test_parse_w(self):
        assert parse_w("-0.5") == mpf("-0.5")
        assert parse_w("-1, 2") == mpmath.mpc(-1, 2)

    @pytest.mark.parametrize("text", ["abc", "1,2,3", "1,x"])
    def test_parse_w_rejects(self, text):
        with pytest.raises(InvalidParameter):
            parse_w(text)

    def test_parse_precisions(self):
        assert parse_precisions("53, 128,256") == [53, 128, 256]
        with pytest.raises(InvalidParameter):
            parse_precisions("53,high")


class TestSum:
    def test_dipp_on_the_naturals(self, capsys, write_series):
        path = write_series(NATURALS)
        code, out = _run(capsys, ["sum", path, "--w=-0.5", "--k", "0.0625", "--tol", "1e-8"])
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["converged"] is True
        assert payload["method"] == "dipp"
        assert abs(mpf(payload["value"]) - geometric_closed_form(1, mpf("-0.5"))) < 1e-7

    def test_naive_complex_value(self, capsys, write_series):
        path = write_series({"support": {"kind": "integers", "cutoff": 40}})
        code, out = _run(capsys, ["sum", path, "--w=-1,1", "--method", "naive"])
        assert code == EXIT_OK
        re, im = json.loads(out)["value"]
        expected = geometric_closed_form(1, mpmath.mpc(-1, 1))
        assert abs(mpmath.mpc(mpf(re), mpf(im)) - expected) < 1e-15

    def test_not_converged_exit_code(self, capsys, write_series):
        path = write_series(NATURALS)
        code, out = _run(capsys, ["sum", path, "--w=-0.5", "--k", "0.0625", "--nmax", "2"])
        assert code == EXIT_NOT_CONVERGED
        assert json.loads(out)["converged"] is False

    def test_malformed_series_file(self, capsys, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{support")
        code, _ = _run(capsys, ["sum", str(path), "--w=-1"])
        assert code == EXIT_INPUT_ERROR

    def test_bad_w(self, capsys, write_series):
        code, _ = _run(capsys, ["sum", write_series(NATURALS), "--w", "abc", "--method", "naive"])
        assert code == EXIT_INPUT_ERROR

    def test_unknown_command(self, capsys):
        assert main(["integrate"]) == EXIT_INPUT_ERROR

    def test_precision_from_environment(self, capsys, monkeypatch, write_series):
        monkeypatch.setenv("IRRSUM_PRECISION", "128")
        path = write_series({"support": {"kind": "integers", "cutoff": 5}})
        code, out = _run(capsys, ["sum", path, "--w=-1", "--method", "naive"])
        assert code == EXIT_OK
        assert json.loads(out)["precision_bits"] == 128

    def test_precision_flag_wins(self, capsys, monkeypatch, write_series):
        monkeypatch.setenv("IRRSUM_PRECISION", "128")
        path = write_series({"support": {"kind": "integers", "cutoff": 5}})
        code, out = _run(capsys, ["sum", path, "--w=-1", "--method", "naive", "--prec", "192"])
        assert code == EXIT_OK
        assert json.loads(out)["precision_bits"] == 192


class TestPackages:
    def test_written_decomposition_evaluates_identically(self, capsys, tmp_path, write_series):
        path = write_series({"support": {"kind": "integers", "cutoff": 30}})
        out = tmp_path / "packages.json"
        code, _ = _run(capsys, ["packages", path, "--k", "0.5", "--out", str(out)])
        assert code == EXIT_OK
        data = json.loads(out.read_text())
        assert data["series"]["points"] == 31
        assert data["precision_bits"] == 256
        restored = PackageDecomposition.from_dict(data)
        direct = summate_by_packages(unit_series(integer_support(30)), k=mpf("0.5"))
        w = mpmath.mpc(-1, mpf("0.5"))
        assert eval_decomposition(restored, w) == eval_decomposition(direct, w)


class TestTables:
    def test_region_csv(self, capsys):
        code, out = _run(capsys, ["region", "--count", "3", "--ymin", "-1", "--ymax", "1"])
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "y,x_boundary"
        assert len(lines) == 4
        assert lines[2].startswith("0.0,")

    def test_quad_region(self, capsys):
        code, out = _run(capsys, ["region", "--domain", "quad", "--a=-1", "--count", "2"])
        assert code == EXIT_OK
        assert len(out.strip().splitlines()) == 3

    def test_bench_cancel_defaults_to_the_configured_slope(self, capsys, write_series):
        path = write_series({"support": {"kind": "integers", "cutoff": 10},
                             "coefficients": {"kind": "geometric", "ratio": "0.5"}})
        code, out = _run(capsys, ["bench-cancel", path, "--w=-1", "--precisions", "128,256"])
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert lines[0] == "method,bits,relative_error,digits,converged"
        methods = [line.split(",")[:2] for line in lines[1:]]
        assert methods == [["naive", "128"], ["dipp", "128"], ["packages", "128"],
                           ["naive", "256"], ["dipp", "256"], ["packages", "256"]]

    def test_bench_cancel_naive_only(self, capsys, write_series):
        path = write_series({"support": {"kind": "integers", "cutoff": 10},
                             "coefficients": {"kind": "geometric", "ratio": "0.5"}})
        code, out = _run(capsys, ["bench-cancel", path, "--w=-1", "--precisions", "53,128", "--naive-only"])
        assert code == EXIT_OK
        lines = out.strip().splitlines()
        assert [line.split(",")[:2] for line in lines[1:]] == [["naive", "53"], ["naive", "128"]]
        assert all(line.endswith(",true") for line in lines[1:])
