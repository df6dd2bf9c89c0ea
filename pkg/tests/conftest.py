import json

import pytest
from mpmath import mp

from config import settings as settings_module
from core.exponents import generate_r_alpha, integer_support
from core.series import geometric_series, unit_series


@pytest.fixture(autouse=True)
def working_precision():
    saved = mp.prec
    mp.prec = 256
    yield
    mp.prec = saved


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    monkeypatch.delenv("IRRSUM_PRECISION", raising=False)
    monkeypatch.delenv("VERBOSE", raising=False)
    settings_module._settings = None
    yield
    settings_module._settings = None


@pytest.fixture
def write_series(tmp_path):
    """Write a series description and return its path"""
    def _write(data, name="series.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return _write


@pytest.fixture
def naturals_unit():
    """sum_{n <= 110} e^{n w}, long enough for k = 1/16 through window 9"""
    return unit_series(integer_support(110), label="naturals")


@pytest.fixture
def naturals_geometric():
    """sum_{n <= 44} 2^-n e^{n w}; k = 1/4 reaches window 13"""
    return geometric_series(integer_support(44.5), 0.5, label="half-geometric")


@pytest.fixture
def r_sqrt2_small():
    return unit_series(generate_r_alpha("sqrt2", 12), label="R_sqrt2")
