import numpy as np
import pytest

from adaptive_epd.data import (
    PriceSeries,
    ReturnSeries,
    gen_epd_series,
    gen_garch_series,
    gen_regime_switching,
    load_price_csv,
    log_returns,
    read_returns_csv,
    write_returns_csv,
)
from adaptive_epd.epd import EpdParams
from adaptive_epd.exceptions import DataError, DomainError, InsufficientDataError
from adaptive_epd.garch import GarchParams


def write(tmp_path, text, name="prices.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_with_header_and_close_column(tmp_path):
    p = write(tmp_path, "Date,Open,Close,Volume\n2020-01-02,1,100,5\n2020-01-03,1,110,5\n2020-01-06,1,99,5\n")
    s = load_price_csv(p)
    np.testing.assert_array_equal(s.values, [100, 110, 99])
    assert len(s.timestamps) == 3


def test_newest_first_is_reversed(tmp_path):
    p = write(tmp_path, "Date,Close/Last\n01/03/2020,$110.00\n01/02/2020,$100.00\n")
    s = load_price_csv(p)
    np.testing.assert_array_equal(s.values, [100, 110])
    assert s.timestamps[0] < s.timestamps[1]


def test_headerless_single_column_and_comments(tmp_path):
    p = write(tmp_path, "# prices\n1.0\n2.0\n\n4.0\n")
    np.testing.assert_array_equal(load_price_csv(p).values, [1.0, 2.0, 4.0])


def test_explicit_column_by_name_and_index(tmp_path):
    p = write(tmp_path, "a,b\n1,10\n2,20\n")
    np.testing.assert_array_equal(load_price_csv(p, "a").values, [1, 2])
    np.testing.assert_array_equal(load_price_csv(p, 1).values, [10, 20])
    np.testing.assert_array_equal(load_price_csv(p, "0").values, [1, 2])
    with pytest.raises(DataError, match="not found"):
        load_price_csv(p, "zzz")
    with pytest.raises(DataError, match="out of range"):
        load_price_csv(p, 5)


def test_invalid_rows(tmp_path):
    p = write(tmp_path, "close\n1\nnan\n-3\n2\n")
    with pytest.raises(DataError, match=r"rows \[3, 4\]"):
        load_price_csv(p)
    np.testing.assert_array_equal(load_price_csv(p, skip_invalid=True).values, [1, 2])


def test_missing_file_names_the_path(tmp_path):
    with pytest.raises(DataError, match="nope.csv"):
        load_price_csv(tmp_path / "nope.csv")
    with pytest.raises(DataError, match="nope.txt"):
        read_returns_csv(tmp_path / "nope.txt")


def test_price_series_validation():
    with pytest.raises(DataError):
        PriceSeries([1.0, 0.0])
    with pytest.raises(DataError):
        PriceSeries([1.0, 2.0], (2, 1))


def test_log_returns():
    r = log_returns(PriceSeries([100.0, 110.0, 99.0]))
    np.testing.assert_allclose(r.values, [np.log(1.1), np.log(0.9)])
    with pytest.raises(InsufficientDataError):
        log_returns(PriceSeries([1.0]))


def test_returns_round_trip_is_exact(tmp_path):
    s = gen_epd_series(EpdParams(0.9, 0.0, 0.01), 200, seed=1)
    p = tmp_path / "r.csv"
    write_returns_csv(s, p, comments=["seed 1"])
    back = read_returns_csv(p)
    np.testing.assert_array_equal(back.values, s.values)
    write_returns_csv(s, p, header=False)
    np.testing.assert_array_equal(read_returns_csv(p).values, s.values)


def test_read_returns_rejects_garbage(tmp_path):
    p = write(tmp_path, "x\n0.1\nabc\n", "r.csv")
    with pytest.raises(DataError, match="line 3"):
        read_returns_csv(p)


def test_generators_deterministic_with_latent():
    a = gen_regime_switching(1.0, [(100, 0.01), (50, 0.05)], seed=3)
    b = gen_regime_switching(1.0, [(100, 0.01), (50, 0.05)], seed=3)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.latent[0] == 0.01 and a.latent[-1] == 0.05 and len(a) == 150
    g = gen_garch_series(GarchParams(1e-6, 0.1, 0.85), 100, seed=2)
    assert g.latent.shape == (100,)
    for bad in ([], [(0, 1.0)], [(10, -1.0)]):
        with pytest.raises(DomainError):
            gen_regime_switching(1.0, bad)
    with pytest.raises(DomainError):
        gen_epd_series(EpdParams(1.0), 0)


def test_return_series_equality_ignores_latent():
    assert ReturnSeries([1.0], "a", np.array([2.0])).source_id == "a"
