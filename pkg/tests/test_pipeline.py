import datetime as dt
import json
import math

import numpy as np
import pytest

from gigavol.diag import NoiseColor
from gigavol.dist import DistModel, sample
from gigavol.errors import DataError
from gigavol.pipeline import (
    FrameKind,
    Report,
    SeriesFrame,
    load_level_csv,
    min_length_filter,
    run_returns_report,
    run_volatility_report,
    to_returns,
)


def _frame(values, name="s", kind=FrameKind.LEVEL):
    start = dt.date(2000, 1, 3)
    dates = [start + dt.timedelta(days=i) for i in range(len(values))]
    return SeriesFrame(name, dates, np.asarray(values, dtype=float), kind)


# -- loading ---------------------------------------------------------------------------


def test_three_row_fixture(tmp_path):
    p = tmp_path / "vix.csv"
    p.write_text("Date,Close\n2020-01-02,10\n2020-01-03,11\n2020-01-06,12")
    f = load_level_csv(p)
    np.testing.assert_array_equal(f.values, [10, 11, 12])
    assert f.dates[0] == dt.date(2020, 1, 2) and f.kind is FrameKind.LEVEL and f.dropped == 0
    assert f.name == "vix"


def test_bad_rows_dropped(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("Date,Close\n2020-01-02,10\n2020-01-03,n/a\n2020-01-06,12\n")
    f = load_level_csv(p)
    assert len(f) == 2 and f.dropped == 1


def test_shuffled_dates(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("Date,Close\n2020-01-03,10\n2020-01-02,11\n2020-01-06,12\n")
    with pytest.raises(DataError, match="increasing"):
        load_level_csv(p)


def test_vendor_preamble_and_columns(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("Vendor export\nretrieved today\nDATE,OPEN,CLOSE\n01/02/2004,1,17.5\n01/05/2004,1,18.25\n")
    f = load_level_csv(p, "DATE", "CLOSE", skip_header_rows=2)
    np.testing.assert_array_equal(f.values, [17.5, 18.25])
    assert f.dates[1] == dt.date(2004, 1, 5)


def test_load_errors(tmp_path):
    with pytest.raises(DataError):
        load_level_csv(tmp_path / "missing.csv")
    p = tmp_path / "x.csv"
    p.write_text("Date,Open\n2020-01-02,10\n")
    with pytest.raises(DataError, match="Close"):
        load_level_csv(p)
    p.write_text("Date,Close\nfoo,bar\n")
    with pytest.raises(DataError, match="no usable"):
        load_level_csv(p)


def test_frame_validation():
    with pytest.raises(DataError):
        _frame([1.0, -2.0])
    with pytest.raises(DataError):
        SeriesFrame("s", [dt.date(2000, 1, 1)], np.array([1.0, 2.0]))


# -- returns and filters -----------------------------------------------------------------


def test_to_returns():
    r = to_returns(_frame([10.0, 11.0]))
    assert r.kind is FrameKind.LOG_RETURN and r.values[0] == pytest.approx(math.log(1.1), rel=1e-15)
    assert r.dates == [dt.date(2000, 1, 4)]
    np.testing.assert_array_equal(to_returns(_frame([5.0] * 10)).values, np.zeros(9))
    with pytest.raises(DataError):
        to_returns(_frame([5.0]))
    with pytest.raises(DataError):
        to_returns(r)


def test_drift_annualizes(fixtures_dir):
    steady = to_returns(_frame(100 * np.exp(0.00025 * np.arange(600))))
    assert 256 * steady.values.mean() == pytest.approx(0.064, abs=1e-9)
    prices = to_returns(load_level_csv(fixtures_dir / "prices.csv"))
    assert abs(prices.values.mean() - 0.00025) < 3 * prices.values.std() / math.sqrt(len(prices))


def test_min_length_filter():
    short, ok = _frame(np.ones(199), "short"), _frame(np.ones(200), "ok")
    kept, dropped = min_length_filter([short, ok])
    assert [f.name for f in kept] == ["ok"] and dropped == ["short"]
    assert min_length_filter([]) == ([], [])


# -- volatility reports ------------------------------------------------------------------


@pytest.fixture(scope="module")
def giga_vol_report():
    x = sample(DistModel.giga(0.721, 14.1, 3.96), 50_000, seed=2024)
    return run_volatility_report(_frame(x, "giga_levels"))


def test_vol_ranking(giga_vol_report):
    rank = giga_vol_report.ranking()
    assert rank.index("GIGa") < rank.index("IGa") < rank.index("LN") < rank.index("Ga")
    giga = giga_vol_report.fit("GIGa")
    assert giga.model.alpha * giga.model.gamma == pytest.approx(0.721 * 3.96, rel=0.1)
    assert giga_vol_report.fit("LN").rel_loglik == 0.0
    assert giga_vol_report.errors == {}
    assert giga_vol_report.units == "index points"


def test_vol_report_roundtrip(giga_vol_report):
    text = giga_vol_report.to_json()
    again = Report.from_json(text)
    assert again.to_json() == text
    assert again.to_dict() == json.loads(text)


def test_vol_spectrum_brown():
    walk = np.exp(0.02 * np.cumsum(np.random.default_rng(1).standard_normal(4096)))
    rep = run_volatility_report(_frame(walk), families=("IGa", "LN"))
    assert rep.spectrum.classification is NoiseColor.BROWN


def test_vol_report_too_short():
    with pytest.raises(DataError):
        run_volatility_report(_frame(np.arange(1.0, 11.0)))


def test_vol_report_records_failures():
    x = sample(DistModel.iga(3, 2), 500, seed=3)
    rep = run_volatility_report(_frame(x), families=("IGa", "LN"))
    assert rep.ranking()[0] in ("IGa", "LN")
    with pytest.raises(DataError):
        run_volatility_report(_frame(x), families=("Weibull",))


def test_vol_failure_does_not_abort(monkeypatch):
    import gigavol.pipeline as pl
    from gigavol.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("simulated failure")

    monkeypatch.setattr(pl, "fit_gga_giga", boom)
    rep = run_volatility_report(_frame(sample(DistModel.iga(3, 2), 500, seed=4)))
    assert "GIGa" in rep.errors and "NumericalError" in rep.errors["GIGa"]
    assert {f.family for f in rep.fits} == {"IGa", "Ga", "LN"}


# -- returns reports -------------------------------------------------------------------


@pytest.fixture(scope="module")
def returns_report(fixtures_dir):
    return run_returns_report(load_level_csv(fixtures_dir / "prices.csv"))


def test_returns_ranking(returns_report):
    rank = returns_report.ranking()
    for strong in ("GIGa*N", "GIGa(a,b,2)*N"):
        for weak in ("Ga*N", "GGa(a,b,2)*N"):
            assert rank.index(strong) < rank.index(weak)
    g = returns_report.fit("GIGa*N").model.base
    assert 2.5 <= g.alpha * g.gamma <= 6
    assert returns_report.fit("LN*N").rel_loglik == 0.0
    assert len(returns_report.fits) == 7


def test_returns_white_and_tails(returns_report):
    assert returns_report.spectrum.classification is NoiseColor.WHITE
    assert {t.side.value for t in returns_report.tails} == {"Right", "LeftAbs"}


def test_returns_preprocessing(returns_report):
    pre = returns_report.preprocessing
    assert pre["fitted_mean"] == pytest.approx(0.0, abs=1e-12)
    assert pre["fitted_stdev"] == pytest.approx(1.0, abs=1e-12)
    assert pre["mean"] == pytest.approx(0.00025, abs=6e-4)


def test_returns_roundtrip(returns_report):
    text = returns_report.to_json()
    assert Report.from_json(text).to_json() == text


def test_returns_from_log_returns_matches_levels(fixtures_dir):
    levels = load_level_csv(fixtures_dir / "prices.csv")
    fams = ("IGa*N", "LN*N")
    a = run_returns_report(levels, families=fams)
    b = run_returns_report(to_returns(levels), families=fams)
    for fa, fb in zip(a.fits, b.fits):
        assert fa.mean_loglik == pytest.approx(fb.mean_loglik, abs=1e-10)


def test_returns_determinism(fixtures_dir):
    levels = load_level_csv(fixtures_dir / "prices.csv")
    fams = ("GIGa(a,b,2)*N", "LN*N")
    assert run_returns_report(levels, families=fams).to_json() == run_returns_report(levels, families=fams).to_json()


def test_returns_errors():
    with pytest.raises(DataError):
        run_returns_report(_frame(np.exp(np.linspace(0, 1, 100))))
    long = _frame(np.exp(np.cumsum(np.random.default_rng(2).standard_normal(400) * 0.01)))
    with pytest.raises(DataError):
        run_returns_report(long, families=("Cauchy*N",))
