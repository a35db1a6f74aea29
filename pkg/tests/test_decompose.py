import numpy as np
import pytest

from mfdecomp import (
    DataError,
    DecomposeConfig,
    MfdfaConfig,
    QGaussianParams,
    TimeSeries,
    ValidationError,
    decompose,
    normalize,
    sample_symmetric,
)
from mfdecomp.decompose import (
    DEFAULT_CALIBRATION,
    CalibrationRow,
    FseParams,
    FtCalibration,
    build_report,
    calibrate,
    delta_h_fse,
    delta_h_fse_montecarlo,
    delta_h_ft_montecarlo,
    delta_h_ft_powerlaw,
    fit_tail_beta,
    read_calibration_csv,
    read_fse_params,
    write_calibration_csv,
)

# worked example constants shipped in docs/fse_params.example; chosen so the
# published finite-size floor magnitudes at 1e10 points are respected
EXAMPLE_FSE = FseParams(c1=35.0, c0=35.0, c=2.7, eta1=0.325, eta0=0.325, nu=0.325,
                        q_zero=15.0, provenance="docs example")


# ---------------------------------------------------------------------------
# tail exponent

def test_tail_fit_exact_pareto():
    u = np.random.default_rng(2).random(100_000)
    fit = fit_tail_beta(u ** (-1.0 / 3.0), seed=3)
    assert fit.beta == pytest.approx(3.0, abs=0.2)
    assert fit.ci[0] < 3.0 < fit.ci[1]


def test_tail_fit_qgaussian_values():
    x = sample_symmetric(QGaussianParams(1.8), 1_000_000, 17).values
    assert fit_tail_beta(x, seed=5).beta == pytest.approx(1.5, abs=0.15)
    x = sample_symmetric(QGaussianParams(1.4), 1_000_000, 17).values
    assert fit_tail_beta(x, seed=5).beta == pytest.approx(4.0, abs=0.4)


def test_tail_fit_errors():
    with pytest.raises(ValidationError, match="1000"):
        fit_tail_beta(np.random.default_rng(0).random(500))
    x = np.random.default_rng(0).random(2000)
    with pytest.raises(DataError, match="tail too sparse"):
        fit_tail_beta(x, window=(0.999, 1.0))


# ---------------------------------------------------------------------------
# fat-tail power law

def test_powerlaw_reproduces_table_rows():
    for row in DEFAULT_CALIBRATION.rows:
        for q in (0.25, 0.5, 1.0):
            if q > (5.0 if row.beta > 2 else 1.0):
                continue
            got = delta_h_ft_powerlaw(row.beta, q, row.symmetric)
            assert got == pytest.approx(row.c * q**row.mu, rel=1e-12)
        assert delta_h_ft_powerlaw(row.beta, 15.0, row.symmetric) == pytest.approx(row.saturation_q15)
        assert delta_h_ft_powerlaw(row.beta, 40.0, row.symmetric) == pytest.approx(row.saturation_q15)


def test_powerlaw_paper_examples():
    # symmetric beta=4 at q=1 is the tabulated C three-decimals value
    assert delta_h_ft_powerlaw(4.0, 1.0, True) == pytest.approx(2.35e-3, rel=1e-9)
    assert delta_h_ft_powerlaw(1.0, 15.0, True) == pytest.approx(0.85, rel=1e-9)
    assert delta_h_ft_powerlaw(4.0, 1e-9, True) < 1e-10
    assert delta_h_ft_powerlaw(4.0, 0.0, True) == 0.0


def test_powerlaw_continuity_and_monotonicity():
    for beta, sym in ((4.0, True), (3.1, True), (1.5, False), (1.2, True)):
        q_pl = 5.0 if beta > 2 else 1.0
        lo = delta_h_ft_powerlaw(beta, q_pl - 1e-10, sym)
        hi = delta_h_ft_powerlaw(beta, q_pl + 1e-10, sym)
        assert abs(hi - lo) < 1e-9
        qs = np.linspace(0.05, 20, 300)
        vals = [delta_h_ft_powerlaw(beta, float(q), sym) for q in qs]
        assert np.all(np.diff(vals) >= -1e-12)


def test_powerlaw_interpolation_between_rows():
    got = delta_h_ft_powerlaw(3.0, 1.0, True)
    lo = delta_h_ft_powerlaw(2.3, 1.0, True)
    hi = delta_h_ft_powerlaw(4.0, 1.0, True)
    assert min(lo, hi) < got < max(lo, hi)


def test_powerlaw_extrapolation_refused():
    with pytest.raises(DataError, match="extrapolation refused"):
        delta_h_ft_powerlaw(50.0, 1.0, True)
    # allowed when explicitly requested
    val = delta_h_ft_powerlaw(50.0, 1.0, True, allow_extrapolation=True)
    assert val > 0
    with pytest.raises(DataError, match="extrapolation refused"):
        delta_h_ft_powerlaw(1.95, 0.5, True)  # between the regime blocks


def test_powerlaw_negative_q_rejected():
    with pytest.raises(ValidationError):
        delta_h_ft_powerlaw(4.0, -1.0, True)


def test_calibration_validation():
    with pytest.raises(ValidationError, match="saturation"):
        FtCalibration((CalibrationRow(1.4, 4.0, 0.1, 1.0, 0.01, True),))


def test_calibration_csv_roundtrip(tmp_path):
    path = tmp_path / "cal.csv"
    write_calibration_csv(path, DEFAULT_CALIBRATION)
    back = read_calibration_csv(path)
    assert back.rows == DEFAULT_CALIBRATION.rows


# ---------------------------------------------------------------------------
# FSE formula

def test_fse_formula_h1_cancellation():
    # xi = 0 leaves only the length and moment terms
    for q in (2.0, 10.0):
        got = delta_h_fse(EXAMPLE_FSE, 1.0, 10**6, q)
        want = EXAMPLE_FSE.c0 * 10 ** (-6 * EXAMPLE_FSE.eta0) - EXAMPLE_FSE.c * 10 ** (
            -6 * EXAMPLE_FSE.nu
        ) * (EXAMPLE_FSE.q_zero - q)
        assert got == pytest.approx(want, rel=1e-12)


def test_fse_formula_large_m_floors():
    assert abs(delta_h_fse(EXAMPLE_FSE, 0.5, 10**10, 15.0)) <= 0.02
    assert abs(delta_h_fse(EXAMPLE_FSE, 0.5, 10**10, 2.0)) <= 1e-3


def test_fse_formula_requires_params():
    with pytest.raises(ValidationError, match="Monte-Carlo"):
        delta_h_fse(None, 0.5, 10**6, 2.0)
    with pytest.raises(ValidationError):
        delta_h_fse(EXAMPLE_FSE, 1.7, 10**6, 2.0)


def test_fse_params_file(tmp_path):
    path = tmp_path / "fse.params"
    path.write_text("# constants\nC1 = 35.0\nC0=35.0\nC = 2.7\neta1 = 0.325\neta0=0.325\nnu=0.325\nQ = 15\n")
    p = read_fse_params(path)
    assert p.c1 == 35.0 and p.q_zero == 15.0
    bad = tmp_path / "bad.params"
    bad.write_text("C1 = 1.0\n")
    with pytest.raises(ValidationError, match="missing"):
        read_fse_params(bad)


# ---------------------------------------------------------------------------
# Monte-Carlo components

def test_fse_montecarlo_white_floor():
    mc = delta_h_fse_montecarlo(0.5, 1_000_000, [2.0], ensemble=5, seed=3)
    assert mc.mean[0] <= 0.01


def test_fse_montecarlo_grows_as_m_shrinks():
    q_values = [1.0, 2.0, 5.0, 10.0]
    small = delta_h_fse_montecarlo(0.5, 10_000, q_values, ensemble=10, seed=4)
    big = delta_h_fse_montecarlo(0.5, 1_000_000, q_values, ensemble=5, seed=4)
    assert np.all(small.mean > big.mean)


def test_mc_reproducible():
    a = delta_h_ft_montecarlo(3.0, True, 100_000, [2.0, 5.0], ensemble=3, seed=9)
    b = delta_h_ft_montecarlo(3.0, True, 100_000, [2.0, 5.0], ensemble=3, seed=9)
    assert np.array_equal(a.mean, b.mean)
    assert np.array_equal(a.stderr, b.stderr)
    c = delta_h_ft_montecarlo(3.0, True, 100_000, [2.0, 5.0], ensemble=3, seed=9, threads=3)
    assert np.array_equal(a.mean, c.mean)


def test_ft_montecarlo_near_gaussian_floor():
    # beta=39 is practically Gaussian: the spread at q=2 sits on the FSE floor
    mc = delta_h_ft_montecarlo(39.0, True, 1_000_000, [2.0], ensemble=5, seed=1)
    assert mc.mean[0] < 0.01


# ---------------------------------------------------------------------------
# report assembly and the full pipeline

TABLE3 = [
    ("DJIA 30sec", 0.39, 0.0275, 0.184, 0.178),
    ("DJIA 60sec", 0.235, 0.0142, 0.0893, 0.13),
    ("DJIA 5min", 0.099, 0.029, 0.052, 0.026),
    ("DJIA 10min", 0.063, 0.043, 0.010, 0.009),
    ("WIG20 30sec", 0.222, 0.011, 0.1, 0.11),
    ("WIG20 60sec", 0.195, 0.021, 0.028, 0.146),
    ("WIG20 5min", 0.129, 0.0, 0.019, 0.107),
    ("WIG20 10min", 0.134, 0.038, 0.01, 0.086),
    ("EUR 5min", 0.254, 0.027, 0.089, 0.138),
    ("GBP 5min", 0.324, 0.032, 0.061, 0.23),
    ("RUB 5min", 0.442, 0.027, 0.171, 0.243),
]


@pytest.mark.parametrize("label,dh,fse,ft,nl", TABLE3)
def test_component_arithmetic_rows(label, dh, fse, ft, nl):
    rep = build_report([2.0], [dh], [fse], [ft])
    assert rep.delta_h_nl[0] == pytest.approx(nl, abs=0.01)
    # identity is exact on the raw fields (subtraction form; see build_report)
    assert rep.delta_h_nl[0] == rep.delta_h[0] - rep.delta_h_fse[0] - rep.delta_h_ft[0]
    assert rep.delta_h_nl_clipped[0] == max(rep.delta_h_nl[0], 0.0)


def test_rub_ratio():
    # heaviest fat-tail share of the observed spread among the examples
    assert 0.171 / 0.442 == pytest.approx(0.39, abs=0.02)


def test_decompose_montecarlo_null_gaussian():
    m = 1_000_000
    x = np.random.default_rng(12).standard_normal(m)
    returns = normalize(TimeSeries(x))
    cfg = DecomposeConfig(mode="montecarlo", ensemble=5, seed=3,
                          mfdfa=MfdfaConfig.default(m, q_step=0.5))
    rep = decompose(returns, cfg)
    i2 = int(np.argmin(np.abs(rep.q - 2.0)))
    assert abs(rep.delta_h_nl[i2]) <= 0.03
    assert np.array_equal(rep.delta_h_nl, rep.delta_h - rep.delta_h_fse - rep.delta_h_ft)
    assert rep.fse_method == "monte_carlo" and rep.ft_method == "monte_carlo"
    assert rep.beta_source == "fitted"


def test_decompose_formula_mode():
    m = 200_000
    x = sample_symmetric(QGaussianParams(1.4), m, 8).values
    returns = normalize(TimeSeries(x, meta={"lag": 30, "tick": 5}))
    cfg = DecomposeConfig(mode="formula", fse_params=EXAMPLE_FSE, beta=4.0,
                          tails="symmetric", seed=1,
                          mfdfa=MfdfaConfig.default(m, q_step=0.5))
    rep = decompose(returns, cfg)
    assert rep.fse_method == "formula" and rep.ft_method == "formula"
    assert rep.lag == 30 and rep.tick == 5
    i1 = int(np.argmin(np.abs(rep.q - 1.0)))
    assert rep.delta_h_ft[i1] == pytest.approx(2.35e-3, rel=1e-9)
    payload = rep.to_dict()
    assert payload["methods"]["fse"] == "formula"
    assert len(payload["per_q"]) == rep.q.size


def test_decompose_report_schema():
    jsonschema = pytest.importorskip("jsonschema")
    from mfdecomp.decompose import REPORT_SCHEMA

    m = 200_000
    x = sample_symmetric(QGaussianParams(1.5), m, 2).values
    returns = normalize(TimeSeries(x))
    cfg = DecomposeConfig(mode="formula", fse_params=EXAMPLE_FSE, beta=3.0,
                          tails="symmetric", mfdfa=MfdfaConfig.default(m, q_step=0.5))
    rep = decompose(returns, cfg)
    jsonschema.validate(rep.to_dict(), REPORT_SCHEMA)


def test_calibrate_smoke():
    cal, meta = calibrate(100_000, ensemble=2, seed=5, q_tildes=(1.4,), tails="symmetric")
    assert len(cal.rows) == 1
    row = cal.rows[0]
    assert row.beta == pytest.approx(4.0)
    assert row.c > 0 and row.mu > 0
    assert meta["m"] == 100_000
    # a fresh table is usable by the power-law path at its own node
    val = delta_h_ft_powerlaw(4.0, 1.0, True, calibration=cal)
    assert val == pytest.approx(row.c, rel=1e-9)
