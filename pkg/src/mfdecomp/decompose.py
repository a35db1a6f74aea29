"""Decomposition of an observed multifractal spread into components.

The measured spread delta_h(q) of a return series is split into

    delta_h_nl = delta_h - delta_h_fse - delta_h_ft

where the fat-tail part delta_h_ft comes either from the shipped power-law
calibration (C(beta) * q**mu with per-regime saturation) or from a Monte
Carlo over q-Gaussian ensembles at the fitted tail exponent, and the
finite-size / linear-correlation part delta_h_fse comes either from a
configured closed-form expression or from a Monte Carlo over
Fourier-filtered Gaussian surrogates.  The raw residual is kept unclipped:
over-subtraction is diagnostic information.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ValidationError
from .mfdfa import MfdfaConfig, fit_hq, fluctuation_surface, linefit
from .qgen import (
    REGIME_GAUSSIAN,
    REGIME_LEVY,
    QGaussianParams,
    qtilde_from_beta,
    sample_asymmetric,
    sample_symmetric,
)
from .series import ReturnSeries
from .spectrum import delta_h_curve
from .surrogate import SurrogateSpec, amplitude_match, fourier_filtered

__all__ = [
    "CalibrationRow",
    "FtCalibration",
    "DEFAULT_CALIBRATION",
    "FseParams",
    "read_fse_params",
    "TailFit",
    "fit_tail_beta",
    "delta_h_ft_powerlaw",
    "delta_h_ft_montecarlo",
    "delta_h_fse",
    "delta_h_fse_montecarlo",
    "McCurve",
    "DecomposeConfig",
    "DecompositionReport",
    "build_report",
    "decompose",
    "calibrate",
    "read_calibration_csv",
    "write_calibration_csv",
    "REPORT_SCHEMA",
]

# beta above this value puts i.i.d. sums in the normal attractor (q_tilde < 5/3)
_REGIME_BETA_SPLIT = 2.0
SATURATION_Q = 15.0
POWERLAW_Q_MAX = {REGIME_GAUSSIAN: 5.0, REGIME_LEVY: 1.0}


def _beta_regime(beta: float) -> str:
    return REGIME_GAUSSIAN if beta > _REGIME_BETA_SPLIT else REGIME_LEVY


@dataclass(frozen=True)
class CalibrationRow:
    q_tilde: float
    beta: float
    c: float
    mu: float
    saturation_q15: float
    symmetric: bool


def _table(rows, symmetric):
    return tuple(CalibrationRow(qt, b, c, mu, sat, symmetric) for qt, b, c, mu, sat in rows)


@dataclass(frozen=True)
class FtCalibration:
    """Power-law coefficients C(beta), mu and q=15 saturation per regime block.

    Interpolation between rows is linear in (log beta, log C), (log beta, mu)
    and (log beta, log saturation); queried exactly at a row's beta it
    reproduces the row.
    """

    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        if not rows:
            raise ValidationError("calibration needs at least one row")
        for r in rows:
            if r.c <= 0 or r.mu <= 0 or r.beta <= 0 or r.saturation_q15 <= 0:
                raise ValidationError("calibration rows must have positive beta, C, mu, saturation")
            q_pl = POWERLAW_Q_MAX[_beta_regime(r.beta)]
            if r.c * q_pl**r.mu > r.saturation_q15 * (1 + 1e-9):
                raise ValidationError(
                    f"calibration row beta={r.beta:g} exceeds its saturation inside the power-law range"
                )

    def block(self, beta: float, symmetric: bool) -> list:
        reg = _beta_regime(beta)
        rows = [r for r in self.rows if r.symmetric == symmetric and _beta_regime(r.beta) == reg]
        return sorted(rows, key=lambda r: r.beta)

    def interpolate(self, beta: float, symmetric: bool, allow_extrapolation: bool = False):
        """(C, mu, saturation) at `beta` within the matching regime block."""
        if beta <= 0:
            raise ValidationError("beta must be positive")
        rows = self.block(beta, symmetric)
        if not rows:
            raise DataError(f"no calibration rows for beta={beta:g} "
                            f"({_beta_regime(beta)}, {'symmetric' if symmetric else 'asymmetric'})")
        betas = np.array([r.beta for r in rows])
        inside = betas[0] * (1 - 1e-9) <= beta <= betas[-1] * (1 + 1e-9)
        if not allow_extrapolation and not inside:
            raise DataError(
                f"extrapolation refused: beta={beta:g} outside calibrated hull "
                f"[{betas[0]:g}, {betas[-1]:g}]"
            )
        lb = np.log(betas)
        x = np.log(beta)
        c = float(np.exp(_interp1(x, lb, np.log([r.c for r in rows]))))
        mu = float(_interp1(x, lb, np.array([r.mu for r in rows])))
        sat = float(np.exp(_interp1(x, lb, np.log([r.saturation_q15 for r in rows]))))
        return c, mu, sat


def _interp1(x: float, xs: np.ndarray, ys: np.ndarray) -> float:
    """Piecewise-linear interpolation with linear extension beyond the ends."""
    if xs.size == 1:
        return float(ys[0])
    if x <= xs[0]:
        i = 0
    elif x >= xs[-1]:
        i = xs.size - 2
    else:
        return float(np.interp(x, xs, ys))
    slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
    return float(ys[i] + slope * (x - xs[i]))


# Shipped default: eight (q_tilde, beta) nodes per symmetry, estimated on
# 1e10-point ensembles; regenerate at another length with `calibrate`.
DEFAULT_CALIBRATION = FtCalibration(
    rows=_table(
        [
            (1.05, 39.0, 0.132e-3, 1.06, 9e-3),
            (1.20, 9.0, 0.154e-3, 1.06, 9e-3),
            (1.40, 4.0, 2.35e-3, 1.02, 8e-2),
            (1.60, 2.3, 6.42e-3, 1.05, 1.5e-1),
            (1.70, 1.86, 2.33e-2, 1.33, 0.52),
            (1.80, 1.5, 3.26e-2, 1.33, 0.62),
            (1.90, 1.22, 9.12e-2, 1.29, 0.73),
            (2.00, 1.0, 19.3e-2, 1.17, 0.85),
        ],
        symmetric=True,
    )
    + _table(
        [
            (1.05, 39.0, 0.251e-3, 1.05, 4e-3),
            (1.20, 9.0, 0.422e-3, 0.95, 6e-3),
            (1.40, 4.0, 1.46e-3, 1.01, 5e-2),
            (1.60, 2.3, 2.76e-3, 1.03, 1.1e-1),
            (1.70, 1.86, 1.48e-2, 1.21, 0.47),
            (1.80, 1.5, 2.26e-2, 1.37, 0.46),
            (1.90, 1.22, 4.21e-2, 1.25, 0.44),
            (2.00, 1.0, 8.18e-2, 1.16, 0.42),
        ],
        symmetric=False,
    )
)


def delta_h_ft_powerlaw(
    beta: float,
    q: float,
    symmetric: bool = True,
    calibration: FtCalibration | None = None,
    allow_extrapolation: bool = False,
) -> float:
    """Fat-tail spread C(beta) * q**mu, blended linearly into the saturation
    value between the regime's power-law limit and q = 15, constant beyond."""
    cal = calibration if calibration is not None else DEFAULT_CALIBRATION
    if q < 0:
        raise ValidationError("the spread is defined for q >= 0")
    c, mu, sat = cal.interpolate(beta, symmetric, allow_extrapolation)
    if q == 0.0:
        return 0.0
    q_pl = POWERLAW_Q_MAX[_beta_regime(beta)]
    if q <= q_pl:
        return c * q**mu
    if q >= SATURATION_Q:
        return sat
    v_pl = c * q_pl**mu
    w = (q - q_pl) / (SATURATION_Q - q_pl)
    return v_pl + w * (sat - v_pl)


# ---------------------------------------------------------------------------
# Tail exponent fit

@dataclass(frozen=True)
class TailFit:
    beta: float
    ci: tuple  # bootstrap 95% interval (lo, hi)
    n_tail: int


def _tail_slope(absx: np.ndarray, window: tuple, drop_largest: int, min_tail: int) -> tuple[float, int]:
    n = absx.size
    i_start = int(window[0] * n)
    i_stop = int(window[1] * n) - drop_largest
    if i_stop - i_start < min_tail:
        raise DataError("tail too sparse")
    top = np.sort(np.partition(absx, i_start)[i_start:])
    xs = top[: i_stop - i_start]
    if xs[0] <= 0.0:
        pos = xs > 0.0
        xs = xs[pos]
        i_start += int(np.count_nonzero(~pos))
        if xs.size < min_tail:
            raise DataError("tail too sparse")
    # empirical CCDF at ascending order statistics: P(|X| >= x_(i)) = (n - i)/n
    ccdf = (n - (i_start + np.arange(xs.size, dtype=float))) / n
    slope, _, _, _ = linefit(np.log(xs), np.log(ccdf))
    return -slope, xs.size


def fit_tail_beta(
    returns,
    window: tuple = (0.98, 1.0),
    drop_largest: int = 10,
    n_boot: int = 200,
    seed: int = 0,
    min_tail: int = 50,
) -> TailFit:
    """Power-law exponent of the |x| tail from the log-log CCDF slope.

    `window` is a quantile pair selecting the tail; the `drop_largest`
    extreme order statistics are excluded.  The 95% interval comes from a
    full nonparametric bootstrap.
    """
    values = returns.values if hasattr(returns, "values") else np.asarray(returns, dtype=float)
    absx = np.abs(values)
    if absx.size < 1000:
        raise ValidationError("tail fit needs at least 1000 samples")
    if not 0.0 <= window[0] < window[1] <= 1.0:
        raise ValidationError("window must be a quantile pair inside [0, 1]")
    beta, n_tail = _tail_slope(absx, window, drop_largest, min_tail)
    rng = np.random.default_rng(seed)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        sample = absx[rng.integers(0, absx.size, absx.size)]
        boots[b], _ = _tail_slope(sample, window, drop_largest, min_tail)
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return TailFit(beta=float(beta), ci=(float(lo), float(hi)), n_tail=n_tail)


# ---------------------------------------------------------------------------
# FSE closed form

@dataclass(frozen=True)
class FseParams:
    """Constants of the finite-size / linear-correlation spread formula

        c1 * M**-eta1 * xi + c0 * M**-eta0 * (1 - xi) - c * M**-nu * (q_zero - q)

    with xi = 2 - 2H.  The constants are not derivable inside this package;
    `provenance` records where they came from.
    """

    c1: float
    c0: float
    c: float
    eta1: float
    eta0: float
    nu: float
    q_zero: float
    provenance: str = "user"

    def __post_init__(self):
        for name in ("c1", "c0", "c", "eta1", "eta0", "nu", "q_zero"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"FSE parameter {name} must be finite")


_FSE_KEYS = {
    "c1": "c1", "c0": "c0", "c": "c",
    "eta1": "eta1", "eta0": "eta0", "nu": "nu",
    "q": "q_zero", "q_zero": "q_zero",
}


def read_fse_params(path) -> FseParams:
    """Parse a key=value file (keys C1, C0, C, eta1, eta0, nu, Q; case-insensitive)."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            key, _, raw = text.partition("=")
            key = key.strip().lower()
            if key not in _FSE_KEYS:
                raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[_FSE_KEYS[key]] = float(raw.strip())
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: not a number: {raw.strip()!r}") from None
    missing = {"c1", "c0", "c", "eta1", "eta0", "nu", "q_zero"} - set(values)
    if missing:
        raise ValidationError(f"{path}: missing FSE keys: {', '.join(sorted(missing))}")
    return FseParams(provenance=str(path), **values)


def delta_h_fse(params: FseParams | None, H: float, m: int, q: float) -> float:
    """Closed-form finite-size spread at series length m and moment q."""
    if params is None:
        raise ValidationError(
            "FSE formula constants not configured; supply FseParams "
            "(--fse-params) or use the Monte-Carlo path"
        )
    if not 0.0 < H < 1.5:
        raise ValidationError("H must lie in (0, 1.5)")
    if m < 100:
        raise ValidationError("m must be at least 100")
    xi = 2.0 - 2.0 * H
    return (
        params.c1 * m**-params.eta1 * xi
        + params.c0 * m**-params.eta0 * (1.0 - xi)
        - params.c * m**-params.nu * (params.q_zero - q)
    )


# ---------------------------------------------------------------------------
# Monte-Carlo components

@dataclass(frozen=True)
class McCurve:
    """Ensemble mean of delta_h(q) with its standard error."""

    q: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    ensemble: int


def _mc_mfdfa_config(m: int, q_values: np.ndarray, base: MfdfaConfig | None) -> MfdfaConfig:
    """Moment grid covering +-q_values; scales reused from `base` when the
    ensemble length allows, else rebuilt with the synthetic defaults."""
    qs = np.unique(np.concatenate([-np.asarray(q_values, float), np.asarray(q_values, float), [2.0]]))
    if base is not None and int(base.s_grid[-1]) <= m // 2:
        return MfdfaConfig(q_grid=qs, s_grid=base.s_grid, detrend_order=base.detrend_order)
    order = base.detrend_order if base is not None else 2
    cfg = MfdfaConfig.default(m, detrend_order=order)
    return MfdfaConfig(q_grid=qs, s_grid=cfg.s_grid, detrend_order=cfg.detrend_order)


def _delta_h_ensemble(factory, m, q_values, ensemble, seed, threads=1, config=None) -> McCurve:
    if ensemble < 2:
        raise ValidationError("ensemble must be at least 2")
    q_values = np.asarray(q_values, dtype=float)
    if np.any(q_values <= 0):
        raise ValidationError("q_values must be positive (spreads are h(-q) - h(q))")
    cfg = _mc_mfdfa_config(m, q_values, config)
    seeds = np.random.SeedSequence(seed).spawn(ensemble)

    def task(ss):
        x = factory(ss)
        prof = fit_hq(fluctuation_surface(x, cfg))
        _, dh = delta_h_curve(prof, q_values)
        return dh

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(task, seeds))  # order matches seeds: deterministic reduction
    else:
        runs = [task(ss) for ss in seeds]
    stack = np.vstack(runs)
    return McCurve(
        q=q_values.copy(),
        mean=stack.mean(axis=0),
        stderr=stack.std(axis=0, ddof=1) / np.sqrt(ensemble),
        ensemble=ensemble,
    )


def delta_h_ft_montecarlo(
    beta: float,
    symmetric: bool,
    m: int,
    q_values,
    ensemble: int = 5,
    seed: int = 0,
    threads: int = 1,
    config: MfdfaConfig | None = None,
) -> McCurve:
    """Mean delta_h(q) over MFDFA runs on uncorrelated q-Gaussian series
    whose tail exponent matches `beta`."""
    if m < 100_000:
        raise ValidationError("fat-tail Monte Carlo needs m >= 1e5")
    params = QGaussianParams(qtilde_from_beta(beta), asymmetric=not symmetric)

    def factory(ss):
        if symmetric:
            return sample_symmetric(params, m, ss).values
        return sample_asymmetric(params, m, ss).values

    return _delta_h_ensemble(factory, m, q_values, ensemble, seed, threads, config)


def delta_h_fse_montecarlo(
    H: float,
    m: int,
    q_values,
    ensemble: int = 5,
    seed: int = 0,
    threads: int = 1,
    config: MfdfaConfig | None = None,
    match_values=None,
) -> McCurve:
    """Mean delta_h(q) over MFDFA runs on Gaussian surrogates carrying only
    finite-size effects and linear correlations (Hurst-matched by default;
    pass `match_values` to reuse the empirical amplitude spectrum instead)."""

    def factory(ss):
        if match_values is not None:
            return amplitude_match(match_values, ss).values
        spec = SurrogateSpec(kind="fourier_filtered", length=m, seed=ss, target_H=H)
        return fourier_filtered(spec).values

    return _delta_h_ensemble(factory, m, q_values, ensemble, seed, threads, config)


# ---------------------------------------------------------------------------
# Full decomposition

@dataclass(frozen=True)
class DecomposeConfig:
    mode: str = "montecarlo"  # or "formula"
    fse_params: FseParams | None = None
    calibration: FtCalibration | None = None
    ensemble: int = 5
    seed: int = 0
    # fat-tail ensembles default to the input length: the apparent fat-tail
    # spread is strongly length-dependent at accessible lengths, so matching
    # lengths keeps the subtraction apples-to-apples (the FSE double-count
    # this introduces is bounded by the FSE floor itself)
    ft_mc_length: int | None = None
    fse_surrogate: str = "hurst"  # or "spectrum"
    tails: str = "auto"  # or "symmetric" / "asymmetric"
    beta: float | None = None
    allow_extrapolation: bool = False
    mfdfa: MfdfaConfig | None = None
    threads: int = 1

    def __post_init__(self):
        if self.mode not in ("montecarlo", "formula"):
            raise ValidationError("mode must be 'montecarlo' or 'formula'")
        if self.fse_surrogate not in ("hurst", "spectrum"):
            raise ValidationError("fse_surrogate must be 'hurst' or 'spectrum'")
        if self.tails not in ("auto", "symmetric", "asymmetric"):
            raise ValidationError("tails must be 'auto', 'symmetric' or 'asymmetric'")
        if self.ensemble < 2:
            raise ValidationError("ensemble must be at least 2")


@dataclass(frozen=True)
class DecompositionReport:
    q: np.ndarray
    delta_h: np.ndarray
    delta_h_ci: np.ndarray
    delta_h_fse: np.ndarray
    delta_h_fse_ci: np.ndarray
    delta_h_ft: np.ndarray
    delta_h_ft_ci: np.ndarray
    delta_h_nl: np.ndarray  # raw residual, kept unclipped
    delta_h_nl_ci: np.ndarray
    delta_h_nl_clipped: np.ndarray
    fse_method: str
    ft_method: str
    beta: float
    beta_ci: tuple
    beta_source: str
    symmetric_tails: bool
    tail_selection: str
    h2: float
    m: int
    lag: int
    tick: int
    source_label: str
    fse_surrogate: str
    ft_mc_length: int | None
    ensemble: int
    seed: int

    def to_dict(self) -> dict:
        per_q = [
            {
                "q": float(self.q[i]),
                "delta_h": float(self.delta_h[i]),
                "delta_h_ci": float(self.delta_h_ci[i]),
                "delta_h_fse": float(self.delta_h_fse[i]),
                "delta_h_fse_ci": float(self.delta_h_fse_ci[i]),
                "delta_h_ft": float(self.delta_h_ft[i]),
                "delta_h_ft_ci": float(self.delta_h_ft_ci[i]),
                "delta_h_nl": float(self.delta_h_nl[i]),
                "delta_h_nl_ci": float(self.delta_h_nl_ci[i]),
                "delta_h_nl_clipped": float(self.delta_h_nl_clipped[i]),
            }
            for i in range(self.q.size)
        ]
        return {
            "schema_version": 1,
            "inputs": {
                "m": self.m,
                "lag": self.lag,
                "tick": self.tick,
                "source_label": self.source_label,
                "h2": self.h2,
                "beta": {
                    "value": self.beta,
                    "ci": [self.beta_ci[0], self.beta_ci[1]],
                    "source": self.beta_source,
                    "symmetric": self.symmetric_tails,
                    "selection": self.tail_selection,
                },
            },
            "methods": {
                "delta_h": "mfdfa",
                "fse": self.fse_method,
                "ft": self.ft_method,
                "fse_surrogate": self.fse_surrogate,
                "ft_mc_length": self.ft_mc_length,
                "normalization": "population",
            },
            "config": {"ensemble": self.ensemble, "seed": self.seed},
            "per_q": per_q,
        }


def build_report(q, delta_h, delta_h_fse, delta_h_ft, **kwargs) -> DecompositionReport:
    """Assemble a report.

    The raw nonlinear residual is defined as the float64 subtraction chain
    delta_h - delta_h_fse - delta_h_ft, so that identity is reproducible
    bitwise.  (The re-summed form nl + fse + ft can differ from delta_h in
    the last ulp, and for some component triples no float nl closes it:
    round-half-to-even can make a target float unreachable under addition.)
    """
    q = np.asarray(q, dtype=float)
    dh = np.asarray(delta_h, dtype=float)
    fse = np.asarray(delta_h_fse, dtype=float)
    ft = np.asarray(delta_h_ft, dtype=float)
    if not (q.shape == dh.shape == fse.shape == ft.shape):
        raise ValidationError("component arrays must share the q grid")
    nl = dh - fse - ft
    zeros = np.zeros_like(q)
    dh_ci = np.asarray(kwargs.pop("delta_h_ci", zeros), dtype=float)
    fse_ci = np.asarray(kwargs.pop("delta_h_fse_ci", zeros), dtype=float)
    ft_ci = np.asarray(kwargs.pop("delta_h_ft_ci", zeros), dtype=float)
    nl_ci = np.sqrt(dh_ci**2 + fse_ci**2 + ft_ci**2)
    defaults = dict(
        fse_method="formula", ft_method="formula", beta=float("nan"), beta_ci=(float("nan"), float("nan")),
        beta_source="supplied", symmetric_tails=True, tail_selection="forced", h2=float("nan"),
        m=0, lag=1, tick=1, source_label="", fse_surrogate="hurst", ft_mc_length=None,
        ensemble=0, seed=0,
    )
    defaults.update(kwargs)
    return DecompositionReport(
        q=q, delta_h=dh, delta_h_ci=dh_ci,
        delta_h_fse=fse, delta_h_fse_ci=fse_ci,
        delta_h_ft=ft, delta_h_ft_ci=ft_ci,
        delta_h_nl=nl, delta_h_nl_ci=nl_ci,
        delta_h_nl_clipped=np.maximum(nl, 0.0),
        **defaults,
    )


def _select_tails(values: np.ndarray, seed: int) -> tuple[bool, str]:
    """Compare one-sided tail exponents; prefer the asymmetric tables when
    they differ by more than the joint bootstrap width."""
    pos = values[values > 0]
    neg = -values[values < 0]
    if pos.size < 1000 or neg.size < 1000:
        return True, "auto (one side too sparse, defaulting to symmetric)"
    try:
        fit_p = fit_tail_beta(pos, n_boot=100, seed=seed)
        fit_n = fit_tail_beta(neg, n_boot=100, seed=seed + 1)
    except DataError:
        return True, "auto (tail too sparse, defaulting to symmetric)"
    half_p = (fit_p.ci[1] - fit_p.ci[0]) / 2.0
    half_n = (fit_n.ci[1] - fit_n.ci[0]) / 2.0
    joint = float(np.hypot(half_p, half_n))
    if abs(fit_p.beta - fit_n.beta) > joint:
        return False, f"auto (one-sided betas {fit_p.beta:.2f} / {fit_n.beta:.2f} differ beyond joint CI)"
    return True, f"auto (one-sided betas {fit_p.beta:.2f} / {fit_n.beta:.2f} compatible)"


def decompose(returns: ReturnSeries, config: DecomposeConfig | None = None) -> DecompositionReport:
    """Measure delta_h(q) on the input and subtract the spurious components."""
    cfg = config if config is not None else DecomposeConfig()
    values = returns.values
    m = values.size

    mf_cfg = cfg.mfdfa if cfg.mfdfa is not None else MfdfaConfig.default(m, real_data=True)
    prof = fit_hq(fluctuation_surface(values, mf_cfg))
    h2 = prof.H
    q_values, dh = delta_h_curve(prof)
    dh_ci = np.array([np.hypot(prof.stderr_at(-q), prof.stderr_at(q)) for q in q_values])

    if cfg.tails == "auto":
        symmetric, selection = _select_tails(values, cfg.seed)
    else:
        symmetric = cfg.tails == "symmetric"
        selection = f"forced-{cfg.tails}"

    if cfg.beta is not None:
        beta, beta_ci, beta_source = float(cfg.beta), (float(cfg.beta), float(cfg.beta)), "supplied"
    else:
        fit = fit_tail_beta(values, seed=cfg.seed)
        beta, beta_ci, beta_source = fit.beta, fit.ci, "fitted"

    zeros = np.zeros_like(dh)
    if cfg.mode == "formula":
        fse = np.array([delta_h_fse(cfg.fse_params, h2, m, q) for q in q_values])
        fse_ci = zeros
        ft = np.array([
            delta_h_ft_powerlaw(beta, q, symmetric, cfg.calibration, cfg.allow_extrapolation)
            for q in q_values
        ])
        ft_ci = zeros
        fse_method = ft_method = "formula"
        ft_len = None
    else:
        fse_mc = delta_h_fse_montecarlo(
            h2, m, q_values, ensemble=cfg.ensemble, seed=cfg.seed + 1000,
            threads=cfg.threads, config=mf_cfg,
            match_values=values if cfg.fse_surrogate == "spectrum" else None,
        )
        ft_len = cfg.ft_mc_length if cfg.ft_mc_length is not None else m
        ft_mc = delta_h_ft_montecarlo(
            beta, symmetric, ft_len, q_values, ensemble=cfg.ensemble,
            seed=cfg.seed + 2000, threads=cfg.threads,
            config=mf_cfg if ft_len == m else None,
        )
        fse, fse_ci = fse_mc.mean, fse_mc.stderr
        ft, ft_ci = ft_mc.mean, ft_mc.stderr
        fse_method = ft_method = "monte_carlo"

    return build_report(
        q_values, dh, fse, ft,
        delta_h_ci=dh_ci, delta_h_fse_ci=fse_ci, delta_h_ft_ci=ft_ci,
        fse_method=fse_method, ft_method=ft_method,
        beta=beta, beta_ci=beta_ci, beta_source=beta_source,
        symmetric_tails=symmetric, tail_selection=selection,
        h2=h2, m=m, lag=returns.lag, tick=returns.tick, source_label=returns.source_label,
        fse_surrogate=cfg.fse_surrogate, ft_mc_length=ft_len,
        ensemble=cfg.ensemble, seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# Calibration regeneration

_CALIBRATE_QTILDES = (1.05, 1.2, 1.4, 1.6, 1.7, 1.8, 1.9, 2.0)


def calibrate(
    m: int,
    ensemble: int = 3,
    seed: int = 0,
    q_tildes=_CALIBRATE_QTILDES,
    tails: str = "both",
    threads: int = 1,
) -> tuple[FtCalibration, dict]:
    """Re-estimate the power-law calibration by Monte Carlo at length m.

    Returns the new table plus metadata (m, ensemble, seed and any rows whose
    measured saturation had to be raised to keep the blend monotone, which
    happens when the finite-size floor dominates at small m).
    """
    from .qgen import beta_from_qtilde  # local import keeps module init light

    if tails not in ("both", "symmetric", "asymmetric"):
        raise ValidationError("tails must be 'both', 'symmetric' or 'asymmetric'")
    sym_flags = {"both": (True, False), "symmetric": (True,), "asymmetric": (False,)}[tails]
    rows = []
    adjusted = []
    run = 0
    for symmetric in sym_flags:
        for qt in q_tildes:
            beta = beta_from_qtilde(qt)
            q_pl = POWERLAW_Q_MAX[_beta_regime(beta)]
            fit_qs = [round(x, 10) for x in np.arange(0.25, q_pl + 1e-9, 0.25)]
            q_values = np.unique(np.asarray(fit_qs + [2.0, SATURATION_Q]))
            mc = delta_h_ft_montecarlo(
                beta, symmetric, m, q_values, ensemble=ensemble,
                seed=seed + 7919 * run, threads=threads,
            )
            run += 1
            sel = np.isin(mc.q, fit_qs)
            slope, intercept, _, _ = linefit(np.log(mc.q[sel]), np.log(mc.mean[sel]))
            c, mu = float(np.exp(intercept)), float(slope)
            sat = float(mc.mean[np.argmin(np.abs(mc.q - SATURATION_Q))])
            floor = c * q_pl**mu
            if sat < floor:
                adjusted.append({"q_tilde": qt, "symmetric": symmetric, "measured": sat})
                sat = floor
            rows.append(CalibrationRow(qt, beta, c, mu, sat, symmetric))
    meta = {"m": m, "ensemble": ensemble, "seed": seed, "tails": tails, "adjusted_rows": adjusted}
    return FtCalibration(tuple(rows)), meta


def write_calibration_csv(path, calibration: FtCalibration) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("q_tilde,beta,c,mu,saturation_q15,symmetric\n")
        for r in calibration.rows:
            fh.write(f"{r.q_tilde!r},{r.beta!r},{r.c!r},{r.mu!r},{r.saturation_q15!r},{int(r.symmetric)}\n")


def read_calibration_csv(path) -> FtCalibration:
    import csv as _csv

    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        expected = {"q_tilde", "beta", "c", "mu", "saturation_q15", "symmetric"}
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            raise ValidationError(f"{path}: expected columns {sorted(expected)}")
        for rec in reader:
            rows.append(
                CalibrationRow(
                    float(rec["q_tilde"]), float(rec["beta"]), float(rec["c"]),
                    float(rec["mu"]), float(rec["saturation_q15"]), bool(int(rec["symmetric"])),
                )
            )
    return FtCalibration(tuple(rows))


REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema_version", "inputs", "methods", "config", "per_q"],
    "properties": {
        "schema_version": {"const": 1},
        "inputs": {
            "type": "object",
            "required": ["m", "lag", "tick", "source_label", "h2", "beta"],
            "properties": {
                "m": {"type": "integer", "minimum": 2},
                "lag": {"type": "integer", "minimum": 1},
                "tick": {"type": "integer", "minimum": 1},
                "source_label": {"type": "string"},
                "h2": {"type": "number"},
                "beta": {
                    "type": "object",
                    "required": ["value", "ci", "source", "symmetric", "selection"],
                    "properties": {
                        "value": {"type": "number"},
                        "ci": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                        "source": {"enum": ["fitted", "supplied"]},
                        "symmetric": {"type": "boolean"},
                        "selection": {"type": "string"},
                    },
                },
            },
        },
        "methods": {
            "type": "object",
            "required": ["delta_h", "fse", "ft", "normalization"],
            "properties": {
                "delta_h": {"const": "mfdfa"},
                "fse": {"enum": ["formula", "monte_carlo"]},
                "ft": {"enum": ["formula", "monte_carlo"]},
                "fse_surrogate": {"enum": ["hurst", "spectrum"]},
                "ft_mc_length": {"type": ["integer", "null"]},
                "normalization": {"const": "population"},
            },
        },
        "config": {"type": "object"},
        "per_q": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": [
                    "q", "delta_h", "delta_h_fse", "delta_h_ft",
                    "delta_h_nl", "delta_h_nl_clipped",
                ],
                "properties": {
                    "q": {"type": "number", "exclusiveMinimum": 0},
                    "delta_h": {"type": "number"},
                    "delta_h_fse": {"type": "number"},
                    "delta_h_ft": {"type": "number"},
                    "delta_h_nl": {"type": "number"},
                    "delta_h_nl_clipped": {"type": "number", "minimum": 0},
                },
            },
        },
    },
}
