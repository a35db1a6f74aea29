"""Tsallis q-Gaussian distributions with exact control of the tail exponent.

The deformation parameter (written ``q_tilde`` throughout, to keep it apart
from the moment order q used in fluctuation analysis) interpolates between
the normal distribution at 1 and progressively fatter power-law tails up to
the supported limit 2.  The complementary CDF of |x| decays as x**(-beta)
with beta = 2/(q_tilde - 1) - 1, which is what ties these generators to the
fat-tail calibration tables in `decompose`.

Sampling uses the generalized Box-Muller transform: with
qp = (1 + q_tilde)/(3 - q_tilde),

    z = sqrt(-2 * ln_qp(u1)) * cos(2 pi u2)

is exactly q-Gaussian with width a = 1/(3 - q_tilde), i.e. unit q-variance,
which is the scale convention used everywhere in this package.  Only the
cosine coordinate is kept: the sine partner shares the same radius and the
pair would not be independent, while the contract here is i.i.d. draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ValidationError
from .series import TimeSeries

__all__ = [
    "LEVY_QTILDE",
    "REGIME_GAUSSIAN",
    "REGIME_LEVY",
    "QGaussianParams",
    "CdfConstants",
    "regime",
    "beta_from_qtilde",
    "qtilde_from_beta",
    "sample_symmetric",
    "sample_asymmetric",
    "pdf",
    "cdf",
    "cdf_closed_form",
    "cdf_constants",
]

LEVY_QTILDE = 5.0 / 3.0
REGIME_GAUSSIAN = "gaussian"
REGIME_LEVY = "levy"


def regime(q_tilde: float) -> str:
    """Attractor regime of i.i.d. sums: normal below 5/3, Levy-stable from 5/3 on."""
    if not 1.0 <= q_tilde <= 2.0:
        raise ValidationError("q_tilde outside supported range [1, 2]")
    return REGIME_GAUSSIAN if q_tilde < LEVY_QTILDE else REGIME_LEVY


def beta_from_qtilde(q_tilde: float) -> float:
    """Tail exponent of the cumulative distribution, beta = 2/(q_tilde-1) - 1."""
    if q_tilde <= 1.0:
        raise ValidationError("Gaussian limit has no power tail")
    if q_tilde > 2.0:
        raise ValidationError("q_tilde outside supported range (1, 2]")
    return 2.0 / (q_tilde - 1.0) - 1.0


def qtilde_from_beta(beta: float) -> float:
    """Inverse of beta_from_qtilde; beta >= 1 maps into the supported (1, 2]."""
    if beta <= 0.0:
        raise ValidationError("tail exponent must be positive")
    if beta < 1.0:
        raise ValidationError("beta < 1 needs q_tilde > 2, outside supported range")
    return 1.0 + 2.0 / (beta + 1.0)


@dataclass(frozen=True)
class QGaussianParams:
    """Distribution parameters: deformation, pdf width, and tail symmetry.

    `a` is the width coefficient of the density kernel
    (1 + (q_tilde-1) a x^2)^(-1/(q_tilde-1)); if omitted it defaults to
    1/(3 - q_tilde), which makes the q-variance equal to one.  With
    `asymmetric` set, the positive half-line carries a normal distribution
    whose scale matches the q-Gaussian density at zero, so the spliced pdf
    is continuous.
    """

    q_tilde: float
    a: float | None = None
    asymmetric: bool = False

    def __post_init__(self):
        if not 1.0 <= self.q_tilde <= 2.0:
            raise ValidationError("q_tilde outside supported range [1, 2]")
        if self.a is None:
            object.__setattr__(self, "a", 1.0 / (3.0 - self.q_tilde))
        if self.a <= 0.0:
            raise ValidationError("width parameter a must be positive")

    @property
    def beta(self) -> float:
        """Tail exponent; infinite in the exact Gaussian limit."""
        return math.inf if self.q_tilde == 1.0 else beta_from_qtilde(self.q_tilde)

    @property
    def regime(self) -> str:
        return regime(self.q_tilde)


def _peak_density(q_tilde: float, a: float) -> float:
    """Symmetric q-Gaussian density at x = 0 (the normalization constant)."""
    if q_tilde == 1.0:
        return math.sqrt(a / math.pi)
    n = 1.0 / (q_tilde - 1.0)
    lg = special.gammaln(n) - special.gammaln(n - 0.5)
    return math.sqrt((q_tilde - 1.0) * a / math.pi) * math.exp(lg)


def _gauss_half_sigma(params: QGaussianParams) -> float:
    # normal half scaled so its density at 0 equals the q-Gaussian peak
    return 1.0 / (math.sqrt(2.0 * math.pi) * _peak_density(params.q_tilde, params.a))


def _symmetric_pdf(q_tilde: float, a: float, x: np.ndarray) -> np.ndarray:
    peak = _peak_density(q_tilde, a)
    if q_tilde == 1.0:
        return peak * np.exp(-a * x * x)
    expo = -1.0 / (q_tilde - 1.0)
    return peak * np.power(1.0 + (q_tilde - 1.0) * a * x * x, expo)


def pdf(params: QGaussianParams, x) -> np.ndarray | float:
    """Probability density at x (scalar or array)."""
    xs = np.asarray(x, dtype=float)
    if not params.asymmetric:
        out = _symmetric_pdf(params.q_tilde, params.a, xs)
    else:
        sigma = _gauss_half_sigma(params)
        out = np.where(
            xs <= 0.0,
            _symmetric_pdf(params.q_tilde, params.a, xs),
            np.exp(-0.5 * (xs / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi)),
        )
    return out if out.ndim else float(out)


def cdf(params: QGaussianParams, x) -> np.ndarray | float:
    """Cumulative distribution by adaptive quadrature of the pdf.

    Each half-line carries probability 1/2 by construction (also in the
    asymmetric case), so only the finite interval [0, x] has to be
    integrated; the far tail is handled by an integral to infinity for
    better relative accuracy there.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xs)
    f = lambda t: pdf(params, t)  # noqa: E731
    for i, xi in enumerate(xs):
        if xi >= 0.0:
            tail, _ = integrate.quad(f, xi, np.inf, limit=200)
            out[i] = 1.0 - tail
        else:
            head, _ = integrate.quad(f, -np.inf, xi, limit=200)
            out[i] = head
    out = np.clip(out, 0.0, 1.0)
    return out if np.asarray(x).ndim else float(out[0])


@dataclass(frozen=True)
class CdfConstants:
    """Constants of the closed-form CDF (the cross-check for the quadrature).

    The closed form for the centered symmetric case is
    0.5 + normalization * x * 2F1(hyp_a, hyp_b; hyp_c; z(x)) with
    z(x) = -(q_tilde - 1) * b * (x - q_mean)^2.
    """

    q_tilde: float
    normalization: float
    q_mean: float
    b: float
    hyp_a: float
    hyp_b: float
    hyp_c: float

    def hyp_z(self, x) -> np.ndarray:
        xs = np.asarray(x, dtype=float)
        return -(self.q_tilde - 1.0) * self.b * (xs - self.q_mean) ** 2


def cdf_constants(params: QGaussianParams) -> CdfConstants:
    if params.q_tilde == 1.0:
        raise ValidationError("closed form constants need q_tilde > 1 (use the normal CDF)")
    return CdfConstants(
        q_tilde=params.q_tilde,
        normalization=_peak_density(params.q_tilde, params.a),
        q_mean=0.0,
        b=params.a,
        hyp_a=0.5,
        hyp_b=1.0 / (params.q_tilde - 1.0),
        hyp_c=1.5,
    )


def cdf_closed_form(params: QGaussianParams, x) -> np.ndarray | float:
    """Closed form of the CDF; used to cross-check `cdf`.

    The closed form is 0.5 + N x 2F1(1/2, n; 3/2; -(q-1) a x^2) with
    n = 1/(q_tilde - 1).  It is evaluated through the equivalent regularized
    incomplete-beta identity

        0.5 + 0.5 sign(x) I_u(1/2, n - 1/2),  u = (q-1) a x^2 / (1 + (q-1) a x^2)

    because the direct Gauss series is numerically unstable whenever n is
    within rounding error of an integer (a common case on this family).
    """
    xs = np.asarray(x, dtype=float)
    if params.q_tilde == 1.0:
        sym = 0.5 * (1.0 + special.erf(np.sqrt(params.a) * xs))
    else:
        n = 1.0 / (params.q_tilde - 1.0)
        bx2 = (params.q_tilde - 1.0) * params.a * xs * xs
        u = bx2 / (1.0 + bx2)
        sym = 0.5 + 0.5 * np.sign(xs) * special.betainc(0.5, n - 0.5, u)
    if not params.asymmetric:
        out = sym
    else:
        sigma = _gauss_half_sigma(params)
        gauss = 0.5 * (1.0 + special.erf(xs / (sigma * math.sqrt(2.0))))
        out = np.where(xs <= 0.0, sym, gauss)
    out = np.clip(out, 0.0, 1.0)
    return out if np.asarray(x).ndim else float(out)


def _symmetric_draws(rng: np.random.Generator, params: QGaussianParams, n: int) -> np.ndarray:
    q = params.q_tilde
    u1 = 1.0 - rng.random(n)  # (0, 1]: keeps the deformed log finite
    u2 = rng.random(n)
    qp = (1.0 + q) / (3.0 - q)
    if qp == 1.0:
        r2 = -2.0 * np.log(u1)
    else:
        r2 = 2.0 * (np.power(u1, 1.0 - qp) - 1.0) / (qp - 1.0)
    z = np.sqrt(r2) * np.cos(2.0 * np.pi * u2)
    a_unit = 1.0 / (3.0 - q)
    if params.a != a_unit:
        z *= math.sqrt(a_unit / params.a)
    return z


def sample_symmetric(params: QGaussianParams, n: int, seed) -> TimeSeries:
    """n i.i.d. symmetric q-Gaussian draws; bit-identical for a fixed seed."""
    if params.asymmetric:
        raise ValidationError("params are flagged asymmetric")
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    z = _symmetric_draws(rng, params, n)
    return TimeSeries(z, meta={"qtilde": params.q_tilde, "seed": seed, "asymmetric": False})


def sample_asymmetric(params: QGaussianParams, n: int, seed) -> TimeSeries:
    """Draws whose negative tail is q-Gaussian and positive tail normal.

    Each draw independently picks a side with probability 1/2 and then the
    magnitude from that side's half-distribution.
    """
    if not params.asymmetric:
        raise ValidationError("params are not flagged asymmetric")
    if n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(seed)
    positive = rng.random(n) < 0.5
    n_pos = int(np.count_nonzero(positive))
    out = np.empty(n)
    out[positive] = np.abs(rng.standard_normal(n_pos)) * _gauss_half_sigma(params)
    sym = QGaussianParams(params.q_tilde, params.a, asymmetric=False)
    out[~positive] = -np.abs(_symmetric_draws(rng, sym, n - n_pos))
    return TimeSeries(out, meta={"qtilde": params.q_tilde, "seed": seed, "asymmetric": True})
