"""Multifractal detrended fluctuation analysis.

Pipeline: integrate the mean-centered signal into a profile, split the
profile into non-overlapping windows taken from both ends, remove a
polynomial trend per window, aggregate the residual variances into the
q-order fluctuation function F_q(s), and fit h(q) as the log-log slope of
F_q(s) over a scaling range.

Moment aggregation runs in the log domain so that strongly negative q and
heavy-tailed segment variances neither overflow nor underflow; the result
is algebraically identical to the direct power-mean formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DataError, ValidationError

__all__ = [
    "MfdfaConfig",
    "FluctuationSurface",
    "HurstProfile",
    "profile",
    "segment_variances",
    "fluctuation_function",
    "fluctuation_surface",
    "fit_hq",
    "detect_crossover",
]

# rows per detrending block, keeps the work matrix around a few hundred MB at most
_BLOCK_VALUES = 4_000_000


def _as_q_grid(q_grid) -> np.ndarray:
    q = np.asarray(q_grid, dtype=float)
    if q.ndim != 1 or q.size < 1:
        raise ValidationError("q_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(q) <= 0):
        raise ValidationError("q_grid must be strictly increasing")
    if not np.any(np.isclose(q, 2.0, atol=1e-9)):
        raise ValidationError("q_grid must contain q = 2 (the main Hurst exponent)")
    return q


@dataclass(frozen=True)
class MfdfaConfig:
    """Moment grid, window sizes, detrending order, and the h(q) fit range."""

    q_grid: np.ndarray
    s_grid: np.ndarray
    detrend_order: int = 2
    s_min: int | None = None
    s_max: int | None = None

    def __post_init__(self):
        q = _as_q_grid(self.q_grid)
        q.flags.writeable = False
        object.__setattr__(self, "q_grid", q)
        s = np.asarray(self.s_grid, dtype=np.int64)
        if s.ndim != 1 or s.size == 0:
            raise ValidationError("s_grid must be a non-empty 1-d sequence")
        if np.any(np.diff(s) <= 0):
            raise ValidationError("s_grid must be strictly increasing")
        if self.detrend_order < 0:
            raise ValidationError("detrend_order must be >= 0")
        if int(s[0]) < self.detrend_order + 2:
            raise ValidationError("window shorter than detrend order + 2")
        s.flags.writeable = False
        object.__setattr__(self, "s_grid", s)
        object.__setattr__(self, "s_min", int(self.s_min if self.s_min is not None else s[0]))
        object.__setattr__(self, "s_max", int(self.s_max if self.s_max is not None else s[-1]))
        if self.s_max < self.s_min:
            raise ValidationError("s_max must not be below s_min")

    @classmethod
    def default(
        cls,
        m: int,
        *,
        real_data: bool = False,
        detrend_order: int = 2,
        q_max: float = 10.0,
        q_step: float = 0.25,
        s_min: int = 40,
        s_max: int | None = None,
        n_scales: int = 40,
    ) -> "MfdfaConfig":
        """Grid for a series of length m: geometric scales from 40 up to
        m/20 (synthetic) or m/10 (real data), symmetric q grid through 2."""
        if s_max is None:
            s_max = m // 10 if real_data else m // 20
        if s_max <= s_min:
            raise ValidationError(f"series too short for the default scaling range (m={m})")
        s = np.unique(np.geomspace(s_min, s_max, n_scales).round().astype(np.int64))
        steps = int(round(2 * q_max / q_step))
        q = np.round(np.linspace(-q_max, q_max, steps + 1), 12)
        return cls(q_grid=q, s_grid=s, detrend_order=detrend_order)


@dataclass(frozen=True)
class FluctuationSurface:
    """F_q(s) on the (q, s) grid, plus the per-scale segment counts."""

    values: np.ndarray  # shape (len(q_grid), len(s_grid))
    segment_counts: np.ndarray  # 2*K_s per scale
    config: MfdfaConfig

    @property
    def q_grid(self) -> np.ndarray:
        return self.config.q_grid

    @property
    def s_grid(self) -> np.ndarray:
        return self.config.s_grid


@dataclass(frozen=True)
class HurstProfile:
    """Generalized Hurst exponents h(q) with 95% fit half-widths and R^2."""

    q: np.ndarray
    h: np.ndarray
    stderr: np.ndarray  # 95% confidence half-width of each slope
    r2: np.ndarray

    @property
    def H(self) -> float:
        """Main Hurst exponent h(q=2)."""
        return float(self.h[np.argmin(np.abs(self.q - 2.0))])

    def h_at(self, q: float) -> float:
        i = np.argmin(np.abs(self.q - q))
        if abs(float(self.q[i]) - q) > 1e-9:
            raise ValidationError(f"q = {q} is not on the profile grid")
        return float(self.h[i])

    def stderr_at(self, q: float) -> float:
        i = np.argmin(np.abs(self.q - q))
        if abs(float(self.q[i]) - q) > 1e-9:
            raise ValidationError(f"q = {q} is not on the profile grid")
        return float(self.stderr[i])


def profile(series) -> np.ndarray:
    """Cumulative sum of the mean-centered input; the last element telescopes to 0."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValidationError("profile needs a 1-d series of length >= 2")
    return np.cumsum(x - x.mean())


def segment_variances(prof, s: int, detrend_order: int) -> np.ndarray:
    """Mean squared residual of a degree-l fit in each window of length s.

    Windows 1..K_s tile the profile from the front, windows K_s+1..2K_s
    from the back, so the trailing remainder is covered too.
    """
    y = np.asarray(prof, dtype=float)
    m = y.size
    s = int(s)
    if s < detrend_order + 2:
        raise ValidationError("window shorter than detrend order + 2")
    k = m // s
    if k < 1:
        raise ValidationError(f"window {s} longer than the series ({m})")
    # orthonormal basis of degree-l polynomials on the window, shared by all segments
    t = np.linspace(-1.0, 1.0, s)
    design = np.vander(t, detrend_order + 1, increasing=True)
    q_basis, _ = np.linalg.qr(design)

    out = np.empty(2 * k)
    front = y[: k * s].reshape(k, s)
    back = y[m - k * s :].reshape(k, s)[::-1]
    block = max(1, _BLOCK_VALUES // s)
    for half, dst in ((front, out[:k]), (back, out[k:])):
        for i in range(0, k, block):
            seg = half[i : i + block]
            resid = seg - (seg @ q_basis) @ q_basis.T
            dst[i : i + block] = np.mean(resid * resid, axis=1)
    return out


def _fq(variances: np.ndarray, q: float, s: int) -> float:
    v = variances
    if q < 0.0 and np.any(v == 0.0):
        seg = int(np.flatnonzero(v == 0.0)[0]) + 1
        raise DataError(
            f"degenerate segment under negative moments (segment {seg}, s={s})"
        )
    with np.errstate(divide="ignore"):
        lv = np.log(v)
    if q == 0.0:
        if np.any(v == 0.0):
            return 0.0
        return float(np.exp(0.5 * np.mean(lv)))
    a = 0.5 * q * lv
    shift = float(np.max(a[np.isfinite(a)])) if np.any(np.isfinite(a)) else 0.0
    mean = float(np.mean(np.exp(a - shift)))
    if mean == 0.0:
        return 0.0
    return float(np.exp((shift + np.log(mean)) / q))


def fluctuation_function(variances_per_s, config: MfdfaConfig) -> FluctuationSurface:
    """Aggregate per-window variances into F_q(s) for every q on the grid.

    For q = 0 the geometric-mean limit exp{mean(ln F^2)/2} is used, the
    continuity limit of the power mean.
    """
    s_grid = config.s_grid
    if len(variances_per_s) != s_grid.size:
        raise ValidationError("one variance array per scale is required")
    q_grid = config.q_grid
    values = np.empty((q_grid.size, s_grid.size))
    counts = np.empty(s_grid.size, dtype=np.int64)
    for j, (s, v) in enumerate(zip(s_grid, variances_per_s)):
        v = np.asarray(v, dtype=float)
        if np.any(v < 0.0):
            raise ValidationError("segment variances must be nonnegative")
        counts[j] = v.size
        for i, q in enumerate(q_grid):
            values[i, j] = _fq(v, float(q), int(s))
    return FluctuationSurface(values=values, segment_counts=counts, config=config)


def fluctuation_surface(series, config: MfdfaConfig) -> FluctuationSurface:
    """profile -> per-scale segment variances -> F_q(s), in one call."""
    x = np.asarray(series, dtype=float) if not hasattr(series, "values") else series.values
    prof = profile(x)
    if int(config.s_grid[-1]) > prof.size:
        raise ValidationError("largest scale exceeds the series length")
    variances = [segment_variances(prof, int(s), config.detrend_order) for s in config.s_grid]
    return fluctuation_function(variances, config)


def linefit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """OLS of y on x: (slope, intercept, 95% half-width of slope, R^2)."""
    n = x.size
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(xm @ xm)
    slope = float(xm @ ym) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = ym - slope * xm
    sse = float(resid @ resid)
    sst = float(ym @ ym)
    if n > 2:
        se = np.sqrt(max(sse, 0.0) / (n - 2) / sxx)
        half = float(stats.t.ppf(0.975, n - 2) * se)
    else:
        half = 0.0
    r2 = 1.0 - sse / sst if sst > 0 else (1.0 if sse <= 1e-30 else 0.0)
    return slope, intercept, half, r2


def fit_hq(surface: FluctuationSurface, s_min: int | None = None, s_max: int | None = None) -> HurstProfile:
    """Per-q OLS of ln F_q(s) on ln s over [s_min, s_max] (config defaults)."""
    lo = s_min if s_min is not None else surface.config.s_min
    hi = s_max if s_max is not None else surface.config.s_max
    mask = (surface.s_grid >= lo) & (surface.s_grid <= hi)
    if int(mask.sum()) < 4:
        raise ValidationError("insufficient scaling range (need >= 4 scales in the fit window)")
    ls = np.log(surface.s_grid[mask].astype(float))
    q_grid = surface.q_grid
    h = np.empty(q_grid.size)
    half = np.empty(q_grid.size)
    r2 = np.empty(q_grid.size)
    for i in range(q_grid.size):
        f = surface.values[i, mask]
        if np.any(f <= 0.0) or not np.all(np.isfinite(f)):
            raise DataError(f"non-positive fluctuation values at q={q_grid[i]:g}")
        h[i], _, half[i], r2[i] = linefit(ls, np.log(f))
    return HurstProfile(q=q_grid.copy(), h=h, stderr=half, r2=r2)


def detect_crossover(surface: FluctuationSurface, slope_threshold: float = 0.05) -> np.ndarray:
    """Breakpoint of a two-piece log-log fit, per q.

    Returns the scale at the best split when the two slopes differ by more
    than `slope_threshold`, else NaN for that q (no crossover is a valid
    outcome).  At least 8 scales and 4 points per piece are required.
    """
    s = surface.s_grid
    if s.size < 8:
        raise ValidationError("crossover detection needs at least 8 scales")
    ls = np.log(s.astype(float))
    out = np.full(surface.q_grid.size, np.nan)
    for i in range(surface.q_grid.size):
        f = surface.values[i]
        if np.any(f <= 0.0):
            continue
        lf = np.log(f)
        best = (np.inf, None, 0.0)
        for j in range(3, s.size - 3):
            sl1, _, _, _ = linefit(ls[: j + 1], lf[: j + 1])
            sl2, _, _, _ = linefit(ls[j:], lf[j:])
            sse = _sse(ls[: j + 1], lf[: j + 1], sl1) + _sse(ls[j:], lf[j:], sl2)
            if sse < best[0]:
                best = (sse, j, abs(sl2 - sl1))
        if best[1] is not None and best[2] > slope_threshold:
            out[i] = float(s[best[1]])
    return out


def _sse(x: np.ndarray, y: np.ndarray, slope: float) -> float:
    resid = (y - y.mean()) - slope * (x - x.mean())
    return float(resid @ resid)
