"""Price and return series handling.

Covers tick resampling onto a uniform grid, log-returns at a configurable
time-lag, normalization to zero mean / unit standard deviation, removal of
returns that straddle session boundaries, and the CSV formats accepted by
the command line tools (see docs/formats.md).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import DataError, ValidationError

__all__ = [
    "TimeSeries",
    "ReturnSeries",
    "SessionCalendar",
    "resample",
    "log_returns",
    "normalize",
    "remove_overnight",
    "read_price_csv",
    "read_series_csv",
    "read_calendar_csv",
    "write_series_csv",
]

_NORM_TOL = 1e-10


def _frozen_array(values, dtype=float) -> np.ndarray:
    a = np.array(values, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TimeSeries:
    """A finite sample sequence, optionally stamped on an integer-second grid.

    Values are copied and made read-only at construction, so instances are
    safe to share across threads.
    """

    values: np.ndarray
    timestamps: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = _frozen_array(self.values)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size == 0:
            raise ValidationError("series must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)):
            raise ValidationError("series contains non-finite values")
        if self.timestamps is not None:
            t = _frozen_array(self.timestamps, dtype=np.int64)
            object.__setattr__(self, "timestamps", t)
            if t.shape != v.shape:
                raise ValidationError("timestamps and values must have equal length")
            if t.size > 1 and np.any(np.diff(t) <= 0):
                raise ValidationError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class ReturnSeries:
    """Normalized, centered returns plus the lag metadata they were built with.

    `lag` is the return interval in seconds, `tick` the sampling step of the
    underlying price grid.  The constructor enforces zero mean and unit
    standard deviation (population convention) to 1e-10.
    """

    values: np.ndarray
    lag: int = 1
    tick: int = 1
    source_label: str = ""

    def __post_init__(self):
        v = _frozen_array(self.values)
        object.__setattr__(self, "values", v)
        if v.size < 2:
            raise ValidationError("return series needs at least 2 samples")
        if not np.all(np.isfinite(v)):
            raise ValidationError("return series contains non-finite values")
        if self.lag <= 0 or self.tick <= 0:
            raise ValidationError("lag and tick must be positive")
        if abs(float(np.mean(v))) > _NORM_TOL:
            raise ValidationError("returns are not centered (|mean| > 1e-10)")
        if abs(float(np.std(v)) - 1.0) > _NORM_TOL:
            raise ValidationError("returns are not normalized (|std - 1| > 1e-10)")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class SessionCalendar:
    """Ordered, non-overlapping (open, close) epoch-second pairs per trading day."""

    sessions: tuple

    def __post_init__(self):
        sess = tuple((int(o), int(c)) for o, c in self.sessions)
        object.__setattr__(self, "sessions", sess)
        if not sess:
            raise ValidationError("calendar has no sessions")
        prev_close = None
        for o, c in sess:
            if c <= o:
                raise ValidationError(f"session close {c} not after open {o}")
            if prev_close is not None and o < prev_close:
                raise ValidationError("sessions overlap or are out of order")
            prev_close = c

    def opens(self) -> np.ndarray:
        return np.array([o for o, _ in self.sessions], dtype=np.int64)

    def closes(self) -> np.ndarray:
        return np.array([c for _, c in self.sessions], dtype=np.int64)


def resample(ticks: TimeSeries, tick_step: int, calendar: SessionCalendar | None = None) -> TimeSeries:
    """Last-observation-carried-forward resampling onto a uniform grid.

    The grid has spacing `tick_step` seconds.  With a calendar, one grid is
    anchored at each session open and restricted to session hours; without
    one, the grid starts at the first tick and extends far enough to cover
    the last tick.  Grid points before the first tick are dropped (LOCF has
    no look-ahead).
    """
    if ticks.timestamps is None:
        raise ValidationError("resampling requires timestamps")
    step = int(tick_step)
    if step <= 0:
        raise ValidationError("tick_step must be positive")
    t = ticks.timestamps
    if calendar is None:
        span = int(t[-1] - t[0])
        n_steps = -(-span // step)
        grid = t[0] + step * np.arange(n_steps + 1, dtype=np.int64)
    else:
        parts = [np.arange(o, c + 1, step, dtype=np.int64) for o, c in calendar.sessions]
        parts = [g for g in parts if g.size]
        if not parts:
            raise DataError("no in-session data")
        grid = np.concatenate(parts)
    idx = np.searchsorted(t, grid, side="right") - 1
    ok = idx >= 0
    if not np.any(ok):
        raise DataError("no in-session data")
    grid = grid[ok]
    meta = dict(ticks.meta)
    meta["tick"] = step
    return TimeSeries(ticks.values[idx[ok]], timestamps=grid, meta=meta)


def log_returns(prices: TimeSeries, lag: int) -> TimeSeries:
    """Log-returns over `lag` seconds on a uniformly sampled price series.

    Without timestamps the series is treated as unit-spaced and `lag` counts
    samples.  Output timestamps mark the start of each return interval.
    """
    v = prices.values
    if np.any(v <= 0):
        raise ValidationError("non-positive price")
    if prices.timestamps is not None:
        t = prices.timestamps
        if t.size < 2:
            raise ValidationError("need at least 2 prices")
        spacing = np.diff(t)
        tick = int(spacing[0])
        if np.any(spacing != tick):
            raise ValidationError("price series is not on a uniform grid; resample first")
    else:
        tick = 1
    if lag <= 0 or lag % tick != 0:
        raise ValidationError("lag must be a positive multiple of the tick step")
    k = lag // tick
    if k >= v.size:
        raise ValidationError("lag spans the whole series")
    out = np.log(v[k:] / v[:-k])
    ts = prices.timestamps[:-k] if prices.timestamps is not None else None
    meta = dict(prices.meta)
    meta.update(lag=int(lag), tick=tick)
    return TimeSeries(out, timestamps=ts, meta=meta)


def normalize(returns: TimeSeries) -> ReturnSeries:
    """Center and scale to unit standard deviation (population convention)."""
    v = returns.values
    if v.size < 2:
        raise ValidationError("need at least 2 samples to normalize")
    sd = float(np.std(v))
    if sd == 0.0:
        raise ValidationError("degenerate series")
    x = (v - np.mean(v)) / sd
    # one exact re-centering pass keeps the mean within the constructor tolerance
    x = x - np.mean(x)
    sd2 = float(np.std(x))
    if abs(sd2 - 1.0) > _NORM_TOL:
        x = x / sd2
    return ReturnSeries(
        x,
        lag=int(returns.meta.get("lag", 1)),
        tick=int(returns.meta.get("tick", 1)),
        source_label=str(returns.meta.get("label", "")),
    )


def remove_overnight(returns: TimeSeries, calendar: SessionCalendar, lag: int) -> TimeSeries:
    """Drop every return whose interval [t, t+lag] crosses a session boundary.

    Survivors keep their original order and timestamps.
    """
    if returns.timestamps is None:
        raise ValidationError("overnight removal requires timestamps")
    if lag <= 0:
        raise ValidationError("lag must be positive")
    t = returns.timestamps
    opens = calendar.opens()
    closes = calendar.closes()
    sess = np.searchsorted(opens, t, side="right") - 1
    keep = sess >= 0
    keep[keep] &= t[keep] + lag <= closes[sess[keep]]
    if not np.any(keep):
        raise DataError("all returns straddle session boundaries")
    return TimeSeries(returns.values[keep], timestamps=t[keep], meta=dict(returns.meta))


# ---------------------------------------------------------------------------
# CSV formats (documented in docs/formats.md)

def read_price_csv(path) -> TimeSeries:
    """Read `timestamp,price` CSV (header required, epoch seconds, decimal price)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["timestamp", "price"]:
            raise ValidationError(f"{path}: expected header 'timestamp,price'")
        ts, px = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 columns")
            try:
                ts.append(int(row[0]))
                px.append(float(row[1]))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not px:
        raise ValidationError(f"{path}: no data rows")
    return TimeSeries(px, timestamps=ts, meta={"label": str(path)})


def read_series_csv(path) -> np.ndarray:
    """Read a single-column series CSV, one value per line ('value' header optional)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if "," in text:
                raise ValidationError(f"{path}:{lineno}: expected a single-column series CSV")
            if lineno == 1 and text.lower() == "value":
                continue
            try:
                rows.append(float(text))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: not a number: {text!r}") from None
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def read_calendar_csv(path) -> SessionCalendar:
    """Read `date,open,close` CSV with HH:MM times, interpreted as UTC."""
    sessions = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "open", "close"]:
            raise ValidationError(f"{path}: expected header 'date,open,close'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ValidationError(f"{path}:{lineno}: expected 3 columns")
            try:
                o = _epoch(row[0].strip(), row[1].strip())
                c = _epoch(row[0].strip(), row[2].strip())
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            sessions.append((o, c))
    return SessionCalendar(tuple(sessions))


def _epoch(date: str, hhmm: str) -> int:
    dt = datetime.strptime(f"{date} {hhmm}", "%Y-%m-%d %H:%M").replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def write_series_csv(path, values) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(values, dtype=float):
            fh.write(f"{float(v)!r}\n")
