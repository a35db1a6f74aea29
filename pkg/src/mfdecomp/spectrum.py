"""Singularity spectrum and scalar multifractality measures.

Transforms a generalized Hurst profile h(q) into tau(q) = q h(q) - 1, the
Hoelder exponents alpha = dtau/dq (finite differences on the q grid), the
spectrum f(alpha) = q alpha - tau, and the spread measures delta_h and
delta_alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .mfdfa import HurstProfile

__all__ = ["SingularitySpectrum", "legendre", "delta_h", "delta_h_curve"]


@dataclass(frozen=True)
class SingularitySpectrum:
    q: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    f_alpha: np.ndarray
    alpha_max: float  # alpha at the smallest q
    alpha_min: float  # alpha at the largest q
    delta_alpha: float
    delta_h: float  # h(q_min) - h(q_max) on this grid
    folded: bool  # alpha not monotone: spectrum folds back on itself


def legendre(profile: HurstProfile) -> SingularitySpectrum:
    """Legendre transform of h(q); alpha by central differences, one-sided ends.

    A non-monotone alpha sequence sets the `folded` flag instead of raising:
    fold-backs are a property of noisy profiles, not a usage error.
    """
    q = profile.q
    if q.size < 3:
        raise ValidationError("legendre transform needs at least 3 q points")
    h = profile.h
    if not np.all(np.isfinite(h)):
        raise ValidationError("h(q) must be finite everywhere")
    tau = q * h - 1.0
    alpha = np.gradient(tau, q)
    f_alpha = q * alpha - tau
    diffs = np.diff(alpha)
    folded = bool(np.any(diffs > 1e-12) and np.any(diffs < -1e-12))
    return SingularitySpectrum(
        q=q.copy(),
        tau=tau,
        alpha=alpha,
        f_alpha=f_alpha,
        alpha_max=float(alpha[0]),
        alpha_min=float(alpha[-1]),
        delta_alpha=float(alpha[0] - alpha[-1]),
        delta_h=float(h[0] - h[-1]),
        folded=folded,
    )


def delta_h(profile: HurstProfile, q_max_abs: float) -> float:
    """Spread h(-q) - h(+q) at the symmetric moment pair +-q_max_abs."""
    if q_max_abs <= 0:
        raise ValidationError("q_max_abs must be positive")
    return profile.h_at(-q_max_abs) - profile.h_at(q_max_abs)


def delta_h_curve(profile: HurstProfile, q_values=None) -> tuple[np.ndarray, np.ndarray]:
    """delta_h at every positive grid q whose mirror -q is also on the grid.

    Returns (q, delta_h(q)); `q_values` restricts the evaluation points.
    """
    if q_values is None:
        qs = [float(q) for q in profile.q if q > 0 and np.any(np.isclose(profile.q, -q, atol=1e-9))]
    else:
        qs = [float(q) for q in q_values]
    if not qs:
        raise ValidationError("no symmetric +-q pairs on the profile grid")
    dh = np.array([delta_h(profile, q) for q in qs])
    return np.asarray(qs), dh
