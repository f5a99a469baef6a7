"""Log-log convergence-rate fitting with bootstrap confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod


@dataclass
class RateFit:
    points: list[tuple[float, float, float]]  # (N, value, se)
    slope: float
    intercept: float
    r2: float
    slope_ci: tuple[float, float]  # residual-bootstrap 95%


def rate_fit(points, n_boot: int = 1000, seed: int = 0) -> RateFit:
    """Ordinary least squares of log(value) on log(N).

    Needs at least 4 strictly positive values; the slope CI comes from
    residual resampling (percentile 95%).
    """
    pts = [(float(n), float(v), float(se)) for n, v, se in points]
    if len(pts) < 4:
        raise ValueError(f"rate fit needs >= 4 points, got {len(pts)}")
    if any(v <= 0 for _, v, _ in pts):
        raise ValueError("rate fit needs strictly positive values")
    x = np.log(np.array([n for n, _, _ in pts]))
    y = np.log(np.array([v for _, v, _ in pts]))
    slope, intercept = _ols(x, y)
    fitted = intercept + slope * x
    resid = y - fitted
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    rng = rngmod.substream(seed, rngmod.BOOT)
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        y_b = fitted + rng.choice(resid, size=len(resid), replace=True)
        slopes[b], _ = _ols(x, y_b)
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return RateFit(points=pts, slope=slope, intercept=intercept, r2=r2,
                   slope_ci=(float(min(lo, slope)), float(max(hi, slope))))


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    return slope, float(ym - slope * xm)


def predicted_wce_exponent(regime: str, alpha: float, eps: float, d: int) -> float | None:
    """Rate exponent of the worst-case error under stratified random nodes."""
    if regime == "sub":
        return -alpha / d
    if regime == "saturated":
        return -0.5 - eps / d
    return None  # critical: carries a (log N)^(1/2) factor, no pure power


def predicted_bn_exponent(p: float, alpha: float, d: int) -> float:
    """Fixed-function moment-error exponent for smoothness alpha."""
    if p <= 2.0:
        return 1.0 / p - 1.0 - alpha / d
    return -0.5 - alpha / d


def predicted_indicator_exponent(beta: float, d: int) -> float:
    """Indicator-function exponent from the boundary tube exponent beta."""
    return -0.5 - beta / (2.0 * d)
