"""Discrete power-law sampling and maximum-likelihood fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

MIN_TAIL = 50
_ALPHA_BOUNDS = (1.0 + 1e-6, 30.0)


class FitError(ValueError):
    """Tail too small or degenerate for a power-law fit."""

    def __init__(self, message: str, tail_count: int):
        super().__init__(message)
        self.tail_count = tail_count


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    x_min: int
    ks_distance: float
    tail_count: int
    method: str = "mle"


def _tail(values: np.ndarray, x_min: int) -> np.ndarray:
    return values[values >= x_min]


def discrete_mle(tail: np.ndarray, x_min: int) -> float:
    """Exact discrete MLE: maximise -n log zeta(a, x_min) - a sum(log x)."""
    n = tail.size
    mean_log = float(np.log(tail).mean())

    def nll(a):
        return np.log(zeta(a, x_min)) + a * mean_log

    res = minimize_scalar(nll, bounds=_ALPHA_BOUNDS, method="bounded",
                          options={"xatol": 1e-10, "maxiter": 500})
    alpha = float(res.x)
    if alpha >= _ALPHA_BOUNDS[1] - 1e-3:
        raise FitError(f"exponent diverges on a tail of {n} values", n)
    return alpha


def approx_mle(tail: np.ndarray, x_min: int) -> float:
    """Continuous-correction estimator 1 + n / sum(log(x / (x_min - 1/2)))."""
    return 1.0 + tail.size / float(np.log(tail / (x_min - 0.5)).sum())


def ks_distance(tail: np.ndarray, alpha: float, x_min: int) -> float:
    values, counts = np.unique(tail, return_counts=True)
    emp = np.cumsum(counts) / tail.size
    fit = 1.0 - zeta(alpha, values + 1.0) / zeta(alpha, x_min)
    emp_before = np.concatenate(([0.0], emp[:-1]))
    fit_before = 1.0 - zeta(alpha, values.astype(float)) / zeta(alpha, x_min)
    return float(max(np.abs(emp - fit).max(), np.abs(emp_before - fit_before).max()))


def _fit_at(values: np.ndarray, x_min: int, method: str, min_tail: int) -> PowerLawFit:
    tail = _tail(values, x_min)
    if tail.size < min_tail:
        raise FitError(f"only {tail.size} values >= x_min={x_min}; need {min_tail}", tail.size)
    if np.all(tail == tail[0]):
        raise FitError(f"all {tail.size} tail values equal {tail[0]}; exponent diverges", tail.size)
    if method == "mle":
        alpha = discrete_mle(tail, x_min)
    elif method == "approx":
        alpha = approx_mle(tail, x_min)
    else:
        raise ValueError(f"unknown method {method!r}")
    return PowerLawFit(alpha, x_min, ks_distance(tail, alpha, x_min), int(tail.size), method)


def powerlaw_fit(degrees, x_min_mode: str = "fixed", x_min: int = 1,
                 method: str = "mle", min_tail: int = MIN_TAIL) -> PowerLawFit:
    """Fit a discrete power law to the integer sample ``degrees``.

    ``x_min_mode="fixed"`` uses ``x_min`` as given; ``"scan"`` tries every
    distinct value that leaves at least ``min_tail`` samples and keeps the
    one with the smallest Kolmogorov-Smirnov distance.
    """
    values = np.asarray(degrees)
    if values.size and not np.all(values == np.floor(values)):
        raise ValueError("degrees must be integers")
    values = values.astype(np.int64)
    if x_min_mode == "fixed":
        if x_min < 1:
            raise ValueError("x_min must be >= 1")
        return _fit_at(values, int(x_min), method, min_tail)
    if x_min_mode != "scan":
        raise ValueError(f"x_min_mode must be 'fixed' or 'scan', got {x_min_mode!r}")

    candidates = np.unique(values[values >= 1])
    best = None
    last_error = None
    for xm in candidates:
        if np.count_nonzero(values >= xm) < min_tail:
            break
        try:
            fit = _fit_at(values, int(xm), method, min_tail)
        except FitError as exc:
            last_error = exc
            continue
        if best is None or fit.ks_distance < best.ks_distance:
            best = fit
    if best is None:
        if last_error is not None:
            raise last_error
        n = int(np.count_nonzero(values >= 1))
        raise FitError(f"no x_min leaves {min_tail} tail values (positive values: {n})", n)
    return best


def truncated_pmf(alpha: float, x_min: int, x_max: int) -> tuple[np.ndarray, np.ndarray]:
    support = np.arange(x_min, x_max + 1, dtype=np.float64)
    w = support ** -alpha
    return support.astype(np.int64), w / w.sum()


def truncated_mean(alpha: float, x_min: int, x_max: int) -> float:
    support, pmf = truncated_pmf(alpha, x_min, x_max)
    return float((support * pmf).sum())


def sample_discrete_powerlaw(rng: np.random.Generator, alpha: float, size: int,
                             x_min: int = 1, x_max: int = 10**6) -> np.ndarray:
    """Inverse-CDF draws from p(x) proportional to x**-alpha on [x_min, x_max]."""
    support, pmf = truncated_pmf(alpha, x_min, x_max)
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(size), side="right")
    return support[np.minimum(idx, support.size - 1)]
