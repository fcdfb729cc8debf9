# arma.py — temporal WWC estimator
"""
Count series -> ARMA(p, q) fit -> deflation -> WWC ratio.

A rider visible for several consecutive samples is counted once per sample, so the
raw per-sample counts D_k over-count unique riders. The AR coefficient of a fitted
ARMA model is read as the persistence probability (share of the previous sample's
riders still visible) and removed:

    N_k = D_k - phi * D_{k-1}            (k = 1..K-1)
    ratio = sum(N_W) / (sum(N_R) + sum(N_W))

Fitting is conditional sum of squares (CSS) with eps_0 = 0, conditioning on D_0.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

from errors import (DegenerateSeriesError, InsufficientDataError, InvalidParameterError,
                    UndefinedRatioError)

log = logging.getLogger(__name__)

COEF_BOUND = 0.999
MIN_SAMPLES_MA = 10
MIN_SAMPLES_AR = 3
_THETA_GRID = 41
_XATOL = 1e-6
_SIGMA2_FLOOR = 1e-12
_BURN_IN = 200


class Direction(str, Enum):
    RIGHT_WAY = "right_way"
    WRONG_WAY = "wrong_way"


@dataclass(frozen=True)
class ArmaOrders:
    p: int = 1
    q: int = 0

    def __post_init__(self):
        if self.p not in (0, 1) or self.q not in (0, 1):
            raise InvalidParameterError(f"supported orders are p, q in {{0, 1}}, got ({self.p}, {self.q})")

    @classmethod
    def parse(cls, text: str) -> "ArmaOrders":
        """'1,1' -> ArmaOrders(1, 1)."""
        try:
            p, q = (int(x) for x in text.split(","))
        except ValueError:
            raise InvalidParameterError(f"orders must look like 'p,q', got {text!r}") from None
        return cls(p, q)


# right-way flow carries momentum (MA term); wrong-way arrivals are irregular
RIGHT_WAY_ORDERS = ArmaOrders(1, 1)
WRONG_WAY_ORDERS = ArmaOrders(1, 0)


# ─────────────────── types ───────────────────
@dataclass(frozen=True)
class CountSeries:
    values: Tuple[int, ...]
    t_gap: float
    label: Direction

    def __post_init__(self):
        if not self.t_gap > 0.0:
            raise InvalidParameterError(f"t_gap must be > 0, got {self.t_gap}")
        if any(v < 0 for v in self.values):
            raise InvalidParameterError(f"{self.label.value} counts must be non-negative")

    @classmethod
    def of(cls, values: Sequence[int], t_gap: float, label: Direction) -> "CountSeries":
        return cls(tuple(int(v) for v in values), float(t_gap), Direction(label))

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def is_zero(self) -> bool:
        return not any(self.values)


@dataclass(frozen=True)
class ArmaFit:
    p: int
    q: int
    c: float
    phi: float
    theta: float
    sigma2: float
    log_objective: float
    n_obs: int = 0


@dataclass(frozen=True)
class DeflatedSeries:
    values: Tuple[float, ...]
    label: Direction
    phi: float = 0.0

    def __len__(self) -> int:
        return len(self.values)

    @property
    def total(self) -> float:
        return math.fsum(self.values)


@dataclass(frozen=True)
class RatioReport:
    ratio: float
    sum_r: float
    sum_w: float
    negative_mass_warning: bool = False
    raw_ratio: float = 0.0
    fit_right: Optional[ArmaFit] = None
    fit_wrong: Optional[ArmaFit] = None
    deflated_right: Optional[DeflatedSeries] = None
    deflated_wrong: Optional[DeflatedSeries] = None


@dataclass(frozen=True)
class SimulatedArma:
    counts: CountSeries
    # real-valued series before rounding to counts
    latent: np.ndarray


# ─────────────────── fitting ───────────────────
def _css_given_theta(y: np.ndarray, ylag: np.ndarray, p: int, theta: float) -> Tuple[float, float, float]:
    """
    Concentrated CSS: for fixed theta the innovations are linear in (c, phi),
    eps = F(y) - c*F(1) - phi*F(ylag) with F the recursive filter 1 / (1 + theta*B).
    Returns (S, c, phi).
    """
    filt = lambda v: lfilter([1.0], [1.0, theta], v)
    fy = filt(y)
    f1 = filt(np.ones_like(y))
    if p == 0:
        c = float(fy @ f1 / (f1 @ f1))
        phi = 0.0
    else:
        fl = filt(ylag)
        design = np.column_stack([f1, fl])
        (c, phi), *_ = np.linalg.lstsq(design, fy, rcond=None)
        c, phi = float(c), float(phi)
        if abs(phi) > COEF_BOUND:
            phi = math.copysign(COEF_BOUND, phi)
            c = float((fy - phi * fl) @ f1 / (f1 @ f1))
    resid = fy - c * f1 - (phi * filt(ylag) if p else 0.0)
    return float(resid @ resid), c, phi


def fit_arma_array(x: Sequence[float], p: int = 1, q: int = 0) -> ArmaFit:
    """CSS fit on a real-valued series (see fit_arma)."""
    orders = ArmaOrders(p, q)
    x = np.asarray(x, dtype=float)
    need = MIN_SAMPLES_MA if orders.q == 1 else MIN_SAMPLES_AR
    if x.size < need:
        raise InsufficientDataError(f"ARMA({p},{q}) needs at least {need} samples, got {x.size}")
    if np.ptp(x) == 0.0:
        raise DegenerateSeriesError(f"series is constant at {x[0]!r}; nothing to fit")

    y, ylag = x[1:], x[:-1]
    n = y.size
    if orders.p == 1 and np.ptp(ylag) == 0.0:
        # lagged regressor collinear with the constant; persistence is unidentified
        log.warning("lagged series is constant; fitting without the AR term")
        orders = ArmaOrders(0, orders.q)

    if orders.q == 0:
        s, c, phi = _css_given_theta(y, ylag, orders.p, 0.0)
        theta = 0.0
    else:
        grid = np.linspace(-COEF_BOUND, COEF_BOUND, _THETA_GRID)
        scores = [_css_given_theta(y, ylag, orders.p, t)[0] for t in grid]
        best = int(np.argmin(scores))
        step = grid[1] - grid[0]
        lo, hi = max(-COEF_BOUND, grid[best] - step), min(COEF_BOUND, grid[best] + step)
        res = minimize_scalar(lambda t: _css_given_theta(y, ylag, orders.p, t)[0],
                              bounds=(lo, hi), method="bounded", options={"xatol": _XATOL})
        theta = float(res.x) if res.fun <= scores[best] else float(grid[best])
        s, c, phi = _css_given_theta(y, ylag, orders.p, theta)

    sigma2 = max(s / n, _SIGMA2_FLOOR)
    log_obj = -0.5 * n * (math.log(2.0 * math.pi * sigma2) + 1.0)
    fit = ArmaFit(p=p, q=q, c=c, phi=phi, theta=theta, sigma2=sigma2, log_objective=log_obj, n_obs=n)
    log.info("ARMA(%d,%d) fit: c=%.4f phi=%.4f theta=%.4f sigma2=%.4f", p, q, c, phi, theta, sigma2)
    return fit


def fit_arma(series: CountSeries, p: int = 1, q: int = 0) -> ArmaFit:
    """
    Minimize the conditional sum of squared innovations
        eps_k = D_k - c - phi*D_{k-1} - theta*eps_{k-1},  eps_0 = 0
    over |phi| <= 0.999, |theta| <= 0.999. Deterministic given the series.
    """
    try:
        return fit_arma_array(series.as_array(), p, q)
    except DegenerateSeriesError as exc:
        raise DegenerateSeriesError(f"{series.label.value}: {exc}") from None


# ─────────────────── deflation / ratio ───────────────────
def deflate(series: CountSeries, phi: float) -> DeflatedSeries:
    if not abs(phi) < 1.0:
        raise InvalidParameterError(f"|phi| must be < 1, got {phi}")
    x = series.as_array()
    values = x[1:] - phi * x[:-1]
    return DeflatedSeries(tuple(float(v) for v in values), series.label, float(phi))


def wwc_ratio(right: DeflatedSeries, wrong: DeflatedSeries) -> RatioReport:
    if len(right) != len(wrong):
        raise InvalidParameterError(f"deflated series not aligned: {len(right)} vs {len(wrong)}")
    sum_r, sum_w = right.total, wrong.total
    denom = sum_r + sum_w
    if not denom > 0.0:
        raise UndefinedRatioError(f"total deflated mass is {denom!r}; ratio undefined")
    raw = sum_w / denom
    negative = any(v < 0.0 for v in right.values) or any(v < 0.0 for v in wrong.values)
    if negative:
        log.warning("deflated series contain negative values (kept in the sums)")
    return RatioReport(ratio=min(1.0, max(0.0, raw)), sum_r=sum_r, sum_w=sum_w,
                       negative_mass_warning=negative, raw_ratio=raw,
                       deflated_right=right, deflated_wrong=wrong)


def _fit_and_deflate(series: CountSeries, orders: ArmaOrders) -> Tuple[Optional[ArmaFit], DeflatedSeries]:
    if series.is_zero():
        # deflated sum of an all-zero series is 0 for every phi
        log.warning("%s series is identically zero; skipping the fit", series.label.value)
        return None, deflate(series, 0.0)
    fit = fit_arma(series, orders.p, orders.q)
    return fit, deflate(series, fit.phi)


def estimate_from_counts(
    right: CountSeries,
    wrong: CountSeries,
    orders_right: ArmaOrders = RIGHT_WAY_ORDERS,
    orders_wrong: ArmaOrders = WRONG_WAY_ORDERS,
) -> RatioReport:
    if len(right) != len(wrong):
        raise InvalidParameterError(f"count series not aligned: {len(right)} vs {len(wrong)}")
    if right.t_gap != wrong.t_gap:
        raise InvalidParameterError(f"count series sampled at different t_gap: {right.t_gap} vs {wrong.t_gap}")
    if len(right) < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {len(right)}")

    fit_r, def_r = _fit_and_deflate(right, orders_right)
    fit_w, def_w = _fit_and_deflate(wrong, orders_wrong)
    report = wwc_ratio(def_r, def_w)
    log.info("WWC ratio %.4f (sum_r=%.2f, sum_w=%.2f)", report.ratio, report.sum_r, report.sum_w)
    return replace(report, fit_right=fit_r, fit_wrong=fit_w)


def per_minute_ratios(right: DeflatedSeries, wrong: DeflatedSeries, t_gap: float) -> pd.DataFrame:
    """
    Minute-level sums and ratios. Deflated value k (k >= 1) belongs to time k*t_gap.
    Minutes with non-positive total mass get ratio NaN.
    """
    if len(right) != len(wrong):
        raise InvalidParameterError(f"deflated series not aligned: {len(right)} vs {len(wrong)}")
    k = np.arange(1, len(right) + 1)
    df = pd.DataFrame({
        "minute": np.floor(k * t_gap / 60.0).astype(int),
        "sum_r": np.asarray(right.values, dtype=float),
        "sum_w": np.asarray(wrong.values, dtype=float),
    })
    out = df.groupby("minute", as_index=False)[["sum_r", "sum_w"]].sum()
    denom = out["sum_r"] + out["sum_w"]
    out["ratio"] = np.where(denom > 0.0, out["sum_w"] / denom.where(denom > 0.0, 1.0), np.nan)
    return out


# ─────────────────── generative direction ───────────────────
def simulate_arma(
    fit: ArmaFit,
    length: int,
    seed: int,
    t_gap: float = 2.0,
    label: Direction = Direction.RIGHT_WAY,
) -> SimulatedArma:
    """
    Draw x_k = c + phi*x_{k-1} + eps_k + theta*eps_{k-1} with Gaussian eps.
    The first samples are discarded so the output starts near stationarity.
    """
    if length < 0:
        raise InvalidParameterError(f"length must be >= 0, got {length}")
    if not (abs(fit.phi) < 1.0 and abs(fit.theta) < 1.0 and fit.sigma2 > 0.0):
        raise InvalidParameterError("fit must be stationary, invertible and have sigma2 > 0")
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, math.sqrt(fit.sigma2), size=length + _BURN_IN)
    mean = fit.c / (1.0 - fit.phi)
    latent = mean + lfilter([1.0, fit.theta], [1.0, -fit.phi], eps)[_BURN_IN:]
    counts = np.clip(np.rint(latent), 0, None).astype(int)
    return SimulatedArma(CountSeries.of(counts, t_gap, label), latent)
