"""Forecast-accuracy metrics, rolling-origin CV, and residual diagnostics.

The diagnostic battery covers residual normality (Shapiro-Wilk, Royston's
AS R94 approximation), autocorrelation (Durbin-Watson), and
heteroscedasticity (Breusch-Pagan in the studentized Koenker ``n·R²``
form). The t and chi-square tail probabilities come from the regularized
incomplete beta/gamma functions.

All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import arima
from .arima import ArimaOrder
from .errors import (
    DegenerateResiduals,
    EmptyInput,
    LengthMismatch,
    RankDeficient,
    SampleSizeOutOfRange,
    SeriesTooShort,
    TooFewObservations,
    ZeroVariance,
)
from .series import TimeSeries

MIN_TRAIN_SIZE = 50
SHAPIRO_MAX_N = 5000


@dataclass(frozen=True, slots=True)
class MetricsReport:
    """MAE and RMSE of one forecast against actuals."""

    mae: float
    rmse: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.mae < 0 or self.rmse + 1e-12 < self.mae:
            raise ValueError("requires rmse >= mae >= 0")

    def to_json_dict(self) -> dict:
        return {"mae": self.mae, "rmse": self.rmse, "n": self.n}


@dataclass(frozen=True, slots=True)
class CvReport:
    """Per-fold metrics from expanding-origin cross-validation."""

    folds: tuple[MetricsReport, ...]
    mean_mae: float
    mean_rmse: float
    fold_boundaries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.folds:
            raise ValueError("at least one fold required")
        ends = [b[0] for b in self.fold_boundaries]
        if any(b - a <= 0 for a, b in zip(ends, ends[1:])):
            raise ValueError("training windows must strictly grow")

    def to_json_dict(self) -> dict:
        return {
            "folds": [f.to_json_dict() for f in self.folds],
            "mean_mae": self.mean_mae,
            "mean_rmse": self.mean_rmse,
            "fold_boundaries": [list(b) for b in self.fold_boundaries],
        }


@dataclass(frozen=True, slots=True)
class DiagnosticsReport:
    """Shapiro-Wilk, Durbin-Watson, and Breusch-Pagan results."""

    shapiro_wilk: tuple[float, float]
    durbin_watson: float
    breusch_pagan: tuple[float, float]

    def __post_init__(self):
        w, sw_p = self.shapiro_wilk
        lm, bp_p = self.breusch_pagan
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"W statistic {w} outside [0, 1]")
        if not 0.0 <= self.durbin_watson <= 4.0:
            raise ValueError(f"DW statistic {self.durbin_watson} outside [0, 4]")
        if lm < 0.0:
            raise ValueError(f"LM statistic {lm} negative")
        for p in (sw_p, bp_p):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p-value {p} outside [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "shapiro_wilk": {"W": self.shapiro_wilk[0], "p_value": self.shapiro_wilk[1]},
            "durbin_watson": self.durbin_watson,
            "breusch_pagan": {"LM": self.breusch_pagan[0], "p_value": self.breusch_pagan[1]},
        }


def _paired(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.size != p.size:
        raise LengthMismatch(f"lengths differ: {a.size} vs {p.size}")
    if a.size == 0:
        raise EmptyInput("need at least one pair")
    return a, p


def mae(actual, predicted) -> float:
    """Mean absolute error."""
    a, p = _paired(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def rmse(actual, predicted) -> float:
    """Root mean squared error."""
    a, p = _paired(actual, predicted)
    return float(math.sqrt(np.mean((a - p) ** 2)))


def metrics_report(actual, predicted) -> MetricsReport:
    a, p = _paired(actual, predicted)
    return MetricsReport(mae=mae(a, p), rmse=rmse(a, p), n=int(a.size))


def cv_boundaries(n: int, folds: int, horizon: int) -> tuple[tuple[int, int], ...]:
    """Expanding-origin cut points as (train_end, test_end) pairs.

    Train ends sit at ``n - folds*h, n - (folds-1)*h, ..., n - h``; each
    test window is the following ``horizon`` points, so the last fold's
    test window ends exactly at ``n``.
    """
    return tuple(
        (n - k * horizon, n - k * horizon + horizon)
        for k in range(folds, 0, -1)
    )


def rolling_origin_cv(
    series: TimeSeries, folds: int, horizon: int, order: ArimaOrder
) -> CvReport:
    """Evaluate one order over expanding training windows.

    Fold ``i`` trains on ``[0, T_i)`` and tests on ``[T_i, T_i + horizon)``;
    no test index ever enters its fold's training window.

    Raises
    ------
    SeriesTooShort
        If the first fold would train on fewer than ``MIN_TRAIN_SIZE``
        points.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    y = series.to_array()
    n = len(y)
    if n < folds * horizon + MIN_TRAIN_SIZE:
        raise SeriesTooShort(
            f"need >= {folds * horizon + MIN_TRAIN_SIZE} points for "
            f"{folds} folds at horizon {horizon}, got {n}"
        )
    boundaries = cv_boundaries(n, folds, horizon)
    reports = []
    for train_end, test_end in boundaries:
        model, _ = arima.fit_array(y[:train_end], order)
        predicted = arima.forecast(model, horizon)
        reports.append(metrics_report(y[train_end:test_end], predicted))
    return CvReport(
        folds=tuple(reports),
        mean_mae=float(np.mean([r.mae for r in reports])),
        mean_rmse=float(np.mean([r.rmse for r in reports])),
        fold_boundaries=boundaries,
    )


def paired_t_test(sample_a, sample_b) -> tuple[float, int, float]:
    """Two-sided paired t-test; returns (t, degrees of freedom, p-value).

    Raises
    ------
    ZeroVariance
        If all pairwise differences are identical.
    """
    a, b = _paired(sample_a, sample_b)
    if a.size < 2:
        raise EmptyInput("need at least two pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise ZeroVariance("all pairwise differences are identical")
    n = d.size
    t = float(np.mean(d) / (sd / math.sqrt(n)))
    df = n - 1
    p = 2.0 * float(special.stdtr(df, -abs(t)))
    return t, df, p


def durbin_watson(residuals) -> float:
    """First-order autocorrelation statistic, in [0, 4] (2 = independent)."""
    e = np.asarray(residuals, dtype=float)
    if e.size < 2:
        raise EmptyInput("need at least two residuals")
    denom = float(e @ e)
    if denom == 0.0:
        raise DegenerateResiduals("residuals are all zero")
    return float(np.sum(np.diff(e) ** 2) / denom)


def _shapiro_weights(n: int) -> np.ndarray:
    m = special.ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    ssq = float(m @ m)
    if n == 3:
        return np.array([-math.sqrt(0.5), 0.0, math.sqrt(0.5)])
    rsn = 1.0 / math.sqrt(n)
    a_n = (
        -2.706056 * rsn**5
        + 4.434685 * rsn**4
        - 2.071190 * rsn**3
        - 0.147981 * rsn**2
        + 0.221157 * rsn
        + m[-1] / math.sqrt(ssq)
    )
    if n > 5:
        a_n1 = (
            -3.582633 * rsn**5
            + 5.682633 * rsn**4
            - 1.752461 * rsn**3
            - 0.293762 * rsn**2
            + 0.042981 * rsn
            + m[-2] / math.sqrt(ssq)
        )
        phi = (ssq - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
            1.0 - 2.0 * a_n**2 - 2.0 * a_n1**2
        )
        a = m / math.sqrt(phi)
        a[-1], a[0] = a_n, -a_n
        a[-2], a[1] = a_n1, -a_n1
    else:
        phi = (ssq - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * a_n**2)
        a = m / math.sqrt(phi)
        a[-1], a[0] = a_n, -a_n
    return a


def shapiro_wilk(sample) -> tuple[float, float]:
    """Shapiro-Wilk normality test via Royston's AS R94 approximation.

    Valid for sample sizes 3 through 5000; returns ``(W, p_value)``.

    Raises
    ------
    SampleSizeOutOfRange
        If ``n`` is outside [3, 5000].
    ZeroVariance
        If all values are identical (W undefined).
    """
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n < 3 or n > SHAPIRO_MAX_N:
        raise SampleSizeOutOfRange(f"n={n} outside [3, {SHAPIRO_MAX_N}]")
    ssd = float(np.sum((x - x.mean()) ** 2))
    if ssd == 0.0:
        raise ZeroVariance("all sample values are identical")

    a = _shapiro_weights(n)
    w = float((a @ x) ** 2 / ssd)
    w = min(w, 1.0)

    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return w, p
    if n <= 11:
        g = -2.273 + 0.459 * n
        yv = -math.log(g - math.log1p(-w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sd = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
    else:
        ln_n = math.log(n)
        yv = math.log1p(-w)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n**2 + 0.0038915 * ln_n**3
        sd = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n**2)
    z = (yv - mu) / sd
    p = float(special.ndtr(-z))
    return w, p


def breusch_pagan(residuals, regressors) -> tuple[float, float]:
    """Studentized (Koenker) Breusch-Pagan heteroscedasticity test.

    Regresses squared residuals on ``[1 | regressors]``; the statistic is
    ``LM = n * R²`` with a chi-square(k) null.

    Raises
    ------
    TooFewObservations
        If ``n <= k + 1``.
    RankDeficient
        If the design matrix with intercept is not full column rank.
    """
    e = np.asarray(residuals, dtype=float)
    X = np.asarray(regressors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if e.size != n:
        raise LengthMismatch(f"residuals ({e.size}) vs regressor rows ({n})")
    if n <= k + 1:
        raise TooFewObservations(f"n={n} too small for k={k} regressors")
    design = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(design) < k + 1:
        raise RankDeficient("design matrix with intercept is rank deficient")

    target = e**2
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    fitted = design @ coef
    sst = float(np.sum((target - target.mean()) ** 2))
    if sst == 0.0:
        return 0.0, 1.0
    ssr = float(np.sum((target - fitted) ** 2))
    r2 = max(0.0, 1.0 - ssr / sst)
    lm = n * r2
    p = float(special.chdtrc(k, lm))
    return lm, p


def residual_diagnostics(residuals, fitted) -> DiagnosticsReport:
    """Assemble the full diagnostic battery for model residuals.

    ``fitted`` are the in-sample one-step predictions aligned with
    ``residuals``; Breusch-Pagan uses the one-step-lagged fitted value as
    its regressor. Shapiro-Wilk sees the most recent ``min(n, 5000)``
    residuals to stay inside its validity bound.
    """
    e = np.asarray(residuals, dtype=float)
    f = np.asarray(fitted, dtype=float)
    if e.size != f.size:
        raise LengthMismatch(f"residuals ({e.size}) vs fitted ({f.size})")
    sw = shapiro_wilk(e[-SHAPIRO_MAX_N:])
    dw = durbin_watson(e)
    bp = breusch_pagan(e[1:], f[:-1])
    return DiagnosticsReport(shapiro_wilk=sw, durbin_watson=dw, breusch_pagan=bp)
