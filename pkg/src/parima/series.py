"""Time-series container and preprocessing transforms.

Observations are ``float | None``: a missing value is an explicit ``None``,
never a NaN sentinel, so invariants stay checkable and NaN propagation
cannot silently corrupt downstream arithmetic. All containers are frozen;
every function here is pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    DegenerateRange,
    InsufficientLength,
    MissingData,
    PeriodOutOfRange,
    SeriesTooShort,
    UnfillableGap,
)

def _as_observation(v) -> float | None:
    if v is None:
        return None
    f = float(v)
    if math.isnan(f):
        raise ValueError("NaN is not a valid observation; use None for missing")
    return f


@dataclass(frozen=True, slots=True)
class TimeSeries:
    """Ordered observations with explicit missing markers.

    Parameters
    ----------
    values : tuple of float or None
        Contiguous observations; gaps are explicit ``None`` entries, never
        absent indices.
    start_index : int
        Integer origin of the first observation.
    period : int or None
        Observations per seasonal cycle, if known. Must satisfy
        ``2 <= period <= len(values) // 2``.
    """

    values: tuple[float | None, ...]
    start_index: int = 0
    period: int | None = None

    def __post_init__(self):
        vals = tuple(_as_observation(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 1:
            raise ValueError("a series needs at least one observation")
        if self.period is not None:
            if not 2 <= self.period <= len(vals) // 2:
                raise ValueError(
                    f"period {self.period} outside [2, {len(vals) // 2}] "
                    f"for length {len(vals)}"
                )

    @classmethod
    def from_values(
        cls,
        values: Iterable[float | None],
        start_index: int = 0,
        period: int | None = None,
    ) -> "TimeSeries":
        return cls(tuple(values), start_index, period)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def has_missing(self) -> bool:
        return any(v is None for v in self.values)

    def missing_indices(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.values) if v is None)

    def to_array(self) -> np.ndarray:
        """Dense float array of the observations.

        Raises
        ------
        MissingData
            If any observation is missing.
        """
        if self.has_missing:
            raise MissingData(
                f"series has {len(self.missing_indices())} missing value(s)"
            )
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True, slots=True)
class NormalizationParams:
    """Min-max scaling parameters; ``max`` must strictly exceed ``min``."""

    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateRange(
                f"max ({self.max}) must exceed min ({self.min})"
            )


@dataclass(frozen=True, slots=True)
class DecompositionResult:
    """Additive split into trend, seasonal, and residual components.

    ``trend`` and ``residual`` are undefined (``None``) at the edge
    positions the centered moving average cannot reach; everywhere both
    are defined, trend + seasonal + residual reconstructs the input.
    """

    trend: tuple[float | None, ...]
    seasonal: tuple[float, ...]
    residual: tuple[float | None, ...]

    def __post_init__(self):
        if not (len(self.trend) == len(self.seasonal) == len(self.residual)):
            raise ValueError("components must share the input length")


def difference(series: TimeSeries, d: int) -> TimeSeries:
    """Apply the d-fold first-difference transform.

    Output has length ``len(series) - d`` and start index shifted by ``d``;
    ``d = 0`` is the identity.

    Raises
    ------
    MissingData
        If the series has missing values.
    InsufficientLength
        If ``d >= len(series)``.
    """
    if d < 0:
        raise ValueError("differencing degree must be non-negative")
    if d >= len(series):
        raise InsufficientLength(
            f"cannot difference a length-{len(series)} series {d} times"
        )
    y = series.to_array()
    z = np.diff(y, n=d) if d else y
    return TimeSeries.from_values(z.tolist(), series.start_index + d)


def integrate(diffed: TimeSeries, d: int, heads: Sequence[float]) -> TimeSeries:
    """Invert d-fold differencing given the d values preceding the block.

    ``heads`` holds, in chronological order, the last ``d`` original-scale
    values observed immediately before the differenced block. The result
    has the same length and start index as ``diffed`` and satisfies
    ``integrate(difference(s, d), d, s[:d]) == s[d:]`` exactly.

    Raises
    ------
    ArityMismatch
        If ``len(heads) != d``.
    """
    if d < 0:
        raise ValueError("integration degree must be non-negative")
    if len(heads) != d:
        raise ArityMismatch(f"expected {d} head value(s), got {len(heads)}")
    if d == 0:
        return diffed
    z = diffed.to_array()
    out = integrate_values(z, d, heads)
    return TimeSeries.from_values(out.tolist(), diffed.start_index)


def integrate_values(z: np.ndarray, d: int, heads: Sequence[float]) -> np.ndarray:
    """Array form of :func:`integrate`; used by forecasting too."""
    if d == 0:
        return np.asarray(z, dtype=float)
    # (1-B)^d y_t = z_t  <=>  y_t = z_t - sum_{k>=1} C(d,k) (-1)^k y_{t-k}
    coeffs = [-math.comb(d, k) * (-1) ** k for k in range(1, d + 1)]
    hist = list(float(h) for h in heads)
    out = np.empty(len(z), dtype=float)
    for t, zt in enumerate(z):
        y = float(zt)
        for k, c in enumerate(coeffs, start=1):
            y += c * hist[-k]
        out[t] = y
        hist.append(y)
    return out


def normalize_min_max(series: TimeSeries) -> tuple[TimeSeries, NormalizationParams]:
    """Scale observed values linearly onto [0, 1].

    Missing values stay missing; the observed minimum maps to 0 and the
    maximum to 1.

    Raises
    ------
    DegenerateRange
        If all observed values are equal (fewer than 2 distinct values).
    """
    observed = [v for v in series.values if v is not None]
    if not observed:
        raise DegenerateRange("series has no observed values")
    lo, hi = min(observed), max(observed)
    if hi == lo:
        raise DegenerateRange(f"all observed values equal {lo}")
    span = hi - lo
    scaled = tuple(
        None if v is None else (v - lo) / span for v in series.values
    )
    return (
        TimeSeries(scaled, series.start_index, series.period),
        NormalizationParams(lo, hi),
    )


def denormalize(series: TimeSeries, params: NormalizationParams) -> TimeSeries:
    """Invert :func:`normalize_min_max` via ``x * (max - min) + min``."""
    span = params.max - params.min
    vals = tuple(
        None if v is None else v * span + params.min for v in series.values
    )
    return TimeSeries(vals, series.start_index, series.period)


def impute_moving_median(series: TimeSeries, window: int = 5) -> TimeSeries:
    """Fill gaps with the median of observed neighbors in a centered window.

    The window is truncated (not reflected) at the series edges, and the
    median is always taken over the *input's* observed values, which makes
    the operation idempotent. Observed values pass through unchanged.

    Parameters
    ----------
    window : odd int >= 3
        Total width of the centered window.

    Raises
    ------
    UnfillableGap
        If some window around a missing value contains no observed value.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    half = window // 2
    vals = series.values
    n = len(vals)
    out = list(vals)
    for i, v in enumerate(vals):
        if v is not None:
            continue
        lo, hi = max(0, i - half), min(n, i + half + 1)
        neighbors = [u for u in vals[lo:hi] if u is not None]
        if not neighbors:
            raise UnfillableGap(
                f"window [{lo}, {hi}) around index {i} is entirely missing"
            )
        out[i] = float(np.median(neighbors))
    return TimeSeries(tuple(out), series.start_index, series.period)


def mask_outliers_mad(series: TimeSeries, k: float) -> TimeSeries:
    """Mark values outside ``median ± k·MAD`` as missing.

    MAD is the raw median absolute deviation of the observed values.
    A zero MAD (over half the values identical) masks nothing except
    exact-median mismatches would all be outliers, so in that case the
    series is returned unchanged.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    observed = np.array([v for v in series.values if v is not None], dtype=float)
    if observed.size == 0:
        return series
    center = float(np.median(observed))
    mad = float(np.median(np.abs(observed - center)))
    if mad == 0.0:
        return series
    lo, hi = center - k * mad, center + k * mad
    vals = tuple(
        None if (v is not None and not lo <= v <= hi) else v
        for v in series.values
    )
    return TimeSeries(vals, series.start_index, series.period)


def decompose_additive(series: TimeSeries, period: int) -> DecompositionResult:
    """Classical additive decomposition by centered moving average.

    Trend is the centered moving average of width ``period`` (half-weight
    endpoints when the period is even); the seasonal component is the
    per-phase mean of the detrended series re-centered to zero mean; the
    residual is whatever remains. Trend and residual are undefined at the
    ``period // 2`` edge positions on each side.

    Raises
    ------
    PeriodOutOfRange
        If ``period < 2``.
    SeriesTooShort
        If ``len(series) < 2 * period``.
    MissingData
        If the series has missing values.
    """
    if period < 2:
        raise PeriodOutOfRange(f"period must be >= 2, got {period}")
    if len(series) < 2 * period:
        raise SeriesTooShort(
            f"need at least {2 * period} points for period {period}, "
            f"got {len(series)}"
        )
    y = series.to_array()
    n = len(y)

    if period % 2 == 0:
        filt = np.full(period + 1, 1.0 / period)
        filt[0] = filt[-1] = 0.5 / period
        half = period // 2
    else:
        filt = np.full(period, 1.0 / period)
        half = (period - 1) // 2
    trend_core = np.convolve(y, filt, mode="valid")  # length n - 2*half
    trend = np.full(n, np.nan)
    trend[half : n - half] = trend_core

    detrended = y - trend  # NaN at edges
    phase_means = np.empty(period)
    for phase in range(period):
        vals = detrended[phase::period]
        phase_means[phase] = np.nanmean(vals)
    phase_means -= phase_means.mean()
    seasonal = np.resize(phase_means, n)

    residual = y - trend - seasonal

    def _opt(a: np.ndarray) -> tuple[float | None, ...]:
        return tuple(None if math.isnan(v) else float(v) for v in a)

    return DecompositionResult(
        trend=_opt(trend),
        seasonal=tuple(float(v) for v in seasonal),
        residual=_opt(residual),
    )
