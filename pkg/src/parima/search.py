"""Sequential and parallel AIC grid search plus batched segment forecasting.

Parallelism is over grid candidates (and over segments for batched
forecasting), never inside a single fit, so every candidate's result is
bit-identical no matter how many workers run or how tasks interleave.
Workers pull tasks from a shared queue (dynamic distribution: fit times
vary wildly across orders); results are buffered and re-sorted into the
canonical lexicographic (p, d, q) order before the report is built.

A candidate whose fit raises a domain error is recorded as a failure, not
fatal. A worker that dies or raises unexpectedly has its candidates
retried once on the orchestrator and only then recorded as failures.
"""

from __future__ import annotations

import csv
import io
import multiprocessing as mp
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass

import numpy as np

from . import arima
from .arima import ArimaOrder
from .errors import AllCandidatesFailed, ToolkitError, TooManySegments
from .series import TimeSeries

MIN_SEGMENT_SIZE = 50

# AIC gaps at or below this are ties, broken by parsimony
AIC_TIE_EPS = 1e-12

# test hook: orders whose in-worker evaluation raises, exercising the
# crashed-worker retry path (effective under the fork start method)
_FAULT_ORDERS: frozenset[tuple[int, int, int]] = frozenset()


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Inclusive (p, d, q) ranges defining the candidate grid."""

    p_min: int = 0
    p_max: int = 4
    d_min: int = 0
    d_max: int = 2
    q_min: int = 0
    q_max: int = 4

    def __post_init__(self):
        for lo, hi, name in (
            (self.p_min, self.p_max, "p"),
            (self.d_min, self.d_max, "d"),
            (self.q_min, self.q_max, "q"),
        ):
            if lo < 0 or hi < lo:
                raise ValueError(f"empty or negative {name} range [{lo}, {hi}]")
        # constructing the extreme corners validates the caps
        ArimaOrder(self.p_max, self.d_max, self.q_max)
        ArimaOrder(self.p_min, self.d_min, self.q_min)

    @property
    def size(self) -> int:
        return (
            (self.p_max - self.p_min + 1)
            * (self.d_max - self.d_min + 1)
            * (self.q_max - self.q_min + 1)
        )

    def orders(self) -> list[ArimaOrder]:
        """All candidates in canonical lexicographic (p, d, q) order."""
        return [
            ArimaOrder(p, d, q)
            for p in range(self.p_min, self.p_max + 1)
            for d in range(self.d_min, self.d_max + 1)
            for q in range(self.q_min, self.q_max + 1)
        ]


@dataclass(frozen=True, slots=True)
class CandidateResult:
    """Outcome of fitting one grid cell."""

    order: ArimaOrder
    aic: float | None
    converged: bool
    fit_time: float
    error_label: str | None = None


@dataclass(frozen=True, slots=True)
class SearchReport:
    """All candidate outcomes in canonical order plus the selected best."""

    candidates: tuple[CandidateResult, ...]
    best: ArimaOrder
    wall_time: float
    workers: int

    def to_json_dict(self) -> dict:
        return {
            "workers": self.workers,
            "wall_time": self.wall_time,
            "best": {"p": self.best.p, "d": self.best.d, "q": self.best.q},
            "candidates": [
                {
                    "p": c.order.p,
                    "d": c.order.d,
                    "q": c.order.q,
                    "aic": c.aic,
                    "converged": c.converged,
                    "fit_time": c.fit_time,
                    "error_label": c.error_label,
                }
                for c in self.candidates
            ],
        }

    def to_csv(self) -> str:
        """One row per candidate: p,d,q,aic,converged,fit_time."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["p", "d", "q", "aic", "converged", "fit_time"])
        for c in self.candidates:
            writer.writerow(
                [
                    c.order.p,
                    c.order.d,
                    c.order.q,
                    "" if c.aic is None else repr(c.aic),
                    str(c.converged).lower(),
                    repr(c.fit_time),
                ]
            )
        return buf.getvalue()


def evaluate_candidate(y: np.ndarray, order: ArimaOrder) -> CandidateResult:
    """Fit one candidate, timing it; domain errors become failure records."""
    t0 = time.perf_counter()
    try:
        model, diag = arima.fit_array(y, order)
    except ToolkitError as exc:
        return CandidateResult(
            order=order,
            aic=None,
            converged=False,
            fit_time=time.perf_counter() - t0,
            error_label=f"{type(exc).__name__}: {exc}",
        )
    return CandidateResult(
        order=order,
        aic=arima.aic(model),
        converged=diag.converged,
        fit_time=time.perf_counter() - t0,
    )


def select_best(candidates) -> ArimaOrder:
    """Minimal-AIC order; ties go to smaller p+q, then d, then (p,d,q)."""
    scored = [c for c in candidates if c.aic is not None]
    if not scored:
        raise AllCandidatesFailed(
            f"none of the {len(list(candidates))} candidates produced an AIC"
        )
    best_aic = min(c.aic for c in scored)
    tied = [c for c in scored if c.aic <= best_aic + AIC_TIE_EPS]
    winner = min(
        tied,
        key=lambda c: (c.order.p + c.order.q, c.order.d, c.order.astuple()),
    )
    return winner.order


def grid_search_sequential(series: TimeSeries, grid: GridSpec) -> SearchReport:
    """Fit every candidate on this process, in canonical order."""
    y = series.to_array()
    t0 = time.perf_counter()
    candidates = tuple(evaluate_candidate(y, o) for o in grid.orders())
    best = select_best(candidates)
    return SearchReport(
        candidates=candidates,
        best=best,
        wall_time=time.perf_counter() - t0,
        workers=1,
    )


_WORKER_SERIES: np.ndarray | None = None


def _init_worker(values: np.ndarray) -> None:
    global _WORKER_SERIES
    _WORKER_SERIES = values


def _run_candidate(order_tuple: tuple[int, int, int]) -> CandidateResult:
    if order_tuple in _FAULT_ORDERS:
        raise RuntimeError(f"injected worker fault for {order_tuple}")
    return evaluate_candidate(_WORKER_SERIES, ArimaOrder(*order_tuple))


def _pool_context():
    methods = mp.get_all_start_methods()
    return mp.get_context("fork" if "fork" in methods else "spawn")


def grid_search_parallel(
    series: TimeSeries, grid: GridSpec, workers: int
) -> SearchReport:
    """Grid search over a pool of ``workers`` processes.

    Produces the same candidates, AICs, and best order as
    :func:`grid_search_sequential` on the same inputs; only the wall time
    differs. Candidates of a crashed worker are retried once here, then
    recorded as failures.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    y = series.to_array()
    orders = grid.orders()
    t0 = time.perf_counter()

    results: dict[tuple[int, int, int], CandidateResult] = {}
    retry: list[ArimaOrder] = []
    with ProcessPoolExecutor(
        max_workers=workers,
        mp_context=_pool_context(),
        initializer=_init_worker,
        initargs=(y,),
    ) as pool:
        futures = {pool.submit(_run_candidate, o.astuple()): o for o in orders}
        pending = set(futures)
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                order = futures[fut]
                exc = fut.exception()
                if exc is None:
                    results[order.astuple()] = fut.result()
                else:
                    retry.append(order)

    for order in retry:
        try:
            results[order.astuple()] = evaluate_candidate(y, order)
        except Exception as exc:  # noqa: BLE001 - recorded, not raised
            results[order.astuple()] = CandidateResult(
                order=order,
                aic=None,
                converged=False,
                fit_time=0.0,
                error_label=f"WorkerFailure: {type(exc).__name__}: {exc}",
            )

    candidates = tuple(results[o.astuple()] for o in orders)
    best = select_best(candidates)
    return SearchReport(
        candidates=candidates,
        best=best,
        wall_time=time.perf_counter() - t0,
        workers=workers,
    )


def segment_series(series: TimeSeries, segments: int) -> list[TimeSeries]:
    """Split into contiguous, order-preserving, near-equal segments.

    Sizes differ by at most one and concatenation reproduces the input.

    Raises
    ------
    TooManySegments
        If any segment would fall below ``MIN_SEGMENT_SIZE`` points.
    """
    if segments < 1:
        raise ValueError("segments must be >= 1")
    n = len(series)
    if segments > n // MIN_SEGMENT_SIZE:
        raise TooManySegments(
            f"{segments} segments of a length-{n} series would go below "
            f"{MIN_SEGMENT_SIZE} points each"
        )
    base, extra = divmod(n, segments)
    out = []
    pos = 0
    for i in range(segments):
        size = base + (1 if i < extra else 0)
        out.append(
            TimeSeries(
                series.values[pos : pos + size],
                series.start_index + pos,
            )
        )
        pos += size
    return out


@dataclass(frozen=True, slots=True)
class SegmentForecast:
    """Forecast for one segment; ``error_label`` set when the fit failed."""

    index: int
    forecast: tuple[float, ...] | None
    error_label: str | None = None


def _forecast_one_segment(
    payload: tuple[int, tuple[float, ...], tuple[int, int, int], int],
) -> SegmentForecast:
    idx, values, order_tuple, horizon = payload
    if order_tuple in _FAULT_ORDERS:
        raise RuntimeError(f"injected worker fault for {order_tuple}")
    return _segment_task(idx, values, order_tuple, horizon)


def _segment_task(idx, values, order_tuple, horizon) -> SegmentForecast:
    try:
        model, _ = arima.fit_array(np.asarray(values, dtype=float), ArimaOrder(*order_tuple))
        fc = arima.forecast(model, horizon)
    except ToolkitError as exc:
        return SegmentForecast(idx, None, f"{type(exc).__name__}: {exc}")
    return SegmentForecast(idx, tuple(float(v) for v in fc))


def forecast_segments_parallel(
    segments: list[TimeSeries],
    order: ArimaOrder,
    horizon: int,
    workers: int,
) -> list[SegmentForecast]:
    """Fit-and-forecast each segment independently over a worker pool.

    Element ``i`` equals a direct fit+forecast on segment ``i``; output
    order follows input order regardless of completion order. Per-segment
    failures are recorded in place and do not affect other segments.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    payloads = [
        (i, seg.values, order.astuple(), horizon)
        for i, seg in enumerate(segments)
    ]
    if workers == 1:
        return [_segment_task(*p) for p in payloads]

    results: dict[int, SegmentForecast] = {}
    retry = []
    with ProcessPoolExecutor(
        max_workers=workers, mp_context=_pool_context()
    ) as pool:
        futures = {pool.submit(_forecast_one_segment, p): p for p in payloads}
        pending = set(futures)
        while pending:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for fut in done:
                payload = futures[fut]
                if fut.exception() is None:
                    res = fut.result()
                    results[res.index] = res
                else:
                    retry.append(payload)

    for payload in retry:
        idx = payload[0]
        try:
            results[idx] = _segment_task(*payload)
        except Exception as exc:  # noqa: BLE001 - recorded, not raised
            results[idx] = SegmentForecast(
                idx, None, f"WorkerFailure: {type(exc).__name__}: {exc}"
            )

    return [results[i] for i in range(len(segments))]
