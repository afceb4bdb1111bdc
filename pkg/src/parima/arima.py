"""ARIMA(p,d,q) simulation, estimation, and forecasting.

Estimation minimizes the conditional sum of squares (CSS) of one-step
errors on the d-differenced series: the first ``p`` differenced values are
conditioned on and pre-sample errors are zero. The Gaussian CSS
approximation gives the log-likelihood, from which the AIC is computed
with ``k = p + q + 2`` (intercept and innovation variance both count).

Sign conventions: the model is

    w_t = c + phi_1 w_{t-1} + ... + phi_p w_{t-p}
            + e_t + theta_1 e_{t-1} + ... + theta_q e_{t-q}

on the d-differenced scale, i.e. the MA polynomial is 1 + theta_1 B + ....
The intercept ``c`` is the differenced-series sample mean when d == 0 and
is fixed at 0 when d >= 1 (no-drift convention, so an ARIMA(0,1,0) fit
forecasts flat at the last observed value).

Everything here is pure and reentrant; the parallel grid search relies on
that.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy import signal as ssig
from scipy.optimize import minimize

from .errors import InsufficientData, MissingData, NonStationaryParams
from .series import TimeSeries, integrate_values

MAX_AR_ORDER = 10
MAX_DIFF_DEGREE = 2
MAX_MA_ORDER = 10

# inverse AR/MA roots must have modulus below 1 - ROOT_MARGIN
ROOT_MARGIN = 1e-6
_PENALTY = 1e6
_SIGMA2_FLOOR = 1e-300
_MIN_EXTRA_OBS = 20
_BURN_IN = 200


@dataclass(frozen=True, slots=True)
class ArimaOrder:
    """Model order (p, d, q)."""

    p: int
    d: int
    q: int

    def __post_init__(self):
        for name, value, cap in (
            ("p", self.p, MAX_AR_ORDER),
            ("d", self.d, MAX_DIFF_DEGREE),
            ("q", self.q, MAX_MA_ORDER),
        ):
            if not 0 <= value <= cap:
                raise ValueError(f"{name}={value} outside [0, {cap}]")

    @classmethod
    def parse(cls, text: str) -> "ArimaOrder":
        """Parse ``"p,d,q"`` (optionally parenthesized)."""
        parts = text.strip().strip("()").split(",")
        if len(parts) != 3:
            raise ValueError(f"expected 'p,d,q', got {text!r}")
        return cls(*(int(s) for s in parts))

    def astuple(self) -> tuple[int, int, int]:
        return (self.p, self.d, self.q)

    def __str__(self) -> str:
        return f"({self.p},{self.d},{self.q})"


def max_inverse_root_modulus(coeffs: np.ndarray, kind: str) -> float:
    """Largest modulus among inverse roots of an AR or MA lag polynomial.

    ``kind`` is ``"ar"`` for ``1 - c_1 B - ... - c_k B^k`` or ``"ma"`` for
    ``1 + c_1 B + ... + c_k B^k``. Roots are the eigenvalues of the
    companion matrix of the reversed polynomial (what ``np.roots``
    computes); stationarity/invertibility requires the result < 1.
    """
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.size == 0:
        return 0.0
    sign = -1.0 if kind == "ar" else 1.0
    poly = np.concatenate(([1.0], sign * c))
    roots = np.roots(poly)
    return float(np.max(np.abs(roots))) if roots.size else 0.0


def _roots_excess(ar: np.ndarray, ma: np.ndarray) -> float:
    bound = 1.0 - ROOT_MARGIN
    excess = 0.0
    if len(ar):
        excess += max(0.0, max_inverse_root_modulus(ar, "ar") - bound)
    if len(ma):
        excess += max(0.0, max_inverse_root_modulus(ma, "ma") - bound)
    return excess


def assert_stationary_invertible(ar, ma) -> None:
    """Raise :class:`NonStationaryParams` unless both polynomials pass."""
    ar = np.asarray(ar, dtype=float).ravel()
    ma = np.asarray(ma, dtype=float).ravel()
    if _roots_excess(ar, ma) > 0.0:
        raise NonStationaryParams(
            f"AR {list(ar)} / MA {list(ma)} roots violate the "
            f"{1 - ROOT_MARGIN} inverse-root bound"
        )


@dataclass(frozen=True, slots=True)
class ArimaModel:
    """A fitted ARIMA model.

    ``tail`` keeps the last ``max(p, q, d) + d`` original-scale
    observations and ``tail_residuals`` the last ``q`` one-step errors;
    together they are the full state needed to forecast.
    """

    order: ArimaOrder
    ar_coeffs: tuple[float, ...]
    ma_coeffs: tuple[float, ...]
    intercept: float
    sigma2: float
    log_likelihood: float
    n_obs: int
    tail: tuple[float, ...]
    tail_residuals: tuple[float, ...]

    def __post_init__(self):
        if len(self.ar_coeffs) != self.order.p or len(self.ma_coeffs) != self.order.q:
            raise ValueError("coefficient counts must match the order")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if _roots_excess(np.array(self.ar_coeffs), np.array(self.ma_coeffs)) > 0:
            raise NonStationaryParams(
                f"fitted coefficients for {self.order} violate the root bound"
            )

    def to_json_dict(self) -> dict:
        return {
            "order": {"p": self.order.p, "d": self.order.d, "q": self.order.q},
            "ar_coeffs": list(self.ar_coeffs),
            "ma_coeffs": list(self.ma_coeffs),
            "intercept": self.intercept,
            "sigma2": self.sigma2,
            "log_likelihood": self.log_likelihood,
            "n_obs": self.n_obs,
            "tail": list(self.tail),
            "tail_residuals": list(self.tail_residuals),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ArimaModel":
        o = doc["order"]
        return cls(
            order=ArimaOrder(o["p"], o["d"], o["q"]),
            ar_coeffs=tuple(doc["ar_coeffs"]),
            ma_coeffs=tuple(doc["ma_coeffs"]),
            intercept=float(doc["intercept"]),
            sigma2=float(doc["sigma2"]),
            log_likelihood=float(doc["log_likelihood"]),
            n_obs=int(doc["n_obs"]),
            tail=tuple(doc["tail"]),
            tail_residuals=tuple(doc["tail_residuals"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str) -> "ArimaModel":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class FitDiagnostics:
    """Optimizer outcome and one-step residuals from a fit."""

    converged: bool
    iterations: int
    final_objective: float
    residuals: np.ndarray


def simulate_arima(
    order: ArimaOrder,
    ar=(),
    ma=(),
    intercept: float = 0.0,
    sigma: float = 1.0,
    n: int = 100,
    seed: int = 0,
) -> TimeSeries:
    """Generate a deterministic ARIMA(p,d,q) sample path.

    The stationary ARMA core is generated with a 200-sample burn-in, the
    intercept is added as the process mean, and the result is integrated
    ``d`` times. Identical inputs (including seed) give identical output.

    Raises
    ------
    NonStationaryParams
        If the coefficient vectors violate stationarity/invertibility.
    """
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    if len(ar) != order.p or len(ma) != order.q:
        raise ValueError("coefficient counts must match the order")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if n < 1:
        raise ValueError("n must be positive")
    assert_stationary_invertible(ar, ma)

    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, 1.0, size=_BURN_IN + n) * sigma
    b = np.concatenate(([1.0], ma))
    a = np.concatenate(([1.0], -ar))
    w = ssig.lfilter(b, a, eps)
    x = intercept + w[_BURN_IN:]
    for _ in range(order.d):
        x = np.cumsum(x)
    return TimeSeries.from_values(x.tolist())


def css_residuals(w: np.ndarray, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """One-step errors of the CSS recursion on a demeaned series.

    Conditions on the first ``p`` values; pre-sample errors are zero. The
    MA part is the exact IIR recursion ``e_t = u_t - sum theta_j e_{t-j}``.
    Returns ``len(w) - p`` values.
    """
    p = len(phi)
    n = len(w)
    u = w[p:].astype(float, copy=True)
    for i in range(1, p + 1):
        u -= phi[i - 1] * w[p - i : n - i]
    if len(theta):
        u = ssig.lfilter([1.0], np.concatenate(([1.0], theta)), u)
    return u


def _yule_walker(w: np.ndarray, p: int) -> np.ndarray:
    """AR(p) start values from the biased-autocovariance Yule-Walker system."""
    n = len(w)
    r = np.array([w[: n - k] @ w[k:] for k in range(p + 1)]) / n
    if r[0] <= 0:
        return np.zeros(p)
    try:
        phi = sla.solve_toeplitz(r[:p], r[1 : p + 1])
    except np.linalg.LinAlgError:
        return np.zeros(p)
    if not np.all(np.isfinite(phi)):
        return np.zeros(p)
    return phi


def _shrink_to_bound(coeffs: np.ndarray, kind: str) -> np.ndarray:
    """Scale coefficients toward zero until inside the root bound."""
    out = coeffs.copy()
    while len(out) and max_inverse_root_modulus(out, kind) >= 1.0 - ROOT_MARGIN:
        out *= 0.95
        if np.max(np.abs(out)) < 1e-12:
            return np.zeros_like(out)
    return out


def fit(
    series: TimeSeries,
    order: ArimaOrder,
    start_params: np.ndarray | None = None,
) -> tuple[ArimaModel, FitDiagnostics]:
    """Estimate an ARIMA model by conditional least squares.

    Nelder-Mead minimizes the CSS of the one-step errors over
    ``(phi, theta)``; the intercept is profiled out (sample mean of the
    differenced series for d = 0, zero otherwise). A stationarity barrier
    adds ``1e6 * (1 + excess)`` to the objective whenever an inverse-root
    modulus reaches ``1 - 1e-6``.

    Parameters
    ----------
    start_params : array, optional
        Optimizer start ``[phi..., theta...]``; defaults to Yule-Walker AR
        values and zero MA values.

    Raises
    ------
    MissingData
        If the series has gaps.
    InsufficientData
        If ``len(series) < d + max(p, q) + 20``.
    """
    y = series.to_array()
    return fit_array(y, order, start_params)


def fit_array(
    y: np.ndarray,
    order: ArimaOrder,
    start_params: np.ndarray | None = None,
) -> tuple[ArimaModel, FitDiagnostics]:
    """:func:`fit` on a dense float array (no missing markers)."""
    y = np.asarray(y, dtype=float)
    if np.isnan(y).any():
        raise MissingData("input array contains NaN")
    p, d, q = order.p, order.d, order.q
    n_obs = len(y)
    min_len = d + max(p, q) + _MIN_EXTRA_OBS
    if n_obs < min_len:
        raise InsufficientData(
            f"order {order} needs at least {min_len} observations, got {n_obs}"
        )

    z = np.diff(y, n=d) if d else y
    intercept = float(z.mean()) if d == 0 else 0.0
    w = z - intercept
    n_eff = len(w) - p

    def objective(params: np.ndarray) -> float:
        phi, theta = params[:p], params[p:]
        with np.errstate(over="ignore", invalid="ignore"):
            e = css_residuals(w, phi, theta)
            value = float(e @ e)
        if not math.isfinite(value):
            value = 1e300  # explosive MA recursion overflowed
        excess = _roots_excess(phi, theta)
        if excess > 0.0:
            value += _PENALTY * (1.0 + excess)
        return value

    if p + q == 0:
        params = np.empty(0)
        converged, iterations = True, 0
    else:
        if start_params is None:
            start = np.concatenate([_shrink_to_bound(_yule_walker(w, p), "ar"), np.zeros(q)])
        else:
            start = np.asarray(start_params, dtype=float)
            if len(start) != p + q:
                raise ValueError(f"start_params must have length {p + q}")
        max_iter = 2000 * (p + q + 1)
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "maxiter": max_iter,
                "maxfev": max_iter,
                "fatol": 1e-8,
                "xatol": 1e-8,
            },
        )
        params = res.x
        converged = bool(res.success)
        iterations = int(res.nit)
        phi, theta = params[:p], params[p:]
        if _roots_excess(phi, theta) > 0.0:
            # barrier can be outrun when CSS magnitude rivals the fixed
            # penalty; project back so model invariants always hold
            params = np.concatenate(
                [_shrink_to_bound(phi, "ar"), _shrink_to_bound(theta, "ma")]
            )
            converged = False

    phi, theta = params[:p], params[p:]
    e = css_residuals(w, phi, theta)
    css = float(e @ e)
    sigma2 = max(css / n_eff, _SIGMA2_FLOOR)
    log_likelihood = -(n_eff / 2.0) * (math.log(2.0 * math.pi * sigma2) + 1.0)

    tail_len = max(p, q, d) + d
    model = ArimaModel(
        order=order,
        ar_coeffs=tuple(float(v) for v in phi),
        ma_coeffs=tuple(float(v) for v in theta),
        intercept=intercept,
        sigma2=sigma2,
        log_likelihood=log_likelihood,
        n_obs=n_obs,
        tail=tuple(float(v) for v in y[n_obs - tail_len :]) if tail_len else (),
        tail_residuals=tuple(float(v) for v in e[len(e) - q :]) if q else (),
    )
    diagnostics = FitDiagnostics(
        converged=converged,
        iterations=iterations,
        final_objective=css,
        residuals=e,
    )
    return model, diagnostics


def aic(model: ArimaModel) -> float:
    """Akaike information criterion, ``2k - 2 lnL`` with ``k = p + q + 2``."""
    k = model.order.p + model.order.q + 2
    return 2.0 * k - 2.0 * model.log_likelihood


def forecast(model: ArimaModel, horizon: int) -> np.ndarray:
    """Mean forecast ``horizon`` steps ahead.

    Iterates the ARMA recursion on the differenced scale with future
    errors set to zero (known terminal errors come from the model state),
    then integrates ``d`` times from the stored original-scale tail.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    p, d, q = model.order.p, model.order.d, model.order.q
    phi, theta = model.ar_coeffs, model.ma_coeffs
    tail = np.asarray(model.tail, dtype=float)

    z_tail = np.diff(tail, n=d) if d and len(tail) else tail
    w_hist = [float(v) - model.intercept for v in z_tail]
    eps = list(model.tail_residuals)

    w_fore: list[float] = []
    for _ in range(horizon):
        val = 0.0
        hist = w_hist + w_fore
        for i in range(1, p + 1):
            val += phi[i - 1] * hist[-i]
        for j in range(1, q + 1):
            val += theta[j - 1] * eps[-j]
        w_fore.append(val)
        eps.append(0.0)

    z_fore = np.asarray(w_fore) + model.intercept
    if d == 0:
        return z_fore
    heads = tail[len(tail) - d :]
    return integrate_values(z_fore, d, heads)


def default_coefficients(order: ArimaOrder) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Stable, invertible default AR/MA coefficients for simulation.

    Truncations of a fixed well-separated pattern; used when a caller asks
    to simulate an order without naming coefficients.
    """
    base_ar = (0.75, -0.4, 0.2, -0.1, 0.05, -0.02, 0.01, -0.005, 0.002, -0.001)
    base_ma = (0.6, 0.35, -0.2, 0.1, -0.05, 0.02, -0.01, 0.005, -0.002, 0.001)
    ar = base_ar[: order.p]
    ma = base_ma[: order.q]
    assert_stationary_invertible(np.array(ar), np.array(ma))
    return ar, ma
