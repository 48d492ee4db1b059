"""
Order determination and white-noise tests built on spectral distributions of
sample autocovariance polynomials.

Coincidence of two ESDs is judged by their KS distance against a threshold
calibrated from simulated white noise (MA(0)) at the same ``n`` and ``p``.
"""

from __future__ import annotations

import json
import math
import threading
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, stats

from . import __version__
from .errors import DomainError, ValidationError
from .gammapoly import GammaPolynomial, parse_polynomial
from .models import ModelSpec
from .simkit import (SampleMatrix, autocov_set, esd, eval_sym_poly, ks_distance, poly_trace, simulate_ma,
                     _parallel_map)

__all__ = [
    "OrderReport",
    "TraceTestReport",
    "ThresholdConfig",
    "TRACE_NULLS",
    "lag_polynomial",
    "calibrate_threshold",
    "calibrate_ar_thresholds",
    "ma_order_estimate",
    "banded_ls_estimator",
    "ar_residuals",
    "ar_order_estimate",
    "white_noise_trace_test",
]

ARestimator = Callable[[np.ndarray, int], Sequence[np.ndarray]]


@dataclass(frozen=True)
class ThresholdConfig:
    """Null calibration: ``R`` white-noise replicates, ``quantile`` of the null distances."""

    R: int = 50
    quantile: float = 0.95
    seed: int = 20_240_601
    threshold: float | None = None

    def __post_init__(self):
        if self.R < 1:
            raise ValidationError(f"R must be positive, got {self.R}")
        if not 0 < self.quantile < 1:
            raise ValidationError(f"quantile must lie in (0, 1), got {self.quantile}")


def lag_polynomial(poly_shape, u: int) -> GammaPolynomial:
    """``poly_shape`` at lag ``u``: ``None`` is ``G_u G_u^T``; strings are templates in ``{u}`` and ``{u1}``."""
    if poly_shape is None:
        return GammaPolynomial.atom(u) * GammaPolynomial.atom(u, True)
    if isinstance(poly_shape, str):
        return parse_polynomial(poly_shape.format(u=u, u1=u + 1))
    if callable(poly_shape):
        return poly_shape(u)
    raise ValidationError(f"unsupported poly_shape {poly_shape!r}")


def _shape_key(poly_shape) -> str:
    if poly_shape is None or isinstance(poly_shape, str):
        return str(poly_shape)
    return f"callable:{id(poly_shape)}"


def _lag_esds(X, polys: Sequence[GammaPolynomial]):
    lags = sorted({u for P in polys for u in P.lags()} | {0})
    g = autocov_set(X, lags)
    return [esd(eval_sym_poly(P, g)) for P in polys]


def _distance_matrix(esds) -> np.ndarray:
    L = len(esds)
    D = np.zeros((L, L))
    for i in range(L):
        for j in range(i + 1, L):
            D[i, j] = D[j, i] = ks_distance(esds[i], esds[j])
    return D


_threshold_cache: dict = {}
_threshold_lock = threading.Lock()


def calibrate_threshold(n: int, p: int, lags: Sequence[int], poly_shape=None,
                        config: ThresholdConfig = ThresholdConfig(), workers: int | None = None) -> float:
    """
    ``config.quantile`` of the largest pairwise KS distance among the ESDs of
    ``poly_shape(u)``, ``u`` in ``lags``, over ``config.R`` white-noise samples.

    Using the per-replicate maximum controls the chance that any pair in the
    set is flagged, which is what the order rule needs. Results are cached.
    """
    if config.threshold is not None:
        return float(config.threshold)
    lags = tuple(sorted(lags))
    key = ("ma", n, p, lags, _shape_key(poly_shape), config)
    with _threshold_lock:
        if key in _threshold_cache:
            return _threshold_cache[key]
    polys = [lag_polynomial(poly_shape, u) for u in lags]
    null = ModelSpec.scalar((), y=1, name="null")

    def one(rep: int) -> float:
        X = simulate_ma(null, n, p, config.seed, rep)
        return float(_distance_matrix(_lag_esds(X, polys)).max())

    vals = np.array(_parallel_map(one, range(config.R), workers))
    thr = float(np.quantile(vals, config.quantile, method="higher"))
    with _threshold_lock:
        _threshold_cache[key] = thr
    return thr


@dataclass
class OrderReport:
    """Distances, calibrated threshold(s) and the estimated order."""

    kind: str
    candidates: list
    distances: list
    thresholds: list
    estimate: int | None
    inputs: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d = {"schema": f"hdautocov.order-report.{self.kind}", "version": __version__, **d}
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default, **kw)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _ma_decision(D: np.ndarray, thr: float) -> int | None:
    # lags are 1..L; u_hat is the smallest u0 with every pair among lags > u0 at most thr.
    # KS distances live on a 1/p lattice, so ties with the (observed) null quantile count as coincidence.
    L = D.shape[0]
    for u0 in range(0, L - 1):
        sub = D[u0:, u0:]
        if np.all(sub <= thr):
            return u0
    return None


def ma_order_estimate(X: SampleMatrix, u_max: int = 3, poly_shape=None,
                      threshold_config: ThresholdConfig = ThresholdConfig(),
                      workers: int | None = None) -> OrderReport:
    """
    MA order from coincidence of the ESDs of ``poly_shape(u)``, ``u = 1..u_max+1``.

    The estimate is the smallest ``u0`` such that all pairwise KS distances
    among lags ``> u0`` are at most the calibrated threshold, or ``None`` when
    no such ``u0 < u_max`` exists.
    """
    if u_max < 2:
        raise DomainError(f"u_max must be at least 2, got {u_max}")
    n, p = X.n, X.p
    if n <= 2 * (u_max + 2):
        raise DomainError(f"n={n} is too small for u_max={u_max}")
    lags = list(range(1, u_max + 2))
    polys = [lag_polynomial(poly_shape, u) for u in lags]
    D = _distance_matrix(_lag_esds(X, polys))
    thr = calibrate_threshold(n, p, lags, poly_shape, threshold_config, workers)
    est = _ma_decision(D, thr)
    return OrderReport(
        kind="ma",
        candidates=lags,
        distances=D.tolist(),
        thresholds=[thr],
        estimate=est,
        inputs={"n": n, "p": p, "u_max": u_max, "poly_shape": _shape_key(poly_shape), "model": X.model,
                "polynomials": [str(P) for P in polys]},
        seeds={"data": X.seed, "replicate": X.replicate, "null": threshold_config.seed,
               "null_replicates": threshold_config.R, "quantile": threshold_config.quantile},
    )


def banded_ls_estimator(X: np.ndarray, s: int, band: int | None = None) -> list[np.ndarray]:
    """
    Least-squares AR(``s``) coefficients restricted to bandwidth ``band``.

    Coordinate ``r`` of ``X_t`` is regressed on coordinates ``|r' - r| <= band``
    of ``X_{t-1}, ..., X_{t-s}``. The default band is ``ceil(n^{1/4})``.
    """
    X = np.asarray(X, dtype=float)
    p, n = X.shape
    if s == 0:
        return []
    if s >= n:
        raise DomainError(f"order s={s} must be below n={n}")
    b = math.ceil(n ** 0.25) if band is None else int(band)
    Y = X[:, s:]
    lagged = [X[:, s - i:n - i] for i in range(1, s + 1)]
    A = [np.zeros((p, p)) for _ in range(s)]
    for r in range(p):
        lo, hi = max(0, r - b), min(p, r + b + 1)
        Z = np.vstack([L[lo:hi] for L in lagged]).T
        coef, *_ = linalg.lstsq(Z, Y[r], lapack_driver="gelsy", check_finite=False)
        w = hi - lo
        for i in range(s):
            A[i][r, lo:hi] = coef[i * w:(i + 1) * w]
    return A


def ar_residuals(X: np.ndarray, A: Sequence[np.ndarray]) -> np.ndarray:
    """``X_t - sum_i A_i X_{t-i}`` for ``t = s+1..n``."""
    X = np.asarray(X, dtype=float)
    s = len(A)
    n = X.shape[1]
    R = X[:, s:].copy()
    for i, Ai in enumerate(A, start=1):
        R -= np.asarray(Ai) @ X[:, s - i:n - i]
    return R


def _ar_distance(X: np.ndarray, s: int, estimator: ARestimator) -> float:
    A = list(estimator(X, s)) if s else []
    if len(A) != s:
        raise ValidationError(f"estimator returned {len(A)} matrices for order {s}")
    R = ar_residuals(X, A)
    E = _lag_esds(R, [lag_polynomial(None, 1), lag_polynomial(None, 2)])
    return ks_distance(E[0], E[1])


def calibrate_ar_thresholds(n: int, p: int, s_max: int, estimator: ARestimator | None = None,
                            config: ThresholdConfig = ThresholdConfig(), workers: int | None = None) -> list[float]:
    """
    Per-order thresholds: the ``config.quantile`` of the residual KS distance
    when the same estimator of order ``s`` is applied to white noise.

    Fitted residuals are orthogonal to the regressors, which distorts their
    lag-1 autocovariance; calibrating each ``s`` separately absorbs this.
    """
    est = estimator or banded_ls_estimator
    if config.threshold is not None:
        return [float(config.threshold)] * (s_max + 1)
    key = ("ar", n, p, s_max, id(est) if estimator is not None else "banded", config)
    with _threshold_lock:
        if key in _threshold_cache:
            return list(_threshold_cache[key])
    null = ModelSpec.scalar((), y=1, name="null")

    def one(rep: int) -> list[float]:
        X = simulate_ma(null, n, p, config.seed, rep).data
        return [_ar_distance(X, s, est) for s in range(s_max + 1)]

    vals = np.array(_parallel_map(one, range(config.R), workers))
    thr = [float(v) for v in np.quantile(vals, config.quantile, axis=0, method="higher")]
    with _threshold_lock:
        _threshold_cache[key] = thr
    return thr


def ar_order_estimate(X: SampleMatrix, s_max: int = 4, estimator: ARestimator | None = None,
                      threshold_config: ThresholdConfig = ThresholdConfig(),
                      workers: int | None = None) -> OrderReport:
    """
    AR order: the smallest ``s`` whose fitted residuals have coinciding ESDs
    of ``G1 G1^T`` and ``G2 G2^T``.

    A failure of ``estimator`` at some ``s`` is recorded in the report and
    that order is skipped with a warning.
    """
    if s_max < 0:
        raise DomainError(f"s_max must be non-negative, got {s_max}")
    est = estimator or banded_ls_estimator
    data = X.data
    n, p = X.n, X.p
    thr = calibrate_ar_thresholds(n, p, s_max, estimator, threshold_config, workers)
    dists: list = []
    notes: list = []
    estimate = None
    for s in range(s_max + 1):
        try:
            d = _ar_distance(data, s, est)
        except Exception as exc:
            msg = f"estimator failed at s={s}: {exc}"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
            dists.append(None)
            continue
        dists.append(d)
        if estimate is None and d <= thr[s]:
            estimate = s
    return OrderReport(
        kind="ar",
        candidates=list(range(s_max + 1)),
        distances=dists,
        thresholds=thr,
        estimate=estimate,
        inputs={"n": n, "p": p, "s_max": s_max, "model": X.model,
                "estimator": getattr(est, "__name__", repr(est))},
        seeds={"data": X.seed, "replicate": X.replicate, "null": threshold_config.seed,
               "null_replicates": threshold_config.R, "quantile": threshold_config.quantile},
        notes=notes,
    )


# statistic -> (polynomial, null mean as a function of n, asymptotic null variance at n = p)
TRACE_NULLS = {
    "g0": ("G0", lambda n: n, 2.0),
    "g1g1t": ("G1*G1t", lambda n: n - 1, 10.0),
    "g1sym": ("G1 + G1t", lambda n: 0.0, 4.0),
}
_ALIASES = {"tr_g0": "g0", "g1*g1t": "g1g1t", "g1g1": "g1g1t", "g1+g1t": "g1sym"}


@dataclass(frozen=True)
class TraceTestReport:
    """One-sided (large values reject) trace test against a normal null."""

    statistic_name: str
    statistic: float
    null_mean: float
    null_variance: float
    z_score: float
    p_value: float
    p_value_two_sided: float
    alpha: float
    reject: bool
    h0: str = "X_t = eps_t (white noise)"
    h1: str = "X_t = eps_t + eps_{t-1}"

    def to_dict(self) -> dict:
        return {"schema": "hdautocov.trace-test", "version": __version__, **asdict(self)}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default, **kw)


def white_noise_trace_test(X: SampleMatrix, statistic: str = "g0", null_mean: float | None = None,
                           null_variance: float | None = None, alpha: float = 0.05) -> TraceTestReport:
    """
    Trace statistic standardized by its white-noise limit law.

    Built-in nulls (``n = p``): ``Tr G0 ~ N(n, 2)``, ``Tr G1 G1^T ~ N(n-1, 10)``,
    ``Tr(G1 + G1^T) ~ N(0, 4)``. Other shapes need explicit null parameters.
    """
    key = _ALIASES.get(statistic.lower(), statistic.lower())
    if key not in TRACE_NULLS:
        raise ValidationError(f"unknown statistic {statistic!r}; choose one of {sorted(TRACE_NULLS)}")
    poly_text, mean_fn, var = TRACE_NULLS[key]
    n, p = X.n, X.p
    if (null_mean is None or null_variance is None) and n != p:
        raise ValidationError("built-in null parameters need n = p; pass null_mean and null_variance")
    mu = float(mean_fn(n)) if null_mean is None else float(null_mean)
    v = var if null_variance is None else float(null_variance)
    if not v > 0:
        raise ValidationError(f"null variance must be positive, got {v}")
    poly = parse_polynomial(poly_text)
    value = poly_trace(poly, autocov_set(X, sorted(poly.lags())))
    z = (value - mu) / math.sqrt(v)
    p1 = float(stats.norm.sf(z))
    p2 = float(min(1.0, 2 * stats.norm.sf(abs(z))))
    return TraceTestReport(key, float(value), mu, v, float(z), p1, p2, alpha, bool(p1 < alpha))
