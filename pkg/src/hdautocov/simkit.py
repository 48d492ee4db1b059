"""
Monte Carlo side: simulate MA(q) and vector autoregressions, form sample
autocovariance matrices, evaluate polynomials in them, and summarize spectra
and traces.

Data are stored ``p x n`` with column ``t`` holding ``X_t``. Random streams
are keyed by ``(seed, replicate)`` through :class:`numpy.random.SeedSequence`
so replicates are independent and reproducible in any execution order.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, NumericalError, ValidationError
from .gammapoly import GammaPolynomial, parse_polynomial
from .models import IVARSpec, ModelSpec, ScalarCoeffs

__all__ = [
    "SampleMatrix",
    "AutocovMatrix",
    "ECDF",
    "TraceStats",
    "rng_for",
    "worker_count",
    "simulate_ma",
    "simulate_ivar",
    "sample_autocov",
    "autocov_set",
    "eval_sym_poly",
    "poly_trace",
    "symmetric_eigenvalues",
    "jacobi_eigenvalues",
    "esd",
    "ks_distance",
    "analytic_trace_mean",
    "trace_statistic",
    "fmt17",
]

Sampler = Callable[[np.random.Generator, tuple[int, int]], np.ndarray]


def fmt17(x: float) -> str:
    """Round-trippable text with 17 significant digits."""
    return format(float(x), ".17g")


def rng_for(seed: int, replicate: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, replicate)``."""
    if not isinstance(seed, (int, np.integer)) or seed < 0 or seed >= 2 ** 64:
        raise ValidationError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate),)))


def worker_count(requested: int | None = None) -> int:
    """Thread count: ``requested`` if given, else ``AUTOCOV_THREADS``, else the CPU count (at most 8)."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("AUTOCOV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"AUTOCOV_THREADS must be an integer, got {env!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


def _parallel_map(fn, items, workers: int | None):
    items = list(items)
    w = min(worker_count(workers), len(items)) if items else 1
    if w <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, items))


def _gaussian(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    return rng.standard_normal(shape)


@dataclass(frozen=True)
class SampleMatrix:
    """``p x n`` observations; column ``t`` is ``X_t``. The array is made read-only."""

    data: np.ndarray
    seed: int | None = None
    model: str = "custom"
    replicate: int = 0

    def __post_init__(self):
        a = np.array(self.data, dtype=float)
        if a.ndim != 2:
            raise ValidationError(f"sample must be a p x n matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("sample contains non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AutocovMatrix:
    """Lag-``u`` sample autocovariance ``n^{-1} sum_t X_t X_{t+u}^T``."""

    u: int
    matrix: np.ndarray

    @property
    def T(self) -> np.ndarray:
        return self.matrix.T


def simulate_ma(model: ModelSpec, n: int, p: int, seed: int, replicate: int = 0,
                sampler: Sampler | None = None) -> SampleMatrix:
    """
    ``X_t = sum_{j=0}^q psi_j eps_{t-j}`` for ``t = 1..n``.

    ``q`` pre-sample innovation columns are drawn so the recursion holds for
    every ``t``. ``sampler(rng, shape)`` replaces the standard normal draw.
    """
    if n < 1 or p < 1:
        raise ValidationError(f"n and p must be positive, got n={n}, p={p}")
    q = model.q
    if q >= n:
        raise DomainError(f"order q={q} must be below n={n}")
    rng = rng_for(seed, replicate)
    E = (sampler or _gaussian)(rng, (p, n + q))
    E = np.asarray(E, dtype=float)
    if E.shape != (p, n + q):
        raise ValidationError(f"sampler returned shape {E.shape}, expected {(p, n + q)}")
    X = E[:, q:].copy()
    if isinstance(model.coeffs, ScalarCoeffs):
        for j, lam in enumerate(model.coeffs.lambdas[1:], start=1):
            if lam != 0:
                X += float(lam) * E[:, q - j:q - j + n]
    else:
        for j, psi in enumerate(model.matrices(p), start=1):
            X += psi @ E[:, q - j:q - j + n]
    return SampleMatrix(np.asarray(X), seed, model.name, replicate)


def _companion_radius(coeffs: Sequence, p: int) -> float:
    k = len(coeffs)
    if all(np.isscalar(a) or getattr(a, "ndim", 2) == 0 for a in coeffs):
        comp = np.zeros((k, k))
        comp[0, :] = [float(a) for a in coeffs]
        comp[1:, :-1] = np.eye(k - 1)
    else:
        blocks = [np.asarray(a.toarray() if sp.issparse(a) else a, dtype=float) if not np.isscalar(a)
                  else float(a) * np.eye(p) for a in coeffs]
        comp = np.zeros((k * p, k * p))
        comp[:p, :] = np.hstack(blocks)
        comp[p:, :-p] = np.eye((k - 1) * p)
    return float(np.max(np.abs(np.linalg.eigvals(comp)))) if comp.size else 0.0


def simulate_ivar(spec: IVARSpec | Sequence, n: int, p: int, seed: int, burn_in: int = 200,
                  replicate: int = 0, sampler: Sampler | None = None) -> SampleMatrix:
    """
    ``X_t = eps_t + A_1 X_{t-1} + ... + A_k X_{t-k}`` started at zero; the first
    ``burn_in`` steps are discarded. Scalar coefficients mean ``a * I``.
    """
    coeffs = spec.coeffs if isinstance(spec, IVARSpec) else tuple(spec)
    name = spec.name if isinstance(spec, IVARSpec) else "ivar"
    if n < 1 or p < 1:
        raise ValidationError(f"n and p must be positive, got n={n}, p={p}")
    if burn_in < 0:
        raise DomainError(f"burn_in must be non-negative, got {burn_in}")
    k = len(coeffs)
    mats = []
    for i, a in enumerate(coeffs, start=1):
        if np.isscalar(a):
            mats.append(float(a))
        else:
            if a.shape != (p, p):
                raise ValidationError(f"A_{i} has shape {a.shape}, expected {(p, p)}")
            mats.append(a)
    if k and _companion_radius(coeffs, p) >= 1:
        raise DomainError("coefficients are not stationary (companion spectral radius >= 1)")
    rng = rng_for(seed, replicate)
    T = burn_in + n
    E = np.asarray((sampler or _gaussian)(rng, (p, T)), dtype=float)
    X = np.zeros((p, T))
    for t in range(T):
        x = E[:, t].copy()
        for i, a in enumerate(mats, start=1):
            if t - i < 0:
                break
            x += a * X[:, t - i] if isinstance(a, float) else a @ X[:, t - i]
        X[:, t] = x
    return SampleMatrix(X[:, burn_in:], seed, name, replicate)


def sample_autocov(X: SampleMatrix | np.ndarray, u: int) -> AutocovMatrix:
    """``n^{-1} sum_{t=1}^{n-u} X_t X_{t+u}^T`` (divisor ``n`` for every lag)."""
    data = X.data if isinstance(X, SampleMatrix) else np.asarray(X, dtype=float)
    n = data.shape[1]
    if not 0 <= u <= n - 1:
        raise DomainError(f"lag u={u} outside 0..{n - 1}")
    M = data[:, :n - u] @ data[:, u:].T / n
    if u == 0:
        M = (M + M.T) / 2
    return AutocovMatrix(u, M)


def autocov_set(X: SampleMatrix | np.ndarray, lags) -> dict[int, AutocovMatrix]:
    return {u: sample_autocov(X, u) for u in sorted(set(lags))}


def _as_poly(poly) -> GammaPolynomial:
    if isinstance(poly, GammaPolynomial):
        return poly
    return parse_polynomial(str(poly))


def _gamma_lookup(gammas: Mapping, u: int) -> np.ndarray:
    try:
        g = gammas[u]
    except KeyError:
        raise ValidationError(f"autocovariance for lag {u} is missing") from None
    return g.matrix if isinstance(g, AutocovMatrix) else np.asarray(g)


def _word_matrix(word, gammas):
    mats = [(_gamma_lookup(gammas, u).T if s else _gamma_lookup(gammas, u)) for u, s in word]
    acc = mats[0]
    for m in mats[1:]:
        acc = acc @ m
    return acc


def eval_sym_poly(poly, gammas: Mapping[int, AutocovMatrix | np.ndarray]) -> np.ndarray:
    """Matrix value of a symmetric polynomial, symmetrized as ``(M + M^T) / 2``."""
    poly = _as_poly(poly)
    if not poly.is_symmetric():
        raise ValidationError(f"polynomial {poly} is not symmetric")
    p = None
    for u in poly.lags():
        p = _gamma_lookup(gammas, u).shape[0]
    if p is None:
        p = next(iter(gammas.values())).matrix.shape[0] if gammas else None
        if p is None:
            raise ValidationError("cannot size a constant polynomial without any autocovariance matrix")
    M = np.zeros((p, p))
    for word, coef in poly:
        c = float(coef)
        if not word:
            M[np.diag_indices(p)] += c
        else:
            M += c * _word_matrix(word, gammas)
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale > 0 and np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise NumericalError("polynomial value is not symmetric to 1e-10 relative")
    return (M + M.T) / 2


def poly_trace(poly, gammas: Mapping[int, AutocovMatrix | np.ndarray]) -> float:
    """``Tr`` of a symmetric polynomial; degree-2 words avoid forming the product."""
    poly = _as_poly(poly)
    total = 0.0
    p = None
    for word, coef in poly:
        c = float(coef)
        if not word:
            if p is None:
                p = next(iter(gammas.values()))
                p = (p.matrix if isinstance(p, AutocovMatrix) else np.asarray(p)).shape[0]
            total += c * p
        elif len(word) == 1:
            total += c * float(np.trace(_gamma_lookup(gammas, word[0][0])))
        elif len(word) == 2:
            (u1, s1), (u2, s2) = word
            A = _gamma_lookup(gammas, u1)
            B = _gamma_lookup(gammas, u2)
            A = A.T if s1 else A
            B = B.T if s2 else B
            # Tr(AB) = sum_ij A_ij B_ji
            total += c * float(np.einsum("ij,ji->", A, B))
        else:
            total += c * float(np.trace(_word_matrix(word, gammas)))
    return total


def jacobi_eigenvalues(M: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """
    Cyclic Jacobi eigenvalues of a dense symmetric matrix, ascending.

    Intended for small matrices and for cross-checking the LAPACK route.
    """
    A = np.array(M, dtype=float)
    p = A.shape[0]
    norm = np.linalg.norm(A)
    if p <= 1 or norm == 0:
        return np.sort(np.diag(A))
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * norm:
            return np.sort(np.diag(A))
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = A[i, j]
                if abs(aij) <= 1e-300:
                    continue
                theta = (A[j, j] - A[i, i]) / (2 * aij)
                if theta == 0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 1 / (2 * theta)
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1))
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                ri = A[i, :].copy()
                rj = A[j, :].copy()
                A[i, :] = c * ri - s * rj
                A[j, :] = s * ri + c * rj
                ci = A[:, i].copy()
                cj = A[:, j].copy()
                A[:, i] = c * ci - s * cj
                A[:, j] = s * ci + c * cj
                A[i, j] = A[j, i] = 0.0
    raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps")


def symmetric_eigenvalues(M: np.ndarray, method: str = "lapack", sym_tol: float = 1e-10) -> np.ndarray:
    """
    All eigenvalues of a symmetric matrix, ascending.

    ``method="lapack"`` uses :func:`numpy.linalg.eigvalsh`; ``"jacobi"`` uses
    :func:`jacobi_eigenvalues`. The eigenvalue sum is checked against the trace.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    scale = float(np.max(np.abs(M))) if M.size else 0.0
    if scale > 0 and float(np.max(np.abs(M - M.T))) > sym_tol * scale:
        raise DomainError("matrix is not symmetric within tolerance")
    S = (M + M.T) / 2
    if method == "lapack":
        ev = np.linalg.eigvalsh(S)
    elif method == "jacobi":
        ev = jacobi_eigenvalues(S)
    else:
        raise ValidationError(f"unknown eigensolver {method!r}")
    tr = float(np.trace(S))
    if abs(ev.sum() - tr) > 1e-8 * max(1.0, np.linalg.norm(S) * np.sqrt(S.shape[0])):
        raise NumericalError("eigenvalue sum disagrees with the trace")
    return ev


@dataclass(frozen=True)
class ECDF:
    """Right-continuous empirical distribution function of a finite sample."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise ValidationError("ECDF of an empty sample")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.size

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.size

    def jumps(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct sample points and the value of ``F`` at each."""
        x = np.unique(self.values)
        return x, self(x)

    def moment(self, k: int) -> float:
        return float(np.mean(self.values ** k))

    def to_csv(self, path=None, metadata: Mapping | None = None) -> str:
        """``x,F`` rows at the jump points, preceded by ``# key: value`` metadata lines."""
        buf = io.StringIO()
        for k, v in (metadata or {}).items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "F"])
        for x, F in zip(*self.jumps()):
            w.writerow([fmt17(x), fmt17(F)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def esd(M: np.ndarray, method: str = "lapack") -> ECDF:
    """Empirical spectral distribution of a symmetric matrix."""
    return ECDF(symmetric_eigenvalues(M, method))


def ks_distance(F: ECDF | Sequence, G: ECDF | Sequence) -> float:
    """Sup-distance between two step ECDFs, evaluated at every jump point."""
    F = F if isinstance(F, ECDF) else ECDF(F)
    G = G if isinstance(G, ECDF) else ECDF(G)
    x = np.union1d(F.values, G.values)
    return float(np.max(np.abs(F(x) - G(x))))


@dataclass(frozen=True)
class TraceStats:
    """Replicate traces of a polynomial with the centering used."""

    values: np.ndarray
    centering: float
    analytic: bool = False
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size < 1:
            raise ValidationError("TraceStats needs at least one replicate")
        object.__setattr__(self, "values", v)

    @property
    def centered(self) -> np.ndarray:
        return self.values - self.centering

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def variance(self) -> float:
        return float(np.var(self.values, ddof=1)) if self.values.size > 1 else 0.0

    @property
    def skewness(self) -> float:
        z = self.values - self.values.mean()
        s = np.sqrt(np.mean(z ** 2))
        return float(np.mean(z ** 3) / s ** 3) if s > 0 else 0.0

    @property
    def excess_kurtosis(self) -> float:
        z = self.values - self.values.mean()
        s2 = np.mean(z ** 2)
        return float(np.mean(z ** 4) / s2 ** 2 - 3) if s2 > 0 else 0.0

    def to_csv(self, path=None, metadata: Mapping | None = None) -> str:
        buf = io.StringIO()
        for k, v in (metadata or {}).items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "trace"])
        for i, t in enumerate(self.values):
            w.writerow([i, fmt17(t)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _population_trace(model: ModelSpec, p: int, u: int) -> float:
    """``Tr(sum_j psi_j psi_{j+u}^T)`` at dimension ``p``."""
    q = model.q
    if u > q:
        return 0.0
    if isinstance(model.coeffs, ScalarCoeffs):
        lam = [float(x) for x in model.coeffs.lambdas]
        return p * sum(lam[j] * lam[j + u] for j in range(q - u + 1))
    mats = [sp.identity(p, format="csr")] + [m if sp.issparse(m) else np.asarray(m) for m in model.matrices(p)]
    total = 0.0
    for j in range(q - u + 1):
        A, B = mats[j], mats[j + u]
        prod = A.multiply(B) if sp.issparse(A) else (B.multiply(A) if sp.issparse(B) else A * B)
        total += float(prod.sum())
    return total


def analytic_trace_mean(poly, model: ModelSpec, n: int, p: int) -> float | None:
    """
    Exact finite-sample ``E Tr(poly)`` where available, else ``None``.

    Covered: linear polynomials for any MA(q) (with pre-sample innovations),
    and ``G_u G_u^T``-type words for white noise (``q = 0``).
    """
    poly = _as_poly(poly)
    total = 0.0
    for word, coef in poly:
        c = float(coef)
        if not word:
            total += c * p
        elif len(word) == 1:
            u = word[0][0]
            total += c * (n - u) / n * _population_trace(model, p, u)
        elif len(word) == 2 and model.q == 0 and model.is_scalar and word[0][0] == word[1][0] \
                and word[0][1] != word[1][1]:
            u = word[0][0]
            if u == 0:
                return None
            # only diagonal time pairs survive for white noise
            total += c * (n - u) * p * p / n ** 2
        else:
            return None
    return total


def trace_statistic(poly, model: ModelSpec, n: int, p: int, replications: int, seed: int,
                    centering: float | None = None, workers: int | None = None,
                    sampler: Sampler | None = None) -> TraceStats:
    """
    Replicate ``Tr(poly)`` over independent MA samples.

    Centering: ``centering`` if given, else the exact mean from
    :func:`analytic_trace_mean` when known, else the empirical mean.
    """
    poly = _as_poly(poly)
    if replications < 2:
        raise ValidationError(f"replications must be at least 2, got {replications}")
    if not poly.is_symmetric():
        raise ValidationError(f"polynomial {poly} is not symmetric")
    lags = sorted(poly.lags()) or [0]

    def one(rep: int) -> float:
        X = simulate_ma(model, n, p, seed, rep, sampler)
        return poly_trace(poly, autocov_set(X, lags))

    vals = np.array(_parallel_map(one, range(replications), workers))
    analytic = False
    if centering is None:
        centering = analytic_trace_mean(poly, model, n, p)
        analytic = centering is not None
        if centering is None:
            centering = float(vals.mean())
    return TraceStats(vals, float(centering), analytic, str(poly))
