"""
Limit moments of symmetric polynomials in sample autocovariance matrices.

The limit of ``p^{-1} E Tr(Pi^h)`` is expressed through free variables: a
standard semicircle ``s``, coefficient variables ``a_j`` (limits of the
``psi_j``) and shift variables ``c_k`` (limits of the ``n x n`` shift
matrices). Each autocovariance symbol is replaced by

    gamma_u  = (1+y) sum_{j,j'} a_j s c_{j-j'+u} s a_{j'}^*,
    gamma_u* = (1+y) sum_{j,j'} a_{j'} s c_{-(j-j'+u)} s a_j^*,

and ``lim p^{-1} E Tr(Pi^h) = (1+y)/y * phi(Pi(gamma)^h)``. Every monomial of
degree ``n`` in the gammas expands into alternating words
``d_0 s b_1 s d_1 ... s b_n s d_n`` whose state is a sum over ``NC(n)``
(see :func:`evaluate_free_word`).

A letter of an ``a``-word is a pair ``(j, star)``; ``c``-words are integer
subscript sequences.
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ConfigurationError, DomainError, ValidationError
from .gammapoly import GammaPolynomial, parse_polynomial
from .models import MatrixCoeffs, ModelSpec, ScalarCoeffs
from .ncpart import catalan, enumerate_noncrossing, kreweras_complement, multiplicative_functional

__all__ = [
    "DEFAULT_TRACE_P",
    "Capacity",
    "TraceFunctional",
    "FreeWord",
    "semicircle_moment",
    "c_state",
    "a_state",
    "scalar_trace_functional",
    "matrix_trace_functional",
    "default_trace_functional",
    "expand_gamma_polynomial",
    "iter_free_words",
    "evaluate_free_word",
    "limit_moment",
    "limit_moments",
    "lsd_mean_variance",
    "lsd_equal_beyond_q_check",
]

DEFAULT_TRACE_P = 4096

Letter = tuple[int, bool]


@dataclass(frozen=True)
class Capacity:
    """Size caps for expansions; every field can be raised explicitly."""

    max_degree: int = 8
    max_q: int = 3
    max_words: int = 2_000_000
    max_block_enumeration: int = 2_000_000


def _exact(x) -> bool:
    return isinstance(x, Rational)


def _div(a, b):
    if _exact(a) and _exact(b):
        return Fraction(a) / Fraction(b)
    return a / b


def semicircle_moment(k: int) -> int:
    """``phi(s^k)``: the Catalan number ``C_{k/2}`` for even ``k``, zero for odd ``k``."""
    if k < 0:
        raise DomainError(f"moment order must be non-negative, got {k}")
    return 0 if k % 2 else catalan(k // 2)


def c_state(word: Sequence[int], y):
    """State of a product of shift variables: ``1/(1+y)`` if the subscripts sum to zero, else 0.

    The empty word is the unit and has state 1.
    """
    if len(word) == 0:
        return 1
    return _div(1, 1 + y) if sum(word) == 0 else 0


def _canonical(word: tuple[Letter, ...]) -> tuple[Letter, ...]:
    # Traces of real matrices are invariant under rotation and under the
    # transpose map (reverse + swap star), so use the least representative.
    n = len(word)
    adj = tuple((j, not s) for j, s in reversed(word))
    best = word
    for w in (word, adj):
        for i in range(n):
            cand = w[i:] + w[:i]
            if cand < best:
                best = cand
    return best


class TraceFunctional:
    """
    Normalized trace ``tau(w) = lim p^{-1} Tr(w(psi_j, psi_j^*))`` on words in
    the coefficient symbols, memoized by canonical rotation.

    ``scalars`` is set when the functional is multiplicative (``psi_j =
    lambda_j I``), which unlocks the factorized evaluation path.
    """

    def __init__(self, fn: Callable[[tuple[Letter, ...]], object], q: int, provenance: str,
                 scalars: tuple | None = None):
        self._fn = fn
        self.q = q
        self.provenance = provenance
        self.scalars = scalars
        self._memo: dict = {}
        self._lock = threading.Lock()
        # charge tables depend only on (tau, y), so they are shared across polynomials
        self._table_cache: dict = {}

    @property
    def exact(self) -> bool:
        return self.scalars is not None and all(_exact(v) for v in self.scalars)

    def __call__(self, word: Sequence[Letter]):
        word = tuple((int(j), bool(s)) for j, s in word)
        if not word:
            return 1
        for j, _ in word:
            if not 0 <= j <= self.q:
                raise DomainError(f"coefficient index {j} outside 0..{self.q}")
        key = _canonical(word)
        try:
            return self._memo[key]
        except KeyError:
            pass
        value = self._fn(key)
        with self._lock:
            self._memo.setdefault(key, value)
        return value

    def __repr__(self):
        return f"TraceFunctional(q={self.q}, provenance={self.provenance!r})"


def scalar_trace_functional(lambdas: Sequence) -> TraceFunctional:
    """Exact functional for ``psi_j = lambda_j I``: the product of the word's lambdas."""
    lam = tuple(lambdas)
    if not lam or lam[0] != 1:
        raise ValidationError("scalar coefficients must start with lambda_0 = 1")

    def fn(word):
        out = 1
        for j, _ in word:
            out = out * lam[j]
        return out

    return TraceFunctional(fn, len(lam) - 1, "exact-scalar", scalars=lam)


def matrix_trace_functional(coeffs: MatrixCoeffs | ScalarCoeffs | ModelSpec, p: int = DEFAULT_TRACE_P) -> TraceFunctional:
    """
    Numeric functional ``p^{-1} Tr`` of words in explicit ``p x p`` coefficient
    matrices, computed by direct multiplication (sparse when every generated
    matrix is sparse).
    """
    if isinstance(coeffs, ModelSpec):
        coeffs = coeffs.coeffs
    if p < 1:
        raise ConfigurationError(f"p must be positive, got {p}")
    mats = coeffs.matrices(p)
    use_sparse = all(sp.issparse(m) for m in mats)
    if use_sparse:
        mats = [sp.csr_matrix(m, dtype=float) for m in mats]
        trans = [m.T.tocsr() for m in mats]
    else:
        mats = [m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float) for m in mats]
        trans = [np.ascontiguousarray(m.T) for m in mats]

    def letter(j: int, star: bool):
        return (trans if star else mats)[j - 1]

    def fn(word):
        # psi_0 = I drops out of products
        factors = [letter(j, s) for j, s in word if j != 0]
        if not factors:
            return 1.0
        acc = factors[0]
        for f in factors[1:-1]:
            acc = acc @ f
        if len(factors) == 1:
            tr = acc.diagonal().sum()
        elif use_sparse:
            tr = acc.multiply(factors[-1].T).sum()
        else:
            tr = np.einsum("ij,ji->", acc, factors[-1])
        return float(tr) / p

    return TraceFunctional(fn, coeffs.q, f"numeric-matrix(p={p})")


_default_tau_cache: dict = {}
_default_tau_lock = threading.Lock()


def default_trace_functional(model: ModelSpec, p: int | None = None) -> TraceFunctional:
    """Exact functional for scalar models; numeric at ``p`` (default 4096) otherwise."""
    if model.is_scalar:
        return scalar_trace_functional(model.coeffs.lambdas)
    p = DEFAULT_TRACE_P if p is None else p
    key = (id(model.coeffs), p)
    with _default_tau_lock:
        hit = _default_tau_cache.get(key)
        if hit is not None and hit[0] is model.coeffs:
            return hit[1]
    tau = matrix_trace_functional(model.coeffs, p)
    with _default_tau_lock:
        _default_tau_cache[key] = (model.coeffs, tau)
    return tau


def a_state(word: Sequence[Letter], tau: TraceFunctional, y):
    """State of a word in coefficient variables: ``y/(1+y) * tau(psi-word)``; the empty word has state 1."""
    if len(word) == 0:
        return 1
    return _div(y, 1 + y) * tau(word)


@dataclass(frozen=True)
class FreeWord:
    """
    Alternating word ``d_0 s c_{b_1} s d_1 ... s c_{b_n} s d_n`` with a scalar prefactor.

    ``c_subs`` holds ``b_1..b_n``; ``d_words`` holds the ``n + 1`` coefficient
    words ``d_0..d_n`` (tuples of letters).
    """

    c_subs: tuple[int, ...]
    d_words: tuple[tuple[Letter, ...], ...]
    prefactor: object = 1

    def __post_init__(self):
        if len(self.d_words) != len(self.c_subs) + 1:
            raise ValidationError(
                f"a word with {len(self.c_subs)} shift letters needs {len(self.c_subs) + 1} coefficient words")

    @property
    def n(self) -> int:
        return len(self.c_subs)

    def star(self) -> "FreeWord":
        adj_d = tuple(tuple((j, not s) for j, s in reversed(d)) for d in reversed(self.d_words))
        return FreeWord(tuple(-b for b in reversed(self.c_subs)), adj_d, self.prefactor)

    def __str__(self):
        def dtxt(d):
            return "".join(f"a{j}{'*' if s else ''}" for j, s in d) or "1"
        parts = [dtxt(self.d_words[0])]
        for b, d in zip(self.c_subs, self.d_words[1:]):
            parts.append(f"s c{b} s {dtxt(d)}")
        return f"{self.prefactor} * " + " ".join(parts)


def _checked_power(poly: GammaPolynomial, model: ModelSpec, power: int, capacity: Capacity) -> GammaPolynomial:
    if not isinstance(poly, GammaPolynomial):
        poly = parse_polynomial(str(poly))
    if not poly.is_symmetric():
        raise ValidationError(f"polynomial {poly} is not symmetric")
    if power < 1:
        raise DomainError(f"power must be positive, got {power}")
    if poly.degree * power > capacity.max_degree:
        raise CapacityError(
            f"total degree {poly.degree * power} exceeds the cap {capacity.max_degree}")
    if model.q > capacity.max_q:
        raise CapacityError(f"order q={model.q} exceeds the cap {capacity.max_q}")
    return poly ** power


def _word_count(poly_h: GammaPolynomial, q: int) -> int:
    return sum((q + 1) ** (2 * len(w)) for w, _ in poly_h)


def iter_free_words(poly_h: GammaPolynomial, model: ModelSpec) -> Iterator[FreeWord]:
    """Distribute every monomial of ``poly_h`` over the coefficient indices."""
    y = model.y
    q = model.q
    for word, coef in poly_h:
        n = len(word)
        if n == 0:
            yield FreeWord((), (((0, False),),), coef)
            continue
        pref = coef * (1 + y) ** n
        for idx in itertools.product(range(q + 1), repeat=2 * n):
            left = idx[0::2]
            right = idx[1::2]
            subs = tuple(left[i] - right[i] + (-u if star else u) for i, (u, star) in enumerate(word))
            d = [((left[0], False),)]
            for i in range(n - 1):
                d.append(((right[i], True), (left[i + 1], False)))
            d.append(((right[n - 1], True),))
            yield FreeWord(subs, tuple(d), pref)


def expand_gamma_polynomial(poly: GammaPolynomial, model: ModelSpec, power: int = 1,
                            capacity: Capacity | None = None) -> list[FreeWord]:
    """
    Expand ``poly(gamma)^power`` into free words.

    A degree-``r`` monomial yields ``(q+1)^(2r)`` words, each carrying the
    prefactor ``coefficient * (1+y)^r``.
    """
    capacity = capacity or Capacity()
    poly_h = _checked_power(poly, model, power, capacity)
    count = _word_count(poly_h, model.q)
    if count > capacity.max_words:
        raise CapacityError(f"expansion would produce {count} free words (cap {capacity.max_words})")
    return list(iter_free_words(poly_h, model))


def evaluate_free_word(w: FreeWord, tau: TraceFunctional, y):
    """
    ``phi(d_0 s b_1 s d_1 ... s b_n s d_n)`` for ``s`` free from the ``b`` and ``d`` families:

        sum over pi in NC(n) of phi_pi[b_1..b_n] * phi_K(pi)[d_1, ..., d_{n-1}, d_n d_0]

    where ``K`` is the Kreweras complement and the ``phi_pi`` are the
    multiplicative extensions of the shift and coefficient states.
    """
    n = w.n
    if n == 0:
        return w.prefactor * a_state(w.d_words[0], tau, y)
    slots = list(w.d_words[1:])
    slots[-1] = slots[-1] + w.d_words[0]
    total = 0
    for pi in enumerate_noncrossing(n):
        cval = multiplicative_functional(pi, lambda V: c_state([w.c_subs[i - 1] for i in V], y))
        if cval == 0:
            continue
        K = kreweras_complement(pi)
        aval = multiplicative_functional(
            K, lambda V: a_state(tuple(itertools.chain.from_iterable(slots[i - 1] for i in V)), tau, y))
        total = total + cval * aval
    return w.prefactor * total


# -- aggregated evaluation ------------------------------------------------


def _laurent_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for i, x in a.items():
        for j, z in b.items():
            out[i + j] = out.get(i + j, 0) + x * z
    return out


def _scalar_block_weights(lam: tuple, nmax: int) -> list[dict]:
    """``[z^c] htilde(z)^m`` for ``m = 0..nmax`` with ``htilde(z) = sum lambda_l lambda_r z^(l-r)``."""
    base: dict = {}
    for l, a in enumerate(lam):
        for r, b in enumerate(lam):
            base[l - r] = base.get(l - r, 0) + a * b
    out = [{0: 1}]
    for _ in range(nmax):
        out.append(_laurent_mul(out[-1], base))
    return out


class _PartitionTables:
    """Per-``pi`` charge tables: the coefficient-side weight of every net shift charge per block of ``pi``."""

    def __init__(self, tau: TraceFunctional, y, capacity: Capacity):
        self.tau = tau
        self.y = y
        self.capacity = capacity
        self._cache: dict = tau._table_cache.setdefault(y, {})

    def table(self, pi, n: int) -> dict:
        key = pi
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        q = self.tau.q
        K = kreweras_complement(pi)
        enum = sum((q + 1) ** (2 * len(W)) for W in K.blocks)
        if enum > self.capacity.max_block_enumeration:
            raise CapacityError(
                f"coefficient-block enumeration of {enum} index tuples exceeds the cap "
                f"{self.capacity.max_block_enumeration}")
        vlabel = pi.rgs()
        nv = len(pi)
        ay = _div(self.y, 1 + self.y)
        acc: dict = {(0,) * nv: 1}
        for W in K.blocks:
            part: dict = {}
            for idx in itertools.product(range(q + 1), repeat=2 * len(W)):
                word = []
                charge = [0] * nv
                for k, s in enumerate(W):
                    r, l = idx[2 * k], idx[2 * k + 1]
                    word.append((r, True))
                    word.append((l, False))
                    charge[vlabel[s - 1]] -= r
                    charge[vlabel[s % n]] += l
                val = self.tau(word)
                if val == 0:
                    continue
                ck = tuple(charge)
                part[ck] = part.get(ck, 0) + ay * val
            nxt: dict = {}
            for c1, v1 in acc.items():
                for c2, v2 in part.items():
                    c = tuple(a + b for a, b in zip(c1, c2))
                    nxt[c] = nxt.get(c, 0) + v1 * v2
            acc = nxt
        self._cache[key] = acc
        return acc


def _phi_aggregated(poly_h: GammaPolynomial, tau: TraceFunctional, y, capacity: Capacity, factorized: bool):
    total = 0
    ay = _div(y, 1 + y)
    one_y = 1 + y
    by_degree: dict[int, list] = {}
    for word, coef in poly_h:
        by_degree.setdefault(len(word), []).append((word, coef))
    tables = None if factorized else _PartitionTables(tau, y, capacity)
    weights = _scalar_block_weights(tau.scalars, max(by_degree, default=0)) if factorized else None
    for n, terms in by_degree.items():
        if n == 0:
            for _, coef in terms:
                total = total + coef * ay
            continue
        for pi in enumerate_noncrossing(n):
            npi = len(pi)
            scale = _div(one_y ** n, one_y ** npi)
            if factorized:
                scale = scale * ay ** (n + 1 - npi)
            else:
                tab = tables.table(pi, n)
            for word, coef in terms:
                target = []
                for V in pi.blocks:
                    target.append(-sum(-word[i - 1][0] if word[i - 1][1] else word[i - 1][0] for i in V))
                if factorized:
                    val = 1
                    for V, t in zip(pi.blocks, target):
                        val = val * weights[len(V)].get(t, 0)
                        if val == 0:
                            break
                else:
                    val = tab.get(tuple(target), 0)
                if val != 0:
                    total = total + coef * scale * val
    return total


def limit_moment(poly: GammaPolynomial | str, model: ModelSpec, tau: TraceFunctional | None = None, h: int = 1,
                 method: str = "auto", capacity: Capacity | None = None):
    """
    ``lim p^{-1} E Tr(poly^h)`` for an MA(q) model with aspect ratio ``model.y``.

    ``method`` selects the evaluation route:

    * ``"words"`` -- expand into free words and sum :func:`evaluate_free_word`;
    * ``"blocks"`` -- per non-crossing partition, aggregate the coefficient
      side into a table keyed by net shift charge (any trace functional);
    * ``"factorized"`` -- for multiplicative functionals, the coefficient side
      factors per block into powers of ``|sum_j lambda_j z^j|^2``;
    * ``"auto"`` -- ``"factorized"`` when possible, else ``"blocks"``.

    All routes agree; exact inputs (rational ``y`` and coefficients) give an
    exact :class:`~fractions.Fraction`.
    """
    capacity = capacity or Capacity()
    if isinstance(poly, str):
        poly = parse_polynomial(poly)
    tau = tau if tau is not None else default_trace_functional(model)
    if tau.q != model.q:
        raise ConfigurationError(f"trace functional has q={tau.q}, model has q={model.q}")
    poly_h = _checked_power(poly, model, h, capacity)
    y = model.y
    if method == "auto":
        method = "factorized" if tau.scalars is not None else "blocks"
    if method == "words":
        count = _word_count(poly_h, model.q)
        if count > capacity.max_words:
            raise CapacityError(f"expansion would produce {count} free words (cap {capacity.max_words})")
        phi = 0
        for w in iter_free_words(poly_h, model):
            phi = phi + evaluate_free_word(w, tau, y)
    elif method in ("blocks", "factorized"):
        if method == "factorized" and tau.scalars is None:
            raise ConfigurationError("the factorized route needs a multiplicative (scalar) trace functional")
        phi = _phi_aggregated(poly_h, tau, y, capacity, factorized=(method == "factorized"))
    else:
        raise ValidationError(f"unknown method {method!r}")
    return _div(1 + y, y) * phi


def limit_moments(poly, model: ModelSpec, H: int, tau: TraceFunctional | None = None, **kw) -> tuple:
    """Limit moments for ``h = 1..H``."""
    tau = tau if tau is not None else default_trace_functional(model)
    return tuple(limit_moment(poly, model, tau, h, **kw) for h in range(1, H + 1))


def lsd_mean_variance(poly, model: ModelSpec, tau: TraceFunctional | None = None, **kw) -> tuple:
    m1, m2 = limit_moments(poly, model, 2, tau, **kw)
    return m1, m2 - m1 * m1


def _shape_fn(poly_shape):
    if poly_shape is None:
        return lambda u: GammaPolynomial.atom(u) * GammaPolynomial.atom(u, True)
    if isinstance(poly_shape, str):
        return lambda u: parse_polynomial(poly_shape.format(u=u, u1=u + 1))
    if callable(poly_shape):
        return poly_shape
    raise ValidationError(f"poly_shape must be None, a template string or a callable, got {poly_shape!r}")


def lsd_equal_beyond_q_check(poly_shape, model: ModelSpec, u1: int, u2: int, h: int,
                             tau: TraceFunctional | None = None, rtol: float = 1e-10,
                             capacity: Capacity | None = None) -> bool:
    """
    Whether the limit moments of orders ``1..h`` of ``poly_shape(u1)`` and
    ``poly_shape(u2)`` coincide.

    ``poly_shape`` is a callable ``u -> GammaPolynomial``, a template string
    such as ``"G{u}*G{u}t + G{u1}*G{u1}t"`` (``{u1}`` is ``u + 1``), or
    ``None`` for ``G_u G_u*``. Exact inputs compare exactly; otherwise to
    relative tolerance ``rtol``.

    For ``u1, u2 > q`` the first two moments of ``G_u G_u*`` agree, but from
    order 3 on a partition block may hold unequally many ``G`` and ``G*``
    atoms whose lag shifts are absorbed by the MA coefficients, so higher
    moments can still depend on the lag when ``q >= 1``.
    """
    shape = _shape_fn(poly_shape)
    tau = tau if tau is not None else default_trace_functional(model)
    for k in range(1, h + 1):
        a = limit_moment(shape(u1), model, tau, k, capacity=capacity)
        b = limit_moment(shape(u2), model, tau, k, capacity=capacity)
        if _exact(a) and _exact(b):
            if a != b:
                return False
        elif not math.isclose(float(a), float(b), rel_tol=rtol, abs_tol=rtol):
            return False
    return True
