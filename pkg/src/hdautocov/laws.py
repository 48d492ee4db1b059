"""
Closed-form limit laws and Stieltjes-equation residuals.

Stieltjes transforms use ``m(z) = int (x - z)^{-1} dmu(x)``, whose large-``z``
expansion in the moments ``beta_h`` is ``m(z) = -sum_h beta_h z^{-h-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, SingularityError, ValidationError
from .models import ModelSpec, ScalarCoeffs
from .ncpart import DEFAULT_CAP, free_cumulants_to_moments, narayana

__all__ = [
    "LaurentPoly",
    "StieltjesPoint",
    "mp_moment",
    "free_bessel_moment",
    "h_tilde",
    "trig_expectation",
    "cfp_cumulant",
    "cfp_cumulants",
    "cfp_moments",
    "stieltjes_from_moments",
    "biquadratic_residual",
    "silverstein_residual",
    "cgf_stieltjes_check",
]

MOMENT_CAP = 40


def _q(x):
    """Exact rational for ints/Fractions; floats pass through."""
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, Rational):
        return Fraction(x)
    return x


def _check_order(h: int, cap: int = MOMENT_CAP) -> None:
    if not isinstance(h, int) or h < 1:
        raise DomainError(f"moment order must be a positive integer, got {h!r}")
    if h > cap:
        raise DomainError(f"moment order {h} exceeds the cap {cap}")


def _check_y(y) -> None:
    if not y > 0:
        raise DomainError(f"aspect ratio y must be positive, got {y!r}")


def mp_moment(h: int, y=1):
    """``h``-th moment of the Marchenko-Pastur law with ratio ``y``: ``sum_k N(h,k) y^(k-1)``."""
    _check_order(h)
    _check_y(y)
    y = _q(y)
    return sum(narayana(h, k) * y ** (k - 1) for k in range(1, h + 1))


def free_bessel_moment(h: int, y=1):
    """``sum_k (1/k) C(h-1,k-1) C(2h,k-1) y^(-k)``."""
    _check_order(h)
    _check_y(y)
    y = _q(y)
    return sum(Fraction(math.comb(h - 1, k - 1) * math.comb(2 * h, k - 1), k) / y ** k
               for k in range(1, h + 1))


@dataclass(frozen=True)
class LaurentPoly:
    """``sum_k c_k z^k`` with ``z = e^{i theta}``; zero coefficients are dropped."""

    coeffs: Mapping[int, object] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(k): v for k, v in dict(self.coeffs).items() if v != 0}
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def constant(cls, c) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def cos(cls, u: int) -> "LaurentPoly":
        """``cos(u theta) = (z^u + z^-u) / 2``."""
        if u == 0:
            return cls({0: 1})
        return cls({u: Fraction(1, 2), -u: Fraction(1, 2)})

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return LaurentPoly({k: v * other for k, v in self.coeffs.items()})
        out: dict = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                out[i + j] = out.get(i + j, 0) + a * b
        return LaurentPoly(out)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            other = LaurentPoly.constant(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return LaurentPoly(out)

    def __pow__(self, r: int):
        if r < 0:
            raise DomainError("negative power of a Laurent polynomial")
        out = LaurentPoly.constant(1)
        base = self
        while r:
            if r & 1:
                out = out * base
            base = base * base
            r >>= 1
        return out

    def constant_term(self):
        """``(2 pi)^{-1} int_0^{2 pi}`` of the polynomial in ``theta``."""
        return self.coeffs.get(0, 0)

    def is_self_adjoint(self) -> bool:
        return all(self.coeffs.get(-k, 0) == v for k, v in self.coeffs.items())

    def __call__(self, theta: float) -> complex:
        import cmath
        return sum(complex(v) * cmath.exp(1j * k * theta) for k, v in self.coeffs.items())


def _lambdas(coeffs) -> tuple:
    if isinstance(coeffs, ModelSpec):
        if not coeffs.is_scalar:
            raise DomainError("compound free Poisson laws need scalar coefficients psi_j = lambda_j I")
        coeffs = coeffs.coeffs
    if isinstance(coeffs, ScalarCoeffs):
        return coeffs.lambdas
    if hasattr(coeffs, "generator"):
        raise DomainError("compound free Poisson laws need scalar coefficients psi_j = lambda_j I")
    lam = tuple(_q(c) for c in coeffs)
    if not lam or lam[0] != 1:
        raise ValidationError("scalar coefficients must start with lambda_0 = 1")
    return lam


def h_tilde(lambdas) -> LaurentPoly:
    """``|sum_j lambda_j e^{i j theta}|^2`` as a Laurent polynomial."""
    lam = _lambdas(lambdas)
    out: dict = {}
    for j, a in enumerate(lam):
        for k, b in enumerate(lam):
            out[j - k] = out.get(j - k, 0) + a * b
    return LaurentPoly(out)


def trig_expectation(u: int, hpoly: LaurentPoly, r: int):
    """Exact ``E_theta[(cos(u theta) hpoly(theta))^r]`` for ``theta ~ U(0, 2 pi)``."""
    if u < 0:
        raise DomainError(f"lag must be non-negative, got {u}")
    if r < 1:
        raise DomainError(f"power must be positive, got {r}")
    return ((LaurentPoly.cos(u) * hpoly) ** r).constant_term()


def cfp_cumulant(u: int, r: int, lambdas, y=1):
    """Free cumulant ``k_ur = y^(r-1) E_theta[(cos(u theta) h~(theta))^r]``."""
    _check_y(y)
    return _q(y) ** (r - 1) * trig_expectation(u, h_tilde(lambdas), r)


def cfp_cumulants(u: int, lambdas, y, H: int) -> tuple:
    _check_order(H)
    ht = h_tilde(lambdas)
    yq = _q(y)
    _check_y(y)
    base = LaurentPoly.cos(u) * ht
    out = []
    acc = LaurentPoly.constant(1)
    for r in range(1, H + 1):
        acc = acc * base
        out.append(yq ** (r - 1) * acc.constant_term())
    return tuple(out)


def cfp_moments(u: int, lambdas, y, H: int) -> tuple:
    """Moments ``1..H`` of the compound free Poisson law with the cumulants above."""
    return free_cumulants_to_moments(cfp_cumulants(u, lambdas, y, H))


@dataclass(frozen=True)
class StieltjesPoint:
    """A point ``z`` in the upper half plane with a candidate transform value ``m``."""

    z: complex
    m: complex

    def __post_init__(self):
        z = complex(self.z)
        if not z.imag > 0:
            raise DomainError(f"z must lie in the upper half plane, got {z}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "m", complex(self.m))


def stieltjes_from_moments(moments: Sequence, z: complex) -> complex:
    """Truncated series ``-sum_{h=0}^{N} beta_h z^{-h-1}``; ``moments`` starts at ``beta_0``."""
    z = complex(z)
    if z == 0:
        raise DomainError("the moment series needs z != 0")
    out = 0j
    zinv = 1 / z
    w = zinv
    for b in moments:
        out -= float(b) * w
        w *= zinv
    return out


def biquadratic_residual(pt: StieltjesPoint, y=1) -> complex:
    """``(1 - y^2 m^2)(y z m + y - 1)^2 - 1``."""
    _check_y(y)
    y = float(y)
    z, m = pt.z, pt.m
    return (1 - y * y * m * m) * (y * z * m + y - 1) ** 2 - 1


def _check_measure(sigma_spectrum) -> list[tuple[float, float]]:
    atoms = [(float(t), float(w)) for t, w in sigma_spectrum]
    if not atoms:
        raise DomainError("empty spectral measure")
    if any(w < 0 for _, w in atoms):
        raise DomainError("negative weight in spectral measure")
    total = sum(w for _, w in atoms)
    if total == 0:
        raise DomainError("spectral measure has zero total weight")
    if not math.isclose(total, 1.0, rel_tol=1e-9, abs_tol=1e-12):
        raise DomainError(f"spectral weights sum to {total}, not 1")
    return atoms


def silverstein_residual(pt: StieltjesPoint, y, sigma_spectrum: Iterable[tuple[float, float]],
                         convention: str = "stieltjes") -> complex:
    """
    Residual of the sample-covariance fixed-point equation for spectrum ``F_Sigma``.

    ``convention="stieltjes"`` evaluates ``m - sum_t w_t / (t(1 - y - y z m) - z)``,
    solved by ``m(z) = int (x - z)^{-1} dmu``. ``convention="printed"``
    evaluates ``m - sum_t w_t / (z - t(1 - y - y z m))`` literally.
    """
    _check_y(y)
    atoms = _check_measure(sigma_spectrum)
    y = float(y)
    z, m = pt.z, pt.m
    factor = 1 - y - y * z * m
    total = 0j
    for t, w in atoms:
        if convention == "stieltjes":
            den = t * factor - z
        elif convention == "printed":
            den = z - t * factor
        else:
            raise ValidationError(f"unknown convention {convention!r}")
        if abs(den) < 1e-300:
            raise SingularityError(f"denominator vanishes at atom t={t}, z={z}")
        total += w / den
    return m - total


def cgf_stieltjes_check(u: int, lambdas, y, z: complex, N: int) -> complex:
    """
    Residual ``-C_N(-m_N(z)) - z m_N(z)`` with ``C_N(w) = 1 + sum_{r<=N} k_r w^r``.

    ``k_r`` are the compound free Poisson cumulants and ``m_N`` the moment
    series truncated at order ``N``; the residual vanishes as ``N`` grows for
    ``|z|`` beyond the support.
    """
    _check_order(N, DEFAULT_CAP * 4)
    k = cfp_cumulants(u, lambdas, y, N)
    mom = free_cumulants_to_moments(k)
    z = complex(z)
    m = stieltjes_from_moments((1,) + tuple(mom), z)
    w = -m
    C = 1 + 0j
    wp = 1 + 0j
    for kr in k:
        wp *= w
        C += float(kr) * wp
    return -C - z * m
