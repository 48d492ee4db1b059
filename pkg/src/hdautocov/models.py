"""
Model descriptions: MA(q) coefficient specifications and the built-in
Models 1-6 used throughout the simulations.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, DomainError, ValidationError

__all__ = [
    "ScalarCoeffs",
    "MatrixCoeffs",
    "ModelSpec",
    "IVARSpec",
    "C_matrix",
    "D_matrix",
    "builtin_model",
    "BUILTIN_MODELS",
]


@dataclass(frozen=True)
class ScalarCoeffs:
    """``psi_j = lambda_j * I``; ``lambdas[0]`` is fixed to 1."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(self.lambdas)
        if not lam:
            lam = (1,)
        if lam[0] != 1:
            raise ValidationError(f"lambda_0 must be 1 (psi_0 = I), got {lam[0]!r}")
        object.__setattr__(self, "lambdas", lam)

    @property
    def q(self) -> int:
        return len(self.lambdas) - 1

    def matrices(self, p: int) -> list:
        return [lam * sp.identity(p, format="csr") for lam in self.lambdas[1:]]


@dataclass(frozen=True)
class MatrixCoeffs:
    """
    Explicit coefficient matrices from a generator.

    ``generator(p)`` returns ``[psi_1, ..., psi_q]`` as dense arrays or scipy
    sparse matrices of shape ``(p, p)``; ``psi_0 = I`` is implicit.
    """

    q: int
    generator: Callable[[int], Sequence] = field(compare=False)
    name: str = "custom"

    def matrices(self, p: int) -> list:
        mats = list(self.generator(p))
        if len(mats) != self.q:
            raise ConfigurationError(f"generator for {self.name!r} returned {len(mats)} matrices, expected q={self.q}")
        for j, m in enumerate(mats, start=1):
            if getattr(m, "ndim", 2) != 2 or m.shape != (p, p):
                raise ConfigurationError(
                    f"generator for {self.name!r}: psi_{j} has shape {getattr(m, 'shape', None)}, expected {(p, p)}")
        return mats


@dataclass(frozen=True)
class ModelSpec:
    """MA(q) model ``X_t = sum_j psi_j eps_{t-j}`` with aspect ratio ``y = lim p/n``."""

    coeffs: ScalarCoeffs | MatrixCoeffs
    y: object = 1
    name: str = "custom"

    def __post_init__(self):
        if not self.y > 0:
            raise ValidationError(f"aspect ratio y must be positive, got {self.y!r}")

    @classmethod
    def scalar(cls, lambdas: Sequence = (), y=1, name: str = "custom") -> "ModelSpec":
        """Convenience: ``lambdas`` are ``lambda_1..lambda_q`` (``lambda_0 = 1`` is prepended)."""
        return cls(ScalarCoeffs((1,) + tuple(lambdas)), y, name)

    @property
    def q(self) -> int:
        return self.coeffs.q

    @property
    def is_scalar(self) -> bool:
        return isinstance(self.coeffs, ScalarCoeffs)

    def with_y(self, y) -> "ModelSpec":
        return replace(self, y=y)

    def matrices(self, p: int) -> list:
        """``[psi_1, ..., psi_q]`` at dimension ``p``."""
        return self.coeffs.matrices(p)


@dataclass(frozen=True)
class IVARSpec:
    """Vector autoregression ``X_t = eps_t + A_1 X_{t-1} + ... + A_k X_{t-k}``.

    Coefficients are scalars (meaning ``a * I``) or ``(p, p)`` matrices.
    """

    coeffs: tuple
    name: str = "custom"

    @property
    def k(self) -> int:
        return len(self.coeffs)


def C_matrix(p: int):
    """Diagonal ``+1`` on the first ``floor(p/2)`` coordinates and ``-1`` on the rest."""
    d = np.where(np.arange(1, p + 1) <= p // 2, 1.0, -1.0)
    return sp.diags(d, format="csr")


def D_matrix(p: int):
    """Anti-diagonal reversal permutation, ``d_{i, p+1-i} = 1``."""
    rows = np.arange(p)
    return sp.csr_matrix((np.ones(p), (rows, p - 1 - rows)), shape=(p, p))


def _B_matrix(p: int):
    return 0.5 * (np.eye(p) + np.ones((p, p)))


BUILTIN_MODELS = {
    1: lambda y: ModelSpec.scalar((), y, "model1"),
    2: lambda y: ModelSpec.scalar((Fraction(1, 2),), y, "model2"),
    3: lambda y: ModelSpec(MatrixCoeffs(1, lambda p: [_B_matrix(p)], "model3"), y, "model3"),
    4: lambda y: ModelSpec(MatrixCoeffs(2, lambda p: [C_matrix(p), D_matrix(p)], "model4"), y, "model4"),
    5: lambda y: IVARSpec((Fraction(1, 2),), "model5"),
    6: lambda y: IVARSpec((Fraction(1, 2), Fraction(1, 5)), "model6"),
}


def builtin_model(number: int, y=1) -> ModelSpec | IVARSpec:
    """Models 1-4 are MA(q) :class:`ModelSpec`; Models 5-6 are :class:`IVARSpec`."""
    try:
        return BUILTIN_MODELS[int(number)](y)
    except KeyError:
        raise DomainError(f"unknown built-in model {number!r}; choose 1-6") from None
