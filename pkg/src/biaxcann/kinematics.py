"""Incompressible, shear-free biaxial kinematics.

Fiber families are fixed to the sample axes, so the deformation gradient
is ``diag(lambda1, lambda2, 1/(lambda1*lambda2))`` and every invariant has a
closed form in the two in-plane stretches. All functions accept scalars or
equally shaped numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Input outside the physically admissible range."""


@dataclass(frozen=True)
class StretchPair:
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise DomainError(
                f"stretches must be positive, got ({self.lambda1}, {self.lambda2})"
            )

    @property
    def lambda3(self) -> float:
        return 1.0 / (self.lambda1 * self.lambda2)

    def deformation_gradient(self) -> np.ndarray:
        return np.diag([self.lambda1, self.lambda2, self.lambda3])


@dataclass(frozen=True)
class BiaxialPoint:
    """One observation: stretches and first Piola stresses in kPa."""

    lambda1: float
    lambda2: float
    p1: float
    p2: float
    protocol: str = ""


@dataclass(frozen=True)
class InvariantSet:
    i1: np.ndarray
    i2: np.ndarray
    i4_11: np.ndarray
    i4_22: np.ndarray
    i5_11: np.ndarray
    i5_22: np.ndarray

    def as_tuple(self):
        return (self.i1, self.i2, self.i4_11, self.i4_22, self.i5_11, self.i5_22)


def _check_positive(*values):
    for v in values:
        if np.any(~(np.asarray(v, dtype=float) > 0)):
            raise DomainError("stretches must be positive and finite")


def invariants(lambda1, lambda2=None) -> InvariantSet:
    """Isotropic and fiber invariants of the biaxial state.

    ``lambda1`` may also be a :class:`StretchPair`, in which case
    ``lambda2`` is ignored.
    """
    if isinstance(lambda1, StretchPair):
        lambda1, lambda2 = lambda1.lambda1, lambda1.lambda2
    l1 = np.asarray(lambda1, dtype=float)
    l2 = np.asarray(lambda2, dtype=float)
    _check_positive(l1, l2)
    l1sq = l1 * l1
    l2sq = l2 * l2
    j2 = l1sq * l2sq
    return InvariantSet(
        i1=l1sq + l2sq + 1.0 / j2,
        i2=1.0 / l1sq + 1.0 / l2sq + j2,
        i4_11=l1sq,
        i4_22=l2sq,
        i5_11=l1sq * l1sq,
        i5_22=l2sq * l2sq,
    )


def pullback_point(e11, e22, s11, s22):
    """Convert Green-Lagrange strain / second Piola stress to stretch / first Piola.

    Returns ``(lambda1, lambda2, p1, p2)``; works elementwise on arrays.
    """
    e11 = np.asarray(e11, dtype=float)
    e22 = np.asarray(e22, dtype=float)
    c11 = 2.0 * e11 + 1.0
    c22 = 2.0 * e22 + 1.0
    if np.any(~(c11 > 0)) or np.any(~(c22 > 0)):
        raise DomainError("2E + 1 must be positive")
    lam1 = np.sqrt(c11)
    lam2 = np.sqrt(c22)
    return lam1, lam2, lam1 * np.asarray(s11, dtype=float), lam2 * np.asarray(s22, dtype=float)


def pushforward_point(lambda1, lambda2, p1, p2):
    """Inverse of :func:`pullback_point`: returns ``(e11, e22, s11, s22)``."""
    lam1 = np.asarray(lambda1, dtype=float)
    lam2 = np.asarray(lambda2, dtype=float)
    _check_positive(lam1, lam2)
    return (
        0.5 * (lam1 * lam1 - 1.0),
        0.5 * (lam2 * lam2 - 1.0),
        np.asarray(p1, dtype=float) / lam1,
        np.asarray(p2, dtype=float) / lam2,
    )
