"""Sixteen-term polyconvex free-energy catalog.

Each term acts on one normalized invariant ``x`` raised to power ``p`` and
is either ``w2 * w1 * x**p`` (identity) or ``w2 * (exp(w1 * x**p) - 1)``
(exponential). Term indices 1..16 are a stable public contract; model files
refer to terms by index.

Weights are stored as a flat 32-vector ``[w1_1..w1_16, w2_1..w2_16]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .kinematics import InvariantSet

N_TERMS = 16
N_WEIGHTS = 2 * N_TERMS

# exp(700) is close to the float64 ceiling
EXP_LIMIT = 700.0

SQRT27 = 3.0 * np.sqrt(3.0)


class Channel(Enum):
    I1 = 0
    I2 = 1
    I4_11 = 2
    I4_22 = 3
    I5_11 = 4
    I5_22 = 5


class Activation(Enum):
    IDENTITY = "identity"
    EXPONENTIAL = "exponential"


class DivergenceError(FloatingPointError):
    """An exponential term overflowed; carries the 1-based term index."""

    def __init__(self, message, term_index=None):
        super().__init__(message)
        self.term_index = term_index


@dataclass(frozen=True)
class TermSpec:
    term_index: int
    channel: Channel
    power: int
    activation: Activation

    @property
    def is_exponential(self) -> bool:
        return self.activation is Activation.EXPONENTIAL

    @property
    def label(self) -> str:
        return _CHANNEL_LABEL[self.channel]


_CHANNEL_LABEL = {
    Channel.I1: "I1",
    Channel.I2: "I2",
    Channel.I4_11: "I4,11",
    Channel.I4_22: "I4,22",
    Channel.I5_11: "I5,11",
    Channel.I5_22: "I5,22",
}


def _build_catalog():
    terms = []
    idx = 1
    for channel, powers in (
        (Channel.I1, (1, 2)),
        (Channel.I2, (1, 2)),
        (Channel.I4_11, (2,)),
        (Channel.I4_22, (2,)),
        (Channel.I5_11, (2,)),
        (Channel.I5_22, (2,)),
    ):
        for power in powers:
            for act in (Activation.IDENTITY, Activation.EXPONENTIAL):
                terms.append(TermSpec(idx, channel, power, act))
                idx += 1
    return tuple(terms)


CATALOG: tuple[TermSpec, ...] = _build_catalog()

# vectorized views of the catalog (0-based rows)
TERM_CHANNEL = np.array([t.channel.value for t in CATALOG])
TERM_POWER = np.array([t.power for t in CATALOG], dtype=float)
TERM_IS_EXP = np.array([t.is_exponential for t in CATALOG])
# sums per-term quantities into their invariant channel
_TERM_TO_CHANNEL = (TERM_CHANNEL[:, None] == np.arange(6)).astype(float)


def term(index: int) -> TermSpec:
    """Catalog entry by 1-based index."""
    if not 1 <= index <= N_TERMS:
        raise IndexError(f"term index {index} outside 1..{N_TERMS}")
    return CATALOG[index - 1]


@dataclass
class NetworkWeights:
    """Inner (``w1``) and outer (``w2``) weights, 16 each, all non-negative."""

    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        self.w1 = np.array(self.w1, dtype=float).reshape(N_TERMS)
        self.w2 = np.array(self.w2, dtype=float).reshape(N_TERMS)
        if np.any(self.w1 < 0) or np.any(self.w2 < 0):
            raise ValueError("network weights must be non-negative")

    @classmethod
    def zeros(cls) -> "NetworkWeights":
        return cls(np.zeros(N_TERMS), np.zeros(N_TERMS))

    @classmethod
    def from_vector(cls, vec) -> "NetworkWeights":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (N_WEIGHTS,):
            raise ValueError(f"expected {N_WEIGHTS} weights, got shape {vec.shape}")
        return cls(vec[:N_TERMS], vec[N_TERMS:])

    @classmethod
    def from_terms(cls, params: dict[int, tuple[float, float]]) -> "NetworkWeights":
        """Build weights from ``{term_index: (w1, w2)}``; other terms are zero."""
        w = cls.zeros()
        for idx, (a, b) in params.items():
            term(idx)
            w.w1[idx - 1] = a
            w.w2[idx - 1] = b
        return w

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.w1, self.w2])

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(self.w1.copy(), self.w2.copy())


def as_weight_vector(w) -> np.ndarray:
    if isinstance(w, NetworkWeights):
        return w.to_vector()
    return np.asarray(w, dtype=float)


@dataclass(frozen=True)
class NormalizedInvariants:
    x1: np.ndarray
    x2: np.ndarray
    x4_11: np.ndarray
    x4_22: np.ndarray
    x5_11: np.ndarray
    x5_22: np.ndarray

    def stack(self) -> np.ndarray:
        """Channels along the last axis, shape ``(..., 6)``."""
        return np.stack(
            np.broadcast_arrays(
                self.x1, self.x2, self.x4_11, self.x4_22, self.x5_11, self.x5_22
            ),
            axis=-1,
        )


def normalize(inv: InvariantSet) -> NormalizedInvariants:
    """Shift invariants so that all six channels vanish in the reference state.

    The I2 channel uses ``I2**1.5 - 3*sqrt(3)``.
    """
    return NormalizedInvariants(
        x1=inv.i1 - 3.0,
        x2=np.asarray(inv.i2) ** 1.5 - SQRT27,
        x4_11=inv.i4_11 - 1.0,
        x4_22=inv.i4_22 - 1.0,
        x5_11=inv.i5_11 - 1.0,
        x5_22=inv.i5_22 - 1.0,
    )


def _features(x):
    """Per-term powered invariants ``x**p``, shape ``(..., 16)``."""
    xc = x[..., TERM_CHANNEL]
    return np.where(TERM_POWER == 1.0, xc, xc * xc)


def _exp_argument(f, w1):
    arg = np.where(TERM_IS_EXP, w1 * f, 0.0)
    bad = arg > EXP_LIMIT
    if np.any(bad):
        idx = int(np.nonzero(np.any(bad.reshape(-1, N_TERMS), axis=0))[0][0]) + 1
        raise DivergenceError(
            f"exponential term {idx} overflowed (argument {arg.max():.4g} > {EXP_LIMIT})",
            term_index=idx,
        )
    return np.exp(arg)


def term_value(t: TermSpec, n: NormalizedInvariants, w1: float, w2: float):
    """Energy density [kPa] of one catalog term."""
    if w1 < 0 or w2 < 0:
        raise ValueError("term weights must be non-negative")
    x = np.asarray(n.stack()[..., t.channel.value])
    f = x if t.power == 1 else x * x
    if not t.is_exponential:
        return w2 * w1 * f
    arg = w1 * f
    if np.any(arg > EXP_LIMIT):
        raise DivergenceError(f"exponential term {t.term_index} overflowed", t.term_index)
    return w2 * np.expm1(arg)


def term_values(inv: InvariantSet, w) -> np.ndarray:
    """All sixteen term energies, shape ``(..., 16)``."""
    vec = as_weight_vector(w)
    w1, w2 = vec[..., :N_TERMS], vec[..., N_TERMS:]
    f = _features(normalize(inv).stack())
    _exp_argument(f, w1)
    return np.where(TERM_IS_EXP, w2 * np.expm1(np.where(TERM_IS_EXP, w1 * f, 0.0)), w2 * w1 * f)


def psi(inv: InvariantSet, w):
    """Free-energy density [kPa]: sum of the sixteen term values."""
    return term_values(inv, w).sum(axis=-1)


def channel_scale(inv: InvariantSet) -> np.ndarray:
    """``d x_c / d I_c`` for the six channels, shape ``(..., 6)``.

    Only the I2 channel differs from one: ``1.5 * sqrt(I2)``.
    """
    i2 = np.asarray(inv.i2, dtype=float)
    out = np.ones(i2.shape + (6,))
    out[..., 1] = 1.5 * np.sqrt(i2)
    return out


def term_slopes(inv: InvariantSet):
    """Per-term ``d(x**p)/dI`` of the raw invariant, shape ``(..., 16)``.

    Returned together with the powered features ``x**p``.
    """
    x = normalize(inv).stack()
    f = _features(x)
    xc = x[..., TERM_CHANNEL]
    dfdx = np.where(TERM_POWER == 1.0, 1.0, 2.0 * xc)
    return dfdx * channel_scale(inv)[..., TERM_CHANNEL], f


def psi_partials(inv: InvariantSet, w) -> np.ndarray:
    """Derivatives of psi w.r.t. (I1, I2, I4_11, I4_22, I5_11, I5_22), shape ``(..., 6)``."""
    vec = as_weight_vector(w)
    w1, w2 = vec[..., :N_TERMS], vec[..., N_TERMS:]
    slope, f = term_slopes(inv)
    e = _exp_argument(f, w1)
    return (w2 * w1 * e * slope) @ _TERM_TO_CHANNEL
