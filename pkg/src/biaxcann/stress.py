"""Biaxial first Piola stresses and their sensitivities to the network weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .energy import (
    N_TERMS,
    TERM_CHANNEL,
    TERM_IS_EXP,
    _exp_argument,
    as_weight_vector,
    psi_partials,
    term_slopes,
)
from .kinematics import StretchPair, invariants


@dataclass(frozen=True)
class StressPair:
    p1: np.ndarray
    p2: np.ndarray


def invariant_prefactors(lambda1, lambda2) -> np.ndarray:
    """``dI_c/dlambda_k`` under incompressibility, shape ``(..., 2, 6)``.

    Row 0 maps the six energy partials onto P1, row 1 onto P2.
    """
    l1 = np.asarray(lambda1, dtype=float)
    l2 = np.asarray(lambda2, dtype=float)
    l1, l2 = np.broadcast_arrays(l1, l2)
    out = np.zeros(l1.shape + (2, 6))
    out[..., 0, 0] = 2.0 * (l1 - 1.0 / (l1**3 * l2**2))
    out[..., 0, 1] = 2.0 * (l1 * l2**2 - 1.0 / l1**3)
    out[..., 0, 2] = 2.0 * l1
    out[..., 0, 4] = 4.0 * l1**3
    out[..., 1, 0] = 2.0 * (l2 - 1.0 / (l1**2 * l2**3))
    out[..., 1, 1] = 2.0 * (l1**2 * l2 - 1.0 / l2**3)
    out[..., 1, 3] = 2.0 * l2
    out[..., 1, 5] = 4.0 * l2**3
    return out


def _unpack(s, lambda2):
    if isinstance(s, StretchPair):
        return s.lambda1, s.lambda2
    return s, lambda2


def stress(s, w, lambda2=None) -> StressPair:
    """P1, P2 [kPa] for stretch pair(s) ``s`` and weights ``w``.

    Call as ``stress(StretchPair(l1, l2), w)`` or ``stress(l1, w, l2)`` with
    arrays.
    """
    l1, l2 = _unpack(s, lambda2)
    dpsi = psi_partials(invariants(l1, l2), w)
    p = (invariant_prefactors(l1, l2) @ dpsi[..., None])[..., 0]
    return StressPair(p[..., 0], p[..., 1])


def _term_stress_factors(l1, l2):
    """Stress per unit ``w2*w1*exp(.)`` for each term, shape ``(..., 2, 16)``, plus features."""
    inv = invariants(l1, l2)
    slope, f = term_slopes(inv)
    pref = invariant_prefactors(l1, l2)[..., TERM_CHANNEL]
    return pref * slope[..., None, :], f


def term_stresses(s, w, lambda2=None) -> np.ndarray:
    """Stress contribution of each term, shape ``(..., 2, 16)``."""
    l1, l2 = _unpack(s, lambda2)
    vec = as_weight_vector(w)
    w1, w2 = vec[..., :N_TERMS], vec[..., N_TERMS:]
    factors, f = _term_stress_factors(l1, l2)
    e = _exp_argument(f, w1)
    return factors * (w2 * w1 * e)[..., None, :]


def stress_weight_gradient(s, w, lambda2=None) -> np.ndarray:
    """Sensitivity of (P1, P2) to the 32 weights, shape ``(..., 2, 32)``.

    Columns follow the flat weight layout ``[w1_1..w1_16, w2_1..w2_16]``.
    """
    l1, l2 = _unpack(s, lambda2)
    vec = as_weight_vector(w)
    w1, w2 = vec[..., :N_TERMS], vec[..., N_TERMS:]
    factors, f = _term_stress_factors(l1, l2)
    e = _exp_argument(f, w1)
    d_w1 = w2 * e * np.where(TERM_IS_EXP, 1.0 + w1 * f, 1.0)
    d_w2 = w1 * e
    return np.concatenate(
        [factors * d_w1[..., None, :], factors * d_w2[..., None, :]], axis=-1
    )


def stress_and_gradient(l1, l2, w):
    """Stresses ``(..., 2)`` and weight sensitivities ``(..., 2, 32)`` in one pass."""
    vec = as_weight_vector(w)
    w1, w2 = vec[..., :N_TERMS], vec[..., N_TERMS:]
    factors, f = _term_stress_factors(l1, l2)
    e = _exp_argument(f, w1)
    d_w2 = w1 * e
    p = np.einsum("...kt,...t->...k", factors, w2 * d_w2)
    d_w1 = w2 * e * np.where(TERM_IS_EXP, 1.0 + w1 * f, 1.0)
    grad = np.concatenate(
        [factors * d_w1[..., None, :], factors * d_w2[..., None, :]], axis=-1
    )
    return p, grad
