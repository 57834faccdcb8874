"""Regularized least-squares training of the network weights with projected ADAM."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields

import numpy as np

from .dataset import Dataset
from .energy import N_WEIGHTS, DivergenceError, NetworkWeights, as_weight_vector
from .stress import stress, stress_and_gradient

log = logging.getLogger(__name__)


class TrainingDivergence(RuntimeError):
    def __init__(self, message, epoch=None, term_index=None):
        super().__init__(message)
        self.epoch = epoch
        self.term_index = term_index


@dataclass
class TrainConfig:
    alpha: float = 1.0
    p_norm: int = 1
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_epochs: int = 50000
    seed: int = 0
    init_scale: float = 0.1
    convergence_tol: float = 1e-9
    patience: int = 2000

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("alpha must be non-negative")
        if self.p_norm not in (1, 2):
            raise ValueError("p_norm must be 1 or 2")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_epochs < 1 or self.patience < 1:
            raise ValueError("max_epochs and patience must be positive")
        if not self.init_scale >= 0:
            raise ValueError("init_scale must be non-negative")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class TrainState:
    weights: NetworkWeights
    first_moment: np.ndarray
    second_moment: np.ndarray
    epoch: int = 0
    # best-so-far loss after each epoch, hence non-increasing
    loss_history: list = field(default_factory=list)
    # loss of the iterate itself after each epoch
    raw_loss_history: list = field(default_factory=list)
    alpha: float = 0.0

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1] if self.loss_history else float("nan")


def _check_data(data: Dataset):
    if len(data) == 0:
        raise ValueError("training data is empty")


def penalty(w, alpha: float, p_norm: int = 1):
    """``alpha * ||w||_p^p``; one value per weight vector along the last axis."""
    vec = as_weight_vector(w)
    out = alpha * np.sum(np.abs(vec) ** p_norm, axis=-1)
    return float(out) if out.ndim == 0 else out


def penalty_gradient(w, alpha: float, p_norm: int = 1) -> np.ndarray:
    vec = as_weight_vector(w)
    if p_norm == 1:
        # np.sign(0) == 0 is the subgradient picked at the kink
        return alpha * np.sign(vec)
    return alpha * p_norm * np.abs(vec) ** (p_norm - 1) * np.sign(vec)


def loss(data: Dataset, w, alpha: float = 0.0, p_norm: int = 1):
    """Mean squared stress error on both axes plus ``alpha * ||w||_p^p``.

    ``w`` may stack several weight vectors, shape ``(..., 32)``; the result
    then has shape ``(...)``.
    """
    _check_data(data)
    vec = as_weight_vector(w)
    s = stress(data.lambda1, vec[..., None, :], data.lambda2)
    resid = np.stack([s.p1, s.p2], axis=-1) - data.measured
    mse = np.sum(resid * resid, axis=(-2, -1)) / len(data)
    out = mse + penalty(vec, alpha, p_norm)
    return float(out) if np.ndim(out) == 0 else out


def loss_and_gradient(data: Dataset, w, alpha: float = 0.0, p_norm: int = 1):
    _check_data(data)
    p, dp = stress_and_gradient(data.lambda1, data.lambda2, w)
    resid = p - data.measured
    n = len(data)
    value = float(np.sum(resid * resid) / n) + penalty(w, alpha, p_norm)
    grad = (2.0 / n) * np.einsum("nk,nkj->j", resid, dp) + penalty_gradient(w, alpha, p_norm)
    return value, grad


def loss_gradient(data: Dataset, w, alpha: float = 0.0, p_norm: int = 1) -> np.ndarray:
    return loss_and_gradient(data, w, alpha, p_norm)[1]


def adam_step(w, g, m, v, t, config: TrainConfig):
    """One ADAM update at step ``t`` (1-based) followed by projection onto w >= 0.

    Returns the new ``(w, m, v)``.
    """
    m = config.beta1 * m + (1.0 - config.beta1) * g
    v = config.beta2 * v + (1.0 - config.beta2) * g * g
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    w = w - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return np.maximum(w, 0.0), m, v


def initial_weights(config: TrainConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    return rng.uniform(0.0, config.init_scale, size=N_WEIGHTS)


def fit(data: Dataset, config: TrainConfig, initial=None, on_epoch=None) -> TrainState:
    """Train the 32 weights on ``data``; returns the lowest-loss weights seen.

    Full-batch ADAM, one gradient step per epoch. ``on_epoch(epoch, w, loss)``
    is called after every step with a copy of the iterate. Raises
    :class:`TrainingDivergence` when the energy overflows or the loss is not
    finite.
    """
    _check_data(data)
    w = initial_weights(config) if initial is None else as_weight_vector(initial).copy()
    m = np.zeros(N_WEIGHTS)
    v = np.zeros(N_WEIGHTS)
    best_w = w.copy()
    best = np.inf
    reference = np.inf
    stall = 0
    history = []
    raw = []

    def evaluate(vec, epoch):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                value, grad = loss_and_gradient(data, vec, config.alpha, config.p_norm)
        except DivergenceError as exc:
            raise TrainingDivergence(
                f"divergence at epoch {epoch}, term {exc.term_index}: {exc}",
                epoch=epoch,
                term_index=exc.term_index,
            ) from exc
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            raise TrainingDivergence(f"non-finite loss at epoch {epoch}", epoch=epoch)
        return value, grad

    value, grad = evaluate(w, 0)
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        w, m, v = adam_step(w, grad, m, v, epoch, config)
        value, grad = evaluate(w, epoch)
        raw.append(value)
        if on_epoch is not None:
            on_epoch(epoch, w.copy(), value)
        if value < best:
            best = value
            best_w = w.copy()
        history.append(best)
        # convergence: relative improvement of the best loss over a patience window
        if best < reference * (1.0 - config.convergence_tol):
            reference = best
            stall = 0
        else:
            stall += 1
            if stall >= config.patience:
                log.debug("converged at epoch %d, loss %.6g", epoch, best)
                break

    return TrainState(
        weights=NetworkWeights.from_vector(best_w),
        first_moment=m,
        second_moment=v,
        epoch=epoch,
        loss_history=history,
        raw_loss_history=raw,
        alpha=config.alpha,
    )
