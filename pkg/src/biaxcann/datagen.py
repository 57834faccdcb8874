"""Synthetic tension-ratio experiments from a known model.

Tension is identified with the first Piola component, so a protocol with
ratio ``r = t2/t1`` holds ``P2 = r * P1`` along the loading path. The axis
carrying the larger tension is stretch-controlled on a uniform grid from 1
to ``peak_stretch``; the other stretch is found by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from .dataset import Dataset
from .energy import DivergenceError
from .kinematics import BiaxialPoint
from .stress import stress

# t2:t1 labels of the five standard protocols
STANDARD_PROTOCOLS = ("1:0.5", "1:0.75", "1:1", "0.75:1", "0.5:1")

BRACKET = (0.8, 2.5)
MAX_BISECTIONS = 100
SCAN_POINTS = 171


class ProtocolInfeasible(ValueError):
    """The ratio condition has no root inside the stretch bracket."""


class PathSolveError(ArithmeticError):
    """Bisection failed to reach the residual tolerance."""


def ratio_from_label(label: str) -> float:
    """``"t2:t1"`` label to ``r = t2/t1``."""
    try:
        t2, t1 = (float(s) for s in label.split(":"))
    except ValueError:
        raise ValueError(f"protocol label {label!r} is not of the form 't2:t1'") from None
    if not (t1 > 0 and t2 > 0):
        raise ValueError(f"protocol label {label!r} must have positive tensions")
    return t2 / t1


@dataclass(frozen=True)
class ProtocolSpec:
    label: str
    ratio: float | None = None
    n_points: int = 20
    peak_stretch: float = 1.15
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.ratio is None:
            object.__setattr__(self, "ratio", ratio_from_label(self.label))
        if not self.ratio > 0:
            raise ValueError("tension ratio must be positive")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")
        if not self.peak_stretch > 1:
            raise ValueError("peak stretch must exceed 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")


def standard_protocols(n_points=20, peak_stretch=1.15, noise_std=0.0, seed=0):
    return [
        ProtocolSpec(lab, n_points=n_points, peak_stretch=peak_stretch, noise_std=noise_std, seed=seed + i)
        for i, lab in enumerate(STANDARD_PROTOCOLS)
    ]


def _solve_secondary(weights, controlled: float, r: float, axis1_controlled: bool) -> float:
    """Secondary stretch at which ``P2 - r*P1`` vanishes."""

    def residual(other):
        l1, l2 = (controlled, other) if axis1_controlled else (other, controlled)
        try:
            s = stress(l1, weights, l2)
        except DivergenceError:
            # only the far end of the bracket overflows; the varied axis dominates there
            return np.inf if axis1_controlled else -np.inf
        return float(s.p2 - r * s.p1)

    # the residual need not be monotone over the whole bracket (the I2 channel
    # couples both axes), so take the first sign change above the lower end
    grid = np.linspace(*BRACKET, SCAN_POINTS)
    lo = grid[0]
    f_lo = residual(lo)
    for hi in grid[1:]:
        f_hi = residual(hi)
        if np.sign(f_lo) * np.sign(f_hi) <= 0:
            break
        if not np.isfinite(f_hi):
            hi = None
            break
        lo, f_lo = hi, f_hi
    else:
        hi = None
    if hi is None:
        raise ProtocolInfeasible(
            f"ratio {r:g} not bracketed in stretch interval {list(BRACKET)} "
            f"at controlled stretch {controlled:.6g}"
        )
    if f_hi == 0:
        return float(hi)
    try:
        root, info = bisect(
            residual, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
            maxiter=MAX_BISECTIONS, full_output=True, disp=False,
        )
    except RuntimeError as exc:
        raise PathSolveError(str(exc)) from None
    if not info.converged:
        raise PathSolveError(
            f"bisection did not converge in {MAX_BISECTIONS} iterations "
            f"(controlled stretch {controlled:.6g}, ratio {r:g})"
        )
    return float(root)


def solve_ratio_path(weights, protocol: ProtocolSpec) -> list[BiaxialPoint]:
    """Loading path of one protocol, identity point first."""
    r = protocol.ratio
    axis1_controlled = r <= 1.0
    grid = np.linspace(1.0, protocol.peak_stretch, protocol.n_points)
    points = [(1.0, 1.0, 0.0, 0.0)]
    for lam in grid[1:]:
        other = _solve_secondary(weights, float(lam), r, axis1_controlled)
        l1, l2 = (float(lam), other) if axis1_controlled else (other, float(lam))
        s = stress(l1, weights, l2)
        p1, p2 = float(s.p1), float(s.p2)
        if abs(p2 - r * p1) > 1e-9 * max(abs(p1), 1.0):
            raise PathSolveError(
                f"ratio residual {abs(p2 - r * p1):.3g} above tolerance at stretch {lam:.6g}"
            )
        points.append((l1, l2, p1, p2))
    arr = np.array(points)
    if protocol.noise_std > 0:
        rng = np.random.default_rng(protocol.seed)
        arr[:, 2:] += rng.normal(0.0, protocol.noise_std, size=(len(arr), 2))
    return [BiaxialPoint(a, b, c, d, protocol.label) for a, b, c, d in arr]


def generate_fixture(weights, protocols) -> Dataset:
    """Concatenated paths of all protocols, labelled by protocol."""
    return Dataset.concat(
        Dataset.from_points(solve_ratio_path(weights, p)) for p in protocols
    )
