"""Sparse model selection: alpha sweeps, pruning, goodness of fit, rendering."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .energy import N_TERMS, Channel, NetworkWeights, term
from .stress import stress, term_stresses
from .training import TrainConfig, TrainingDivergence, TrainState, fit

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 1e-3
DEFAULT_MARGIN = 0.01
DEFAULT_ALPHAS = (10.0, 1.0, 0.1, 0.01)

_ISOTROPIC = (Channel.I1, Channel.I2)
_FIBER = {Channel.I4_11: "1", Channel.I5_11: "1", Channel.I4_22: "2", Channel.I5_22: "2"}

_BASIS = {
    Channel.I1: "[I1 − 3]",
    Channel.I2: "[I2^{3/2} − 3√3]",
    Channel.I4_11: "[I4,11 − 1]",
    Channel.I4_22: "[I4,22 − 1]",
    Channel.I5_11: "[I5,11 − 1]",
    Channel.I5_22: "[I5,22 − 1]",
}


def parameter_symbols(index: int) -> tuple[str, ...]:
    """Default parameter names of a term: ``("mu",)``, ``("a", "b")``, ``("a1",)``, ...

    Isotropic terms use ``mu`` (identity) or ``a, b`` (exponential); fiber
    terms carry the fiber number as a suffix.
    """
    t = term(index)
    suffix = _FIBER.get(t.channel, "")
    if t.is_exponential:
        return (f"a{suffix}", f"b{suffix}")
    return ("mu",) if t.channel in _ISOTROPIC else (f"a{suffix}",)


@dataclass
class ActiveTerm:
    """A surviving term.

    ``values`` holds one product parameter [kPa] for identity terms, or the
    pair ``(a [kPa], b [-])`` for exponential terms.
    """

    index: int
    values: tuple[float, ...]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        self.values = tuple(float(v) for v in self.values)
        expected = 2 if term(self.index).is_exponential else 1
        if len(self.values) != expected:
            raise ValueError(f"term {self.index} takes {expected} parameter(s)")
        if not self.names:
            self.names = parameter_symbols(self.index)
        self.names = tuple(self.names)

    @property
    def units(self) -> tuple[str, ...]:
        return ("kPa", "-") if term(self.index).is_exponential else ("kPa",)

    def weights(self) -> tuple[float, float]:
        """Network weights ``(w1, w2)`` reproducing this term."""
        if term(self.index).is_exponential:
            a, b = self.values
            return b, a
        return 1.0, self.values[0]


@dataclass
class FitReport:
    """R² per (protocol, component) curve and pooled over everything.

    Undefined values (zero-variance measurements) are stored as ``None``.
    """

    r2_per_curve: dict = field(default_factory=dict)
    r2_overall: float | None = None

    @property
    def worst(self):
        vals = [v for v in self.r2_per_curve.values() if v is not None]
        return min(vals) if vals else None

    @property
    def best(self):
        vals = [v for v in self.r2_per_curve.values() if v is not None]
        return max(vals) if vals else None


@dataclass
class DiscoveredModel:
    active_terms: list = field(default_factory=list)
    alpha_used: float | None = None
    fit: FitReport | None = None
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        self.active_terms = sorted(self.active_terms, key=lambda t: t.index)
        self._disambiguate()

    def _disambiguate(self):
        counts = {}
        for t in self.active_terms:
            for n in t.names:
                counts[n] = counts.get(n, 0) + 1
        for t in self.active_terms:
            if any(counts[n] > 1 for n in t.names):
                t.names = tuple(f"{n}_{t.index}" for n in t.names)

    @property
    def indices(self) -> list[int]:
        return [t.index for t in self.active_terms]

    @property
    def n_active(self) -> int:
        return len(self.active_terms)

    @property
    def parameters(self) -> dict[str, float]:
        out = {}
        for t in self.active_terms:
            out.update(zip(t.names, t.values))
        return out

    def weights(self) -> NetworkWeights:
        return NetworkWeights.from_terms({t.index: t.weights() for t in self.active_terms})

    def predict(self, lambda1, lambda2) -> np.ndarray:
        """Stresses ``(..., 2)`` [kPa] of the pruned model."""
        s = stress(lambda1, self.weights(), lambda2)
        return np.stack([s.p1, s.p2], axis=-1)

    def __eq__(self, other):
        if not isinstance(other, DiscoveredModel):
            return NotImplemented
        return (
            [(t.index, t.values, t.names) for t in self.active_terms]
            == [(t.index, t.values, t.names) for t in other.active_terms]
            and self.alpha_used == other.alpha_used
            and self.threshold == other.threshold
            and self.fit == other.fit
        )


def model_from_weights(w: NetworkWeights, indices=None) -> DiscoveredModel:
    """Parameters of the given terms (default: every term with non-zero weights)."""
    if indices is None:
        indices = [i + 1 for i in range(N_TERMS) if w.w1[i] > 0 and w.w2[i] > 0]
    active = []
    for idx in indices:
        w1, w2 = float(w.w1[idx - 1]), float(w.w2[idx - 1])
        values = (w2, w1) if term(idx).is_exponential else (w2 * w1,)
        active.append(ActiveTerm(idx, values))
    return DiscoveredModel(active)


def prune(state, data: Dataset, threshold: float = DEFAULT_THRESHOLD) -> DiscoveredModel:
    """Keep terms whose peak stress contribution on ``data`` exceeds ``threshold`` times
    the peak measured stress.

    ``state`` may be a :class:`TrainState`, :class:`NetworkWeights` or a
    :class:`DiscoveredModel`.
    """
    if isinstance(state, DiscoveredModel):
        w, alpha = state.weights(), state.alpha_used
    elif isinstance(state, TrainState):
        w, alpha = state.weights, state.alpha
    else:
        w, alpha = state, None
    contrib = np.abs(term_stresses(data.lambda1, w, data.lambda2)).max(axis=(0, 1))
    scale = float(np.abs(data.measured).max())
    keep = [i + 1 for i in range(N_TERMS) if contrib[i] > threshold * scale]
    if not keep:
        log.warning("all terms pruned; the discovered model is empty")
    model = model_from_weights(w, keep)
    model.alpha_used = alpha
    model.threshold = threshold
    return model


def _r2(measured, predicted):
    measured = np.asarray(measured, dtype=float).ravel()
    predicted = np.asarray(predicted, dtype=float).ravel()
    ss_tot = float(np.sum((measured - measured.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    return 1.0 - float(np.sum((measured - predicted) ** 2)) / ss_tot


def r_squared(data: Dataset, w) -> FitReport:
    """Coefficient of determination per curve and pooled over all points and both axes.

    ``w`` is a :class:`NetworkWeights` or a :class:`DiscoveredModel`.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    if isinstance(w, DiscoveredModel):
        pred = w.predict(data.lambda1, data.lambda2)
    else:
        s = stress(data.lambda1, w, data.lambda2)
        pred = np.stack([s.p1, s.p2], axis=-1)
    meas = data.measured
    per_curve = {}
    for label in data.labels():
        mask = data.protocol == label
        for k, comp in enumerate(("p1", "p2")):
            per_curve[(label, comp)] = _r2(meas[mask, k], pred[mask, k])
    return FitReport(per_curve, _r2(meas, pred))


@dataclass
class SweepRun:
    alpha: float
    state: TrainState | None = None
    model: DiscoveredModel | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepResult:
    runs: list
    selected: int | None

    @property
    def selected_run(self) -> SweepRun | None:
        return None if self.selected is None else self.runs[self.selected]


def select_run(runs, margin: float = DEFAULT_MARGIN) -> int | None:
    """Index of the sparsest run whose overall R² is within ``margin`` of the best.

    Ties in sparsity go to the higher R², then to the larger alpha.
    """
    scored = [
        (i, r) for i, r in enumerate(runs)
        if r.ok and r.model.fit is not None and r.model.fit.r2_overall is not None
    ]
    if not scored:
        return None
    best = max(r.model.fit.r2_overall for _, r in scored)
    eligible = [(i, r) for i, r in scored if r.model.fit.r2_overall >= best - margin]
    i, _ = min(
        eligible,
        key=lambda ir: (ir[1].model.n_active, -ir[1].model.fit.r2_overall, -ir[1].alpha),
    )
    return i


def run_one(data: Dataset, config: TrainConfig, threshold: float = DEFAULT_THRESHOLD) -> SweepRun:
    try:
        state = fit(data, config)
    except TrainingDivergence as exc:
        log.warning("alpha=%g diverged: %s", config.alpha, exc)
        return SweepRun(config.alpha, error=str(exc))
    model = prune(state, data, threshold)
    model.fit = r_squared(data, model)
    return SweepRun(config.alpha, state, model)


def sweep(
    data: Dataset,
    base_config: TrainConfig,
    alphas=DEFAULT_ALPHAS,
    threshold: float = DEFAULT_THRESHOLD,
    margin: float = DEFAULT_MARGIN,
    select: float | None = None,
) -> SweepResult:
    """One independent fit per alpha (same seed), ordered by alpha descending.

    ``select`` forces the chosen alpha; otherwise :func:`select_run` decides.
    """
    alphas = sorted({float(a) for a in alphas}, reverse=True)
    if not alphas:
        raise ValueError("alphas must be non-empty")
    runs = [
        run_one(data, dataclasses.replace(base_config, alpha=a), threshold) for a in alphas
    ]
    if select is not None:
        matches = [i for i, r in enumerate(runs) if r.alpha == float(select) and r.ok]
        chosen = matches[0] if matches else None
    else:
        chosen = select_run(runs, margin)
    return SweepResult(runs, chosen)


def _fmt_value(v: float) -> str:
    return f"{v:.3g}"


def render_model(m: DiscoveredModel) -> str:
    """Symbolic energy, one term per catalog entry in index order."""
    if not m.active_terms:
        return "ψ = 0"
    pieces = []
    for t in m.active_terms:
        spec = term(t.index)
        basis = _BASIS[spec.channel] + ("²" if spec.power == 2 else "")
        names = [n.replace("mu", "μ") for n in t.names]
        if spec.is_exponential:
            pieces.append(f"{names[0]}[exp({names[1]}{basis}) − 1]")
        else:
            pieces.append(f"{names[0]}{basis}")
    lines = ["ψ = " + " + ".join(pieces)]
    for t in m.active_terms:
        for name, value, unit in zip(t.names, t.values, t.units):
            sym = name.replace("mu", "μ")
            lines.append(f"  {sym} = {_fmt_value(value)}" + ("" if unit == "-" else f" {unit}"))
    return "\n".join(lines)


# reference models of anterior left and right atrial tissue
LEFT_ATRIUM = DiscoveredModel(
    [
        ActiveTerm(5, (1.37,)),
        ActiveTerm(8, (0.0622, 0.0988)),
        ActiveTerm(13, (0.957,)),
        ActiveTerm(15, (0.394,)),
    ]
)
RIGHT_ATRIUM = DiscoveredModel(
    [
        ActiveTerm(5, (0.953,)),
        ActiveTerm(8, (0.0583, 0.852)),
        ActiveTerm(14, (0.0694, 0.542)),
        ActiveTerm(16, (0.386, 0.498)),
    ]
)
