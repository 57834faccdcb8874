"""Run-configuration and model file formats.

Both are TOML documents. Model files are written by hand with 17
significant digits per float so that parsing recovers every double exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .datagen import STANDARD_PROTOCOLS, ProtocolSpec
from .dataset import fmt
from .discovery import (
    DEFAULT_MARGIN,
    DEFAULT_THRESHOLD,
    LEFT_ATRIUM,
    DEFAULT_ALPHAS,
    RIGHT_ATRIUM,
    ActiveTerm,
    DiscoveredModel,
    FitReport,
)
from .energy import NetworkWeights, term
from .training import TrainConfig

FORMAT_VERSION = 1
MODEL_KIND = "biaxcann-model"

PRESETS = {"left_atrium": LEFT_ATRIUM, "right_atrium": RIGHT_ATRIUM}


class FileFormatError(ValueError):
    """Invalid config or model document."""


@dataclass
class GenerateConfig:
    protocols: list = field(default_factory=lambda: list(STANDARD_PROTOCOLS))
    n_points: int = 20
    peak_stretch: float = 1.15
    noise_std: float = 0.0
    seed: int = 0
    model: DiscoveredModel = field(default_factory=lambda: LEFT_ATRIUM)

    def protocol_specs(self) -> list[ProtocolSpec]:
        return [
            ProtocolSpec(
                lab, n_points=self.n_points, peak_stretch=self.peak_stretch,
                noise_std=self.noise_std, seed=self.seed + i,
            )
            for i, lab in enumerate(self.protocols)
        ]

    def weights(self) -> NetworkWeights:
        return self.model.weights()


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    alphas: list = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    margin: float = DEFAULT_MARGIN
    select: float | None = None
    threshold: float = DEFAULT_THRESHOLD
    generate: GenerateConfig = field(default_factory=GenerateConfig)


def _reject_unknown(section: str, table: dict, allowed):
    for key in table:
        if key not in allowed:
            raise FileFormatError(f"unknown key {key!r} in [{section}]")


def _model_from_table(table: dict) -> DiscoveredModel:
    _reject_unknown("generate.model", table, ("preset", "terms"))
    if "preset" in table:
        if "terms" in table:
            raise FileFormatError("[generate.model] takes either 'preset' or 'terms'")
        try:
            return PRESETS[table["preset"]]
        except KeyError:
            raise FileFormatError(
                f"unknown preset {table['preset']!r}; choose from {sorted(PRESETS)}"
            ) from None
    terms = table.get("terms", {})
    try:
        return DiscoveredModel(
            [ActiveTerm(int(k), tuple(float(x) for x in v)) for k, v in terms.items()]
        )
    except (ValueError, IndexError, TypeError) as exc:
        raise FileFormatError(f"[generate.model.terms]: {exc}") from None


def parse_config(text: str) -> RunConfig:
    """Parse a run-configuration document; every field has a default."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise FileFormatError(f"config: {exc}") from None
    _reject_unknown("top level", doc, ("train", "sweep", "prune", "generate"))
    cfg = RunConfig()
    train = doc.get("train", {})
    _reject_unknown("train", train, TrainConfig.field_names())
    try:
        cfg.train = TrainConfig(**train)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"[train]: {exc}") from None

    sweep = doc.get("sweep", {})
    _reject_unknown("sweep", sweep, ("alphas", "margin", "select"))
    cfg.alphas = [float(a) for a in sweep.get("alphas", cfg.alphas)]
    if not cfg.alphas or any(a < 0 for a in cfg.alphas):
        raise FileFormatError("[sweep] alphas must be a non-empty list of non-negative numbers")
    cfg.margin = float(sweep.get("margin", cfg.margin))
    if "select" in sweep:
        cfg.select = float(sweep["select"])

    prune = doc.get("prune", {})
    _reject_unknown("prune", prune, ("threshold",))
    cfg.threshold = float(prune.get("threshold", cfg.threshold))

    gen = doc.get("generate", {})
    _reject_unknown(
        "generate", gen, ("protocols", "n_points", "peak_stretch", "noise_std", "seed", "model")
    )
    model = _model_from_table(gen["model"]) if "model" in gen else LEFT_ATRIUM
    try:
        cfg.generate = GenerateConfig(
            protocols=[str(p) for p in gen.get("protocols", STANDARD_PROTOCOLS)],
            n_points=int(gen.get("n_points", 20)),
            peak_stretch=float(gen.get("peak_stretch", 1.15)),
            noise_std=float(gen.get("noise_std", 0.0)),
            seed=int(gen.get("seed", 0)),
            model=model,
        )
        cfg.generate.protocol_specs()
    except ValueError as exc:
        raise FileFormatError(f"[generate]: {exc}") from None
    return cfg


def read_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text())


# --- model files -----------------------------------------------------------


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def serialize_model(model: DiscoveredModel, config: TrainConfig | None = None) -> str:
    """Model document; ``config`` is echoed for provenance when given."""
    lines = [f"format_version = {FORMAT_VERSION}", f'kind = "{MODEL_KIND}"']
    if model.alpha_used is not None:
        lines.append(f"alpha = {_toml_value(float(model.alpha_used))}")
    lines.append(f"threshold = {_toml_value(float(model.threshold))}")
    if config is not None:
        lines.append(f"seed = {int(config.seed)}")
    lines.append(f"n_active_terms = {model.n_active}")
    for t in model.active_terms:
        spec = term(t.index)
        lines += [
            "",
            "[[term]]",
            f"index = {t.index}",
            f'channel = "{spec.channel.name}"',
            f"power = {spec.power}",
            f'activation = "{spec.activation.value}"',
            f"names = {_toml_value(list(t.names))}",
            f"values = {_toml_value([float(v) for v in t.values])}",
            f"units = {_toml_value(list(t.units))}",
        ]
    if model.fit is not None:
        lines += ["", "[fit]"]
        if model.fit.r2_overall is not None:
            lines.append(f"r2_overall = {_toml_value(model.fit.r2_overall)}")
        for (label, comp), r2 in model.fit.r2_per_curve.items():
            lines += [
                "",
                "[[fit.curve]]",
                f"protocol = {_toml_value(str(label))}",
                f'component = "{comp}"',
            ]
            # TOML has no null: an undefined R² is an absent key
            if r2 is not None:
                lines.append(f"r2 = {_toml_value(float(r2))}")
    if config is not None:
        lines += ["", "[config]"]
        for k, v in dataclasses.asdict(config).items():
            lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def parse_model_file(text: str) -> tuple[DiscoveredModel, dict]:
    """Parse a model document into the model and the echoed config table."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise FileFormatError(f"model file: {exc}") from None
    if doc.get("format_version") != FORMAT_VERSION or doc.get("kind") != MODEL_KIND:
        raise FileFormatError(
            f"model file schema mismatch: expected kind {MODEL_KIND!r}, "
            f"format_version {FORMAT_VERSION}"
        )
    try:
        active = []
        for entry in doc.get("term", []):
            idx = int(entry["index"])
            spec = term(idx)
            if entry.get("channel") != spec.channel.name or entry.get("activation") != spec.activation.value:
                raise FileFormatError(f"term {idx}: channel/activation disagree with the catalog")
            active.append(
                ActiveTerm(idx, tuple(float(v) for v in entry["values"]), tuple(entry["names"]))
            )
        model = DiscoveredModel(active)
        if len(active) != doc.get("n_active_terms", len(active)):
            raise FileFormatError("n_active_terms disagrees with the term list")
        model.alpha_used = float(doc["alpha"]) if "alpha" in doc else None
        model.threshold = float(doc.get("threshold", DEFAULT_THRESHOLD))
        if "fit" in doc:
            fit = doc["fit"]
            curves = {
                (c["protocol"], c["component"]): (float(c["r2"]) if "r2" in c else None)
                for c in fit.get("curve", [])
            }
            overall = float(fit["r2_overall"]) if "r2_overall" in fit else None
            model.fit = FitReport(curves, overall)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"model file schema mismatch: {exc}") from None
    return model, doc.get("config", {})


def parse_model(text: str) -> DiscoveredModel:
    return parse_model_file(text)[0]


def read_model(path) -> DiscoveredModel:
    return parse_model(Path(path).read_text())
