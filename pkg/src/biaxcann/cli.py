"""Command-line interface: ``biaxcann {fit,sweep,predict,generate,convert}``.

Exit codes: 0 success, 2 input or parse error, 3 numerical divergence,
4 infeasible protocol.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import PathSolveError, ProtocolInfeasible, generate_fixture
from .dataset import Dataset, DatasetFormatError, convert_text, fmt, format_dataset, read_dataset
from .discovery import SweepRun, render_model, run_one, select_run
from .files import FileFormatError, RunConfig, parse_model, read_config, serialize_model
from .kinematics import DomainError
from .training import TrainConfig

log = logging.getLogger("biaxcann")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGED = 3
EXIT_INFEASIBLE = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load_config(args) -> RunConfig:
    try:
        cfg = read_config(args.config)
    except (OSError, FileFormatError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    if getattr(args, "seed", None) is not None:
        cfg.train = dataclasses.replace(cfg.train, seed=args.seed)
        cfg.generate.seed = args.seed
    return cfg


def _load_data(path) -> Dataset:
    if path is None:
        raise CliError("--data is required", EXIT_INPUT)
    try:
        return read_dataset(path)
    except DatasetFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    except OSError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None


def _parse_alphas(text):
    try:
        values = [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise CliError(f"--alpha: cannot parse {text!r}", EXIT_INPUT) from None
    if not values or any(a < 0 for a in values):
        raise CliError("--alpha needs non-negative values", EXIT_INPUT)
    return values


def _safe_name(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9.\-]+", "_", label)


def _curve_files(data: Dataset, model) -> dict[str, str]:
    pred = model.predict(data.lambda1, data.lambda2)
    out = {}
    for label in data.labels():
        mask = data.protocol == label
        for k, comp in enumerate(("p1", "p2")):
            stretch = (data.lambda1 if k == 0 else data.lambda2)[mask]
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["stretch", "measured", "predicted"])
            for s, m, p in zip(stretch, data.measured[mask, k], pred[mask, k]):
                w.writerow([fmt(s), fmt(m), fmt(p)])
            out[f"curves/{_safe_name(label)}_{comp}.csv"] = buf.getvalue()
    return out


def _report(run: SweepRun, config: TrainConfig) -> str:
    m = run.model
    lines = [
        "Discovered constitutive model",
        "",
        render_model(m),
        "",
        f"alpha = {run.alpha:g}, seed = {config.seed}, epochs = {run.state.epoch}",
        f"final loss = {run.state.final_loss:.6g}",
        f"active terms = {m.n_active} (catalog indices {m.indices})",
        "",
        "Goodness of fit (R²)",
    ]
    for (label, comp), r2 in m.fit.r2_per_curve.items():
        lines.append(f"  {label:>8s} {comp}: " + ("undefined" if r2 is None else f"{r2:.4f}"))
    overall = m.fit.r2_overall
    lines.append("  overall: " + ("undefined" if overall is None else f"{overall:.4f}"))
    return "\n".join(lines) + "\n"


def _run_artifacts(data: Dataset, run: SweepRun, config: TrainConfig) -> dict[str, str]:
    files = {
        "model.txt": serialize_model(run.model, config),
        "report.txt": _report(run, config),
    }
    files.update(_curve_files(data, run.model))
    return files


def _write_all(root: Path, files: dict[str, str]):
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _out_dir(args) -> Path:
    if args.out is None:
        raise CliError("--out is required", EXIT_INPUT)
    return Path(args.out)


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    data = _load_data(args.data)
    out = _out_dir(args)
    train = cfg.train
    if args.alpha is not None:
        alphas = _parse_alphas(args.alpha)
        if len(alphas) != 1:
            raise CliError("fit takes a single --alpha; use sweep for several", EXIT_INPUT)
        train = dataclasses.replace(train, alpha=alphas[0])
    run = run_one(data, train, cfg.threshold)
    if not run.ok:
        raise CliError(run.error, EXIT_DIVERGED)
    _write_all(out, _run_artifacts(data, run, train))
    log.info("%s", render_model(run.model))
    return EXIT_OK


def _alpha_dir(alpha: float) -> str:
    return f"alpha_{fmt(alpha)}"


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    data = _load_data(args.data)
    out = _out_dir(args)
    alphas = _parse_alphas(args.alpha) if args.alpha is not None else cfg.alphas
    alphas = sorted({float(a) for a in alphas}, reverse=True)
    runs, configs = [], []
    for a in alphas:
        train = dataclasses.replace(cfg.train, alpha=a)
        log.info("training alpha = %g", a)
        runs.append(run_one(data, train, cfg.threshold))
        configs.append(train)
    if not any(r.ok for r in runs):
        raise CliError("all alpha values diverged: " + "; ".join(r.error for r in runs), EXIT_DIVERGED)
    if cfg.select is not None:
        matches = [i for i, r in enumerate(runs) if r.ok and r.alpha == cfg.select]
        selected = matches[0] if matches else select_run(runs, cfg.margin)
    else:
        selected = select_run(runs, cfg.margin)

    files = {}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "n_active_terms", "r2_overall", "final_loss", "selected", "status"])
    for i, (run, train) in enumerate(zip(runs, configs)):
        mark = "*" if i == selected else ""
        if run.ok:
            r2 = run.model.fit.r2_overall
            w.writerow([
                fmt(run.alpha), run.model.n_active, "" if r2 is None else fmt(r2),
                fmt(run.state.final_loss), mark, "ok",
            ])
            for rel, text in _run_artifacts(data, run, train).items():
                files[f"{_alpha_dir(run.alpha)}/{rel}"] = text
        else:
            w.writerow([fmt(run.alpha), "", "", "", mark, f"diverged: {run.error}"])
    files["sweep_summary.csv"] = buf.getvalue()
    if selected is not None:
        chosen = runs[selected]
        files["model.txt"] = serialize_model(chosen.model, configs[selected])
        files["report.txt"] = _report(chosen, configs[selected])
    _write_all(out, files)
    return EXIT_OK


def _parse_stretches(items) -> tuple[np.ndarray, np.ndarray]:
    l1, l2 = [], []
    for item in items:
        try:
            a, b = (float(x) for x in item.split(","))
        except ValueError:
            raise CliError(f"--stretch expects 'lambda1,lambda2', got {item!r}", EXIT_INPUT) from None
        if not (a > 0 and b > 0):
            raise CliError(f"--stretch {item!r}: stretches must be positive", EXIT_INPUT)
        l1.append(a)
        l2.append(b)
    return np.array(l1), np.array(l2)


def cmd_predict(args) -> int:
    try:
        model = parse_model(Path(args.model).read_text())
    except (OSError, FileFormatError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    if args.stretch:
        l1, l2 = _parse_stretches(args.stretch)
    elif args.data is not None:
        data = _load_data(args.data)
        l1, l2 = data.lambda1, data.lambda2
    else:
        raise CliError("predict needs --stretch or --data", EXIT_INPUT)
    pred = model.predict(l1, l2)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda1", "lambda2", "p1_kpa", "p2_kpa"])
    for a, b, (p1, p2) in zip(l1, l2, pred):
        w.writerow([fmt(a), fmt(b), fmt(p1), fmt(p2)])
    _emit(args.out, buf.getvalue())
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    gen = cfg.generate
    try:
        data = generate_fixture(gen.weights(), gen.protocol_specs())
    except ProtocolInfeasible as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE) from None
    except PathSolveError as exc:
        raise CliError(str(exc), EXIT_DIVERGED) from None
    _emit(args.out, format_dataset(data))
    return EXIT_OK


def cmd_convert(args) -> int:
    if args.data is None:
        raise CliError("--data is required", EXIT_INPUT)
    try:
        text = convert_text(Path(args.data).read_text(), inverse=args.inverse)
    except (DatasetFormatError, DomainError) as exc:
        raise CliError(f"{args.data}: {exc}", EXIT_INPUT) from None
    except OSError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    _emit(args.out, text)
    return EXIT_OK


def _emit(out, text: str):
    if out is None:
        sys.stdout.write(text)
    else:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biaxcann",
        description="Discover sparse hyperelastic models from biaxial stretch-stress data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--data", help="dataset CSV")
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--out", help=out_help)
        p.add_argument("--quiet", action="store_true", help="only report errors")

    p = sub.add_parser("fit", help="train at one alpha and write model, report and curves")
    common(p, "output directory")
    p.add_argument("--alpha", help="penalty weight (overrides [train] alpha)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="train over several alpha values and select a model")
    common(p, "output directory")
    p.add_argument("--alpha", help="comma-separated penalty weights (overrides [sweep] alphas)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("predict", help="evaluate a model file")
    common(p, "output CSV (default: stdout)")
    p.add_argument("--model", required=True, help="model.txt written by fit or sweep")
    p.add_argument("--stretch", action="append", metavar="L1,L2", help="stretch pair; repeatable")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("generate", help="synthesize a dataset from the [generate] block")
    common(p, "output CSV (default: stdout)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("convert", help="Green-Lagrange/2nd Piola CSV to stretch/1st Piola CSV")
    common(p, "output CSV (default: stdout)")
    p.add_argument("--inverse", action="store_true", help="convert stretch/1st Piola back to strain/2nd Piola")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
