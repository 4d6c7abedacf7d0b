"""Command-line front end: ``belldiag {simulate,max,fit,report,selftest}``."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .diagnostics import (
    DEFAULT_FRAME,
    DEFAULT_RESTRICTION,
    FRAMES,
    FROZEN,
    REOPTIMIZED,
    FitConfig,
    FitConvergenceError,
    FitResult,
    Predictor,
    fit,
    load_measurements,
    render_report,
    synthetic_selftest,
)
from .network import MODELS, Topology, build_network_state, ideal_cluster, model_from_name
from .quantum import fidelity
from .wwzb import Restriction

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3


class ValidationError(Exception):
    pass


def _bundled(name: str) -> Path:
    return Path(__file__).with_name("data") / name


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _topology(args) -> Topology:
    path = args.topology or _bundled("chain4.json")
    try:
        return Topology.load(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"--topology: cannot load {path}: {exc}") from None


def _params(text: str | None, model, top: Topology) -> tuple | None:
    if text is None:
        return None
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ValidationError(f"--params: expected comma-separated numbers, got {text!r}") from None
    names = model.parameter_names(top)
    if len(vals) != len(names):
        raise ValidationError(f"--params: model takes {len(names)} values ({', '.join(names)}), got {len(vals)}")
    for n, v in zip(names, vals):
        if not (math.isfinite(v) and 0.0 <= v <= 1.0):
            raise ValidationError(f"--params: {n}={v} is outside [0, 1]")
    return tuple(vals)


def _config(args, top: Topology, model) -> FitConfig:
    try:
        return FitConfig(
            model=model,
            topology=top,
            restriction=Restriction(args.restriction),
            settings_policy=args.settings,
            frame=args.frame,
            grid_resolution=args.grid,
            seed=args.seed,
            weighted=getattr(args, "weighted", False),
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _model(args, top: Topology):
    model = model_from_name(args.model)
    try:
        model.parameter_names(top)
    except ValueError as exc:
        raise ValidationError(f"--model: {exc}") from None
    return model


def _text_table(rows: dict) -> str:
    width = max(len(k) for k in rows)
    return "".join(f"{k:<{width}}  {v}\n" for k, v in rows.items())


def cmd_simulate(args) -> str:
    top = _topology(args)
    model = _model(args, top)
    params = _params(args.params, model, top)
    if params is None:
        raise ValidationError("--params is required for simulate")
    state = build_network_state(top, model, params)
    summary = {
        "model": args.model,
        "params": list(params),
        "n_qubits": top.n,
        "fidelity_to_ideal": fidelity(state, ideal_cluster(top)),
        "purity": state.purity(),
    }
    if args.format == "text":
        return _text_table({k: v for k, v in summary.items()})
    return _dumps(summary)


def cmd_max(args) -> str:
    top = _topology(args)
    cfg = _config(args, top, MODELS["gate_failure"] if top.n == 4 else MODELS["qubit_dephasing"])
    try:
        pred = Predictor(cfg)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    rows = [
        {"group": g.id, "labels": [top.label(q) for q in g.keep], "exclusion": [list(e) for e in g.exclusion], "max": v, "classical_bound": 2**g.n_qubits}
        for g, v in zip(pred.groupings, pred.ideal_maxima)
    ]
    if args.format == "text":
        lines = [f"frame={cfg.frame} restriction={cfg.restriction.value}", f"{'qubit group':<30}{'WWZB_max':>10}"]
        for r in rows:
            lines.append(f"{r['group'] + ' (' + ', '.join(r['labels']) + ')':<30}{r['max']:>10.2f}")
        return "\n".join(lines) + "\n"
    echo = cfg.echo()
    echo.pop("model")
    return _dumps({"config": echo, "maxima": rows})


def cmd_fit(args) -> str:
    top = _topology(args)
    model = _model(args, top)
    try:
        labels, obs = load_measurements(args.measurements)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"measurements: cannot load {args.measurements}: {exc}") from None
    if labels and args.topology is None:
        top = Topology(top.n, top.edges, labels)
    if args.resamples and args.resamples < 100:
        raise ValidationError("--resamples must be 0 or at least 100")
    cfg = _config(args, top, model)
    try:
        result = fit(obs, cfg, n_resamples=args.resamples)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if args.format == "text":
        return render_report(result, top).to_text(top)
    return _dumps(result.to_json())


def cmd_report(args) -> str:
    try:
        result = FitResult.from_json(json.loads(Path(args.fit_result).read_text()))
        top = Topology.from_json(result.config["topology"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"fit_result: cannot load {args.fit_result}: {exc}") from None
    report = render_report(result, top)
    if args.format == "text":
        return report.to_text(top)
    return _dumps(report.to_json())


def cmd_selftest(args) -> str:
    top = _topology(args)
    model = _model(args, top)
    if not (math.isfinite(args.sigma) and args.sigma >= 0):
        raise ValidationError(f"--sigma must be a non-negative number, got {args.sigma}")
    if args.repeats < 1:
        raise ValidationError("--repeats must be at least 1")
    cfg = _config(args, top, model)
    params = _params(args.params, model, top)
    if params is None:
        k = len(model.parameter_names(top))
        params = tuple(float(x) for x in np.round(np.random.default_rng([args.seed, 1]).uniform(0.6, 1.0, k), 6))
    pred = Predictor(cfg)
    runs = [synthetic_selftest(params, args.sigma, args.seed + i, cfg, pred) for i in range(args.repeats)]
    errors = np.array([r.errors for r in runs])
    summary = {
        "model": args.model,
        "true_params": list(params),
        "noise_sigma": args.sigma,
        "seed": args.seed,
        "repeats": args.repeats,
        "mean_abs_error": float(errors.mean()),
        "max_error": float(errors.max()),
        "runs": [r.to_json() for r in runs],
    }
    if args.format == "text":
        return _text_table({k: summary[k] for k in ("model", "true_params", "noise_sigma", "repeats", "mean_abs_error", "max_error")})
    return _dumps(summary)


def _probability_step(text: str) -> float:
    v = float(text)
    if not 0 < v <= 0.5:
        raise argparse.ArgumentTypeError(f"grid step must lie in (0, 0.5], got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--topology", help="topology JSON (default: bundled 4-qubit chain)")
    shared.add_argument("--model", default="gate_failure", choices=sorted(MODELS))
    shared.add_argument("--params", help="comma-separated parameter values in [0, 1]")
    shared.add_argument("--restriction", default=DEFAULT_RESTRICTION.value, choices=[r.value for r in Restriction])
    shared.add_argument("--settings", default=FROZEN, choices=[FROZEN, REOPTIMIZED])
    shared.add_argument("--frame", default=DEFAULT_FRAME, choices=FRAMES)
    shared.add_argument("--grid", type=_probability_step, default=0.02)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--out", help="write output here (atomically) instead of stdout")
    shared.add_argument("--format", default="json", choices=["json", "text"])

    p = argparse.ArgumentParser(prog="belldiag", description="Bell-inequality diagnostics for noisy cluster networks")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[shared], help="build a noisy network state and summarise it").set_defaults(fn=cmd_simulate)
    sub.add_parser("max", parents=[shared], help="ideal MABK maxima for every grouping").set_defaults(fn=cmd_max)
    f = sub.add_parser("fit", parents=[shared], help="fit noise parameters to measured Bell values")
    f.add_argument("measurements", help="measurements JSON")
    f.add_argument("--resamples", type=int, default=0, help="parametric-bootstrap resamples (0 skips)")
    f.add_argument("--weighted", action="store_true", help="divide residuals by sigma")
    f.set_defaults(fn=cmd_fit)
    r = sub.add_parser("report", parents=[shared], help="render a saved fit result")
    r.add_argument("fit_result")
    r.set_defaults(fn=cmd_report)
    s = sub.add_parser("selftest", parents=[shared], help="recover known parameters from simulated data")
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--repeats", type=int, default=1)
    s.set_defaults(fn=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.fn(args)
    except ValidationError as exc:
        print(f"belldiag {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FitConvergenceError as exc:
        print(
            f"belldiag {args.command}: fit did not converge: {exc}; best so far params={exc.best_params} objective={exc.best_objective}",
            file=sys.stderr,
        )
        return EXIT_NONCONVERGED
    _emit(text, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
