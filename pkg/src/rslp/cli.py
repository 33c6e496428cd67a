"""Command-line surface: simulate, estimate, evaluate, ablate.

Every command reads one JSON config (see `rslp.config`), writes its
tabular outputs as CSV and structured outputs as JSON into the output
directory, and drops a ``run_meta.json`` with the resolved configuration
and seed so any artifact can be re-derived.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical or
inference error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace as dc_replace
from pathlib import Path

import pandas as pd

from .benchmarks import run_estimator
from .config import SCHEMA_VERSION, config_provenance, load_config
from .ensemble import estimate_rslp
from .errors import ConfigError, DataError, EstimationError, RslpError
from .evaluation import run_ablation, run_rolling_eval
from .inference import bootstrap_irf
from .panel import (VariableRoles, apply_transforms, handle_missing,
                    load_fredmd_csv, standardize)
from .synthetic import export_synthetic, generate_synthetic, load_synthetic_sidecar

IRF_COLUMNS = ["horizon", "beta", "subspace_std", "n_effective", "selected_k",
               "weights_entropy"]
INTERVAL_COLUMNS = ["horizon", "point", "lower", "upper", "width", "method",
                    "B", "block_length"]


def _write_json(path: Path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(out_dir: Path, name: str, frame: pd.DataFrame, config, json_payload=None):
    written = []
    if "csv" in config.output_formats:
        path = out_dir / f"{name}.csv"
        frame.to_csv(path, index=False)
        written.append(path)
    if "json" in config.output_formats:
        path = out_dir / f"{name}.json"
        payload = json_payload if json_payload is not None \
            else frame.to_dict(orient="records")
        _write_json(path, {"schema_version": SCHEMA_VERSION, name: payload})
        written.append(path)
    return written


def _prepare_panel(config, standardize_now: bool):
    """Load or simulate the configured panel, with roles attached."""
    data = config.data
    if data.synthetic is not None:
        panel, _ = generate_synthetic(data.synthetic)
        return panel
    panel, codes = load_fredmd_csv(data.path)
    panel = apply_transforms(panel, codes)

    sidecar_roles = sidecar_categories = None
    if data.sidecar:
        sidecar_roles, sidecar_categories, truth = load_synthetic_sidecar(data.sidecar)
        panel = panel.replace(synthetic_truth=truth)
    if data.target:
        roles = VariableRoles.assign(panel.variable_names, data.target, data.shock,
                                     data.essential, data.high_dimensional)
    elif sidecar_roles is not None:
        roles = sidecar_roles
    else:
        raise ConfigError("data.roles: target and shock are required for file data")
    categories = data.categories if data.categories is not None else sidecar_categories
    panel = panel.replace(roles=roles, categories=categories)
    panel = handle_missing(panel, data.missing_policy, data.max_missing_fraction)
    if standardize_now and data.standardize:
        panel, _ = standardize(panel)
    return panel


def cmd_simulate(config, raw_doc, out_dir: Path) -> int:
    if config.data.synthetic is None:
        raise ConfigError("simulate needs a data.synthetic block")
    panel, _ = generate_synthetic(config.data.synthetic)
    csv_path = out_dir / "panel.csv"
    sidecar_path = out_dir / "truth.json"
    export_synthetic(panel, config.data.synthetic, csv_path, sidecar_path)
    _write_json(out_dir / "run_meta.json",
                config_provenance(config, raw_doc, "simulate"))
    print(f"wrote {csv_path} and {sidecar_path}")
    return 0


def cmd_estimate(config, raw_doc, out_dir: Path) -> int:
    panel = _prepare_panel(config, standardize_now=True)
    horizons = list(config.eval.horizons)
    curves: dict = {}
    estimates = estimate_rslp(panel, panel.roles, horizons, config.estimator,
                              config.seed, metric_curves=curves)
    frame = pd.DataFrame([{
        "horizon": e.horizon, "beta": e.beta, "subspace_std": e.subspace_std,
        "n_effective": e.n_effective, "selected_k": e.selected_k,
        "weights_entropy": e.weights_entropy,
    } for e in estimates], columns=IRF_COLUMNS)
    _emit(out_dir, "irf", frame, config)

    if config.inference.enabled:
        intervals = bootstrap_irf(panel, panel.roles, horizons, config.estimator,
                                  config.inference.bootstrap, workers=config.workers)
        ci_frame = pd.DataFrame([{
            "horizon": ci.horizon, "point": ci.point, "lower": ci.lower,
            "upper": ci.upper, "width": ci.width, "method": ci.method,
            "B": len(ci.replicate_betas), "block_length": ci.block_length,
        } for ci in intervals], columns=INTERVAL_COLUMNS)
        _emit(out_dir, "intervals", ci_frame, config)

    if config.estimator.adaptive is not None and curves:
        _write_json(out_dir / "k_selection.json", {
            "schema_version": SCHEMA_VERSION,
            "metric": config.estimator.adaptive.metric,
            "curves": {str(h): {str(k): v for k, v in curve.items()}
                       for h, curve in curves.items()},
        })
    _write_json(out_dir / "run_meta.json",
                config_provenance(config, raw_doc, "estimate"))
    print(f"estimated {len(estimates)} horizons -> {out_dir}")
    return 0


def cmd_evaluate(config, raw_doc, out_dir: Path) -> int:
    panel = _prepare_panel(config, standardize_now=False)
    report = run_rolling_eval(
        panel, panel.roles, config.estimator, config.eval.window,
        list(config.eval.horizons), with_bootstrap=config.eval.with_bootstrap,
        seed=config.seed, bootstrap=config.inference.bootstrap,
        standardize_windows=config.data.standardize, workers=config.workers)
    _write_json(out_dir / "eval_report.json",
                {"schema_version": SCHEMA_VERSION, **report.to_json_dict()})
    if "csv" in config.output_formats:
        report.windows_frame().to_csv(out_dir / "eval_windows.csv", index=False)
    _write_json(out_dir / "run_meta.json",
                config_provenance(config, raw_doc, "evaluate"))
    print(f"evaluated {report.n_windows} windows -> {out_dir}")
    return 0


def cmd_ablate(config, raw_doc, out_dir: Path) -> int:
    panel = _prepare_panel(config, standardize_now=False)
    table = run_ablation(
        panel, panel.roles, config.estimator, config.eval.window,
        list(config.eval.horizons), list(config.ablation.toggles), config.seed,
        bootstrap=config.inference.bootstrap if config.inference.enabled else None,
        standardize_windows=config.data.standardize,
        fixed_k_fallback=config.ablation.fixed_k, workers=config.workers)
    _emit(out_dir, "ablation", table, config)
    _write_json(out_dir / "run_meta.json",
                config_provenance(config, raw_doc, "ablate"))
    print(f"ablation table with {len(table)} rows -> {out_dir}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
}


def _parse_set(values):
    overrides = {}
    for item in values or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rslp",
        description="Random subspace local projections: impulse response "
                    "estimation for high-dimensional time series.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to the JSON run config")
        cmd.add_argument("--seed", type=int, default=None, help="override config.seed")
        cmd.add_argument("--out", default=None, help="override output.directory")
        cmd.add_argument("--workers", type=int, default=None,
                         help="override config.workers")
        cmd.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override any scalar config leaf, e.g. "
                              "--set estimator.k=12")
    return parser


def _error_report(out_dir: Path | None, exc: Exception, exit_code: int) -> None:
    payload = {"schema_version": SCHEMA_VERSION, "error_type": type(exc).__name__,
               "message": str(exc), "exit_code": exit_code}
    print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            _write_json(out_dir / "error.json", payload)
        except OSError:
            pass


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = None
    try:
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.out is not None:
            overrides.setdefault("output", {})
            overrides["output.directory"] = args.out
            overrides.pop("output")
        config, raw_doc = load_config(args.config, overrides)
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](config, raw_doc, out_dir)
    except ConfigError as exc:
        _error_report(out_dir, exc, 2)
        return 2
    except DataError as exc:
        _error_report(out_dir, exc, 3)
        return 3
    except (EstimationError, RslpError, ValueError, ArithmeticError) as exc:
        _error_report(out_dir, exc, 4)
        return 4
    except OSError as exc:
        _error_report(out_dir, exc, 3)
        return 3


if __name__ == "__main__":
    sys.exit(main())
