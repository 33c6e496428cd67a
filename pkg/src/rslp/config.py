"""Run configuration: a single JSON document validated up front.

Exactly one of ``data.path`` (a FRED-MD layout CSV) or ``data.synthetic``
(a DGP block) must be present. Every error message is qualified with the
JSON path of the offending key so config mistakes are cheap to find.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

from .ensemble import AdaptiveKConfig, RslpSettings, WeightScheme
from .errors import ConfigError
from .evaluation import ABLATION_TOGGLES, RollingWindowSpec
from .inference import BootstrapConfig
from .synthetic import SyntheticSpec

SCHEMA_VERSION = 1

_SYNTH_FIELDS = {f: None for f in (
    "T", "q", "p", "shock_persistence", "target_persistence", "impact",
    "noise_sd", "control_correlation", "n_categories", "n_relevant",
    "relevant_coef", "seed")}


@dataclass
class DataConfig:
    path: str | None = None
    sidecar: str | None = None
    synthetic: SyntheticSpec | None = None
    target: str | None = None
    shock: str | None = None
    essential: tuple[str, ...] = ()
    high_dimensional: tuple[str, ...] | None = None
    categories: dict[str, str] | None = None
    missing_policy: str = "interpolate"
    max_missing_fraction: float = 0.1
    standardize: bool = True


@dataclass
class InferenceConfig:
    enabled: bool = False
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)


@dataclass
class EvalConfig:
    window: RollingWindowSpec = field(default_factory=RollingWindowSpec)
    horizons: tuple[int, ...] = (1, 3, 6, 12)
    with_bootstrap: bool = False


@dataclass
class AblationConfig:
    toggles: tuple[str, ...] = ABLATION_TOGGLES
    fixed_k: int = 10


@dataclass
class RunConfig:
    seed: int = 0
    workers: int = 1
    data: DataConfig = field(default_factory=DataConfig)
    estimator: RslpSettings = field(default_factory=RslpSettings)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    output_dir: str = "out"
    output_formats: tuple[str, ...] = ("csv", "json")


def _require_mapping(doc, key, path):
    value = doc.get(key)
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return value


def _known_keys(doc, allowed, path):
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")


def _scalar(doc, key, kind, path, default):
    if key not in doc or doc[key] is None:
        return default
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}")
    if not isinstance(value, kind):
        raise ConfigError(f"{path}.{key}: expected {kind.__name__}, "
                          f"got {type(value).__name__}")
    return value


def _build_data(doc, seed) -> DataConfig:
    path = "data"
    _known_keys(doc, ("path", "sidecar", "synthetic", "roles", "categories",
                      "missing_policy", "max_missing_fraction", "standardize"), path)
    has_path = doc.get("path") is not None
    has_synth = doc.get("synthetic") is not None
    if has_path == has_synth:
        raise ConfigError("data: exactly one of data.path or data.synthetic "
                          "must be present")
    synthetic = None
    if has_synth:
        block = doc["synthetic"]
        if not isinstance(block, dict):
            raise ConfigError("data.synthetic: expected an object")
        _known_keys(block, _SYNTH_FIELDS, "data.synthetic")
        kwargs = {k: v for k, v in block.items() if v is not None}
        kwargs.setdefault("seed", seed)
        try:
            synthetic = SyntheticSpec(**kwargs)
        except ConfigError as exc:
            raise ConfigError(f"data.synthetic: {exc}") from None

    roles = _require_mapping(doc, "roles", "data.roles")
    _known_keys(roles, ("target", "shock", "essential", "high_dimensional"),
                "data.roles")
    if has_path and (not roles.get("target") or not roles.get("shock")):
        raise ConfigError("data.roles: target and shock are required for file data")

    missing_policy = _scalar(doc, "missing_policy", str, path, "interpolate")
    if missing_policy not in ("interpolate", "drop_variable", "drop_rows"):
        raise ConfigError(f"data.missing_policy: unknown policy {missing_policy!r}")
    standardize = doc.get("standardize")
    if standardize is None:
        standardize = has_path  # raw units keep synthetic truths comparable
    elif not isinstance(standardize, bool):
        raise ConfigError("data.standardize: expected true/false")

    hd = roles.get("high_dimensional")
    return DataConfig(
        path=doc.get("path"),
        sidecar=doc.get("sidecar"),
        synthetic=synthetic,
        target=roles.get("target"),
        shock=roles.get("shock"),
        essential=tuple(roles.get("essential") or ()),
        high_dimensional=None if hd is None else tuple(hd),
        categories=doc.get("categories"),
        missing_policy=missing_policy,
        max_missing_fraction=_scalar(doc, "max_missing_fraction", float, path, 0.1),
        standardize=standardize,
    )


def _build_estimator(doc) -> RslpSettings:
    path = "estimator"
    _known_keys(doc, ("n_subspaces", "k", "adaptive_k", "weights", "sampler",
                      "quotas", "holdout_fraction"), path)
    adaptive = None
    if doc.get("adaptive_k") is not None:
        block = doc["adaptive_k"]
        if not isinstance(block, dict):
            raise ConfigError("estimator.adaptive_k: expected an object")
        _known_keys(block, ("k_min", "k_max", "expansion_factor", "threshold",
                            "metric", "n_folds", "max_expansions"),
                    "estimator.adaptive_k")
        kwargs = {k: v for k, v in block.items() if v is not None}
        if "threshold" in block and block["threshold"] is None:
            kwargs.pop("threshold", None)
        try:
            adaptive = AdaptiveKConfig(**kwargs)
        except ConfigError as exc:
            raise ConfigError(f"estimator.adaptive_k: {exc}") from None

    weights = WeightScheme()
    if doc.get("weights") is not None:
        block = doc["weights"]
        if not isinstance(block, dict):
            raise ConfigError("estimator.weights: expected an object")
        _known_keys(block, ("kind", "bic_lambda", "epsilon"), "estimator.weights")
        try:
            weights = WeightScheme(**{k: v for k, v in block.items() if v is not None})
        except ConfigError as exc:
            raise ConfigError(f"estimator.weights: {exc}") from None

    k = doc.get("k")
    if k is None and adaptive is None:
        k = 10
    quotas = doc.get("quotas")
    if quotas is not None and not isinstance(quotas, dict):
        raise ConfigError("estimator.quotas: expected an object of category -> count")
    try:
        return RslpSettings(
            n_subspaces=_scalar(doc, "n_subspaces", int, path, 100),
            k=k, adaptive=adaptive, weights=weights,
            sampler=_scalar(doc, "sampler", str, path, "uniform"),
            quotas=quotas,
            holdout_fraction=_scalar(doc, "holdout_fraction", float, path, 0.0),
        )
    except ConfigError as exc:
        raise ConfigError(f"estimator: {exc}") from None


def _build_inference(doc, seed) -> InferenceConfig:
    path = "inference"
    _known_keys(doc, ("enabled", "replicates", "block_length", "interval",
                      "confidence", "unit"), path)
    try:
        bootstrap = BootstrapConfig(
            replicates=_scalar(doc, "replicates", int, path, 200),
            block_length=doc.get("block_length"),
            interval=_scalar(doc, "interval", str, path, "percentile"),
            confidence=_scalar(doc, "confidence", float, path, 0.95),
            seed=seed,
            unit=_scalar(doc, "unit", str, path, "pairs"),
        )
    except ConfigError as exc:
        raise ConfigError(f"inference: {exc}") from None
    enabled = doc.get("enabled", False)
    if not isinstance(enabled, bool):
        raise ConfigError("inference.enabled: expected true/false")
    return InferenceConfig(enabled=enabled, bootstrap=bootstrap)


def _build_eval(doc) -> EvalConfig:
    path = "eval"
    _known_keys(doc, ("train_length", "test_length", "step", "horizons",
                      "with_bootstrap"), path)
    try:
        window = RollingWindowSpec(
            train_length=_scalar(doc, "train_length", int, path, 180),
            test_length=_scalar(doc, "test_length", int, path, 24),
            step=_scalar(doc, "step", int, path, 1),
        )
    except ConfigError as exc:
        raise ConfigError(f"eval: {exc}") from None
    horizons = doc.get("horizons", [1, 3, 6, 12])
    if (not isinstance(horizons, list) or not horizons
            or not all(isinstance(h, int) and not isinstance(h, bool) for h in horizons)):
        raise ConfigError("eval.horizons: expected a nonempty list of integers")
    if any(h < 0 for h in horizons):
        raise ConfigError("eval.horizons: horizons must be nonnegative")
    if len(set(horizons)) != len(horizons):
        raise ConfigError("eval.horizons: horizons must be distinct")
    with_bootstrap = doc.get("with_bootstrap", False)
    if not isinstance(with_bootstrap, bool):
        raise ConfigError("eval.with_bootstrap: expected true/false")
    return EvalConfig(window=window, horizons=tuple(horizons),
                      with_bootstrap=with_bootstrap)


def _build_ablation(doc) -> AblationConfig:
    _known_keys(doc, ("toggles", "fixed_k"), "ablation")
    toggles = doc.get("toggles")
    if toggles is None:
        toggles = list(ABLATION_TOGGLES)
    if not isinstance(toggles, list):
        raise ConfigError("ablation.toggles: expected a list")
    bad = sorted(set(toggles) - set(ABLATION_TOGGLES))
    if bad:
        raise ConfigError(f"ablation.toggles: unknown toggles {bad}")
    fixed_k = _scalar(doc, "fixed_k", int, "ablation", 10)
    if fixed_k < 1:
        raise ConfigError("ablation.fixed_k: must be at least 1")
    return AblationConfig(toggles=tuple(toggles), fixed_k=fixed_k)


def build_config(doc: dict) -> RunConfig:
    """Validate a raw JSON document into a `RunConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _known_keys(doc, ("seed", "workers", "data", "estimator", "inference",
                      "eval", "ablation", "output"), "config")
    seed = _scalar(doc, "seed", int, "config", 0)
    if seed < 0:
        raise ConfigError("config.seed: must be nonnegative")
    workers = _scalar(doc, "workers", int, "config", 1)
    if workers < 1:
        raise ConfigError("config.workers: must be at least 1")
    if "data" not in doc:
        raise ConfigError("config: missing required 'data' block")
    output = _require_mapping(doc, "output", "output")
    _known_keys(output, ("directory", "formats"), "output")
    formats = output.get("formats", ["csv", "json"])
    if not isinstance(formats, list) or not set(formats) <= {"csv", "json"}:
        raise ConfigError("output.formats: expected a list drawn from ['csv', 'json']")
    return RunConfig(
        seed=seed,
        workers=workers,
        data=_build_data(_require_mapping(doc, "data", "data"), seed),
        estimator=_build_estimator(_require_mapping(doc, "estimator", "estimator")),
        inference=_build_inference(_require_mapping(doc, "inference", "inference"), seed),
        eval=_build_eval(_require_mapping(doc, "eval", "eval")),
        ablation=_build_ablation(_require_mapping(doc, "ablation", "ablation")),
        output_dir=output.get("directory", "out"),
        output_formats=tuple(formats),
    )


def load_config(path, overrides=None) -> tuple[RunConfig, dict]:
    """Read, override and validate a config file.

    ``overrides`` maps dotted key paths to values (already parsed); they
    are applied to the raw document before validation. Returns the config
    and the resolved raw document (embedded in output provenance).
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    for dotted, value in (overrides or {}).items():
        node = doc
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {dotted}: {part} is not an object")
        node[parts[-1]] = value
    return build_config(doc), doc


def config_provenance(config: RunConfig, raw_doc: dict, command: str) -> dict:
    """Fully resolved configuration for embedding in every output."""
    resolved = {
        "seed": config.seed,
        "workers": config.workers,
        "data": asdict(config.data),
        "estimator": asdict(config.estimator),
        "inference": {"enabled": config.inference.enabled,
                      **asdict(config.inference.bootstrap)},
        "eval": {**asdict(config.eval.window),
                 "horizons": list(config.eval.horizons),
                 "with_bootstrap": config.eval.with_bootstrap},
        "ablation": asdict(config.ablation),
        "output": {"directory": config.output_dir,
                   "formats": list(config.output_formats)},
    }
    adaptive = resolved["estimator"].get("adaptive")
    if adaptive and math.isinf(adaptive.get("threshold", 0)):
        adaptive["threshold"] = None  # JSON has no infinity
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": config.seed,
        "config": resolved,
        "raw_config": raw_doc,
    }
