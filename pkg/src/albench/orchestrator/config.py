"""Run configuration: TOML/JSON files with dataset, preset, roster, learner,
ssl, annotation, and output sections.

Every validation problem raises ConfigError with the offending section and
key named, so the CLI can exit 2 with a message the user can act on.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on older interpreters
    import tomli as tomllib

from ..core.budget import Budget
from ..core.dataset import (
    CLASSIFICATION,
    SEGMENTATION,
    Dataset,
    load_csv_dataset,
    load_image_dataset,
)
from ..core.synthetic import make_blobs, make_seg_dataset, make_two_moons
from ..errors import ConfigError, LearnerError
from ..learners.train import (
    COSINE,
    GAUSSIAN_NOISE,
    PERTURBATIONS,
    SCHEDULES,
    SSLConfig,
    TrainConfig,
)
from ..strategies.selectors import StrategySpec
from .presets import IMAGE, MODES, REGIMES, ProtocolPreset, get_preset

LINEAR = "linear"
MLP = "mlp"
CONV = "conv"
ADAPTER = "adapter"
MODELS = (LINEAR, MLP, CONV, ADAPTER)

DATASET_KINDS = ("two-moons", "blobs", "seg-blobs", "csv", "image-folder")

SECTIONS = ("dataset", "preset", "roster", "learner", "ssl", "annotation", "output")


@dataclass(frozen=True)
class DatasetConfig:
    kind: str
    n: int = 400
    test_n: int = 200
    num_classes: int = 2
    noise: float = 0.12
    height: int = 24
    width: int = 24
    seed: int = 0
    path: str = ""
    test_path: str = ""
    void_id: int = 255


@dataclass(frozen=True)
class LearnerConfig:
    model: str = MLP
    hidden: tuple[int, int] = (32, 32)
    filters: int = 8
    command: str = ""  # external adapter command; required iff model == "adapter"
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass(frozen=True)
class AnnotationConfig:
    tolerance: float = 0.0
    entropy_threshold: float = 0.6


@dataclass(frozen=True)
class RunSettings:
    """Everything one `run` invocation needs, fully validated."""

    dataset: DatasetConfig
    preset: ProtocolPreset
    learner: LearnerConfig
    ssl: SSLConfig
    annotation: AnnotationConfig
    out_dir: str = "out"
    master_seed: int = 0


def _require_mapping(value: Any, where: str) -> dict:
    if not isinstance(value, Mapping):
        raise ConfigError(f"section [{where}] must be a table, got {type(value).__name__}")
    return dict(value)


def _reject_unknown(table: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"[{where}] unknown keys: {', '.join(unknown)}")


def _get(table: dict, key: str, kind, default, where: str):
    if key not in table:
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"[{where}] {key} must be an integer, got {value!r}")
    if not isinstance(value, kind):
        raise ConfigError(f"[{where}] {key} must be {kind.__name__}, got {value!r}")
    return value


def load_raw_config(path: str | Path) -> dict:
    """Parse a TOML or JSON config file into a plain dict."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    else:
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a table")
    return doc


def _parse_dataset(table: dict) -> DatasetConfig:
    where = "dataset"
    allowed = {
        "kind", "n", "test_n", "num_classes", "noise", "height", "width",
        "seed", "path", "test_path", "void_id",
    }
    _reject_unknown(table, allowed, where)
    kind = _get(table, "kind", str, "", where)
    if kind not in DATASET_KINDS:
        raise ConfigError(f"[dataset] kind must be one of {DATASET_KINDS}, got {kind!r}")
    cfg = DatasetConfig(
        kind=kind,
        n=_get(table, "n", int, 400, where),
        test_n=_get(table, "test_n", int, 200, where),
        num_classes=_get(table, "num_classes", int, 2 if kind == "two-moons" else 3, where),
        noise=_get(table, "noise", float, 0.12 if kind == "two-moons" else 0.15, where),
        height=_get(table, "height", int, 24, where),
        width=_get(table, "width", int, 24, where),
        seed=_get(table, "seed", int, 0, where),
        path=_get(table, "path", str, "", where),
        test_path=_get(table, "test_path", str, "", where),
        void_id=_get(table, "void_id", int, 255, where),
    )
    if cfg.kind in ("csv", "image-folder") and not cfg.path:
        raise ConfigError(f"[dataset] kind {cfg.kind!r} requires a path")
    if cfg.kind in ("two-moons", "blobs", "seg-blobs") and cfg.n < 1:
        raise ConfigError("[dataset] n must be positive")
    return cfg


def parse_dataset(table: dict) -> DatasetConfig:
    """Parse a bare [dataset] table (used by tolerance sweeps)."""
    return _parse_dataset(_require_mapping(table, "dataset"))


def _parse_roster(entries: Any) -> tuple[StrategySpec, ...]:
    if not isinstance(entries, list):
        raise ConfigError("[[roster]] must be an array of strategy tables")
    specs = []
    for i, entry in enumerate(entries):
        table = dict(_require_mapping(entry, f"roster[{i}]"))
        if "kind" not in table:
            raise ConfigError(f"[roster[{i}]] missing 'kind'")
        kind = table.pop("kind")
        if not isinstance(kind, str):
            raise ConfigError(f"[roster[{i}]] kind must be a string")
        specs.append(StrategySpec(kind=kind, params=table))
    return tuple(specs)


def _parse_preset(table: dict, roster_entries: Any) -> ProtocolPreset:
    where = "preset"
    allowed = {"name", "unit", "initial", "per_cycle", "cycles", "trials", "mode", "regime"}
    _reject_unknown(table, allowed, where)
    name = _get(table, "name", str, "", where)
    if name:
        base = get_preset(name)
    else:
        needed = {"unit", "initial", "per_cycle", "cycles"}
        missing = sorted(needed - set(table))
        if missing:
            raise ConfigError(
                f"[preset] needs either name or a full budget; missing: {', '.join(missing)}"
            )
        base = None

    roster = _parse_roster(roster_entries) if roster_entries is not None else None
    if base is not None:
        try:
            budget = Budget(
                unit=_get(table, "unit", str, base.budget.unit, where),
                initial=_get(table, "initial", int, base.budget.initial, where),
                per_cycle=_get(table, "per_cycle", int, base.budget.per_cycle, where),
                cycles=_get(table, "cycles", int, base.budget.cycles, where),
            )
        except ValueError as exc:
            raise ConfigError(f"[preset] invalid budget: {exc}") from exc
        return ProtocolPreset(
            name=base.name,
            budget=budget,
            roster=roster if roster is not None else base.roster,
            mode=_get(table, "mode", str, base.mode, where),
            regime=_get(table, "regime", str, base.regime, where),
            trials=_get(table, "trials", int, base.trials, where),
        )
    if roster is None:
        raise ConfigError("[preset] an inline preset requires a [[roster]] array")
    try:
        budget = Budget(
            unit=table["unit"],
            initial=table["initial"],
            per_cycle=table["per_cycle"],
            cycles=table["cycles"],
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[preset] invalid budget: {exc}") from exc
    return ProtocolPreset(
        name=_get(table, "name", str, "custom", where) or "custom",
        budget=budget,
        roster=roster,
        mode=_get(table, "mode", str, MODES[0], where),
        regime=_get(table, "regime", str, IMAGE, where),
        trials=_get(table, "trials", int, 3, where),
    )


def _parse_learner(table: dict) -> LearnerConfig:
    where = "learner"
    allowed = {
        "model", "hidden", "filters", "command", "lr", "momentum", "weight_decay",
        "epochs", "batch_labeled", "batch_unlabeled", "schedule", "max_steps",
    }
    _reject_unknown(table, allowed, where)
    model = _get(table, "model", str, MLP, where)
    if model not in MODELS:
        raise ConfigError(f"[learner] model must be one of {MODELS}, got {model!r}")
    command = _get(table, "command", str, "", where)
    if model == ADAPTER and not command:
        raise ConfigError("[learner] model = \"adapter\" requires a command")
    if model != ADAPTER and command:
        raise ConfigError("[learner] command only applies to the adapter model")
    hidden = table.get("hidden", [32, 32])
    if (
        not isinstance(hidden, list)
        or len(hidden) != 2
        or not all(isinstance(h, int) and h > 0 for h in hidden)
    ):
        raise ConfigError("[learner] hidden must be a list of two positive integers")
    defaults = TrainConfig()
    max_steps = table.get("max_steps")
    if max_steps is not None and (not isinstance(max_steps, int) or max_steps < 0):
        raise ConfigError("[learner] max_steps must be a non-negative integer")
    try:
        train = TrainConfig(
            base_lr=_get(table, "lr", float, defaults.base_lr, where),
            momentum=_get(table, "momentum", float, defaults.momentum, where),
            weight_decay=_get(table, "weight_decay", float, defaults.weight_decay, where),
            epochs=_get(table, "epochs", int, defaults.epochs, where),
            batch_labeled=_get(table, "batch_labeled", int, defaults.batch_labeled, where),
            batch_unlabeled=_get(table, "batch_unlabeled", int, defaults.batch_unlabeled, where),
            schedule=_get(table, "schedule", str, COSINE, where),
            max_steps=max_steps,
        )
    except LearnerError as exc:
        raise ConfigError(f"[learner] {exc}") from exc
    if train.schedule not in SCHEDULES:
        raise ConfigError(f"[learner] schedule must be one of {SCHEDULES}")
    return LearnerConfig(
        model=model,
        hidden=(hidden[0], hidden[1]),
        filters=_get(table, "filters", int, 8, where),
        command=command,
        train=train,
    )


def _parse_ssl(table: dict) -> SSLConfig:
    where = "ssl"
    allowed = {"weight", "temperature", "confidence_mask", "perturbation", "scale"}
    _reject_unknown(table, allowed, where)
    defaults = SSLConfig()
    perturbation = _get(table, "perturbation", str, GAUSSIAN_NOISE, where)
    if perturbation not in PERTURBATIONS:
        raise ConfigError(f"[ssl] perturbation must be one of {PERTURBATIONS}")
    try:
        return SSLConfig(
            unlabeled_weight=_get(table, "weight", float, defaults.unlabeled_weight, where),
            temperature=_get(table, "temperature", float, defaults.temperature, where),
            confidence_mask=_get(table, "confidence_mask", float, defaults.confidence_mask, where),
            perturbation=perturbation,
            perturbation_scale=_get(table, "scale", float, defaults.perturbation_scale, where),
        )
    except LearnerError as exc:
        raise ConfigError(f"[ssl] {exc}") from exc


def _parse_annotation(table: dict) -> AnnotationConfig:
    where = "annotation"
    _reject_unknown(table, {"tolerance", "entropy_threshold"}, where)
    tolerance = _get(table, "tolerance", float, 0.0, where)
    threshold = _get(table, "entropy_threshold", float, 0.6, where)
    if tolerance < 0:
        raise ConfigError("[annotation] tolerance must be non-negative")
    if threshold <= 0:
        raise ConfigError("[annotation] entropy_threshold must be positive")
    return AnnotationConfig(tolerance=tolerance, entropy_threshold=threshold)


def parse_settings(doc: dict) -> RunSettings:
    """Validate a raw config dict into RunSettings."""
    _reject_unknown(doc, set(SECTIONS) | {"seed"}, "config")
    if "dataset" not in doc:
        raise ConfigError("config must have a [dataset] section")
    if "preset" not in doc:
        raise ConfigError("config must have a [preset] section")
    dataset = _parse_dataset(_require_mapping(doc["dataset"], "dataset"))
    preset = _parse_preset(_require_mapping(doc["preset"], "preset"), doc.get("roster"))
    learner = _parse_learner(_require_mapping(doc.get("learner", {}), "learner"))
    ssl = _parse_ssl(_require_mapping(doc.get("ssl", {}), "ssl"))
    annotation = _parse_annotation(_require_mapping(doc.get("annotation", {}), "annotation"))
    output = _require_mapping(doc.get("output", {}), "output")
    _reject_unknown(output, {"dir"}, "output")
    out_dir = _get(output, "dir", str, "out", "output")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")

    task = SEGMENTATION if dataset.kind in ("seg-blobs", "image-folder") else CLASSIFICATION
    _check_compatibility(preset, learner, task)
    return RunSettings(
        dataset=dataset,
        preset=preset,
        learner=learner,
        ssl=ssl,
        annotation=annotation,
        out_dir=out_dir,
        master_seed=seed,
    )


def _check_compatibility(preset: ProtocolPreset, learner: LearnerConfig, task: str) -> None:
    if task == SEGMENTATION:
        if learner.model != CONV:
            raise ConfigError("segmentation datasets require [learner] model = \"conv\"")
        if preset.mode == "ssl":
            raise ConfigError("consistency training is classification-only; use mode = \"supervised\"")
        if preset.budget.unit != "clicks":
            raise ConfigError("segmentation budgets are denominated in clicks")
    else:
        if learner.model == CONV:
            raise ConfigError("the conv learner is segmentation-only")
        if preset.budget.unit != "samples":
            raise ConfigError("classification budgets are denominated in samples")
        if preset.regime != IMAGE:
            raise ConfigError("the polygon regime applies to segmentation only")


def load_settings(path: str | Path) -> RunSettings:
    return parse_settings(load_raw_config(path))


def build_pool(cfg: DatasetConfig) -> Dataset:
    """Materialize only the pool split (tolerance sweeps need no test set)."""
    if cfg.kind == "seg-blobs":
        return make_seg_dataset(
            cfg.n, height=cfg.height, width=cfg.width,
            num_classes=cfg.num_classes, noise=cfg.noise, seed=cfg.seed,
        )
    if cfg.kind == "image-folder":
        return load_image_dataset(cfg.path, num_classes=cfg.num_classes, void_id=cfg.void_id)
    raise ConfigError(
        f"tolerance sweeps need a segmentation dataset (seg-blobs or image-folder), got {cfg.kind!r}"
    )


def build_datasets(cfg: DatasetConfig) -> tuple[Dataset, Dataset]:
    """Materialize (pool, held-out test) datasets from a dataset config.

    Synthetic kinds draw pool and test splits from different seeds so the
    test set never enters the unlabeled pool.
    """
    if cfg.kind == "two-moons":
        pool = make_two_moons(cfg.n, noise=cfg.noise, seed=cfg.seed)
        test = make_two_moons(cfg.test_n, noise=cfg.noise, seed=cfg.seed + 1)
        return pool, test
    if cfg.kind == "blobs":
        pool = make_blobs(cfg.n, num_classes=cfg.num_classes, seed=cfg.seed)
        test = make_blobs(cfg.test_n, num_classes=cfg.num_classes, seed=cfg.seed + 1)
        return pool, test
    if cfg.kind == "seg-blobs":
        pool = make_seg_dataset(
            cfg.n, height=cfg.height, width=cfg.width,
            num_classes=cfg.num_classes, noise=cfg.noise, seed=cfg.seed,
        )
        test = make_seg_dataset(
            cfg.test_n, height=cfg.height, width=cfg.width,
            num_classes=cfg.num_classes, noise=cfg.noise, seed=cfg.seed + 1,
        )
        return pool, test
    if cfg.kind == "csv":
        if not cfg.test_path:
            raise ConfigError("[dataset] csv datasets need test_path for the held-out split")
        pool = load_csv_dataset(cfg.path, num_classes=cfg.num_classes or None)
        test = load_csv_dataset(cfg.test_path, num_classes=pool.num_classes)
        return pool, test
    if cfg.kind == "image-folder":
        if not cfg.test_path:
            raise ConfigError("[dataset] image-folder datasets need test_path")
        pool = load_image_dataset(cfg.path, num_classes=cfg.num_classes, void_id=cfg.void_id)
        test = load_image_dataset(cfg.test_path, num_classes=cfg.num_classes, void_id=cfg.void_id)
        return pool, test
    raise ConfigError(f"unknown dataset kind {cfg.kind!r}")
