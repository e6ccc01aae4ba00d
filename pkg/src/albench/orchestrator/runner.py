"""The acquisition loop: initialize, then train / query / annotate / account.

All randomness is derived from (master seed, trial, purpose, cycle) so that
one master seed fully determines every acquisition and every reported number,
and so that every strategy within a trial shares the same initial labeled set
and initial model weights.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..annotation.components import Component, extract_components
from ..annotation.mask import VOID_ID, LabelMask, Polygon, PolygonSet
from ..annotation.pricing import (
    IMAGE_REGIME,
    polygonize_component,
    polygonize_mask,
    price_acquisition,
    select_polygon,
)
from ..annotation.raster import rasterize_polygons, ring_area
from ..annotation.metrics import corpus_mean_iou
from ..core.budget import CLICKS, SAMPLES, Budget
from ..core.dataset import CLASSIFICATION, SEGMENTATION, Dataset
from ..core.pool import PoolState, annotate_polygon, apply_acquisition
from ..core.records import ACCURACY, MIOU, CurvePoint, ExperimentRecord
from ..core.bundle import PredictionBundle
from ..errors import AlbenchError, BudgetError, ConfigError, LearnerError
from ..learners.models import ConvSegmenter, LinearSoftmax, LossHeadModel, ReluMLP
from ..learners.predict import predict_bundle, predict_segmentation
from ..learners.train import (
    EnsembleConfig,
    SSLConfig,
    TrainConfig,
    train_ensemble,
    train_loss_head,
    train_ssl,
    train_supervised,
)
from ..strategies.selectors import (
    ENSEMBLE_KINDS,
    LEARN_LOSS,
    RANDOM,
    REQUIRED_FIELDS,
    SEG_KINDS,
    StrategySpec,
    run_strategy,
    validate_strategy_spec,
)
from .config import CONV, LINEAR, MLP, AnnotationConfig, LearnerConfig
from .presets import POLYGON, SSL, ProtocolPreset

logger = logging.getLogger(__name__)

# Purpose tags for seed derivation; each (trial, purpose, cycle) path gets an
# independent stream.
_INIT, _MODEL, _TRAIN, _STRATEGY, _ANNOTATE = range(5)


def derive_seed(master: int, *parts: int) -> int:
    """Deterministic child seed for one purpose within one run."""
    ss = np.random.SeedSequence([int(master)] + [int(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def init_class_balanced(dataset: Dataset, initial: int, seed: int) -> list[int]:
    """Class-balanced initial labeled set: each class contributes its quota,
    remainder classes are chosen by seed, samples uniformly within class."""
    if dataset.task != CLASSIFICATION:
        raise ConfigError("class-balanced initialization applies to classification only")
    if initial > len(dataset):
        raise ConfigError(
            f"initial budget {initial} exceeds dataset size {len(dataset)}"
        )
    k = dataset.num_classes
    base, rem = divmod(initial, k)
    rng = np.random.default_rng(seed)
    bonus = set(rng.choice(k, size=rem, replace=False).tolist()) if rem else set()
    targets = np.asarray(dataset.targets, dtype=int)
    chosen: list[int] = []
    deficits: list[str] = []
    for c in range(k):
        quota = base + (1 if c in bonus else 0)
        members = np.flatnonzero(targets == c)
        if len(members) < quota:
            deficits.append(f"class {c} has {len(members)} samples, needs {quota}")
            continue
        if quota:
            chosen.extend(int(i) for i in rng.choice(members, size=quota, replace=False))
    if deficits:
        raise ConfigError("cannot draw a class-balanced initial set: " + "; ".join(deficits))
    return sorted(chosen)


class BuiltinLearner:
    """Desk-scale learners behind the driver interface the cycle loop uses.

    An external learner (wire adapter) exposes the same four methods, so the
    loop never needs to know which kind it is talking to.
    """

    def __init__(self, cfg: LearnerConfig, ssl: SSLConfig) -> None:
        self.cfg = cfg
        self.ssl = ssl
        self.name = cfg.model

    def capabilities(self, task: str, kind: str) -> tuple[str, ...]:
        """Bundle fields this learner can produce for the given strategy."""
        if task == CLASSIFICATION:
            fields = ["probs", "features"]
            if kind in ENSEMBLE_KINDS:
                fields.append("ensemble_votes")
            if kind == LEARN_LOSS:
                fields.append("pred_loss")
            return tuple(fields)
        return ("entropy_maps", "features")

    def _make_model(self, dataset: Dataset, seed: int):
        if self.cfg.model == LINEAR:
            return LinearSoftmax(dataset.feature_dim, dataset.num_classes, seed=seed)
        if self.cfg.model == MLP:
            return ReluMLP(
                dataset.feature_dim, dataset.num_classes, hidden=self.cfg.hidden, seed=seed
            )
        if self.cfg.model == CONV:
            channels = int(np.asarray(dataset.items[0]).shape[2])
            return ConvSegmenter(
                channels, dataset.num_classes, filters=self.cfg.filters, seed=seed
            )
        raise ConfigError(f"unknown learner model {self.cfg.model!r}")

    def train(
        self,
        dataset: Dataset,
        labeled: list[int],
        unlabeled: list[int],
        mode: str,
        spec: StrategySpec,
        init_seed: int,
        train_seed: int,
    ) -> list:
        """Train fresh models for one cycle; returns the member list with the
        reporting model first."""
        cfg = replace(self.cfg.train, seed=train_seed)
        if spec.kind in ENSEMBLE_KINDS:
            member_seeds = tuple(
                derive_seed(init_seed, m) for m in range(spec.ensemble_size)
            )
            ens = EnsembleConfig(size=spec.ensemble_size, member_seeds=member_seeds)
            if mode == SSL:
                return [
                    train_ssl(
                        dataset, labeled, unlabeled,
                        self._make_model(dataset, seed), self.ssl, replace(cfg, seed=seed),
                    )
                    for seed in member_seeds
                ]
            return train_ensemble(
                dataset, labeled, lambda seed: self._make_model(dataset, seed), cfg, ens
            )
        if spec.kind == LEARN_LOSS:
            if mode == SSL:
                raise ConfigError("the loss-head learner runs in supervised mode only")
            model = LossHeadModel(self._make_model(dataset, init_seed), seed=init_seed)
            return [train_loss_head(dataset, labeled, model, cfg, margin=spec.hinge_margin)]
        model = self._make_model(dataset, init_seed)
        if mode == SSL:
            return [train_ssl(dataset, labeled, unlabeled, model, self.ssl, cfg)]
        return [train_supervised(dataset, labeled, model, cfg)]

    def bundle(self, models: list, dataset: Dataset, indices: list[int]) -> PredictionBundle:
        return predict_bundle(models, dataset, indices)

    def segmentation_masks(
        self, models: list, dataset: Dataset, indices: list[int]
    ) -> list[LabelMask]:
        return [predict_segmentation(models[0], dataset, i) for i in indices]


def check_roster(preset: ProtocolPreset, driver, task: str, num_classes: int) -> None:
    """Reject impossible strategy/learner pairings before any training runs."""
    for spec in preset.roster:
        validate_strategy_spec(spec, num_classes)
        if preset.regime == POLYGON and spec.kind not in (RANDOM,) + SEG_KINDS:
            raise ConfigError(
                f"strategy {spec.kind!r} cannot drive polygon selection; "
                f"the polygon regime supports random and entropy-map strategies"
            )
        missing = [
            name
            for name in REQUIRED_FIELDS[spec.kind]
            if name not in driver.capabilities(task, spec.kind)
        ]
        if missing:
            raise ConfigError(
                f"strategy {spec.kind!r} needs bundle fields {missing} "
                f"that learner {driver.name!r} cannot produce for {task}"
            )
    if task == SEGMENTATION and preset.mode == SSL:
        raise ConfigError("consistency training is classification-only")
    if task == SEGMENTATION and preset.budget.unit != CLICKS:
        raise ConfigError("segmentation budgets are denominated in clicks")
    if task == CLASSIFICATION and preset.budget.unit != SAMPLES:
        raise ConfigError("classification budgets are denominated in samples")


@dataclass
class _TrialState:
    """Mutable bookkeeping for one trial: the pool plus annotation progress."""

    pool: PoolState
    leftover: int = 0
    # Polygon regime: per image, which component indices are annotated so far
    # and the polygons produced for them, in acquisition order.
    annotated: dict[int, set[int]] = field(default_factory=dict)
    polygons: dict[int, list[Polygon]] = field(default_factory=dict)
    # Cache of tolerance-approximated full masks, by sample index.
    approx: dict[int, LabelMask] = field(default_factory=dict)


def _approx_mask(
    state: _TrialState, dataset: Dataset, index: int, tolerance: float
) -> LabelMask:
    """The annotator's version of a mask: exact at tolerance 0."""
    mask = dataset.targets[index]
    if tolerance == 0:
        return mask
    if index not in state.approx:
        pset = polygonize_mask(mask, tolerance)
        state.approx[index] = rasterize_polygons(
            pset, mask.height, mask.width, void_id=mask.void_id
        )
    return state.approx[index]


def _partial_label(
    mask: LabelMask,
    components: list[Component],
    annotated: set[int],
    polygons: list[Polygon],
) -> LabelMask:
    """Label raster for a partially annotated image.

    Annotated polygons paint largest-first so nesting reconstructs; pixels of
    still-unannotated components are reset to void rather than inheriting an
    enclosing polygon's class.
    """
    ordered = sorted(polygons, key=lambda p: -abs(ring_area(p.ring)))
    pset = PolygonSet(
        polygons=tuple(ordered),
        clicks=sum(len(p.ring) for p in ordered),
        tolerance=0.0,
    )
    canvas = rasterize_polygons(pset, mask.height, mask.width, void_id=mask.void_id)
    pixels = canvas.pixels.copy()
    for ci, comp in enumerate(components):
        if ci not in annotated:
            pixels[comp.mask] = mask.void_id
    return LabelMask(pixels=pixels, void_id=mask.void_id)


def _segmentation_view(
    state: _TrialState, dataset: Dataset, tolerance: float
) -> tuple[Dataset, list[int]]:
    """Dataset whose targets are what the simulated annotator produced."""
    targets = list(dataset.targets)
    for i in sorted(state.pool.labeled):
        targets[i] = _approx_mask(state, dataset, i, tolerance)
    for i in sorted(state.pool.partial_labels):
        comps = extract_components(dataset.targets[i])
        targets[i] = _partial_label(
            dataset.targets[i], comps, state.annotated.get(i, set()), state.polygons.get(i, [])
        )
    train_idx = sorted(state.pool.labeled | set(state.pool.partial_labels))
    view = Dataset(
        items=dataset.items,
        targets=targets,
        num_classes=dataset.num_classes,
        task=SEGMENTATION,
    )
    return view, train_idx


def _init_segmentation(
    dataset: Dataset, initial: int, tolerance: float, seed: int
) -> tuple[dict[int, int], int]:
    """Cycle 0: whole random images, all-or-nothing, until B_i is exhausted."""
    rng = np.random.default_rng(seed)
    remaining = initial
    costs: dict[int, int] = {}
    for i in rng.permutation(len(dataset)):
        cost = price_acquisition(dataset.targets[int(i)], IMAGE_REGIME, tolerance)
        if cost <= remaining:
            costs[int(i)] = cost
            remaining -= cost
    return costs, remaining


def _acquire_samples(
    state: _TrialState, ranking_indices: tuple[int, ...], allowance: int
) -> None:
    chosen = list(ranking_indices[: max(allowance, 0)])
    if chosen:
        state.pool = apply_acquisition(state.pool, set(chosen), {i: 1 for i in chosen})
    state.leftover = allowance - len(chosen)


def _acquire_images(
    state: _TrialState,
    dataset: Dataset,
    ranking_indices: tuple[int, ...],
    allowance: int,
    tolerance: float,
) -> None:
    """Walk the ranking, buying whole images the allowance can afford."""
    costs: dict[int, int] = {}
    remaining = allowance
    for idx in ranking_indices:
        cost = price_acquisition(dataset.targets[idx], IMAGE_REGIME, tolerance)
        if cost <= remaining:
            costs[idx] = cost
            remaining -= cost
    if costs:
        state.pool = apply_acquisition(state.pool, set(costs), costs)
    state.leftover = remaining


def _acquire_polygons(
    state: _TrialState,
    dataset: Dataset,
    spec: StrategySpec,
    entropy_maps: dict[int, np.ndarray],
    allowance: int,
    tolerance: float,
    rng: np.random.Generator,
) -> None:
    """Random image, strategy-chosen component, until the allowance runs dry.

    An image whose chosen polygon is unaffordable is set aside for the rest
    of the cycle (all-or-nothing pricing per polygon).
    """
    remaining = allowance
    eligible = sorted(state.pool.unlabeled | set(state.pool.partial_labels))
    components: dict[int, list[Component]] = {}
    while remaining > 0 and eligible:
        pos = int(rng.integers(len(eligible)))
        index = eligible[pos]
        if index not in components:
            components[index] = extract_components(dataset.targets[index])
        comps = components[index]
        done = state.annotated.setdefault(index, set())
        open_ids = [ci for ci in range(len(comps)) if ci not in done]
        if not open_ids:
            eligible.pop(pos)
            continue
        if spec.kind == RANDOM:
            choice = open_ids[int(rng.integers(len(open_ids)))]
        else:
            local = select_polygon(
                entropy_maps[index],
                [comps[ci] for ci in open_ids],
                spec.entropy_threshold,
            )
            choice = open_ids[local]
        polygon = polygonize_component(comps[choice], tolerance)
        cost = len(polygon.ring)
        if cost > remaining:
            eligible.pop(pos)
            continue
        remaining -= cost
        done.add(choice)
        polys = state.polygons.setdefault(index, [])
        polys.append(polygon)
        complete = len(done) == len(comps)
        pset = PolygonSet(
            polygons=tuple(polys),
            clicks=sum(len(p.ring) for p in polys),
            tolerance=tolerance,
        )
        state.pool = annotate_polygon(state.pool, index, pset, cost, complete)
        if complete:
            eligible.pop(pos)
    state.leftover = remaining


def _evaluate(
    driver,
    models: list,
    test: Dataset,
    approx_test: list[LabelMask] | None,
) -> tuple[float, dict[str, float]]:
    """Held-out metric for the reporting model: accuracy or corpus mIoU.

    Segmentation reports mIoU against the original ground truth as the curve
    value and against the tolerance-approximated ground truth alongside it.
    """
    indices = list(range(len(test)))
    if test.task == CLASSIFICATION:
        bundle = driver.bundle(models, test, indices)
        predicted = np.asarray(bundle.probs).argmax(axis=1)
        truth = np.asarray(test.targets, dtype=int)
        return float((predicted == truth).mean()), {}
    masks = driver.segmentation_masks(models, test, indices)
    value = corpus_mean_iou(list(test.targets), masks, test.num_classes)
    aux: dict[str, float] = {}
    if approx_test is not None:
        aux["miou_approx_gt"] = corpus_mean_iou(approx_test, masks, test.num_classes)
    return value, aux


def run_trial(
    dataset: Dataset,
    test: Dataset,
    preset: ProtocolPreset,
    spec: StrategySpec,
    driver,
    annotation: AnnotationConfig,
    trial: int,
    master_seed: int,
) -> ExperimentRecord:
    """One strategy, one trial: the full initialize/cycle/account loop.

    Drivers that manage per-trial sessions (external adapters) expose
    begin_trial/end_trial hooks; built-in learners need neither.
    """
    begin = getattr(driver, "begin_trial", None)
    if begin is not None:
        begin(derive_seed(master_seed, trial))
    try:
        return _run_trial(dataset, test, preset, spec, driver, annotation, trial, master_seed)
    finally:
        end = getattr(driver, "end_trial", None)
        if end is not None:
            end()


def _run_trial(
    dataset: Dataset,
    test: Dataset,
    preset: ProtocolPreset,
    spec: StrategySpec,
    driver,
    annotation: AnnotationConfig,
    trial: int,
    master_seed: int,
) -> ExperimentRecord:
    task = dataset.task
    budget = preset.budget
    tol = annotation.tolerance

    if task == CLASSIFICATION:
        init = init_class_balanced(dataset, budget.initial, derive_seed(master_seed, trial, _INIT))
        state = _TrialState(
            pool=apply_acquisition(
                PoolState.initial(len(dataset)), set(init), {i: 1 for i in init}
            )
        )
    else:
        costs, leftover = _init_segmentation(
            dataset, budget.initial, tol, derive_seed(master_seed, trial, _INIT)
        )
        state = _TrialState(
            pool=apply_acquisition(PoolState.initial(len(dataset)), set(costs), costs),
            leftover=leftover,
        )

    approx_test = None
    if task == SEGMENTATION:
        helper = _TrialState(pool=PoolState.initial(0))
        approx_test = [_approx_mask(helper, test, i, tol) for i in range(len(test))]

    points: list[CurvePoint] = []
    aux_series: dict[str, list[float]] = {}
    for cycle in range(budget.cycles + 1):
        if task == CLASSIFICATION:
            view, train_idx = dataset, sorted(state.pool.labeled)
        else:
            view, train_idx = _segmentation_view(state, dataset, tol)
        unlabeled = sorted(state.pool.unlabeled)
        models = driver.train(
            view,
            train_idx,
            unlabeled,
            mode=preset.mode,
            spec=spec,
            init_seed=derive_seed(master_seed, trial, _MODEL, cycle),
            train_seed=derive_seed(master_seed, trial, _TRAIN, cycle),
        )
        spent_for_model = state.pool.total_spent

        if cycle < budget.cycles:
            allowance = budget.per_cycle + state.leftover
            _run_acquisition(state, dataset, preset, spec, driver, models, allowance,
                             annotation, trial, cycle, master_seed)
            spent_cap = budget.cumulative_allowance(min(cycle + 1, budget.cycles))
            if state.pool.total_spent > spent_cap:
                raise BudgetError(
                    f"spent {state.pool.total_spent} exceeds allowance {spent_cap}"
                )

        value, aux = _evaluate(driver, models, test, approx_test)
        points.append(CurvePoint(cycle=cycle, spent=spent_for_model, value=value))
        for key, v in aux.items():
            aux_series.setdefault(key, []).append(v)

    return ExperimentRecord(
        preset=preset.name,
        strategy=spec.kind,
        learner=driver.name,
        seed=derive_seed(master_seed, trial),
        metric=ACCURACY if task == CLASSIFICATION else MIOU,
        points=tuple(points),
        aux_curves={k: tuple(v) for k, v in aux_series.items()},
    )


def _run_acquisition(
    state: _TrialState,
    dataset: Dataset,
    preset: ProtocolPreset,
    spec: StrategySpec,
    driver,
    models: list,
    allowance: int,
    annotation: AnnotationConfig,
    trial: int,
    cycle: int,
    master_seed: int,
) -> None:
    """Spend one cycle's allowance (plus any rollover) on new annotations."""
    if allowance <= 0:
        state.leftover = allowance
        return
    task = dataset.task
    strategy_seed = derive_seed(master_seed, trial, _STRATEGY, cycle)

    if preset.regime == POLYGON and task == SEGMENTATION:
        candidates = sorted(state.pool.unlabeled | set(state.pool.partial_labels))
        if not candidates:
            state.leftover = allowance
            return
        maps: dict[int, np.ndarray] = {}
        if spec.kind != RANDOM:
            bundle = driver.bundle(models, dataset, candidates)
            maps = dict(zip(bundle.indices, bundle.entropy_maps))
        rng = np.random.default_rng(derive_seed(master_seed, trial, _ANNOTATE, cycle))
        _acquire_polygons(state, dataset, spec, maps, allowance, annotation.tolerance, rng)
        return

    unlabeled = sorted(state.pool.unlabeled)
    if not unlabeled:
        state.leftover = allowance
        return
    if preset.budget.unit == SAMPLES:
        k = min(allowance, len(unlabeled))
    else:
        k = len(unlabeled)
    bundle = None
    labeled_features = None
    if spec.kind != RANDOM:
        bundle = driver.bundle(models, dataset, unlabeled)
        if "features" in REQUIRED_FIELDS[spec.kind]:
            labeled = sorted(state.pool.labeled)
            labeled_features = driver.bundle(models, dataset, labeled).features
    ranking = run_strategy(
        spec, bundle, state.pool, k, strategy_seed, labeled_features=labeled_features
    )
    if preset.budget.unit == SAMPLES:
        _acquire_samples(state, ranking.indices, allowance)
    else:
        _acquire_images(state, dataset, ranking.indices, allowance, annotation.tolerance)


@dataclass(frozen=True)
class RunResult:
    """Everything one run produced: per-trial records plus recorded failures."""

    records: tuple[ExperimentRecord, ...]
    failures: tuple[dict, ...] = ()


def run_experiment(
    preset: ProtocolPreset,
    dataset: Dataset,
    test: Dataset,
    driver,
    annotation: AnnotationConfig,
    master_seed: int = 0,
) -> RunResult:
    """Every (strategy, trial) pair in the roster, failures tolerated.

    The roster is validated up front so impossible pairings abort before any
    training; a failure inside one trial is recorded and the rest continue.
    """
    check_roster(preset, driver, dataset.task, dataset.num_classes)
    records: list[ExperimentRecord] = []
    failures: list[dict] = []
    for spec in preset.roster:
        for trial in range(preset.trials_for(spec.kind)):
            try:
                records.append(
                    run_trial(dataset, test, preset, spec, driver, annotation, trial, master_seed)
                )
            except AlbenchError as exc:
                logger.warning("trial %d of %s failed: %s", trial, spec.kind, exc)
                failures.append(
                    {"strategy": spec.kind, "trial": trial, "error": str(exc)}
                )
    if not any(r.strategy == RANDOM for r in records):
        raise AlbenchError("every random-baseline trial failed; nothing to compare against")
    return RunResult(records=tuple(records), failures=tuple(failures))
