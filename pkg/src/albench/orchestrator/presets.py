"""Protocol presets: budget schedules, strategy rosters, and trial counts.

A preset bundles everything the cycle loop needs to reproduce one of the
standard evaluation settings. Every roster includes the random baseline so
each summary can report deltas against it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..core.budget import CLICKS, SAMPLES, Budget
from ..errors import ConfigError
from ..strategies.selectors import (
    CORESET,
    ENSEMBLE_KINDS,
    ENS_VARR,
    ENTROPY,
    LEARN_LOSS,
    RANDOM,
    SEG_ENTROPY,
    StrategySpec,
)

SUPERVISED = "supervised"
SSL = "ssl"
MODES = (SUPERVISED, SSL)

IMAGE = "image"
POLYGON = "polygon"
REGIMES = (IMAGE, POLYGON)

DEFAULT_TRIALS = 3
ENSEMBLE_TRIALS = 2


@dataclass(frozen=True)
class ProtocolPreset:
    """One complete evaluation setting: budget, roster, mode, and regime."""

    name: str
    budget: Budget
    roster: tuple[StrategySpec, ...]
    mode: str = SUPERVISED
    regime: str = IMAGE
    trials: int = DEFAULT_TRIALS

    def __post_init__(self) -> None:
        object.__setattr__(self, "roster", tuple(self.roster))
        if self.mode not in MODES:
            raise ConfigError(f"unknown learner mode {self.mode!r}, expected one of {MODES}")
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}, expected one of {REGIMES}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        kinds = [s.kind for s in self.roster]
        if RANDOM not in kinds:
            raise ConfigError("the roster must always contain the random baseline")
        dupes = {k for k in kinds if kinds.count(k) > 1}
        if dupes:
            raise ConfigError(f"duplicate strategies in roster: {sorted(dupes)}")
        if self.regime == POLYGON and self.budget.unit != CLICKS:
            raise ConfigError("the polygon regime requires a click-denominated budget")

    def trials_for(self, kind: str) -> int:
        """Ensemble strategies run fewer trials; everything else runs `trials`."""
        if kind in ENSEMBLE_KINDS:
            return min(self.trials, ENSEMBLE_TRIALS)
        return self.trials


def _spec(kind: str, **params) -> StrategySpec:
    return StrategySpec(kind=kind, params=params)


BUILTIN_PRESETS: dict[str, ProtocolPreset] = {
    "cifar-large": ProtocolPreset(
        name="cifar-large",
        budget=Budget(unit=SAMPLES, initial=5000, per_cycle=2500, cycles=6),
        roster=(
            _spec(RANDOM),
            _spec(ENTROPY),
            _spec(CORESET),
            _spec(ENS_VARR),
            _spec(LEARN_LOSS),
        ),
        mode=SUPERVISED,
    ),
    "cifar10-low": ProtocolPreset(
        name="cifar10-low",
        budget=Budget(unit=SAMPLES, initial=250, per_cycle=250, cycles=7),
        roster=(_spec(RANDOM), _spec(ENTROPY)),
        mode=SSL,
    ),
    "cifar100-low": ProtocolPreset(
        name="cifar100-low",
        budget=Budget(unit=SAMPLES, initial=500, per_cycle=500, cycles=7),
        roster=(_spec(RANDOM), _spec(ENTROPY)),
        mode=SSL,
    ),
    "seg-clicks": ProtocolPreset(
        name="seg-clicks",
        budget=Budget(unit=CLICKS, initial=5000, per_cycle=5000, cycles=5),
        roster=(_spec(RANDOM), _spec(SEG_ENTROPY)),
        mode=SUPERVISED,
        regime=IMAGE,
    ),
}


def get_preset(name: str) -> ProtocolPreset:
    try:
        return BUILTIN_PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_PRESETS))
        raise ConfigError(f"unknown preset {name!r}; built-ins: {known}") from None


def preset_names() -> list[str]:
    return sorted(BUILTIN_PRESETS)


def scale_preset(
    preset: ProtocolPreset,
    initial: int | None = None,
    per_cycle: int | None = None,
    cycles: int | None = None,
    trials: int | None = None,
) -> ProtocolPreset:
    """Copy a preset with a smaller (or larger) budget, keeping its shape."""
    budget = Budget(
        unit=preset.budget.unit,
        initial=preset.budget.initial if initial is None else initial,
        per_cycle=preset.budget.per_cycle if per_cycle is None else per_cycle,
        cycles=preset.budget.cycles if cycles is None else cycles,
    )
    return replace(
        preset,
        budget=budget,
        trials=preset.trials if trials is None else trials,
    )
