"""Query strategies over prediction bundles."""

from .scores import (
    average_probability_maps,
    check_simplex,
    ranking_hinge,
    seg_uncertainty_score,
    shannon_entropy,
    variation_ratio,
)
from .selectors import (
    CORESET,
    D_SCORE,
    ENS_ENT,
    ENS_VARR,
    ENSEMBLE_KINDS,
    ENTROPY,
    LEARN_LOSS,
    RANDOM,
    REQUIRED_FIELDS,
    SEG_ENTROPY,
    SEG_KINDS,
    STRATEGY_KINDS,
    TIE_LOWER_INDEX,
    Ranking,
    StrategySpec,
    run_strategy,
    select_coreset_greedy,
    select_d_score,
    select_entropy,
    select_learn_loss,
    select_random,
    select_seg_entropy,
    select_varr,
    validate_strategy_spec,
)

__all__ = [
    "CORESET",
    "D_SCORE",
    "ENSEMBLE_KINDS",
    "ENS_ENT",
    "ENS_VARR",
    "ENTROPY",
    "LEARN_LOSS",
    "RANDOM",
    "REQUIRED_FIELDS",
    "SEG_ENTROPY",
    "SEG_KINDS",
    "STRATEGY_KINDS",
    "TIE_LOWER_INDEX",
    "Ranking",
    "StrategySpec",
    "average_probability_maps",
    "check_simplex",
    "ranking_hinge",
    "run_strategy",
    "seg_uncertainty_score",
    "select_coreset_greedy",
    "select_d_score",
    "select_entropy",
    "select_learn_loss",
    "select_random",
    "select_seg_entropy",
    "select_varr",
    "shannon_entropy",
    "validate_strategy_spec",
    "variation_ratio",
]
