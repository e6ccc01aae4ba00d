"""Protocol orchestration: presets, configs, the cycle loop, and summaries."""

from .config import (
    CONV,
    LINEAR,
    MLP,
    MODELS,
    AnnotationConfig,
    DatasetConfig,
    LearnerConfig,
    RunSettings,
    build_datasets,
    build_pool,
    load_raw_config,
    load_settings,
    parse_dataset,
    parse_settings,
)
from .presets import (
    BUILTIN_PRESETS,
    DEFAULT_TRIALS,
    ENSEMBLE_TRIALS,
    IMAGE,
    MODES,
    POLYGON,
    REGIMES,
    SSL,
    SUPERVISED,
    ProtocolPreset,
    get_preset,
    preset_names,
    scale_preset,
)
from .runner import (
    BuiltinLearner,
    RunResult,
    check_roster,
    derive_seed,
    init_class_balanced,
    run_experiment,
    run_trial,
)
from .session import (
    apply_overrides,
    execute_run,
    make_driver,
    run_tolerance_sweep,
    write_run_outputs,
)
from .summary import (
    PLOT_CSV_HEADER,
    RECORDS_DIR,
    SUMMARY_CSV,
    SUMMARY_CSV_HEADER,
    SUMMARY_JSON,
    StrategySummary,
    Summary,
    read_records,
    summarize,
    summary_to_json,
    write_plot_csv,
    write_records,
    write_summary,
    write_summary_csv,
)

__all__ = [
    "BUILTIN_PRESETS",
    "AnnotationConfig",
    "BuiltinLearner",
    "CONV",
    "DEFAULT_TRIALS",
    "DatasetConfig",
    "ENSEMBLE_TRIALS",
    "IMAGE",
    "LINEAR",
    "LearnerConfig",
    "MLP",
    "MODELS",
    "MODES",
    "POLYGON",
    "PLOT_CSV_HEADER",
    "ProtocolPreset",
    "REGIMES",
    "RECORDS_DIR",
    "RunResult",
    "RunSettings",
    "SSL",
    "SUMMARY_CSV",
    "SUMMARY_CSV_HEADER",
    "SUMMARY_JSON",
    "SUPERVISED",
    "StrategySummary",
    "Summary",
    "apply_overrides",
    "build_datasets",
    "build_pool",
    "check_roster",
    "derive_seed",
    "execute_run",
    "get_preset",
    "init_class_balanced",
    "load_raw_config",
    "load_settings",
    "make_driver",
    "parse_dataset",
    "parse_settings",
    "preset_names",
    "read_records",
    "run_experiment",
    "run_tolerance_sweep",
    "run_trial",
    "scale_preset",
    "summarize",
    "summary_to_json",
    "write_plot_csv",
    "write_records",
    "write_run_outputs",
    "write_summary",
    "write_summary_csv",
]
