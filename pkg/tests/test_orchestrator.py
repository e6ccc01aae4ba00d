"""Presets, config parsing, the cycle runner, summaries, and sessions."""

from __future__ import annotations

import dataclasses
import json
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

import albench.orchestrator as orch
from albench.core import make_two_moons
from albench.errors import AlbenchError, ConfigError, LearnerError
from albench.orchestrator import runner as runner_mod
from albench.strategies import StrategySpec

BUILTIN_NAMES = ["cifar-large", "cifar10-low", "cifar100-low", "seg-clicks"]


def moons_doc(**overrides) -> dict:
    doc = {
        "seed": 11,
        "dataset": {"kind": "two-moons", "n": 80, "test_n": 40, "seed": 3},
        "preset": {
            "unit": "samples",
            "initial": 10,
            "per_cycle": 10,
            "cycles": 2,
            "mode": "supervised",
            "regime": "image",
            "trials": 2,
        },
        "roster": [{"kind": "random"}, {"kind": "entropy"}],
        "learner": {"model": "linear", "lr": 0.5, "epochs": 8, "batch_labeled": 16},
    }
    doc.update(overrides)
    return doc


def run_doc(doc: dict, tmp_path: Path):
    settings = orch.parse_settings(doc)
    pool, test = orch.build_datasets(settings.dataset)
    driver = orch.make_driver(settings, pool, test, tmp_path / "work")
    result = orch.run_experiment(
        settings.preset, pool, test, driver, settings.annotation,
        master_seed=settings.master_seed,
    )
    return settings, result


@pytest.fixture(scope="module")
def moons_run(tmp_path_factory):
    doc = moons_doc(roster=[{"kind": "random"}, {"kind": "entropy"}, {"kind": "ens_varr"}])
    doc["preset"]["trials"] = 3
    return run_doc(doc, tmp_path_factory.mktemp("moons-run"))


class TestPresets:
    def test_builtin_names(self):
        assert orch.preset_names() == BUILTIN_NAMES

    def test_large_budget_schedule(self):
        preset = orch.get_preset("cifar-large")
        budget = preset.budget
        assert (budget.unit, budget.initial, budget.per_cycle, budget.cycles) == (
            "samples", 5000, 2500, 6,
        )
        assert budget.schedule() == [5000 + 2500 * k for k in range(7)]
        assert budget.total == 20000
        assert preset.mode == "supervised"
        assert [s.kind for s in preset.roster] == [
            "random", "entropy", "coreset", "ens_varr", "learn_loss",
        ]

    def test_low_budget_totals(self):
        low10 = orch.get_preset("cifar10-low")
        low100 = orch.get_preset("cifar100-low")
        assert low10.budget.total == 2000
        assert low100.budget.total == 4000
        assert low10.mode == low100.mode == "ssl"
        for preset in (low10, low100):
            assert [s.kind for s in preset.roster] == ["random", "entropy"]

    def test_click_preset(self):
        preset = orch.get_preset("seg-clicks")
        assert preset.budget.unit == "clicks"
        assert preset.mode == "supervised"
        assert [s.kind for s in preset.roster] == ["random", "seg_entropy"]

    def test_all_presets_start_with_random(self):
        for name in orch.preset_names():
            assert orch.get_preset(name).roster[0].kind == "random"

    def test_default_trials(self):
        assert orch.DEFAULT_TRIALS == 3
        assert orch.ENSEMBLE_TRIALS == 2
        for name in orch.preset_names():
            assert orch.get_preset(name).trials == 3

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            orch.get_preset("cifar")

    def test_scale_preset_partial_override(self):
        base = orch.get_preset("cifar10-low")
        scaled = orch.scale_preset(base, initial=10, cycles=4, trials=1)
        assert scaled.budget.initial == 10
        assert scaled.budget.cycles == 4
        assert scaled.budget.per_cycle == base.budget.per_cycle
        assert scaled.trials == 1
        assert scaled.roster == base.roster
        assert base.budget.initial == 250  # original untouched


class TestConfigParsing:
    def test_toml_file(self, tmp_path):
        text = """
seed = 7

[dataset]
kind = "two-moons"
n = 60
test_n = 30

[preset]
name = "cifar10-low"
trials = 1

[[roster]]
kind = "random"

[[roster]]
kind = "entropy"

[learner]
model = "mlp"
epochs = 3

[output]
dir = "results"
"""
        path = tmp_path / "run.toml"
        path.write_text(text)
        settings = orch.load_settings(path)
        assert settings.master_seed == 7
        assert settings.dataset.n == 60
        assert settings.preset.name == "cifar10-low"
        assert settings.preset.trials == 1
        assert settings.preset.budget.initial == 250  # from the named preset
        assert settings.preset.mode == "ssl"
        assert settings.learner.model == "mlp"
        assert settings.learner.train.epochs == 3
        assert settings.out_dir == "results"

    def test_json_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(moons_doc()))
        settings = orch.load_settings(path)
        assert settings.preset.budget.schedule() == [10, 20, 30]

    def test_unreadable_config(self, tmp_path):
        with pytest.raises(ConfigError):
            orch.load_settings(tmp_path / "missing.toml")
        bad = tmp_path / "bad.toml"
        bad.write_text("not = [valid")
        with pytest.raises(ConfigError):
            orch.load_settings(bad)

    def test_defaults(self):
        settings = orch.parse_settings(
            {
                "dataset": {"kind": "two-moons"},
                "preset": {"unit": "samples", "initial": 5, "per_cycle": 5, "cycles": 1},
                "roster": [{"kind": "random"}],
            }
        )
        assert settings.master_seed == 0
        assert settings.preset.trials == 3
        assert settings.preset.mode == "supervised"
        assert settings.preset.regime == "image"
        assert settings.preset.name == "custom"
        assert settings.out_dir == "out"
        assert settings.annotation.tolerance == 0.0
        assert settings.learner.model == "mlp"

    def test_named_preset_keeps_budget_under_overrides(self):
        settings = orch.parse_settings(
            {
                "dataset": {"kind": "two-moons"},
                "preset": {"name": "cifar100-low", "trials": 1},
                "roster": [{"kind": "random"}],
            }
        )
        assert settings.preset.budget.total == 4000
        assert settings.preset.trials == 1

    def test_inline_preset_requires_full_budget(self):
        with pytest.raises(ConfigError, match="missing"):
            orch.parse_settings(
                {
                    "dataset": {"kind": "two-moons"},
                    "preset": {"unit": "samples", "initial": 5},
                    "roster": [{"kind": "random"}],
                }
            )

    def test_roster_shape_errors(self):
        with pytest.raises(ConfigError, match="array"):
            orch.parse_settings(moons_doc(roster={"kind": "random"}))
        with pytest.raises(ConfigError, match="kind"):
            orch.parse_settings(moons_doc(roster=[{"params": {}}]))
        with pytest.raises(ConfigError, match="unknown strategy"):
            orch.parse_settings(moons_doc(roster=[{"kind": "bogus"}]))

    @pytest.mark.parametrize(
        "mutate, message",
        [
            ({"bogus": 1}, "unknown keys"),
            ({"learner": {"model": "linear", "nope": 2}}, "unknown keys"),
            ({"learner": {"model": "adapter"}}, "requires a command"),
            ({"learner": {"model": "linear", "command": "python x"}}, "adapter"),
            ({"learner": {"model": "conv"}}, "segmentation-only"),
        ],
    )
    def test_rejected_documents(self, mutate, message):
        with pytest.raises(ConfigError, match=message):
            orch.parse_settings(moons_doc(**mutate))

    def test_compatibility_rules(self):
        seg_doc = moons_doc(
            dataset={"kind": "seg-blobs", "n": 4},
            learner={"model": "conv"},
        )
        with pytest.raises(ConfigError, match="clicks"):
            orch.parse_settings(seg_doc)  # samples budget on segmentation

        seg_doc["preset"] = {**seg_doc["preset"], "unit": "clicks", "mode": "ssl"}
        with pytest.raises(ConfigError, match="classification-only"):
            orch.parse_settings(seg_doc)

        with pytest.raises(ConfigError, match='model = "conv"'):
            orch.parse_settings(
                moons_doc(dataset={"kind": "seg-blobs", "n": 4},
                          preset={**moons_doc()["preset"], "unit": "clicks"})
            )

        with pytest.raises(ConfigError, match="click-denominated"):
            orch.parse_settings(
                moons_doc(preset={**moons_doc()["preset"], "regime": "polygon"})
            )

        with pytest.raises(ConfigError, match="samples"):
            orch.parse_settings(
                moons_doc(preset={**moons_doc()["preset"], "unit": "clicks"})
            )

    def test_mode_and_regime_validated(self):
        with pytest.raises(ConfigError, match="mode"):
            orch.parse_settings(moons_doc(preset={**moons_doc()["preset"], "mode": "x"}))
        with pytest.raises(ConfigError, match="regime"):
            orch.parse_settings(moons_doc(preset={**moons_doc()["preset"], "regime": "x"}))
        with pytest.raises(ConfigError, match="positive"):
            orch.parse_settings(moons_doc(preset={**moons_doc()["preset"], "trials": 0}))

    def test_parse_does_not_mutate_input(self):
        doc = moons_doc()
        snapshot = json.dumps(doc, sort_keys=True)
        orch.parse_settings(doc)
        assert json.dumps(doc, sort_keys=True) == snapshot

    def test_apply_overrides(self):
        settings = orch.parse_settings(moons_doc())
        changed = orch.apply_overrides(settings, trials=1, seed=42)
        assert changed.preset.trials == 1
        assert changed.master_seed == 42
        unchanged = orch.apply_overrides(settings)
        assert unchanged.preset.trials == settings.preset.trials
        assert unchanged.master_seed == settings.master_seed


class TestSeeds:
    def test_derive_seed_deterministic(self):
        assert orch.derive_seed(5, 1, 2) == orch.derive_seed(5, 1, 2)

    def test_derive_seed_sensitive_to_every_part(self):
        base = orch.derive_seed(5, 1, 2)
        assert orch.derive_seed(6, 1, 2) != base
        assert orch.derive_seed(5, 2, 2) != base
        assert orch.derive_seed(5, 1, 3) != base
        assert orch.derive_seed(5, 1) != base

    def test_derive_seed_uint32(self):
        for parts in [(0,), (1, 2, 3), (2**31, 7)]:
            value = orch.derive_seed(9, *parts)
            assert 0 <= value < 2**32

    def test_init_class_balanced(self):
        dataset = make_two_moons(100, seed=0)
        picked = orch.init_class_balanced(dataset, 10, seed=4)
        assert len(picked) == 10
        assert len(set(picked)) == 10
        counts = Counter(np.asarray(dataset.targets)[picked].tolist())
        assert sorted(counts.values()) == [5, 5]

    def test_init_class_balanced_uneven_split(self):
        dataset = make_two_moons(100, seed=0)
        picked = orch.init_class_balanced(dataset, 7, seed=1)
        counts = Counter(np.asarray(dataset.targets)[picked].tolist())
        assert sorted(counts.values()) == [3, 4]

    def test_init_class_balanced_deterministic(self):
        dataset = make_two_moons(100, seed=0)
        assert orch.init_class_balanced(dataset, 10, seed=4) == orch.init_class_balanced(
            dataset, 10, seed=4
        )
        assert orch.init_class_balanced(dataset, 10, seed=4) != orch.init_class_balanced(
            dataset, 10, seed=5
        )


class TestRunner:
    def test_record_counts_and_ensemble_clamp(self, moons_run):
        _, result = moons_run
        counts = Counter(r.strategy for r in result.records)
        assert counts == {"random": 3, "entropy": 3, "ens_varr": 2}
        assert result.failures == ()

    def test_spend_schedule_exact(self, moons_run):
        settings, result = moons_run
        schedule = settings.preset.budget.schedule()
        for record in result.records:
            assert [p.spent for p in record.points] == schedule
            assert [p.cycle for p in record.points] == list(range(len(schedule)))

    def test_metric_and_provenance(self, moons_run):
        settings, result = moons_run
        for record in result.records:
            assert record.metric == "accuracy"
            assert record.learner == "linear"
            assert record.preset == settings.preset.name
            assert all(0.0 <= p.value <= 1.0 for p in record.points)

    def test_first_cycle_shared_across_strategies(self, moons_run):
        _, result = moons_run
        first_by_seed: dict[int, set[float]] = {}
        for record in result.records:
            first_by_seed.setdefault(record.seed, set()).add(record.points[0].value)
        assert len(first_by_seed) == 3
        for values in first_by_seed.values():
            assert len(values) == 1

    def test_replay_is_identical(self, tmp_path):
        doc = moons_doc()
        _, first = run_doc(doc, tmp_path / "a")
        _, second = run_doc(doc, tmp_path / "b")
        assert list(first.records) == list(second.records)

    def test_master_seed_changes_trials(self, tmp_path):
        _, first = run_doc(moons_doc(seed=1), tmp_path / "a")
        _, second = run_doc(moons_doc(seed=2), tmp_path / "b")
        assert {r.seed for r in first.records}.isdisjoint(r.seed for r in second.records)

    def test_failed_strategy_skipped_not_fatal(self, tmp_path, monkeypatch):
        doc = moons_doc()
        settings = orch.parse_settings(doc)
        pool, test = orch.build_datasets(settings.dataset)
        driver = orch.make_driver(settings, pool, test, tmp_path)

        original = runner_mod.run_strategy

        def failing(spec, *args, **kwargs):
            if spec.kind == "entropy":
                raise LearnerError("forced failure")
            return original(spec, *args, **kwargs)

        monkeypatch.setattr(runner_mod, "run_strategy", failing)
        result = orch.run_experiment(
            settings.preset, pool, test, driver, settings.annotation, master_seed=11
        )
        assert {r.strategy for r in result.records} == {"random"}
        assert len(result.failures) == 2
        for entry in result.failures:
            assert entry["strategy"] == "entropy"
            assert "forced failure" in entry["error"]

    def test_all_random_failures_abort(self, tmp_path, monkeypatch):
        doc = moons_doc()
        settings = orch.parse_settings(doc)
        pool, test = orch.build_datasets(settings.dataset)
        driver = orch.make_driver(settings, pool, test, tmp_path)

        def always_failing(spec, *args, **kwargs):
            raise LearnerError("forced failure")

        monkeypatch.setattr(runner_mod, "run_strategy", always_failing)
        with pytest.raises(AlbenchError, match="random"):
            orch.run_experiment(
                settings.preset, pool, test, driver, settings.annotation, master_seed=11
            )

    def test_roster_must_include_random(self):
        settings = orch.parse_settings(moons_doc())
        with pytest.raises(ConfigError, match="random"):
            dataclasses.replace(settings.preset, roster=(StrategySpec("entropy", {}),))

    def test_click_budget_run(self, tmp_path):
        doc = {
            "seed": 5,
            "dataset": {
                "kind": "seg-blobs", "n": 6, "test_n": 3,
                "height": 12, "width": 12, "num_classes": 3, "seed": 2,
            },
            "preset": {
                "unit": "clicks", "initial": 40, "per_cycle": 30, "cycles": 2,
                "mode": "supervised", "regime": "image", "trials": 1,
            },
            "roster": [{"kind": "random"}, {"kind": "seg_entropy"}],
            "learner": {"model": "conv", "filters": 4, "lr": 0.05,
                        "epochs": 2, "batch_labeled": 4},
            "annotation": {"tolerance": 1.0, "entropy_threshold": 0.5},
        }
        settings, result = run_doc(doc, tmp_path)
        assert len(result.records) == 2
        budget = settings.preset.budget
        for record in result.records:
            assert record.metric == "miou"
            spends = [p.spent for p in record.points]
            assert spends == sorted(spends)
            for point in record.points:
                # all-or-nothing purchases never exceed the allowance so far
                assert point.spent <= budget.cumulative_allowance(point.cycle)
            approx = record.aux_curves["miou_approx_gt"]
            assert len(approx) == len(record.points)
            assert all(0.0 <= v <= 1.0 for v in approx)


class TestSummary:
    def test_grouping_and_delta(self, moons_run):
        _, result = moons_run
        summary = orch.summarize(list(result.records), list(result.failures))
        assert summary.metric == "accuracy"
        by_name = {s.strategy: s for s in summary.strategies}
        assert set(by_name) == {"random", "entropy", "ens_varr"}
        assert by_name["random"].trials == 3
        assert by_name["ens_varr"].trials == 2
        assert by_name["random"].delta_vs_random_final == 0.0

        random_final = by_name["random"].mean_value[-1]
        for name in ("entropy", "ens_varr"):
            expected = by_name[name].mean_value[-1] - random_final
            assert by_name[name].delta_vs_random_final == pytest.approx(expected)

    def test_mean_curves_match_records(self, moons_run):
        _, result = moons_run
        summary = orch.summarize(list(result.records))
        by_name = {s.strategy: s for s in summary.strategies}
        entropy_records = [r for r in result.records if r.strategy == "entropy"]
        manual = np.mean([[p.value for p in r.points] for r in entropy_records], axis=0)
        assert by_name["entropy"].mean_value == pytest.approx(tuple(manual))
        spends = [float(p.spent) for p in entropy_records[0].points]
        assert list(by_name["entropy"].mean_spent) == spends

    def test_summarize_rejects_mixed_metrics(self, moons_run):
        _, result = moons_run
        bad = dataclasses.replace(result.records[0], metric="miou")
        with pytest.raises(AlbenchError, match="mix"):
            orch.summarize([result.records[1], bad])

    def test_summarize_rejects_empty(self):
        with pytest.raises(AlbenchError, match="no records"):
            orch.summarize([])

    def test_records_round_trip(self, moons_run, tmp_path):
        _, result = moons_run
        paths = orch.write_records(list(result.records), tmp_path)
        assert all(p.parent.name == orch.RECORDS_DIR for p in paths)
        restored = orch.read_records(tmp_path)
        key = lambda r: (r.strategy, r.seed)
        assert sorted(restored, key=key) == sorted(result.records, key=key)

    def test_read_records_missing_dir(self, tmp_path):
        with pytest.raises(ConfigError, match="records"):
            orch.read_records(tmp_path / "nope")

    def test_plot_csv(self, moons_run, tmp_path):
        _, result = moons_run
        path = tmp_path / "plot.csv"
        orch.write_plot_csv(list(result.records), path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(orch.PLOT_CSV_HEADER)
        total_points = sum(len(r.points) for r in result.records)
        assert len(lines) == 1 + total_points

    def test_write_run_outputs_layout(self, moons_run, tmp_path):
        _, result = moons_run
        summary = orch.summarize(list(result.records), list(result.failures))
        orch.write_run_outputs(result, summary, tmp_path)
        assert (tmp_path / orch.SUMMARY_JSON).exists()
        assert (tmp_path / orch.SUMMARY_CSV).exists()
        record_files = list((tmp_path / orch.RECORDS_DIR).glob("*.json"))
        assert len(record_files) == len(result.records)

        doc = json.loads((tmp_path / orch.SUMMARY_JSON).read_text())
        assert doc["metric"] == "accuracy"
        assert isinstance(doc["strategies"], dict)
        assert set(doc["strategies"]) == {"random", "entropy", "ens_varr"}
        assert doc["failures"] == []

    def test_summary_json_structure(self, moons_run):
        _, result = moons_run
        summary = orch.summarize(list(result.records))
        doc = json.loads(orch.summary_to_json(summary))
        entry = doc["strategies"]["entropy"]
        assert set(entry) >= {"trials", "cycles", "mean_spent", "mean_value",
                              "delta_vs_random_final"}
        assert len(entry["mean_value"]) == len(entry["mean_spent"])


class TestSession:
    def test_execute_run_with_overrides(self):
        settings = orch.parse_settings(moons_doc())
        result, summary = orch.execute_run(settings, trials=1, seed=99)
        assert len(result.records) == 2  # two strategies, one trial each
        assert summary.metric == "accuracy"
        replay, _ = orch.execute_run(settings, trials=1, seed=99)
        assert list(replay.records) == list(result.records)

    def test_run_tolerance_sweep(self):
        cfg = orch.parse_dataset(
            {"kind": "seg-blobs", "n": 4, "height": 12, "width": 12,
             "num_classes": 3, "seed": 1}
        )
        rows = orch.run_tolerance_sweep(cfg, [0.0, 2.0])
        assert [r.tolerance for r in rows] == [0.0, 2.0]
        assert rows[0].miou == pytest.approx(1.0)
        assert rows[0].mean_clicks >= rows[1].mean_clicks

    def test_build_pool_rejects_classification(self):
        cfg = orch.parse_dataset({"kind": "two-moons", "n": 10})
        with pytest.raises(ConfigError, match="segmentation"):
            orch.build_pool(cfg)
