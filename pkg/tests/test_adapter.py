"""Wire protocol codec, subprocess client, compliance checker, and driver."""

from __future__ import annotations

import json
import sys

import numpy as np
import pytest

import albench.orchestrator as orch
from albench.adapter import (
    CheckReport,
    adapter_accuracy,
    decode_array,
    decode_bundle_fields,
    decode_message,
    encode_f32,
    encode_message,
    load_transcript,
    run_check,
    write_check_dataset,
)
from albench.adapter import protocol as proto
from albench.adapter.client import AdapterClient
from albench.core import PredictionBundle
from albench.errors import AdapterCrashError, AdapterError, AdapterProtocolError

from conftest import DUMMY_ADAPTER_CMD


class TestCodec:
    def test_canonical_encoding(self):
        line = encode_message({"kind": "hello", "id": 1, "seed": 3})
        assert line == '{"id":1,"kind":"hello","seed":3}'

    def test_decode_round_trip(self):
        doc = proto.train(2, [1, 5], {"epochs": 3}, mode="supervised")
        assert decode_message(encode_message(doc)) == doc

    @pytest.mark.parametrize(
        "line",
        [
            "not json",
            "[1, 2]",
            '{"kind":"nope","id":1}',
            '{"kind":"ack"}',
            '{"kind":"ack","id":0}',
            '{"kind":"ack","id":true}',
            '{"kind":"ack","id":"1"}',
        ],
    )
    def test_decode_rejects_malformed(self, line):
        with pytest.raises(AdapterProtocolError):
            decode_message(line)

    def test_f32_round_trip(self):
        array = np.arange(12, dtype=np.float32).reshape(3, 4) / 7
        packed = encode_f32(array)
        assert set(packed) == {"data_b64", "shape"}
        assert packed["shape"] == [3, 4]
        out = decode_array(packed)
        assert out.dtype == np.float64
        assert np.array_equal(out, array.astype(np.float64))

    def test_decode_array_accepts_plain_lists(self):
        out = decode_array([[1, 2], [3, 4]])
        assert out.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    @pytest.mark.parametrize(
        "value",
        [
            {"data_b64": "AAAA"},
            {"shape": [1]},
            {"data_b64": "!!!", "shape": [1]},
            {"data_b64": "AAAA", "shape": [1]},  # 3 bytes for one f32
            {"data_b64": "AACAPw==", "shape": [2]},  # 4 bytes for two f32
            {"data_b64": "AACAPw==", "shape": "bad"},
            ["a", "b"],
        ],
    )
    def test_decode_array_rejects_bad_payloads(self, value):
        with pytest.raises(AdapterProtocolError):
            decode_array(value)

    def test_request_builders(self):
        assert proto.hello(1, "data.csv", 7) == {
            "kind": "hello", "id": 1, "version": 1, "dataset": "data.csv", "seed": 7,
        }
        assert proto.train(2, [0, 3], {"epochs": 1})["mode"] == "supervised"
        ssl = proto.train_ssl(3, [0], [1, 2], {})
        assert ssl["kind"] == "train_ssl"
        assert ssl["mode"] == "ssl"
        assert proto.predict(4, [5], ["probs"])["fields"] == ["probs"]
        assert proto.shutdown(5) == {"kind": "shutdown", "id": 5}

    def test_error_codes(self):
        codes = {proto.E_VERSION, proto.E_PROTOCOL, proto.E_BAD_MODE,
                 proto.E_UNSUPPORTED_FIELD, proto.E_IO, proto.E_INTERNAL}
        assert codes == {"version", "protocol", "bad_mode",
                         "unsupported_field", "io", "internal"}
        err = proto.error(9, proto.E_IO, "disk gone")
        assert err == {"kind": "error", "id": 9, "code": "io", "message": "disk gone"}

    def test_bundle_round_trip(self):
        probs = np.array([[0.25, 0.75], [0.5, 0.5]], dtype=np.float32)
        doc = proto.bundle_response(4, [0, 2], {"probs": encode_f32(probs)})
        indices, fields = decode_bundle_fields(doc)
        assert indices == [0, 2]
        assert np.allclose(fields["probs"], probs)

    def test_wire_fields_cover_bundle_slots(self):
        assert proto.WIRE_FIELDS == (
            "probs", "features", "pred_loss", "ensemble_votes",
            "entropy_maps", "disc_scores",
        )


@pytest.fixture(scope="module")
def check_csv(tmp_path_factory):
    return str(write_check_dataset(tmp_path_factory.mktemp("adapter-data")))


@pytest.fixture()
def client(check_csv):
    cli = AdapterClient(DUMMY_ADAPTER_CMD)
    yield cli
    cli.close()


class TestClient:
    def test_handshake_reports_capabilities(self, client, check_csv):
        caps = client.handshake(check_csv, seed=3)
        assert caps == ("probs", "features")

    def test_train_ack_payload(self, client, check_csv):
        client.handshake(check_csv, seed=3)
        payload = client.train([0, 1, 2, 3, 8, 9, 10, 11], {"seed": 1, "epochs": 2})
        assert payload["wall_time"] >= 0.0
        assert np.isfinite(payload["train_loss"])

    def test_predict_returns_bundle(self, client, check_csv):
        client.handshake(check_csv, seed=3)
        client.train([0, 1, 8, 9], {"seed": 1, "epochs": 1})
        bundle = client.predict([0, 5, 12], ["probs", "features"])
        assert bundle.indices == (0, 5, 12)
        assert bundle.probs.shape == (3, 2)
        assert bundle.features.shape[0] == 3
        assert np.allclose(bundle.probs.sum(axis=1), 1.0)

    def test_unsupported_field_maps_to_typed_error(self, client, check_csv):
        client.handshake(check_csv, seed=3)
        client.train([0, 8], {"seed": 1, "epochs": 1})
        with pytest.raises(AdapterError) as info:
            client.predict([0], ["disc_scores"])
        assert info.value.code == proto.E_UNSUPPORTED_FIELD

    def test_id_reuse_is_a_protocol_error(self, client, check_csv):
        client.handshake(check_csv, seed=3)
        reply = client.send_raw(
            proto.train(1, [0], {"epochs": 1}), timeout=30.0
        )
        assert reply["kind"] == "error"
        assert reply["code"] == proto.E_PROTOCOL

    def test_shutdown_exits_cleanly(self, client, check_csv):
        client.handshake(check_csv, seed=3)
        client.shutdown()
        client.close()
        assert client.returncode == 0

    def test_crashing_command_raises(self, check_csv):
        dead = AdapterClient(f"{sys.executable} -c pass")
        try:
            with pytest.raises(AdapterCrashError):
                dead.handshake(check_csv, seed=1)
        finally:
            dead.close()


class TestChecker:
    def test_transcript_loads(self):
        steps = load_transcript()
        assert len(steps) >= 8
        for step in steps:
            assert {"session", "name", "send", "expect"} <= set(step)
        sessions = {step["session"] for step in steps}
        assert sessions == {"version-probe", "main"}

    def test_check_dataset_contents(self, check_csv):
        lines = open(check_csv).read().splitlines()
        assert lines[0] == "feature_0,feature_1,target"
        assert len(lines) == 17
        targets = {line.rsplit(",", 1)[1] for line in lines[1:]}
        assert targets == {"0", "1"}

    def test_compliant_adapter_passes(self, tmp_path):
        report = run_check(DUMMY_ADAPTER_CMD, workdir=tmp_path)
        assert isinstance(report, CheckReport)
        failed = [s for s in report.steps if not s.ok]
        assert report.passed, failed
        lines = report.lines()
        assert all(line.startswith(("PASS", "FAIL", "COMPLIANT", "NOT")) for line in lines)
        assert lines[-1] == f"COMPLIANT: {DUMMY_ADAPTER_CMD}"
        assert any("determinism" in s.name for s in report.steps)

    def test_noncompliant_command_fails(self, tmp_path):
        report = run_check(f"{sys.executable} -c pass", workdir=tmp_path)
        assert not report.passed
        assert report.lines()[-1].startswith("NOT COMPLIANT")


class TestDriverIntegration:
    def adapter_doc(self, trials: int = 1) -> dict:
        return {
            "seed": 4,
            "dataset": {"kind": "two-moons", "n": 60, "test_n": 30, "seed": 2},
            "preset": {
                "unit": "samples", "initial": 10, "per_cycle": 10, "cycles": 2,
                "mode": "supervised", "regime": "image", "trials": trials,
            },
            "roster": [{"kind": "random"}, {"kind": "entropy"}],
            "learner": {"model": "adapter", "command": DUMMY_ADAPTER_CMD,
                        "epochs": 3, "lr": 0.3},
        }

    def test_full_run_through_adapter(self):
        settings = orch.parse_settings(self.adapter_doc())
        result, summary = orch.execute_run(settings)
        assert len(result.records) == 2
        assert result.failures == ()
        for record in result.records:
            assert record.learner == "adapter"
            assert [p.spent for p in record.points] == [10, 20, 30]
        assert {s.strategy for s in summary.strategies} == {"random", "entropy"}

    def test_adapter_runs_replay_identically(self):
        settings = orch.parse_settings(self.adapter_doc())
        first, _ = orch.execute_run(settings)
        second, _ = orch.execute_run(settings)
        assert list(first.records) == list(second.records)

    def test_adapter_accuracy_helper(self):
        bundle = PredictionBundle(
            indices=(0, 1, 2),
            probs=np.array([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]]),
        )
        assert adapter_accuracy(bundle, np.array([0, 1, 1])) == pytest.approx(2 / 3)

    def test_segmentation_pool_rejected(self, tmp_path):
        doc = self.adapter_doc()
        doc["dataset"] = {"kind": "seg-blobs", "n": 4}
        doc["preset"]["unit"] = "clicks"
        with pytest.raises(Exception) as info:
            orch.execute_run(orch.parse_settings(doc))
        assert "conv" in str(info.value) or "classification" in str(info.value)
