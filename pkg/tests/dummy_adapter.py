"""Reference external learner speaking protocol v1 over stdio.

Backs the adapter tests and the compliance checker smoke runs.  Wraps the
built-in linear model so training and prediction stay deterministic for a
given dataset file and seed pair.
"""

from __future__ import annotations

import json
import sys
import time

import numpy as np

from albench.adapter import protocol
from albench.core.dataset import load_csv_dataset
from albench.learners import (
    LinearSoftmax,
    SSLConfig,
    TrainConfig,
    train_ssl,
    train_supervised,
)
from albench.learners.predict import predict_bundle

SUPPORTED_FIELDS = ("probs", "features")
TRAIN_CONFIG_KEYS = set(TrainConfig.__dataclass_fields__)
SSL_CONFIG_KEYS = set(SSLConfig.__dataclass_fields__)


def _emit(message: dict) -> None:
    sys.stdout.write(protocol.encode_message(message) + "\n")
    sys.stdout.flush()


def _train_config(config: dict) -> TrainConfig:
    kwargs = {k: v for k, v in config.items() if k in TRAIN_CONFIG_KEYS}
    return TrainConfig(**kwargs)


def _ssl_config(config: dict) -> SSLConfig:
    raw = config.get("ssl", {})
    kwargs = {k: v for k, v in raw.items() if k in SSL_CONFIG_KEYS}
    return SSLConfig(**kwargs)


def _mean_nll(model, dataset, labeled: list[int]) -> float:
    """Average cross entropy of the trained model on its labeled set."""
    if not labeled:
        return 0.0
    x = np.stack([np.asarray(dataset.items[i], dtype=np.float64) for i in labeled])
    y = np.asarray([dataset.targets[i] for i in labeled], dtype=int)
    logits, _ = model.forward(x)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(len(y)), y].mean())


class Session:
    def __init__(self) -> None:
        self.dataset = None
        self.model = None
        self.last_id = 0
        self.done = False

    def handle(self, message: dict) -> dict:
        ident = message["id"]
        if ident <= self.last_id:
            return protocol.error(ident, protocol.E_PROTOCOL, f"id {ident} does not increase")
        self.last_id = ident
        kind = message["kind"]
        if kind == protocol.HELLO:
            return self._hello(message)
        if self.dataset is None:
            return protocol.error(ident, protocol.E_PROTOCOL, "hello must come first")
        if kind in (protocol.TRAIN, protocol.TRAIN_SSL):
            return self._train(message)
        if kind == protocol.PREDICT:
            return self._predict(message)
        if kind == protocol.SHUTDOWN:
            self.done = True
            return protocol.ack(ident)
        return protocol.error(ident, protocol.E_PROTOCOL, f"unexpected kind {kind!r}")

    def _hello(self, message: dict) -> dict:
        ident = message["id"]
        if self.dataset is not None:
            return protocol.error(ident, protocol.E_PROTOCOL, "hello already exchanged")
        version = message.get("version")
        if version != protocol.PROTOCOL_VERSION:
            return protocol.error(
                ident, protocol.E_VERSION, f"only version {protocol.PROTOCOL_VERSION} is spoken"
            )
        try:
            self.dataset = load_csv_dataset(message["dataset"])
        except Exception as exc:  # noqa: BLE001 - reported on the wire
            return protocol.error(ident, protocol.E_IO, f"cannot load dataset: {exc}")
        self.seed = int(message.get("seed", 0))
        self.model = LinearSoftmax(self.dataset.feature_dim, self.dataset.num_classes, seed=self.seed)
        return protocol.ack(ident, version=protocol.PROTOCOL_VERSION, fields=list(SUPPORTED_FIELDS))

    def _train(self, message: dict) -> dict:
        ident = message["id"]
        config = message.get("config", {})
        mode = message.get("mode", protocol.MODE_SSL if message["kind"] == protocol.TRAIN_SSL else None)
        if mode not in (protocol.MODE_SUPERVISED, protocol.MODE_SSL):
            return protocol.error(ident, protocol.E_BAD_MODE, f"unknown training mode {mode!r}")
        labeled = [int(i) for i in message.get("labeled", [])]
        init_seed = int(config.get("init_seed", self.seed))
        try:
            train_cfg = _train_config(config)
            model = LinearSoftmax(self.dataset.feature_dim, self.dataset.num_classes, seed=init_seed)
            start = time.monotonic()
            if mode == protocol.MODE_SSL:
                unlabeled = [int(i) for i in message.get("unlabeled", [])]
                model = train_ssl(self.dataset, labeled, unlabeled, model, _ssl_config(config), train_cfg)
            else:
                model = train_supervised(self.dataset, labeled, model, train_cfg)
            wall = time.monotonic() - start
            loss = _mean_nll(model, self.dataset, labeled)
        except Exception as exc:  # noqa: BLE001 - reported on the wire
            return protocol.error(ident, protocol.E_INTERNAL, f"training failed: {exc}")
        self.model = model
        return protocol.ack(ident, wall_time=wall, train_loss=loss)

    def _predict(self, message: dict) -> dict:
        ident = message["id"]
        fields = list(message.get("fields", []))
        unknown = [f for f in fields if f not in SUPPORTED_FIELDS]
        if unknown:
            return protocol.error(
                ident, protocol.E_UNSUPPORTED_FIELD, f"unsupported fields {unknown}"
            )
        indices = [int(i) for i in message.get("indices", [])]
        try:
            if indices:
                bundle = predict_bundle([self.model], self.dataset, indices)
                arrays = {name: np.asarray(getattr(bundle, name)) for name in fields}
            else:
                width = {"probs": self.dataset.num_classes, "features": self.dataset.feature_dim}
                arrays = {name: np.zeros((0, width[name]), dtype=np.float64) for name in fields}
        except Exception as exc:  # noqa: BLE001 - reported on the wire
            return protocol.error(ident, protocol.E_INTERNAL, f"prediction failed: {exc}")
        payload = {name: protocol.encode_f32(arr) for name, arr in arrays.items()}
        return protocol.bundle_response(ident, indices, payload)


def main() -> int:
    session = Session()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            _emit(protocol.error(max(session.last_id + 1, 1), protocol.E_PROTOCOL, "undecodable line"))
            continue
        ident = message.get("id")
        if not isinstance(ident, int) or ident < 1:
            _emit(protocol.error(max(session.last_id + 1, 1), protocol.E_PROTOCOL, "missing id"))
            continue
        try:
            _emit(session.handle(message))
        except BrokenPipeError:
            return 1
        if session.done:
            break
    return 0


if __name__ == "__main__":
    sys.exit(main())
