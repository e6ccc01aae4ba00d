"""External-learner driver: plugs an adapter subprocess into the cycle loop.

One subprocess serves one trial; the session opens on begin_trial with the
trial's seed and closes on end_trial, so respawning with the same seed
replays identically (adapters must be seed-deterministic).
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from ..core.bundle import PredictionBundle
from ..core.dataset import CLASSIFICATION, Dataset
from ..errors import AdapterError, LearnerError
from ..learners.train import SSLConfig, TrainConfig
from ..strategies.selectors import StrategySpec
from . import protocol
from .client import AdapterClient


class AdapterLearner:
    """Driver facade over an adapter command, one subprocess per trial."""

    def __init__(
        self,
        command: str,
        dataset_path: str,
        pool: Dataset | None = None,
        train_cfg: TrainConfig | None = None,
        ssl_cfg: SSLConfig | None = None,
    ) -> None:
        self.command = command
        self.dataset_path = dataset_path
        # The dataset file concatenates pool rows then held-out rows, so
        # held-out indices are offset by the pool length on the wire.
        self._pool = pool
        self._pool_len = len(pool) if pool is not None else 0
        self.train_cfg = train_cfg or TrainConfig()
        self.ssl_cfg = ssl_cfg or SSLConfig()
        self.name = "adapter"
        self._client: AdapterClient | None = None
        self._fields = self._probe_fields()

    def _probe_fields(self) -> tuple[str, ...]:
        """Spawn once up front to learn the capability set (and fail fast)."""
        with AdapterClient(self.command) as client:
            fields = client.handshake(self.dataset_path, seed=0)
            client.shutdown()
        return fields

    def capabilities(self, task: str, kind: str) -> tuple[str, ...]:
        if task != CLASSIFICATION:
            return ()
        return self._fields

    def begin_trial(self, seed: int) -> None:
        if self._client is not None:
            self._client.close()
        self._client = AdapterClient(self.command)
        self._client.handshake(self.dataset_path, seed=seed)

    def end_trial(self) -> None:
        if self._client is None:
            return
        try:
            self._client.shutdown()
        except AdapterError:
            pass
        self._client.close()
        self._client = None

    def _session(self) -> AdapterClient:
        if self._client is None:
            raise AdapterError("no adapter session; begin_trial was never called")
        return self._client

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
        config = dict(asdict(self.train_cfg))
        config.update(
            {
                "init_seed": int(init_seed),
                "seed": int(train_seed),
                "strategy": spec.kind,
            }
        )
        if mode == protocol.MODE_SSL:
            config["ssl"] = dict(asdict(self.ssl_cfg))
            self._session().train(
                list(labeled), config, mode=protocol.MODE_SSL, unlabeled=list(unlabeled)
            )
        else:
            self._session().train(list(labeled), config)
        return [self]

    def bundle(self, models: list, dataset: Dataset, indices: list[int]) -> PredictionBundle:
        offset = 0 if (self._pool is None or dataset is self._pool) else self._pool_len
        wire = self._session().predict(
            [int(i) + offset for i in indices], list(self._fields)
        )
        if offset == 0:
            return wire
        fields = {name: getattr(wire, name) for name in wire.present_fields()}
        return PredictionBundle(indices=tuple(int(i) for i in indices), **fields)

    def segmentation_masks(self, models: list, dataset: Dataset, indices: list[int]):
        raise LearnerError("external adapters serve classification bundles only")


def adapter_accuracy(bundle: PredictionBundle, targets: np.ndarray) -> float:
    """Top-1 accuracy straight off a wire bundle's probability rows."""
    predicted = np.asarray(bundle.probs).argmax(axis=1)
    return float((predicted == np.asarray(targets, dtype=int)).mean())
