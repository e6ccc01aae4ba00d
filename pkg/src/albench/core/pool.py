"""Pool partition bookkeeping: labeled set L, unlabeled pool U, click ledger.

States are immutable; every transition returns a fresh PoolState so the
orchestrator can snapshot one per cycle and replay runs from the log.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

from ..annotation.mask import PolygonSet, polygon_set_from_json, polygon_set_to_json
from ..errors import PoolError


@dataclass(frozen=True)
class PoolState:
    """Partition of dataset indices into labeled / unlabeled / partially labeled."""

    labeled: frozenset[int]
    unlabeled: frozenset[int]
    partial_labels: Mapping[int, PolygonSet] = field(default_factory=dict)
    spent_clicks: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "labeled", frozenset(self.labeled))
        object.__setattr__(self, "unlabeled", frozenset(self.unlabeled))
        object.__setattr__(self, "partial_labels", MappingProxyType(dict(self.partial_labels)))
        object.__setattr__(self, "spent_clicks", MappingProxyType(dict(self.spent_clicks)))
        overlap = self.labeled & self.unlabeled
        if overlap:
            raise PoolError(f"indices both labeled and unlabeled: {sorted(overlap)[:5]}")
        partial = set(self.partial_labels)
        if partial & (self.labeled | self.unlabeled):
            raise PoolError("partially labeled indices must not appear in L or U")

    @staticmethod
    def initial(n: int) -> "PoolState":
        return PoolState(labeled=frozenset(), unlabeled=frozenset(range(n)))

    @property
    def size(self) -> int:
        return len(self.labeled) + len(self.unlabeled) + len(self.partial_labels)

    @property
    def total_spent(self) -> int:
        return sum(self.spent_clicks.values())

    def covers(self, n: int) -> bool:
        universe = set(self.labeled) | set(self.unlabeled) | set(self.partial_labels)
        return universe == set(range(n))


def apply_acquisition(
    p: PoolState, chosen: frozenset[int] | set[int], costs: Mapping[int, int]
) -> PoolState:
    """Move ``chosen`` from the unlabeled pool into L and record their cost.

    The input state is never mutated. Indices already labeled (or otherwise
    outside U) are rejected by name.
    """
    chosen = frozenset(chosen)
    if not chosen:
        return p
    for idx in sorted(chosen):
        if idx in p.labeled:
            raise PoolError(f"index {idx} already labeled")
        if idx not in p.unlabeled:
            raise PoolError(f"index {idx} not in the unlabeled pool")
    missing = chosen.difference(costs)
    if missing:
        raise PoolError(f"no cost recorded for chosen indices {sorted(missing)[:5]}")
    spent = dict(p.spent_clicks)
    for idx in chosen:
        spent[idx] = spent.get(idx, 0) + int(costs[idx])
    return PoolState(
        labeled=p.labeled | chosen,
        unlabeled=p.unlabeled - chosen,
        partial_labels=p.partial_labels,
        spent_clicks=spent,
    )


def annotate_polygon(
    p: PoolState, index: int, pset: PolygonSet, cost: int, complete: bool
) -> PoolState:
    """Record polygon-regime progress on one image.

    ``pset`` is the cumulative annotation so far for the image. While
    ``complete`` is False the image sits in ``partial_labels``; on completion
    it moves into L.
    """
    if index in p.labeled:
        raise PoolError(f"index {index} already labeled")
    if index not in p.unlabeled and index not in p.partial_labels:
        raise PoolError(f"index {index} unknown to the pool")
    spent = dict(p.spent_clicks)
    spent[index] = spent.get(index, 0) + int(cost)
    partial = dict(p.partial_labels)
    unlabeled = set(p.unlabeled)
    labeled = set(p.labeled)
    unlabeled.discard(index)
    partial.pop(index, None)
    if complete:
        labeled.add(index)
    else:
        partial[index] = pset
    return PoolState(
        labeled=frozenset(labeled),
        unlabeled=frozenset(unlabeled),
        partial_labels=partial,
        spent_clicks=spent,
    )


def pool_state_to_json(p: PoolState) -> str:
    doc = {
        "labeled": sorted(p.labeled),
        "unlabeled": sorted(p.unlabeled),
        "partial_labels": {
            str(i): json.loads(polygon_set_to_json(ps)) for i, ps in sorted(p.partial_labels.items())
        },
        "spent_clicks": {str(i): c for i, c in sorted(p.spent_clicks.items())},
    }
    return json.dumps(doc)


def pool_state_from_json(text: str) -> PoolState:
    doc = json.loads(text)
    return PoolState(
        labeled=frozenset(doc["labeled"]),
        unlabeled=frozenset(doc["unlabeled"]),
        partial_labels={
            int(i): polygon_set_from_json(json.dumps(ps))
            for i, ps in doc["partial_labels"].items()
        },
        spent_clicks={int(i): int(c) for i, c in doc["spent_clicks"].items()},
    )
