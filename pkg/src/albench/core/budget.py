"""Annotation budgets, denominated in whole samples or in clicks."""

from __future__ import annotations

from dataclasses import dataclass

SAMPLES = "samples"
CLICKS = "clicks"


@dataclass(frozen=True)
class Budget:
    """Initial allowance plus a fixed top-up per acquisition cycle."""

    unit: str
    initial: int
    per_cycle: int
    cycles: int

    def __post_init__(self) -> None:
        if self.unit not in (SAMPLES, CLICKS):
            raise ValueError(f"unknown budget unit {self.unit!r}")
        if self.initial < 0 or self.per_cycle < 0:
            raise ValueError("budget amounts must be non-negative")
        if self.cycles < 1:
            raise ValueError("cycles must be positive")

    @property
    def total(self) -> int:
        return self.initial + self.cycles * self.per_cycle

    def cumulative_allowance(self, cycle: int) -> int:
        """Total allowance released by the end of ``cycle`` (0 = initial only)."""
        if not 0 <= cycle <= self.cycles:
            raise ValueError(f"cycle {cycle} outside [0, {self.cycles}]")
        return self.initial + cycle * self.per_cycle

    def schedule(self) -> list[int]:
        """Cumulative allowance at every cycle, initial included."""
        return [self.cumulative_allowance(c) for c in range(self.cycles + 1)]
