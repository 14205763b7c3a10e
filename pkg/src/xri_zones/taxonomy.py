"""Three-axis design space for zone-agent interfaces.

Axes: virtuality (real .. fully virtual), agency (interface .. social agent),
and physical-to-remote interaction capacity (direct .. fully networked).
Designs are classified to the nearest of five exemplar regions. The exemplar
centroids quantify qualitative placements; they live in one registry constant
so they can be re-tuned in one place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum


class AgencyLevel(IntEnum):
    """How capable an agent is, from a plain interface up to a social agent."""

    INTERFACE = 0
    REFLEX = 1
    MODEL_BASED = 2
    GOAL_BASED = 3
    SOCIAL = 4


@dataclass(frozen=True)
class MiraCoordinates:
    """A point in the design cube; every component lies in [0, 1]."""

    virtuality: float
    agency: float
    pr_capacity: float

    def __post_init__(self) -> None:
        for name in ("virtuality", "agency", "pr_capacity"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class DesignExemplar:
    index: int
    centroid: MiraCoordinates
    label: str


_REGISTRY = (
    DesignExemplar(1, MiraCoordinates(0.1, 0.1, 0.1), "physical interfaces and controls"),
    DesignExemplar(2, MiraCoordinates(0.1, 0.5, 0.9), "IoT-enabled objects and robots"),
    DesignExemplar(3, MiraCoordinates(0.9, 0.1, 0.1), "mixed/virtual reality UI and objects"),
    DesignExemplar(4, MiraCoordinates(0.9, 0.3, 0.9), "virtual objects coupled to physical via IoT"),
    DesignExemplar(5, MiraCoordinates(0.5, 0.9, 0.9), "spatial zone agent"),
)


def exemplar_registry() -> tuple[DesignExemplar, ...]:
    """The five exemplar regions, indices 1..5."""
    return _REGISTRY


def agency_to_axis(level: AgencyLevel) -> float:
    """Normalize an agency level onto the [0, 1] agency axis."""
    return level.value / 4


def _distance2(a: MiraCoordinates, b: MiraCoordinates, weights: tuple[float, float, float]) -> float:
    return (
        weights[0] * (a.virtuality - b.virtuality) ** 2
        + weights[1] * (a.agency - b.agency) ** 2
        + weights[2] * (a.pr_capacity - b.pr_capacity) ** 2
    )


def classify_design(
    c: MiraCoordinates, weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
) -> int:
    """Index of the nearest exemplar (Euclidean); ties break to the lowest index.

    weights scale the squared per-axis differences, default unweighted.
    """
    best_index = 0
    best_d2 = math.inf
    for ex in _REGISTRY:
        d2 = _distance2(c, ex.centroid, weights)
        if d2 < best_d2 or (d2 == best_d2 and ex.index < best_index):
            best_index = ex.index
            best_d2 = d2
    return best_index


def exemplar_by_index(index: int) -> DesignExemplar:
    for ex in _REGISTRY:
        if ex.index == index:
            return ex
    raise KeyError(index)
