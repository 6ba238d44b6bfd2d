"""System properties and verdict records shared by the test modules."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

from .pencil import RankVerdict, Region


class Property(enum.Enum):
    STRONG_OBSERVABILITY = "strong-observability"
    STRONG_DETECTABILITY = "strong-detectability"
    OBSERVABILITY = "observability"
    DETECTABILITY = "detectability"
    STRONG_CONTROLLABILITY = "strong-controllability"
    STRONG_STABILIZABILITY = "strong-stabilizability"
    CONTROLLABILITY = "controllability"
    STABILIZABILITY = "stabilizability"
    LEFT_INVERTIBILITY = "left-invertibility"

    @classmethod
    def parse(cls, text: str) -> "Property":
        key = text.strip().lower().replace("_", "-")
        for prop in cls:
            if prop.value == key:
                return prop
        raise ValueError(f"unknown property {text!r}; choose from {[p.value for p in cls]}")

    @property
    def region(self) -> Region:
        if self in _EXTERIOR:
            return Region.CLOSED_UNIT_EXTERIOR
        return Region.ALL_COMPLEX

    @property
    def is_strong(self) -> bool:
        return self in _STRONG

    @property
    def is_control_family(self) -> bool:
        return self in _CONTROL

    @property
    def is_pencil_property(self) -> bool:
        return self is not Property.LEFT_INVERTIBILITY


_EXTERIOR = {Property.STRONG_DETECTABILITY, Property.DETECTABILITY,
             Property.STRONG_STABILIZABILITY, Property.STABILIZABILITY}
_STRONG = {Property.STRONG_OBSERVABILITY, Property.STRONG_DETECTABILITY,
           Property.STRONG_CONTROLLABILITY, Property.STRONG_STABILIZABILITY}
_CONTROL = {Property.STRONG_CONTROLLABILITY, Property.STRONG_STABILIZABILITY,
            Property.CONTROLLABILITY, Property.STABILIZABILITY}

PENCIL_PROPERTIES = [p for p in Property if p.is_pencil_property]
GEOMETRIC_PROPERTIES = [Property.STRONG_OBSERVABILITY, Property.OBSERVABILITY, Property.LEFT_INVERTIBILITY]

# upstream => downstream, for verdicts that must never contradict each other
IMPLICATIONS = [
    (Property.STRONG_OBSERVABILITY, Property.OBSERVABILITY),
    (Property.OBSERVABILITY, Property.DETECTABILITY),
    (Property.STRONG_OBSERVABILITY, Property.STRONG_DETECTABILITY),
    (Property.STRONG_DETECTABILITY, Property.DETECTABILITY),
    (Property.STRONG_CONTROLLABILITY, Property.CONTROLLABILITY),
    (Property.CONTROLLABILITY, Property.STABILIZABILITY),
    (Property.STRONG_CONTROLLABILITY, Property.STRONG_STABILIZABILITY),
    (Property.STRONG_STABILIZABILITY, Property.STABILIZABILITY),
]


class Status(enum.Enum):
    INFORMATIVE = "informative"
    NOT_INFORMATIVE = "not-informative"
    MARGINAL = "marginal"
    INCONCLUSIVE = "inconclusive"


@dataclass
class Verdict:
    property: Property
    status: Status
    precondition_holds: bool
    method: str = "pencil"
    rank_verdict: RankVerdict | None = None
    witness: dict[str, Any] | None = None
    explanation: str = ""
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def informative(self) -> bool:
        return self.status is Status.INFORMATIVE
