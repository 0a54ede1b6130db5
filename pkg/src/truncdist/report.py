"""Bound reports: both sides of an inequality plus its side conditions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .metric_core import INF, ext, ext_sub


@dataclass
class SideCondition:
    name: str
    satisfied: bool
    value: object = None


@dataclass
class BoundReport:
    """Evaluated inequality ``lhs <relation> rhs`` with tolerance ``tol``.

    relation is 'le' (lhs <= rhs + tol), 'ge' (lhs >= rhs - tol) or
    'eq' (|lhs - rhs| <= tol).  When some side condition fails the report is
    not applicable and counts as passed.
    """
    check_id: str
    lhs: float
    rhs: float
    relation: str = "le"
    tol: float = 1e-9
    side_conditions: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    error: str = None

    def __post_init__(self):
        if self.relation not in ("le", "ge", "eq"):
            raise ValueError(f"bad relation {self.relation!r}")
        self.lhs = ext(self.lhs)
        self.rhs = ext(self.rhs)
        self.side_conditions = [
            s if isinstance(s, SideCondition) else SideCondition(*s)
            for s in self.side_conditions
        ]

    def add_condition(self, name, satisfied, value=None):
        self.side_conditions.append(SideCondition(name, bool(satisfied), value))

    @property
    def applicable(self) -> bool:
        return all(s.satisfied for s in self.side_conditions)

    @property
    def margin(self) -> float:
        return ext_sub(self.rhs, self.lhs)

    @property
    def holds(self) -> bool:
        """Whether the relation holds, regardless of applicability."""
        lhs, rhs, tol = self.lhs, self.rhs, self.tol
        if self.relation == "le":
            return rhs == INF or lhs <= rhs + tol
        if self.relation == "ge":
            return lhs == INF or lhs >= rhs - tol
        if math.isinf(lhs) or math.isinf(rhs):
            return lhs == rhs
        return abs(lhs - rhs) <= tol

    @property
    def passed(self) -> bool:
        if self.error is not None:
            return False
        return (not self.applicable) or self.holds

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        if not self.applicable:
            return "not-applicable"
        return "pass" if self.holds else "fail"

    def summary(self) -> str:
        rel = {"le": "<=", "ge": ">=", "eq": "=="}[self.relation]
        return f"{self.check_id}: {self.lhs:.6g} {rel} {self.rhs:.6g} [{self.status}]"
