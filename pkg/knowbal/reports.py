"""
Pydantic models for serialized reports.
"""

from typing import Any, Dict, List

from pydantic import BaseModel, Field


class Check(BaseModel):
    """A single named assertion with what was expected and what was seen."""

    description: str
    expected: str
    observed: str
    passed: bool


class ProtocolReport(BaseModel):
    """Outcome of one protocol run."""

    name: str
    summary: str = ""
    checks: List[Check] = Field(default_factory=list)
    artifacts: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, description: str, expected: Any, observed: Any, passed: bool = None) -> bool:
        """Record a check; passes when expected == observed unless `passed` is given."""
        ok = (expected == observed) if passed is None else bool(passed)
        self.checks.append(Check(description=description, expected=str(expected),
                                 observed=str(observed), passed=ok))
        return ok

    def to_text(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"== {self.name} [{status}]"]
        if self.summary:
            lines.append(self.summary)
        for c in self.checks:
            mark = "ok " if c.passed else "BAD"
            lines.append(f"  [{mark}] {c.description}: expected {c.expected}, observed {c.observed}")
        return "\n".join(lines)


class ExecutionReport(BaseModel):
    """Result of executing a toy program."""

    mode: str
    n_systems: int
    checks: List[Check] = Field(default_factory=list)
    branches: List[Dict[str, Any]] = Field(default_factory=list)
    frequencies: List[Dict[str, Any]] = Field(default_factory=list)
    trials: int = 0
    seed: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)
