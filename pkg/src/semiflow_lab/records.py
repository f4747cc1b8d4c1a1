"""Small record types shared by validators, identity checks and reports."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass
class CheckRecord:
    name: str
    passed: bool
    residual: float | None = None
    tolerance: float | None = None
    inputs: dict[str, Any] = field(default_factory=dict)
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class ValidationReport:
    subject: str
    checks: list[CheckRecord]
    constants: dict[str, float]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "subject": self.subject,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "constants": dict(self.constants),
        }


@dataclass
class IdentityReport:
    """Both sides of an operator identity and the grid-sup residual between them."""

    identity: str
    parameters: dict[str, Any]
    residual: float
    tolerance: float
    scale: float = 1.0

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "identity": self.identity,
            "parameters": dict(self.parameters),
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "scale": float(self.scale),
            "pass": self.passed,
        }
