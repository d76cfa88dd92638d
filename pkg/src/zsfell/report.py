"""Check records shared by every validator.

A report is a list of named checks. Exact (combinatorial) checks carry a
violation count; numerical checks carry the worst residual seen. Each
failing check keeps the first witnessing tuple so a caller can reproduce it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

LAW = "law"
STRUCTURE = "structure"


class StructuralError(ValueError):
    """Malformed input data (dangling ids, wrong shapes, missing table entries)."""


@dataclass
class Check:
    id: str
    passed: bool = True
    residual: float | None = None
    witness: tuple | None = None
    violations: int = 0
    kind: str = LAW
    detail: str = ""

    def record(self, ok: bool, witness: Any = None) -> None:
        """Register one exact observation."""
        if not ok:
            self.violations += 1
            if self.passed:
                self.witness = witness if isinstance(witness, tuple) else (witness,)
            self.passed = False

    def measure(self, residual: float, tol: float, witness: Any = None, scale: float = 1.0) -> None:
        """Register one numerical observation; passes iff residual <= tol * max(1, scale)."""
        residual = float(residual)
        if self.residual is None or residual > self.residual:
            self.residual = residual
        if not residual <= tol * max(1.0, scale):
            self.violations += 1
            if self.passed:
                self.witness = witness if isinstance(witness, tuple) else (witness,)
            self.passed = False


@dataclass
class ValidationReport:
    subject: str
    tol: float | None = None
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    values: dict[str, Any] = field(default_factory=dict)

    def check(self, id: str, kind: str = LAW, detail: str = "") -> Check:
        """Return the check named ``id``, creating it on first use."""
        for c in self.checks:
            if c.id == id:
                return c
        c = Check(id=id, kind=kind, detail=detail)
        self.checks.append(c)
        return c

    def __getitem__(self, id: str) -> Check:
        for c in self.checks:
            if c.id == id:
                return c
        raise KeyError(id)

    def __contains__(self, id: str) -> bool:
        return any(c.id == id for c in self.checks)

    def __iter__(self) -> Iterator[Check]:
        return iter(self.checks)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def structural_errors(self) -> list[Check]:
        return [c for c in self.checks if c.kind == STRUCTURE and not c.passed]

    @property
    def max_residual(self) -> float:
        res = [c.residual for c in self.checks if c.residual is not None]
        return max(res) if res else 0.0

    def merge(self, other: ValidationReport, prefix: str = "") -> None:
        for c in other.checks:
            c2 = Check(**{**c.__dict__, "id": prefix + c.id})
            self.checks.append(c2)
        self.notes.extend(other.notes)

    def __str__(self) -> str:
        lines = [f"{self.subject}: {'PASS' if self.ok else 'FAIL'}"]
        for c in self.checks:
            tag = "ok  " if c.passed else "FAIL"
            extra = f" residual={c.residual:.3e}" if c.residual is not None else ""
            if not c.passed:
                extra += f" violations={c.violations} witness={c.witness}"
            lines.append(f"  [{tag}] {c.id}{extra}")
        return "\n".join(lines)
