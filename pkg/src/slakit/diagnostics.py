"""Diagnostic records emitted by lenient parsing, validation and conversion."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


@dataclass(frozen=True)
class Diagnostic:
    """One finding, tied to a rule id and (when a source exists) a line.

    ``line`` is 1-based and refers to the parsed input; diagnostics about
    in-memory values carry ``line=None`` and name their location in the
    message instead.
    """

    rule: str
    message: str
    line: int | None = None
    severity: Severity = Severity.ERROR

    def format(self, source: str = "") -> str:
        where = f"{source}:{self.line}: " if self.line is not None else (
            f"{source}: " if source else ""
        )
        return f"{where}[{self.rule}] {self.message}"


def errors_only(diagnostics) -> list[Diagnostic]:
    return [d for d in diagnostics if d.severity is Severity.ERROR]
