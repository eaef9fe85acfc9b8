"""Assertion records, CSV reports and the PASS/FAIL summary block."""
from __future__ import annotations

from dataclasses import dataclass

from ..io import fmt, write_csv


@dataclass
class Assertion:
    name: str
    passed: bool
    measured: float = float("nan")
    limit: float = float("nan")
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: measured={fmt(self.measured)} limit={fmt(self.limit)} {self.detail}".rstrip()


def summary_text(assertions) -> str:
    lines = [a.line() for a in assertions]
    failed = sum(not a.passed for a in assertions)
    lines.append(f"{len(assertions) - failed}/{len(assertions)} assertions passed")
    return "\n".join(lines) + "\n"


def failures(assertions) -> list[str]:
    return [a.name for a in assertions if not a.passed]


def write_report(path, header, rows) -> None:
    write_csv(path, header, rows)
