#!/usr/bin/env python3
"""
Report records and the line-delimited report writer.

Every numeric claim is a Check carrying its value, tolerance and verdict.
Reports stream as JSON lines: a header (the only place a timestamp appears),
check/data records, and a closing summary with the exit code.
"""

import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import IO, Any, Dict, Iterable, List, Optional

REPORT_FORMAT_VERSION = 1

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_UNDECIDED = 2
EXIT_USAGE = 3


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    comparison: str = "<="
    undecided: bool = False

    def to_record(self) -> Dict[str, Any]:
        record = {
            "record": "check",
            "name": self.name,
            "value": _finite(self.value),
            "tolerance": _finite(self.tolerance),
            "comparison": self.comparison,
            "passed": self.passed,
        }
        if self.undecided:
            record["undecided"] = True
        return record


def _finite(x: float):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def check_le(name: str, value: float, tolerance: float) -> Check:
    """value <= tolerance; NaN never passes."""
    value = float(value)
    return Check(name, value, float(tolerance), bool(value <= tolerance))


def check_exact(name: str, value: float, expected: float) -> Check:
    """Exact equality for counts and dimensions."""
    return Check(name, float(value), float(expected), bool(value == expected), comparison="==")


def check_trichotomy(name: str, value: float, accept: float, reject: float) -> Check:
    """Accept below `accept`, reject above `reject`, undecided in between."""
    value = float(value)
    if value <= accept:
        return Check(name, value, accept, True)
    if value >= reject:
        return Check(name, value, accept, False)
    return Check(name, value, accept, False, undecided=True)


def exit_code_for(checks: Iterable[Check]) -> int:
    checks = list(checks)
    if any(not c.passed and not c.undecided for c in checks):
        return EXIT_FAIL
    if any(c.undecided for c in checks):
        return EXIT_UNDECIDED
    return EXIT_PASS


class ReportWriter:
    """Streams report records as JSON lines to a file or stdout."""

    def __init__(self, command: str, stream: Optional[IO[str]] = None, path: Optional[str] = None):
        self.command = command
        self.path = path
        self._owns_stream = stream is None and path is not None
        if self._owns_stream:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
        self._stream = open(path, 'w', encoding='utf-8') if self._owns_stream else (stream or sys.stdout)
        self.checks: List[Check] = []

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()
        return False

    def _emit(self, record: Dict[str, Any]):
        self._stream.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
        self._stream.flush()

    def header(self, details: Optional[Dict[str, Any]] = None):
        self._emit({
            "record": "header",
            "format_version": REPORT_FORMAT_VERSION,
            "command": self.command,
            "timestamp": datetime.now().isoformat(timespec='seconds'),
            **(details or {}),
        })

    def check(self, check: Check):
        self.checks.append(check)
        self._emit(check.to_record())

    def checks_from(self, checks: Iterable[Check]):
        for c in checks:
            self.check(c)

    def data(self, name: str, payload: Any):
        self._emit({"record": "data", "name": name, "payload": payload})

    def error(self, error: BaseException):
        self._emit({"record": "error", "type": type(error).__name__, "message": str(error)})

    def summary(self, exit_code: Optional[int] = None) -> int:
        code = exit_code_for(self.checks) if exit_code is None else exit_code
        self._emit({
            "record": "summary",
            "checks": len(self.checks),
            "failed": sum(1 for c in self.checks if not c.passed and not c.undecided),
            "undecided": sum(1 for c in self.checks if c.undecided),
            "exit_code": code,
        })
        return code

    def close(self):
        if self._owns_stream:
            self._stream.close()
