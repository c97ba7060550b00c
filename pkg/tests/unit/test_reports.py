#!/usr/bin/env python3
"""
Unit tests for check records and the JSON-lines report writer.
"""

import io
import json

import pytest
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from reports import (EXIT_FAIL, EXIT_PASS, EXIT_UNDECIDED, REPORT_FORMAT_VERSION, ReportWriter, check_exact,
                     check_le, check_trichotomy, exit_code_for)


@pytest.mark.quick
@pytest.mark.unit
class TestChecks:

    def test_check_le(self):
        assert check_le("a", 1e-12, 1e-9).passed
        assert not check_le("a", 1e-6, 1e-9).passed
        assert not check_le("a", float("nan"), 1e-9).passed

    def test_check_exact(self):
        check = check_exact("dim", 3, 3)
        assert check.passed and check.comparison == "=="
        assert not check_exact("dim", 2, 3).passed

    @pytest.mark.parametrize("value,passed,undecided", [
        (1e-10, True, False),
        (1e-6, False, True),
        (1e-2, False, False),
    ])
    def test_trichotomy(self, value, passed, undecided):
        check = check_trichotomy("match", value, 1e-8, 1e-4)
        assert check.passed is passed
        assert check.undecided is undecided

    def test_exit_codes(self):
        ok = check_le("a", 0.0, 1.0)
        maybe = check_trichotomy("b", 1e-6, 1e-8, 1e-4)
        bad = check_le("c", 2.0, 1.0)
        assert exit_code_for([]) == EXIT_PASS
        assert exit_code_for([ok]) == EXIT_PASS
        assert exit_code_for([ok, maybe]) == EXIT_UNDECIDED
        assert exit_code_for([maybe, bad]) == EXIT_FAIL

    def test_non_finite_values_are_strings(self):
        record = check_le("a", float("inf"), 1.0).to_record()
        assert record["value"] == "inf"
        json.dumps(record)


@pytest.mark.quick
@pytest.mark.unit
class TestReportWriter:

    def _records(self, stream):
        return [json.loads(line) for line in stream.getvalue().splitlines()]

    def test_record_stream(self):
        stream = io.StringIO()
        writer = ReportWriter("verify-identities", stream=stream)
        writer.header({"seed": 7})
        writer.check(check_le("identities.d_squared", 0.0, 1e-12))
        writer.check(check_trichotomy("equivalence.match", 1e-6, 1e-8, 1e-4))
        writer.data("moduli", {"ambient_dim": 4})
        code = writer.summary()

        records = self._records(stream)
        assert [r["record"] for r in records] == ["header", "check", "check", "data", "summary"]
        header = records[0]
        assert header["format_version"] == REPORT_FORMAT_VERSION
        assert header["command"] == "verify-identities"
        assert header["seed"] == 7
        assert "timestamp" in header
        assert all("timestamp" not in r for r in records[1:])
        assert records[2]["undecided"] is True
        assert records[-1] == {"record": "summary", "checks": 2, "failed": 0, "undecided": 1,
                               "exit_code": EXIT_UNDECIDED}
        assert code == EXIT_UNDECIDED

    def test_explicit_exit_code_and_error(self):
        stream = io.StringIO()
        writer = ReportWriter("classify", stream=stream)
        writer.error(ValueError("boom"))
        assert writer.summary(EXIT_FAIL) == EXIT_FAIL
        error, summary = self._records(stream)
        assert error == {"record": "error", "type": "ValueError", "message": "boom"}
        assert summary["exit_code"] == EXIT_FAIL

    def test_writes_to_file(self, temp_dir):
        path = temp_dir / "run.jsonl"
        with ReportWriter("picard", path=str(path)) as writer:
            writer.header()
            writer.checks_from([check_le("a", 0.0, 1.0), check_le("b", 0.0, 1.0)])
            writer.summary()
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        assert json.loads(lines[-1])["checks"] == 2

    def test_creates_missing_directories(self, temp_dir):
        path = temp_dir / "reports" / "nightly" / "run.jsonl"
        with ReportWriter("verify-identities", path=str(path)) as writer:
            writer.header()
        assert path.exists()
        assert json.loads(path.read_text().splitlines()[0])["record"] == "header"
