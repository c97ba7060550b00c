#!/usr/bin/env python3
"""
Integration tests for the complete flatmoduli workflow.

Each test writes a job file, runs the command-line entry point and reads
the JSON-lines report back.
"""

import json

import pytest
import yaml
import numpy as np
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from flatmoduli import main
from formats import form_to_json, write_json
from lie import build_group
from reports import EXIT_FAIL, EXIT_PASS, EXIT_UNDECIDED, EXIT_USAGE
from torus import constant_form, make_torus

SQUARE_TORUS = {"g": 1, "period_matrix": [1, "1j"], "cutoff": 4}


def write_job(directory: Path, name: str = "job.yml", **fields) -> Path:
    job = {"command": "verify-identities", "torus": dict(SQUARE_TORUS),
           "group": {"family": "Triangular", "rank": 2}}
    job.update(fields)
    path = directory / name
    path.write_text(yaml.safe_dump(job, sort_keys=False))
    return path


def run_job(directory: Path, *extra, **fields):
    """Run a job, returning the exit code and the parsed report records."""
    config = write_job(directory, **fields)
    report = directory / "report.jsonl"
    code = main([*extra, "--config", str(config), "--out", str(report)])
    records = [json.loads(line) for line in report.read_text().splitlines()] if report.exists() else []
    return code, records


def data_of(records, name):
    return next(r["payload"] for r in records if r["record"] == "data" and r["name"] == name)


def write_form(directory: Path, name: str, components, degree: int = 1, family="Triangular", rank=2) -> str:
    geom = make_torus(1, [1, 1j], SQUARE_TORUS["cutoff"])
    form = constant_form(geom, build_group(family, rank), degree, components)
    write_json(directory / name, form_to_json(form))
    return name


E12 = np.array([[0, 1], [0, 0]], dtype=complex)


@pytest.mark.integration
class TestCommands:
    """One job per command against the square curve."""

    def test_verify_identities(self, temp_dir):
        code, records = run_job(temp_dir, suites=["identities", "certificates"], trials=1, seed=3)
        assert code == EXIT_PASS
        header, summary = records[0], records[-1]
        assert header["record"] == "header"
        assert header["seed"] == 3
        assert header["torus"] == {"g": 1, "cutoff": 4, "grid": 13}
        assert summary["record"] == "summary"
        assert summary["failed"] == 0
        assert summary["checks"] == sum(1 for r in records if r["record"] == "check")

    def test_seed_flag_overrides_config(self, temp_dir):
        code, records = run_job(temp_dir, "--seed", "9", suites=["certificates"], trials=1)
        assert code == EXIT_PASS
        assert records[0]["seed"] == 9

    def test_classify(self, temp_dir):
        code, records = run_job(temp_dir, command="classify", samples=2, seed=1)
        assert code == EXIT_PASS
        moduli = data_of(records, "moduli")
        assert moduli["ambient_dim"] == 4
        assert moduli["equations"] == [{"a11*b12": [1.0, 0.0], "a22*b12": [-1.0, 0.0]}]
        assert len(moduli["samples"]) == 4

    def test_classify_unipotent(self, temp_dir):
        code, records = run_job(temp_dir, command="classify", sector="unipotent", samples=0)
        assert code == EXIT_PASS
        assert data_of(records, "moduli")["equations"] == []

    def test_certify_hodge(self, temp_dir):
        code, records = run_job(temp_dir, command="certify-hodge",
                                groups=[{"family": "BorelSp", "rank": 4}, {"family": "E8", "rank": 8}])
        assert code == EXIT_PASS
        assert any(r["name"].startswith("BorelSp(4).") for r in records if r["record"] == "check")
        assert data_of(records, "status") == {"group": "E8(8)", "hodge_property": "unknown"}

    def test_picard_twisted(self, temp_dir):
        code, records = run_job(temp_dir, command="picard", trials=2,
                                group={"family": "Triangular", "rank": 3},
                                twist={"chi": [[0, 0, "0.3+0.1j"]]})
        assert code == EXIT_PASS
        picard = data_of(records, "picard")
        assert picard["is_picard"] is False
        assert [e["in_lattice"] for e in picard["entries"]] == [True, True, False]

    def test_holonomy_of_twist(self, temp_dir):
        code, records = run_job(temp_dir, command="holonomy",
                                group={"family": "Triangular", "rank": 3},
                                twist={"chi": [[0, 0, "0.3+0.1j"]]}, loops=[1, 2, [1, 1]])
        assert code == EXIT_PASS
        names = [r["name"] for r in records if r["record"] == "check"]
        assert "holonomy.character_1" in names
        assert [h["loop"] for h in data_of(records, "holonomy")] == [1, 2, [1, 1]]

    def test_reconstruct_then_canonicalize(self, temp_dir):
        psi = write_form(temp_dir, "psi.json", {(1,): E12, (0,): 0.5 * E12})
        code, records = run_job(temp_dir, command="reconstruct", input=psi)
        assert code == EXIT_PASS
        write_json(temp_dir / "omega.json", data_of(records, "omega"))

        code, records = run_job(temp_dir, command="canonicalize", input="omega.json", compare="omega.json")
        assert code == EXIT_PASS
        assert data_of(records, "equivalence")["decision"] == "equivalent"

    def test_hodge_decompose(self, temp_dir):
        form = write_form(temp_dir, "alpha.json", {(0,): E12})
        code, records = run_job(temp_dir, command="hodge-decompose", input=form)
        assert code == EXIT_PASS
        split = data_of(records, "split")
        assert split["exact"]["terms"] == []
        assert len(split["harmonic"]["terms"]) == 1

    def test_non_flat_input_fails(self, temp_dir):
        E11 = np.array([[1, 0], [0, 0]], dtype=complex)
        omega = write_form(temp_dir, "bent.json", {(0,): E11, (1,): E12})
        code, records = run_job(temp_dir, command="canonicalize", input=omega)
        assert code == EXIT_FAIL
        assert any(r["record"] == "error" and r["type"] == "NonFlatError" for r in records)


@pytest.mark.integration
class TestUsage:
    """Usage errors exit with code 3 and never write a report."""

    def test_unknown_command(self):
        assert main(["index"]) == EXIT_USAGE

    def test_missing_config(self, temp_dir):
        assert main(["--config", str(temp_dir / "absent.yml")]) == EXIT_USAGE

    def test_invalid_config(self, temp_dir):
        code, records = run_job(temp_dir, torus={"g": 1})
        assert code == EXIT_USAGE
        assert records == []

    def test_command_mismatch(self, temp_dir):
        config = write_job(temp_dir)
        assert main(["classify", "--config", str(config)]) == EXIT_USAGE

    def test_group_mismatch_in_form(self, temp_dir):
        form = write_form(temp_dir, "t3.json", {(1,): np.zeros((3, 3))}, family="Triangular", rank=3)
        code, records = run_job(temp_dir, command="reconstruct", input=form)
        assert code == 1
        assert any(r["record"] == "error" and r["type"] == "SpecMismatchError" for r in records)

    def test_sample_config(self, temp_dir, capsys):
        dest = temp_dir / "configs" / "starter.yml"
        assert main(["--sample-config", str(dest)]) == 0
        assert "Sample configuration file created" in capsys.readouterr().out
        assert yaml.safe_load(dest.read_text())["command"] == "verify-identities"

    def test_report_to_stdout(self, temp_dir, capsys):
        config = write_job(temp_dir, suites=["certificates"], trials=1)
        assert main(["--config", str(config)]) == EXIT_PASS
        lines = capsys.readouterr().out.splitlines()
        assert json.loads(lines[0])["record"] == "header"
        assert json.loads(lines[-1])["record"] == "summary"


@pytest.mark.slow
@pytest.mark.integration
def test_all_suites_acceptance(temp_dir):
    code, records = run_job(temp_dir, trials=2, seed=7, torus={"g": 1, "period_matrix": [1, "0.5+1j"], "cutoff": 4})
    assert code in (EXIT_PASS, EXIT_UNDECIDED)
    failed = [r["name"] for r in records if r["record"] == "check" and not r["passed"] and not r.get("undecided")]
    assert not failed, failed
