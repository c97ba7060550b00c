#!/usr/bin/env python3
"""Job configuration loading with schema validation."""

import json
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import jsonschema
import numpy as np
import yaml

from errors import ConfigError
from formats import FORMAT_VERSION, decode_complex
from suites import DEFAULT_TOLERANCES, SUITES

COMMANDS = ("verify-identities", "hodge-decompose", "canonicalize", "reconstruct",
            "classify", "holonomy", "certify-hodge", "picard")

# Commands that read a form document.
NEEDS_INPUT = ("hodge-decompose", "canonicalize", "reconstruct")

DEFAULT_CUTOFF = 8


@dataclass(frozen=True)
class JobConfig:
    """A validated job with every default filled in."""
    command: str
    g: int
    period_matrix: Tuple[Tuple[complex, ...], ...]
    cutoff: int
    grid: int
    family: str
    rank: int
    chi: Optional[Tuple[Tuple[complex, ...], ...]] = None
    format_version: int = FORMAT_VERSION
    seed: int = 0
    trials: int = 20
    sector: str = "full"
    samples: int = 4
    suites: Optional[Tuple[str, ...]] = None
    tolerances: Dict[str, float] = dataclasses.field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    input: Optional[str] = None
    compare: Optional[str] = None
    output: Optional[str] = None
    loops: Optional[Tuple[Any, ...]] = None
    groups: Tuple[Tuple[str, int], ...] = ()
    bottom_out: bool = True
    source: Optional[str] = None

    def period_array(self) -> np.ndarray:
        return np.array(self.period_matrix, dtype=complex)

    def chi_array(self) -> Optional[np.ndarray]:
        return None if self.chi is None else np.array(self.chi, dtype=complex)

    def with_overrides(self, seed: Optional[int] = None, output: Optional[str] = None) -> "JobConfig":
        changes = {}
        if seed is not None:
            if seed < 0:
                raise ConfigError("seed must be non-negative", "seed")
            changes["seed"] = seed
        if output is not None:
            changes["output"] = output
        return dataclasses.replace(self, **changes) if changes else self

    def summary(self) -> Dict[str, Any]:
        """Fields echoed into the report header."""
        return {
            "seed": self.seed,
            "torus": {"g": self.g, "cutoff": self.cutoff, "grid": self.grid},
            "group": {"family": self.family, "rank": self.rank},
            "twisted": self.chi is not None and bool(np.any(self.chi_array())),
            "source": self.source,
        }


class ConfigLoader:
    """Handles configuration discovery, loading and validation."""

    def __init__(self, schema_path: Optional[str] = None):
        """Initialize with optional custom schema path."""
        self.schema_path = schema_path or self._get_default_schema_path()
        self._schema = None

    def _get_default_schema_path(self) -> str:
        """Get the default schema file path."""
        return str(Path(__file__).parent / "config_schema.json")

    def _load_schema(self) -> Dict[str, Any]:
        """Load and cache the JSON schema."""
        if self._schema is None:
            with open(self.schema_path, 'r') as f:
                self._schema = json.load(f)
        return self._schema

    def discover_config(self, config_path: Optional[str] = None) -> Optional[str]:
        """Discover configuration file in priority order."""
        if config_path:
            if Path(config_path).exists():
                return config_path
            raise FileNotFoundError(f"Config file not found: {config_path}")

        candidates = [
            Path.cwd() / "configs" / "flatmoduli.yml",
            Path.cwd() / "configs" / "flatmoduli.yaml",
            Path.cwd() / "flatmoduli.yml",
            Path.cwd() / "flatmoduli.yaml",
            Path.home() / ".config" / "flatmoduli" / "config.yml",
            Path.home() / ".config" / "flatmoduli" / "config.yaml",
        ]

        for candidate in candidates:
            if candidate.exists():
                return str(candidate)

        return None

    def load_config(self, config_path: Optional[str] = None) -> JobConfig:
        """Load, validate and complete a job configuration."""
        try:
            discovered_path = self.discover_config(config_path)
        except FileNotFoundError as e:
            raise ConfigError(str(e), "config")

        if not discovered_path:
            raise ConfigError(
                "No configuration file provided or discovered. Pass --config "
                "(run `flatmoduli.py --sample-config` to scaffold one).", "config")

        with open(discovered_path, 'r', encoding='utf-8') as f:
            text = f.read()
        fmt = "json" if discovered_path.endswith(".json") else "yaml"
        return self.parse(text, base_dir=str(Path(discovered_path).parent), source=discovered_path, fmt=fmt)

    def parse(self, text: str, base_dir: Optional[str] = None, source: Optional[str] = None,
              fmt: str = "yaml") -> JobConfig:
        raw = _read_document(text, fmt)
        if not isinstance(raw, dict):
            raise ConfigError("top level must be a mapping", None, 1)
        config = self._normalize_numbers(raw)
        self.validate_config(config, text)
        merged = self._merge_with_defaults(config)
        return _build_job(merged, base_dir, source, text)

    def _normalize_numbers(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """PyYAML reads `1e-9` (no dot) as a string; coerce tolerance values back to floats
        so users can write them unquoted."""
        tol = config.get('tolerances')
        if isinstance(tol, dict):
            for k, v in list(tol.items()):
                if isinstance(v, str):
                    try:
                        tol[k] = float(v)
                    except ValueError:
                        pass
        return config

    def validate_config(self, config: Dict[str, Any], text: Optional[str] = None):
        """Validate configuration against schema."""
        schema = self._load_schema()
        try:
            jsonschema.validate(config, schema)
        except jsonschema.ValidationError as e:
            path = list(e.absolute_path)
            if e.validator == "required":
                missing = e.message.split("'")[1] if "'" in e.message else None
                path = path + ([missing] if missing else [])
            field = ".".join(str(p) for p in path) or None
            raise ConfigError(e.message, field, _line_of(text, path))

        unknown = set(config.get("suites") or ()) - set(SUITES)
        if unknown:
            raise ConfigError(f"unknown suites {sorted(unknown)}; choose from {sorted(SUITES)}",
                              "suites", _line_of(text, ["suites"]))

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration."""
        return {
            "format_version": FORMAT_VERSION,
            "seed": 0,
            "trials": 20,
            "sector": "full",
            "samples": 4,
            "bottom_out": True,
            "tolerances": dict(DEFAULT_TOLERANCES),
        }

    def _merge_with_defaults(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """Merge user config with defaults."""
        merged = self._get_default_config()
        for key, value in config.items():
            if key == "tolerances":
                merged["tolerances"].update(value)
            else:
                merged[key] = value

        torus = dict(merged["torus"])
        torus.setdefault("cutoff", DEFAULT_CUTOFF)
        torus.setdefault("grid", 3 * torus["cutoff"] + 1)
        merged["torus"] = torus
        return merged


def _read_document(text: str, fmt: str):
    if fmt == "json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e.msg}", None, e.lineno)
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        problem = getattr(e, 'problem', None) or str(e)
        raise ConfigError(f"invalid YAML: {problem}", None, mark.line + 1 if mark else None)


def _line_of(text: Optional[str], path: List[Any]) -> Optional[int]:
    """1-based line of the deepest node of `path` that exists in the YAML text."""
    if not text:
        return None
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = node.start_mark.line + 1 if node is not None else None
    for part in path:
        if isinstance(node, yaml.MappingNode):
            match = [v for k, v in node.value if k.value == str(part)]
            if not match:
                break
            key = next(k for k, v in node.value if k.value == str(part))
            node, line = match[0], key.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _row(value, field: str, line: Optional[int]) -> Tuple[complex, ...]:
    if not isinstance(value, list):
        raise ConfigError("expected a list of complex numbers", field, line)
    return tuple(decode_complex(v, field) for v in value)


def _period_matrix(torus: Dict[str, Any], text: Optional[str]) -> Tuple[Tuple[complex, ...], ...]:
    """g rows of 2g generators; for g = 1 the single row may be written flat."""
    g = torus["g"]
    field = "torus.period_matrix"
    line = _line_of(text, ["torus", "period_matrix"])
    value = torus["period_matrix"]
    if g == 1 and len(value) == 2:
        rows = (_row(value, field, line),)
    else:
        rows = tuple(_row(r, field, line) for r in value)
    if len(rows) != g or any(len(r) != 2 * g for r in rows):
        raise ConfigError(f"period_matrix must be {g}x{2 * g}", field, line)
    return rows


def _chi(twist: Optional[Dict[str, Any]], g: int, text: Optional[str]) -> Optional[Tuple[Tuple[complex, ...], ...]]:
    """Diagonal χ coefficients, one row per dz̄_j; `chi_matrices` input must be diagonal."""
    if not twist:
        return None
    if "chi" in twist:
        field, line = "twist.chi", _line_of(text, ["twist", "chi"])
        chi = twist["chi"]
        if g == 1 and not isinstance(chi[0], list):
            chi = [chi]
        rows = tuple(_row(r, field, line) for r in chi)
    else:
        field, line = "twist.chi_matrices", _line_of(text, ["twist", "chi_matrices"])
        rows = []
        for block in twist["chi_matrices"]:
            M = np.array([_row(r, field, line) for r in block], dtype=complex)
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ConfigError("χ matrices must be square", field, line)
            if np.any(M - np.diag(np.diag(M))):
                raise ConfigError("χ must be diagonal: a twist is a constant (0,1)-form valued in the "
                                  "diagonal torus", field, line)
            rows.append(tuple(np.diag(M)))
        rows = tuple(rows)
    if len(rows) != g:
        raise ConfigError(f"χ needs {g} rows, got {len(rows)}", field, line)
    if len({len(r) for r in rows}) != 1:
        raise ConfigError("χ rows must have equal length", field, line)
    return rows


def _resolve(path: Optional[str], base_dir: Optional[str], field: str, must_exist: bool,
             text: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    p = Path(path)
    if not p.is_absolute() and base_dir:
        p = Path(base_dir) / p
    if must_exist and not p.exists():
        raise ConfigError(f"file not found: {p}", field, _line_of(text, [field]))
    return str(p)


def _build_job(merged: Dict[str, Any], base_dir: Optional[str], source: Optional[str],
               text: Optional[str]) -> JobConfig:
    command = merged["command"]
    torus = merged["torus"]
    if torus["grid"] < 3 * torus["cutoff"] + 1:
        raise ConfigError(f"grid must be at least 3*cutoff+1 = {3 * torus['cutoff'] + 1}", "torus.grid",
                          _line_of(text, ["torus", "grid"]))
    if command in NEEDS_INPUT and not merged.get("input"):
        raise ConfigError(f"command '{command}' needs an input form file", "input")
    if merged.get("compare") and command != "canonicalize":
        raise ConfigError("'compare' is only used by canonicalize", "compare", _line_of(text, ["compare"]))

    groups = tuple((gr["family"], gr["rank"]) for gr in merged.get("groups") or ())
    loops = merged.get("loops")
    return JobConfig(
        command=command,
        format_version=merged["format_version"],
        seed=merged["seed"],
        trials=merged["trials"],
        g=torus["g"],
        period_matrix=_period_matrix(torus, text),
        cutoff=torus["cutoff"],
        grid=torus["grid"],
        family=merged["group"]["family"],
        rank=merged["group"]["rank"],
        chi=_chi(merged.get("twist"), torus["g"], text),
        sector=merged["sector"],
        samples=merged["samples"],
        suites=tuple(merged["suites"]) if merged.get("suites") else None,
        tolerances=dict(merged["tolerances"]),
        input=_resolve(merged.get("input"), base_dir, "input", True, text),
        compare=_resolve(merged.get("compare"), base_dir, "compare", True, text),
        output=_resolve(merged.get("output"), base_dir, "output", False, text),
        loops=tuple(tuple(l) if isinstance(l, list) else l for l in loops) if loops else None,
        groups=groups,
        bottom_out=merged["bottom_out"],
        source=source,
    )


def parse_config(text: str, base_dir: Optional[str] = None, source: Optional[str] = None,
                 fmt: str = "yaml") -> JobConfig:
    """Parse and validate job text (YAML, or JSON with fmt="json")."""
    return ConfigLoader().parse(text, base_dir=base_dir, source=source, fmt=fmt)


SAMPLE_CONFIG = """\
# flatmoduli job configuration
format_version: 1
command: verify-identities

torus:
  g: 1
  # generators of the lattice as columns; for g = 1 a flat pair is fine
  period_matrix: [1, "1j"]
  cutoff: 8
  # grid: 25            # defaults to 3*cutoff+1

group:
  family: Triangular
  rank: 2

# twist:
#   chi: [[0, "0.3+0.1j"]]   # one row of diagonal entries per dz̄_j

seed: 7
trials: 20
# suites: [identities, kahler, ddbar, dichotomy, twisting, picard,
#          round_trip, uniqueness, equivalence, holonomy, certificates]

# tolerances:
#   flat: 1e-9
#   accept: 1e-8
#   reject: 1e-4

# input: forms/omega.json          # hodge-decompose, canonicalize, reconstruct
# compare: forms/omega2.json       # canonicalize: decide equivalence
# output: reports/run.jsonl
"""
