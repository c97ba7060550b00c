#!/usr/bin/env python3
"""
Versioned JSON documents for groups, certificates, geometry, forms, gauges and
the payloads the CLI writes into its reports.

Complex numbers are [re, im] pairs and matrices are row-major lists of pairs.
Forms are stored sparsely as (entry, frame, frequency, value) terms; the
frequency is the integer index on the band, to which the form's entry shift
is added when the form is twisted.
"""

import json
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from certificates import HodgeCertificate
from derham import CharacterFactor, ConstantFactor, ExpFactor, GaugeMap
from errors import ConfigError, SpecMismatchError
from lie import GroupSpec, build_group
from logging_config import create_component_logger
from torus import FrequencyShift, LieForm, TorusGeom, make_torus

logger = create_component_logger('formats')

FORMAT_VERSION = 1
TERM_TOL = 1e-14

_COMPLEX_STRING = re.compile(r"^[\s()+\-0-9.eEjJ]+$")


# --- scalars and matrices -----------------------------------------------------

def encode_complex(z) -> List[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def decode_complex(value, field: str = "value") -> complex:
    """A number, an [re, im] pair or a string such as "0.5+1j"."""
    if isinstance(value, bool):
        raise ConfigError("expected a complex number, got a boolean", field)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    if isinstance(value, str) and _COMPLEX_STRING.match(value):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigError(f"cannot read a complex number from {value!r}", field)


def encode_matrix(M) -> List[List[List[float]]]:
    M = np.asarray(M, dtype=complex)
    return [[encode_complex(z) for z in row] for row in M]


def decode_matrix(rows, field: str = "matrix") -> np.ndarray:
    try:
        return np.array([[decode_complex(v, field) for v in row] for row in rows], dtype=complex)
    except TypeError:
        raise ConfigError("expected a list of rows", field)


def _header(kind: str) -> Dict[str, Any]:
    return {"format_version": FORMAT_VERSION, "kind": kind}


def _expect(doc: Dict[str, Any], kind: str):
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(f"Unsupported format_version {version!r} for {kind} document", "format_version")
    if doc.get("kind", kind) != kind:
        raise ConfigError(f"Expected a {kind} document, got {doc.get('kind')!r}", "kind")


# --- groups and certificates -------------------------------------------------

def group_to_json(spec: GroupSpec) -> Dict[str, Any]:
    doc = _header("group")
    doc.update({
        "family": spec.family.value,
        "rank": spec.rank,
        "ambient_dim": spec.ambient_dim,
        "labels": list(spec.basis_labels),
        "filtration_level": list(spec.filtration_level),
        "basis": [encode_matrix(X) for X in spec.basis],
    })
    return doc


def group_from_json(doc: Dict[str, Any]) -> GroupSpec:
    """Rebuild the group; a stored basis must agree with the built one."""
    _expect(doc, "group")
    spec = build_group(doc["family"], int(doc["rank"]))
    stored = doc.get("basis")
    if stored is not None:
        if len(stored) != len(spec.basis) or any(
                not np.allclose(decode_matrix(m), X) for m, X in zip(stored, spec.basis)):
            raise SpecMismatchError(f"Stored basis does not match {spec.name}")
    return spec


def certificate_to_json(cert: HodgeCertificate) -> Dict[str, Any]:
    doc = _header("certificate")
    doc.update({
        "group": cert.group,
        "terminal": cert.terminal.value,
        "reference": list(cert.reference) if cert.reference else None,
        "b_dims": cert.b_dims,
        "steps": [{
            "ambient_dim": len(step.ambient),
            "B": [encode_matrix(X) for X in step.B],
            "A": [encode_matrix(X) for X in step.A],
        } for step in cert.chain],
        "modifications": [{
            "kind": m.kind, "step": m.step, "basis": [encode_matrix(X) for X in m.basis],
        } for m in cert.modifications],
    })
    return doc


# --- geometry ------------------------------------------------------------------

def geometry_to_json(geom: TorusGeom) -> Dict[str, Any]:
    doc = _header("geometry")
    doc.update({
        "g": geom.g,
        "period_matrix": encode_matrix(geom.period_matrix),
        "cutoff": geom.cutoff,
        "grid": geom.grid,
    })
    return doc


def geometry_from_json(doc: Dict[str, Any]) -> TorusGeom:
    _expect(doc, "geometry")
    for key in ("g", "period_matrix", "cutoff"):
        if key not in doc:
            raise ConfigError(f"Geometry document is missing '{key}'", key)
    return make_torus(int(doc["g"]), decode_matrix(doc["period_matrix"], "period_matrix"),
                      int(doc["cutoff"]), doc.get("grid"))


# --- forms ---------------------------------------------------------------------

def shift_to_json(shift: Optional[FrequencyShift]) -> Optional[Dict[str, Any]]:
    if shift is None or shift.is_trivial:
        return None
    return {"diag_shift": shift.diag_shift.tolist(), "winding": shift.winding.astype(int).tolist()}


def shift_from_json(doc: Optional[Dict[str, Any]]) -> Optional[FrequencyShift]:
    if doc is None:
        return None
    return FrequencyShift(np.array(doc["diag_shift"], dtype=float), np.array(doc["winding"], dtype=float))


def _frames(geom: TorusGeom, degree: int) -> Sequence[Tuple[int, ...]]:
    return geom.frames[degree]


def form_to_json(alpha: LieForm, tol: float = TERM_TOL) -> Dict[str, Any]:
    geom = alpha.geom
    frames = _frames(geom, alpha.degree)
    K = geom.cutoff
    terms = []
    for idx in zip(*np.nonzero(np.abs(alpha.coeffs) > tol)):
        f, *rest = idx
        freq, (i, j) = rest[:-2], rest[-2:]
        terms.append({
            "entry": [int(i), int(j)],
            "frame": [geom.frame_name((a,)) for a in frames[f]],
            "frequency": [int(m) - K for m in freq],
            "value": encode_complex(alpha.coeffs[idx]),
        })
    doc = _header("form")
    doc.update({
        "group": {"family": alpha.spec.family.value, "rank": alpha.spec.rank},
        "geometry": geometry_to_json(geom),
        "degree": alpha.degree,
        "shift": shift_to_json(alpha.shift),
        "terms": terms,
    })
    return doc


def _frame_from_names(geom: TorusGeom, names: Sequence[str], degree: int) -> Tuple[int, int]:
    """Frame index and the sign of the permutation that sorts the names."""
    lookup = {geom.frame_name((a,)): a for a in range(geom.real_dim)}
    try:
        frame = tuple(sorted(lookup[name] for name in names))
    except KeyError as exc:
        raise ConfigError(f"Unknown frame name {exc.args[0]!r}; known: {sorted(lookup)}", "terms.frame")
    if len(frame) != degree or len(set(frame)) != degree:
        raise ConfigError(f"Frame {list(names)} does not have degree {degree}", "terms.frame")
    sign = 1
    order = [lookup[name] for name in names]
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            if order[a] > order[b]:
                sign = -sign
    return geom.frame_index[degree][frame], sign


def form_from_json(doc: Dict[str, Any], geom: Optional[TorusGeom] = None,
                   spec: Optional[GroupSpec] = None) -> LieForm:
    """Read a form document; an explicit geometry or group overrides the embedded one."""
    _expect(doc, "form")
    geom = geom if geom is not None else geometry_from_json(doc["geometry"])
    group = doc.get("group")
    if spec is None:
        if group is None:
            raise ConfigError("Form document names no group", "group")
        spec = build_group(group["family"], int(group["rank"]))
    elif group is not None and (group["family"], int(group["rank"])) != spec.key:
        raise SpecMismatchError(f"Form is {group['family']}({group['rank']})-valued, expected {spec.name}")
    degree = int(doc["degree"])
    K = geom.cutoff
    form = LieForm.zero(geom, spec, degree, shift_from_json(doc.get("shift")))
    coeffs = np.array(form.coeffs)
    for n, term in enumerate(doc.get("terms", [])):
        f, sign = _frame_from_names(geom, term["frame"], degree)
        freq = [int(m) for m in term.get("frequency", [0] * geom.real_dim)]
        if len(freq) != geom.real_dim or any(abs(m) > K for m in freq):
            raise ConfigError(f"Term {n} frequency {freq} is outside the band |m| <= {K}", "terms.frequency")
        i, j = term["entry"]
        coeffs[(f, *[m + K for m in freq], int(i), int(j))] += sign * decode_complex(term["value"])
    if np.any(coeffs[..., ~spec.pattern] != 0):
        raise SpecMismatchError(f"Form has entries outside the pattern of {spec.name}")
    return form.with_coeffs(coeffs)


# --- gauges --------------------------------------------------------------------

def gauge_to_json(g: GaugeMap) -> Dict[str, Any]:
    factors = []
    for factor in g.factors:
        if isinstance(factor, ConstantFactor):
            factors.append({"type": "constant", "matrix": encode_matrix(factor.matrix)})
        elif isinstance(factor, ExpFactor):
            factors.append({"type": "exp", "exponent": form_to_json(factor.exponent)})
        else:
            factors.append({"type": "character", "frequencies": np.asarray(factor.frequencies).astype(int).tolist()})
    doc = _header("gauge")
    doc.update({"group": {"family": g.spec.family.value, "rank": g.spec.rank},
                "shift": shift_to_json(g.shift), "factors": factors})
    return doc


def gauge_from_json(doc: Dict[str, Any], geom: TorusGeom, spec: GroupSpec) -> GaugeMap:
    _expect(doc, "gauge")
    factors = []
    for n, item in enumerate(doc.get("factors", [])):
        kind = item.get("type")
        if kind == "constant":
            factors.append(ConstantFactor(decode_matrix(item["matrix"], f"factors[{n}].matrix")))
        elif kind == "exp":
            factors.append(ExpFactor(form_from_json(item["exponent"], geom, spec)))
        elif kind == "character":
            factors.append(CharacterFactor(np.array(item["frequencies"], dtype=float)))
        else:
            raise ConfigError(f"Unknown gauge factor type {kind!r}", f"factors[{n}].type")
    return GaugeMap(geom, spec, tuple(factors), shift_from_json(doc.get("shift")))


# --- report payloads -------------------------------------------------------------

def equation_key(pair: Tuple[str, str]) -> str:
    return "*".join(pair)


def equations_to_json(equations: List[Dict[Tuple[str, str], complex]]) -> List[Dict[str, List[float]]]:
    return [{equation_key(k): encode_complex(v) for k, v in eq.items()} for eq in equations]


def canonical_to_json(cf) -> Dict[str, Any]:
    doc = _header("canonical")
    doc.update({
        "psi": form_to_json(cf.psi),
        "h": form_to_json(cf.h),
        "gauge": gauge_to_json(cf.gauge),
        "flat_residual": cf.flat_residual,
        "canonical_residual": cf.canonical_residual,
    })
    return doc


def moduli_to_json(desc) -> Dict[str, Any]:
    doc = _header("moduli")
    doc.update({
        "group": desc.spec.name,
        "sector": desc.sector.value,
        "twist_trivial": desc.ctx.is_trivial,
        "ambient": [{"name": e.name, "frame": [desc.geom.frame_name((a,)) for a in e.frame],
                     "matrix": encode_matrix(e.matrix)} for e in desc.ambient],
        "ambient_dim": desc.dimension,
        "constraint_tensor": [{"i": desc.names[i], "j": desc.names[j], "frame": int(f),
                               "entry": [int(p), int(q)], "value": encode_complex(desc.constraint_tensor[i, j, f, p, q])}
                              for i, j, f, p, q in zip(*np.nonzero(np.abs(desc.constraint_tensor) > 1e-12))],
        "equations": equations_to_json(desc.equations),
        "symmetry": desc.symmetry,
        "samples": [{"coordinates": [encode_complex(z) for z in s.coordinates], "orbit": s.orbit,
                     "constraint": s.constraint, "partner_of": s.partner_of, "decision": s.decision}
                    for s in desc.samples],
    })
    return doc


def equivalence_to_json(eq) -> Dict[str, Any]:
    doc = _header("equivalence")
    doc.update({
        "decision": eq.decision,
        "method": eq.method,
        "residual": eq.residual,
        "witness": encode_matrix(eq.witness) if eq.witness is not None else None,
    })
    return doc


# --- files -----------------------------------------------------------------------

def load_json(path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"File not found: {path}", str(path))
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e.msg}", str(path), e.lineno)


def write_json(path, doc: Dict[str, Any]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"Wrote {doc.get('kind', 'document')} to {path}")
