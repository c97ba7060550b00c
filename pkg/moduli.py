#!/usr/bin/env python3
"""
Canonical forms, reconstruction, equivalence and the admissible harmonic set.

A flat global connection ω (with diagonal class χ modulo the Picard lattice)
is brought to canonical position by
  1. killing the exact part of its diagonal by exp(-f),
  2. removing the lattice part of its harmonic diagonal (0,1) class by a character,
  3. passing to the twisted complex through r_γ⁻¹,
  4. making the (0,1)-part harmonic level by level along the filtration,
after which ω = ψ + ∂h with ψ harmonic. Reconstruction goes the other way,
solving one ∂∂̄-equation per filtration level.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from certificates import hodge_certificate, verify_certificate
from derham import (CharacterFactor, ConstantFactor, GaugeMap, TwistContext, curvature, gauge_apply,
                    picard_coordinates, tau, transfer_r_gamma, type_project)
from errors import (HarmonicObstructionError, NonFlatError, NotClosedError, ObstructionError, SpecMismatchError,
                    TwistMismatchError, UncertifiedGroupError)
from lie import GroupFamily, GroupSpec, matrix_exp, nilpotent_exp, random_algebra_matrix
from logging_config import AppLogger, LoggedOperation, create_component_logger
from reports import Check, check_le, check_trichotomy
from torus import (FrequencyShift, LieForm, codifferential, constant_form, differential, dolbeault_split,
                   green, harmonic_part, hodge_decompose, solve_ddbar, wedge_bracket)

logger = create_component_logger('moduli')

FLAT_TOL = 1e-9
CANONICAL_TOL = 1e-8
CONE_TOL = 1e-10
ACCEPT_TOL = 1e-8
REJECT_TOL = 1e-4
NULL_TOL = 1e-9

EQUIVALENT = "equivalent"
INEQUIVALENT = "inequivalent"
UNDECIDED = "undecided"


class Sector(str, Enum):
    FULL = "full"
    UNIPOTENT = "unipotent"


# --- canonical forms ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """ρ(gauge)(ω) = r_γ(psi + ∂h) with psi harmonic and Π_{0,1}psi nilpotent."""
    gauge: GaugeMap
    psi: LieForm
    h: LieForm
    flat_residual: float
    ctx: TwistContext
    canonical_residual: float = 0.0

    @property
    def omega(self) -> LieForm:
        """psi + ∂h in the twisted complex."""
        return self.psi + differential(self.h, 'del')

    @property
    def global_omega(self) -> LieForm:
        return transfer_r_gamma(self.omega, self.ctx, "toGlobal")

    def checks(self, flat_tol: float = CANONICAL_TOL) -> List[Check]:
        """Flatness, decomposition and (0,1)/(1,0) rigidity residuals."""
        omega = self.omega
        eta = type_project(omega, 0, 1)
        alpha = type_project(omega, 1, 0)
        scale = (1.0 + self.psi.norm()) ** 2
        diag = np.eye(self.psi.spec.ambient_dim, dtype=bool)
        return [
            check_le("canonical.flat", self.flat_residual, flat_tol * scale),
            check_le("canonical.decomposition", self.canonical_residual, flat_tol * scale),
            check_le("canonical.eta_harmonic", (eta - harmonic_part(eta)).norm(), 1e-10),
            check_le("canonical.eta_nilpotent", eta.restrict_entries(diag).norm(), 1e-10),
            check_le("canonical.del_eta", differential(eta, 'del').norm(), 1e-10),
            check_le("canonical.eta_bracket", wedge_bracket(eta, eta).norm(), 1e-9),
            check_le("canonical.del_alpha", differential(alpha, 'del').norm(), flat_tol),
            check_le("canonical.d_alpha", (differential(alpha) - wedge_bracket(eta, alpha)).norm(), flat_tol),
        ]


def _spec_of(form: LieForm, spec: Optional[GroupSpec]) -> GroupSpec:
    if spec is not None and spec.key != form.spec.key:
        raise SpecMismatchError(f"Form is {form.spec.name}-valued, expected {spec.name}")
    return form.spec


def _as_global(omega: LieForm, ctx: TwistContext) -> LieForm:
    if omega.shift is None or omega.shift.is_trivial:
        return omega
    if ctx.shift.same_as(omega.shift):
        return transfer_r_gamma(omega, ctx, "toGlobal")
    raise TwistMismatchError("Form is twisted by a different character than the context")


def _compose_applied(geom, spec, applied: Sequence[GaugeMap]) -> GaugeMap:
    """Product of gauges in application order: the last applied ends up first."""
    total = GaugeMap.identity(geom, spec)
    for g in applied:
        total = g.compose(total)
    return total


def canonicalize(omega: LieForm, ctx: TwistContext, spec: Optional[GroupSpec] = None,
                 flat_tol: float = FLAT_TOL) -> CanonicalForm:
    """Gauge a flat connection into canonical position ψ + ∂h."""
    spec = _spec_of(omega, spec)
    geom = omega.geom
    omega = _as_global(omega, ctx)
    curv = curvature(omega, tol=flat_tol)
    AppLogger.log_check('moduli', 'canonicalize.input_flat', curv.norm, curv.tolerance, curv.flat)
    if not curv.flat:
        raise NonFlatError("canonicalize needs a flat connection", curv.norm)

    n = spec.ambient_dim
    applied: List[GaugeMap] = []
    with LoggedOperation('moduli', 'canonicalize', {'group': spec.name, 'twisted': not ctx.is_trivial}):
        # Diagonal exact part.
        diag = omega.restrict_entries(np.eye(n, dtype=bool))
        potential = hodge_decompose(diag).exact_potential
        if potential is not None and potential.norm() > 0:
            g = GaugeMap.exp(-potential)
            omega = gauge_apply(g, omega)
            applied.append(g)

        # Lattice part of the harmonic diagonal (0,1) class.
        C = np.einsum('jii->ji', omega.constant_part()[geom.g:])
        delta = C - ctx.chi_coeffs
        m = np.array([picard_coordinates(geom, delta[:, i]) for i in range(n)])
        off_lattice = float(np.abs(m - np.round(m)).max(initial=0.0))
        if off_lattice > 1e-6:
            raise TwistMismatchError(
                f"Diagonal (0,1) class differs from the context's χ off the Picard lattice (defect {off_lattice:.3e})")
        m = np.round(m).astype(int)
        if np.any(m):
            g = GaugeMap.character(geom, spec, -m)
            omega = gauge_apply(g, omega)
            applied.append(g)

        alpha = transfer_r_gamma(omega, ctx, "toTwisted")
        levels = spec.entry_levels()
        for k in range(1, spec.max_level + 1):
            eta = type_project(alpha, 0, 1).restrict_entries(levels == k)
            if eta.norm() == 0:
                continue
            split = dolbeault_split(eta, 'dbar')
            AppLogger.log_algorithm_step('moduli', 'canonicalize.level', {
                'level': k, 'eta_norm': f"{eta.norm():.3e}", 'potential_norm': f"{split.potential.norm():.3e}",
                'dbar_residual': f"{split.residual:.3e}"})
            if split.potential.norm() == 0:
                continue
            alpha = gauge_apply(GaugeMap.exp(-split.potential), alpha)
            applied.append(GaugeMap.exp(tau(-split.potential, ctx, "toGlobal")))

        psi = harmonic_part(alpha)
        h = green(codifferential(type_project(alpha, 1, 0), 'del'), 'del')
        canon = psi + differential(h, 'del')
        result = CanonicalForm(
            gauge=_compose_applied(geom, spec, applied),
            psi=psi,
            h=h,
            flat_residual=curvature(canon).norm,
            ctx=ctx,
            canonical_residual=(alpha - canon).norm(),
        )
    AppLogger.log_algorithm_step('moduli', 'canonicalize.done', {
        'gauge_factors': len(result.gauge.factors), 'psi_norm': f"{psi.norm():.3e}",
        'h_norm': f"{h.norm():.3e}", 'canonical_residual': f"{result.canonical_residual:.3e}"})
    return result


def reconstruct(psi: LieForm, ctx: TwistContext, spec: Optional[GroupSpec] = None,
                flat_tol: float = CANONICAL_TOL) -> CanonicalForm:
    """
    The flat ω = ψ + ∂h of an admissible harmonic ψ, ascending the filtration.

    Harmonic forms on a flat torus are constant in the twisted frame, so each
    level source is harmonic: either it vanishes and h stays zero, or
    solve_ddbar reports the harmonic obstruction.
    """
    spec = _spec_of(psi, spec)
    geom = psi.geom
    if psi.degree != 1 or not psi.is_harmonic():
        raise ValueError("reconstruct needs a harmonic 1-form")
    if not ctx.shift.same_as(psi.shift):
        raise TwistMismatchError("psi is not twisted by the context's character")
    diag = np.eye(spec.ambient_dim, dtype=bool)
    if type_project(psi, 0, 1).restrict_entries(diag).norm() > 0:
        raise ValueError("The (0,1)-part of psi must be nilpotent")

    h = LieForm.zero(geom, spec, 0, psi.shift)
    levels = spec.entry_levels()
    scale = (1.0 + psi.norm()) ** 2
    for k in range(1, spec.max_level + 1):
        F = curvature(psi + differential(h, 'del')).form
        rhs = type_project(F, 1, 1).restrict_entries(levels == k)
        AppLogger.log_algorithm_step('moduli', 'reconstruct.level', {'level': k, 'rhs_norm': f"{rhs.norm():.3e}"})
        if rhs.norm() <= 1e-14 * scale:
            continue
        try:
            h = h + solve_ddbar(rhs)
        except HarmonicObstructionError as e:
            raise ObstructionError("Harmonic obstruction in the ddbar equation", k, e.norm) from e
        except NotClosedError as e:
            raise ObstructionError(f"ddbar equation is not solvable ({e})", k, rhs.norm()) from e

    residual = curvature(psi + differential(h, 'del')).norm
    AppLogger.log_check('moduli', 'reconstruct.flat', residual, flat_tol * scale, residual <= flat_tol * scale)
    if residual > flat_tol * scale:
        raise ObstructionError("Reconstructed connection is not flat", spec.max_level, residual)
    return CanonicalForm(GaugeMap.identity(geom, spec), psi, h, residual, ctx)


# --- equivalence -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Equivalence:
    decision: str
    witness: Optional[np.ndarray]
    residual: float
    method: str
    gauge_witness: Optional[GaugeMap] = None

    @property
    def equivalent(self) -> bool:
        return self.decision == EQUIVALENT

    def check(self, accept: float = ACCEPT_TOL, reject: float = REJECT_TOL) -> Check:
        return check_trichotomy(f"equivalence.{self.method}", self.residual, accept, reject)


def _decide(residual: float, accept: float, reject: float) -> str:
    if residual <= accept:
        return EQUIVALENT
    if residual >= reject:
        return INEQUIVALENT
    return UNDECIDED


def _intertwining_residual(a: np.ndarray, X1: np.ndarray, X2: np.ndarray) -> float:
    return float(np.linalg.norm(a[None] @ X1 - X2 @ a[None]) / max(np.linalg.norm(a), 1e-300))


def _linear_intertwiner(spec: GroupSpec, allowed: np.ndarray, X1: np.ndarray, X2: np.ndarray,
                        rng: np.random.Generator) -> Tuple[Optional[np.ndarray], float]:
    """Null space of a ↦ aX1 - X2a over allowed upper-triangular entries, then a generic invertible member."""
    n = spec.ambient_dim
    entries = [(p, q) for p in range(n) for q in range(p, n) if allowed[p, q]]
    columns = []
    for p, q in entries:
        E = np.zeros((n, n), dtype=complex)
        E[p, q] = 1
        columns.append((E[None] @ X1 - X2 @ E[None]).reshape(-1))
    A = np.array(columns).T
    _, s, vh = np.linalg.svd(A)
    threshold = NULL_TOL * max(1.0, s[0] if s.size else 1.0)
    rank = int(np.sum(s > threshold))
    null = vh[rank:].conj()
    if null.shape[0] == 0:
        return None, float(s.min()) if s.size else 0.0
    diag_cols = [i for i, (p, q) in enumerate(entries) if p == q]
    if any(np.abs(null[:, i]).max() <= 1e-12 for i in diag_cols):
        return None, 1.0
    for _ in range(8):
        coeffs = rng.normal(size=null.shape[0]) + 1j * rng.normal(size=null.shape[0])
        vec = coeffs @ null
        a = np.zeros((n, n), dtype=complex)
        for value, (p, q) in zip(vec, entries):
            a[p, q] = value
        if np.abs(np.diag(a)).min() > 1e-8 * np.abs(a).max():
            return a / a[0, 0], _intertwining_residual(a, X1, X2)
    return None, 1.0


def _least_squares_intertwiner(spec: GroupSpec, allowed: np.ndarray, X1: np.ndarray, X2: np.ndarray,
                               rng: np.random.Generator) -> Tuple[Optional[np.ndarray], float]:
    """Minimize ‖aX1 - X2a‖ over a = exp(D)exp(N) in the flat-section group."""
    torus = [T for T in spec.torus_basis if np.all(allowed[T != 0])]
    nil = [N for N in spec.nilpotent_basis if np.all(allowed[N != 0])]
    basis = torus + nil
    if not basis:
        return np.eye(spec.ambient_dim, dtype=complex), _intertwining_residual(np.eye(spec.ambient_dim), X1, X2)
    k = len(basis)
    t = len(torus)

    def element(params):
        c = params[:k] + 1j * params[k:]
        D = sum((c[i] * basis[i] for i in range(t)), np.zeros_like(X1[0]))
        N = sum((c[i] * basis[i] for i in range(t, k)), np.zeros_like(X1[0]))
        return matrix_exp(D) @ nilpotent_exp(N)

    def residual(params):
        a = element(params)
        r = (a[None] @ X1 - X2 @ a[None]).reshape(-1)
        return np.concatenate([r.real, r.imag])

    best = None
    starts = [np.zeros(2 * k)] + [0.5 * rng.normal(size=2 * k) for _ in range(3)]
    for x0 in starts:
        fit = least_squares(residual, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        a = element(fit.x)
        value = _intertwining_residual(a, X1, X2)
        if best is None or value < best[1]:
            best = (a, value)
        if value <= 1e-12:
            break
    return best


def match_harmonic(psi1: LieForm, psi2: LieForm, rng: Optional[np.random.Generator] = None,
                   accept: float = ACCEPT_TOL, reject: float = REJECT_TOL) -> Equivalence:
    """Decide psi2 = Ad(a)psi1 for a constant flat section a."""
    if psi1.spec.key != psi2.spec.key:
        raise SpecMismatchError("Harmonic forms of different groups")
    if not (psi1.is_harmonic() and psi2.is_harmonic()):
        raise ValueError("match_harmonic compares harmonic forms")
    rng = rng if rng is not None else np.random.default_rng(0)
    spec = psi1.spec
    X1, X2 = psi1.constant_part(), psi2.constant_part()
    scale = 1.0 + max(np.linalg.norm(X1), np.linalg.norm(X2))
    identity = np.eye(spec.ambient_dim, dtype=complex)

    direct = float(np.linalg.norm(X1 - X2)) / scale
    if direct <= accept:
        return Equivalence(EQUIVALENT, identity, direct, "identity")
    d1 = np.einsum('fii->fi', X1)
    d2 = np.einsum('fii->fi', X2)
    diag_gap = float(np.linalg.norm(d1 - d2)) / scale
    if diag_gap > accept:
        return Equivalence(_decide(diag_gap, accept, reject), None, diag_gap, "diagonal")

    shift = psi1.shift if psi1.shift is not None else psi2.shift
    trivial = shift.trivial_entries() if shift is not None else np.ones_like(spec.pattern)
    allowed = spec.pattern & trivial
    if spec.family is GroupFamily.TRIANGULAR:
        a, residual = _linear_intertwiner(spec, allowed, X1, X2, rng)
        method = "linear"
        if a is None:
            return Equivalence(INEQUIVALENT, None, max(residual, reject), method)
    else:
        a, residual = _least_squares_intertwiner(spec, allowed, X1, X2, rng)
        method = "least_squares"
    residual /= scale
    decision = _decide(residual, accept, reject)
    AppLogger.log_algorithm_step('moduli', 'match_harmonic', {
        'method': method, 'residual': f"{residual:.3e}", 'decision': decision})
    return Equivalence(decision, a if decision != INEQUIVALENT else None, residual, method)


def flat_section_gauge(a: np.ndarray, ctx: TwistContext) -> Optional[GaugeMap]:
    """Global gauge u·a·u⁻¹ of a constant flat section a of the twisted bundle."""
    geom, spec = ctx.geom, ctx.spec
    winding = ctx.shift.winding.astype(int)
    try:
        if not np.any(winding):
            return GaugeMap.constant(geom, spec, spec.enforce(a))
        return GaugeMap(geom, spec, (CharacterFactor(winding), ConstantFactor(spec.enforce(a)),
                                     CharacterFactor(-winding)))
    except (SpecMismatchError, ValueError) as e:
        logger.warning(f"No global gauge witness for the flat section: {e}")
        return None


def equivalent(omega1: LieForm, omega2: LieForm, ctx: TwistContext, spec: Optional[GroupSpec] = None,
               rng: Optional[np.random.Generator] = None, accept: float = ACCEPT_TOL,
               reject: float = REJECT_TOL) -> Equivalence:
    """Gauge-equivalence of two flat connections via their canonical forms."""
    spec = _spec_of(omega1, spec)
    _spec_of(omega2, spec)
    c1 = canonicalize(omega1, ctx, spec)
    c2 = canonicalize(omega2, ctx, spec)
    match = match_harmonic(c1.psi, c2.psi, rng, accept, reject)
    if match.decision != EQUIVALENT or match.witness is None:
        return match
    A = flat_section_gauge(match.witness, ctx)
    gauge = None if A is None else c2.gauge.inverse().compose(A).compose(c1.gauge)
    return replace(match, gauge_witness=gauge)


# --- admissible set ----------------------------------------------------------

@dataclass(frozen=True)
class AmbientElement:
    name: str
    frame: Tuple[int, ...]
    matrix: np.ndarray


@dataclass
class Sample:
    coordinates: np.ndarray
    orbit: int
    constraint: float
    partner_of: Optional[int] = None
    decision: str = EQUIVALENT


@dataclass
class ModuliDescription:
    geom: object
    spec: GroupSpec
    ctx: TwistContext
    sector: Sector
    ambient: List[AmbientElement]
    constraint_tensor: np.ndarray
    equations: List[Dict[Tuple[str, str], complex]]
    symmetry: Dict[str, object]
    samples: List[Sample] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.ambient)

    @property
    def names(self) -> List[str]:
        return [e.name for e in self.ambient]

    @property
    def ambient_basis(self) -> List[LieForm]:
        shift = self.ctx.twisted_shift()
        return [constant_form(self.geom, self.spec, 1, {e.frame: e.matrix}, shift) for e in self.ambient]

    def form_of(self, x) -> LieForm:
        x = np.asarray(x, dtype=complex)
        components: Dict[Tuple[int, ...], np.ndarray] = {}
        for value, e in zip(x, self.ambient):
            components[e.frame] = components.get(e.frame, 0) + value * e.matrix
        return constant_form(self.geom, self.spec, 1, components, self.ctx.twisted_shift())

    def coordinates_of(self, psi: LieForm) -> np.ndarray:
        const = psi.constant_part()
        index = self.geom.frame_index[1]
        x = np.zeros(len(self.ambient), dtype=complex)
        by_frame: Dict[Tuple[int, ...], List[int]] = {}
        for i, e in enumerate(self.ambient):
            by_frame.setdefault(e.frame, []).append(i)
        for frame, idx in by_frame.items():
            M = np.array([self.ambient[i].matrix.reshape(-1) for i in idx]).T
            coords, *_ = np.linalg.lstsq(M, const[index[frame]].reshape(-1), rcond=None)
            x[idx] = coords
        return x

    def constraint(self, x) -> np.ndarray:
        """Harmonic part of [ψ, ψ] for ψ = Σ x_i e_i, per 2-frame and entry."""
        x = np.asarray(x, dtype=complex)
        return np.einsum('i,j,ij...->...', x, x, self.constraint_tensor)

    def constraint_norm(self, x) -> float:
        return float(2 * np.linalg.norm(self.constraint(x)))


def _ambient_elements(spec: GroupSpec, geom, trivial: np.ndarray, sector: Sector) -> List[AmbientElement]:
    def on_trivial(X):
        return bool(np.all(trivial[X != 0]))

    labels_all = dict(zip(range(spec.dim), spec.basis_labels))
    full = [(labels_all[i], X) for i, X in enumerate(spec.basis) if on_trivial(X)]
    nil = [(lbl, X) for lbl, X in zip(spec.nilpotent_labels, spec.nilpotent_basis) if on_trivial(X)]
    holo = nil if sector is Sector.UNIPOTENT else full
    out = []
    for prefix, frames, family in (("a", range(geom.g), holo), ("b", range(geom.g, 2 * geom.g), nil)):
        for a in frames:
            suffix = f"_{(a % geom.g) + 1}" if geom.g > 1 else ""
            for label, X in family:
                out.append(AmbientElement(f"{prefix}{label}{suffix}", (a,), X))
    return out


def _constraint_tensor(ambient: List[AmbientElement], geom, spec: GroupSpec,
                       shift: Optional[FrequencyShift]) -> np.ndarray:
    forms = [constant_form(geom, spec, 1, {e.frame: e.matrix}, shift) for e in ambient]
    N = len(forms)
    n = spec.ambient_dim
    T = np.zeros((N, N, geom.frame_count(2), n, n), dtype=complex)
    for i in range(N):
        for j in range(i, N):
            value = harmonic_part(wedge_bracket(forms[i], forms[j])).constant_part()
            T[i, j] = value
            T[j, i] = value
    return T


def _normalize(coeffs: Dict[Tuple[str, str], complex]) -> Dict[Tuple[str, str], complex]:
    lead = next(iter(coeffs.values()))
    out = {}
    for key, value in coeffs.items():
        v = complex(np.round(value / lead, 12))
        out[key] = v.real if abs(v.imag) < 1e-12 else v
    return out


def _equations(T: np.ndarray, names: List[str], spec: GroupSpec) -> List[Dict[Tuple[str, str], complex]]:
    N = len(names)
    equations: List[Dict[Tuple[str, str], complex]] = []
    if N == 0:
        return equations
    for f in range(T.shape[2]):
        for p, q in zip(*np.nonzero(spec.pattern)):
            coeffs = {}
            for i in range(N):
                for j in range(i, N):
                    c = T[i, j, f, p, q] * (1 if i == j else 2)
                    if abs(c) > 1e-12:
                        coeffs[(names[i], names[j])] = c
            if not coeffs:
                continue
            eq = _normalize(coeffs)
            if eq not in equations:
                equations.append(eq)
    return equations


def _symmetry(spec: GroupSpec, ctx: TwistContext) -> Dict[str, object]:
    trivial = ctx.shift.trivial_entries()
    allowed = spec.pattern & trivial
    entries = [f"{p + 1}{q + 1}" for p, q in zip(*np.nonzero(allowed))]
    return {
        "kind": "constants" if ctx.is_trivial else "centralizer",
        "group": spec.name,
        "entries": entries,
        "dimension": sum(1 for X in spec.basis if np.all(allowed[X != 0])),
    }


def project_to_cone(T: np.ndarray, x0, tol: float = 1e-14, max_iter: int = 60) -> np.ndarray:
    """Newton iteration with minimum-norm steps onto {x : Σ x_i x_j T_ij = 0}."""
    x = np.asarray(x0, dtype=complex).copy()
    if T.size == 0:
        return x
    sym = T + np.swapaxes(T, 0, 1)
    for _ in range(max_iter):
        Q = np.einsum('i,j,ij...->...', x, x, T).reshape(-1)
        if np.linalg.norm(Q) <= tol * max(1.0, np.linalg.norm(x) ** 2):
            break
        J = np.einsum('lj...,j->...l', sym, x).reshape(Q.size, x.size)
        step, *_ = np.linalg.lstsq(J, Q, rcond=None)
        x = x - step
    return x


def _flat_section_partner(desc: ModuliDescription, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    allowed = desc.spec.pattern & desc.ctx.shift.trivial_entries()
    a = desc.spec.enforce(matrix_exp(random_algebra_matrix(desc.spec, rng, 0.3, allowed=allowed)))
    a_inv = np.linalg.inv(a)
    const = desc.form_of(x).constant_part()
    moved = desc.spec.enforce(a[None] @ const @ a_inv[None])
    psi = constant_form(desc.geom, desc.spec, 1, {f: moved[i] for i, f in enumerate(desc.geom.frames[1])},
                        desc.ctx.twisted_shift())
    return desc.coordinates_of(psi)


def _label_orbits(desc: ModuliDescription, rng: np.random.Generator):
    representatives: List[Tuple[int, LieForm]] = []
    for sample in desc.samples:
        psi = desc.form_of(sample.coordinates)
        for label, rep in representatives:
            match = match_harmonic(rep, psi, rng)
            if match.decision == EQUIVALENT:
                sample.orbit = label
                break
            if match.decision == UNDECIDED:
                sample.decision = UNDECIDED
        else:
            sample.orbit = len(representatives)
            representatives.append((sample.orbit, psi))


def admissible_set(spec: GroupSpec, ctx: TwistContext, geom=None, sector=Sector.FULL, samples: int = 0,
                   rng: Optional[np.random.Generator] = None) -> ModuliDescription:
    """Ambient harmonic space, bracket constraint, residual symmetry and labelled samples."""
    geom = geom if geom is not None else ctx.geom
    sector = Sector(sector)
    report = verify_certificate(hodge_certificate(spec))
    if not report.passed:
        raise UncertifiedGroupError(f"{spec.name} has no verified Hodge certificate: "
                                    f"{[c.name for c in report.failed()]}")
    rng = rng if rng is not None else np.random.default_rng(0)
    shift = ctx.twisted_shift()
    trivial = ctx.shift.trivial_entries()

    ambient = _ambient_elements(spec, geom, trivial, sector)
    T = _constraint_tensor(ambient, geom, spec, shift)
    names = [e.name for e in ambient]
    desc = ModuliDescription(geom, spec, ctx, sector, ambient, T, _equations(T, names, spec),
                             _symmetry(spec, ctx))
    AppLogger.log_algorithm_step('moduli', 'admissible_set', {
        'group': spec.name, 'sector': sector.value, 'ambient_dim': desc.dimension,
        'equations': len(desc.equations)})

    if desc.dimension:
        for _ in range(samples):
            x0 = 0.5 * (rng.normal(size=desc.dimension) + 1j * rng.normal(size=desc.dimension))
            x = project_to_cone(T, x0)
            residual = desc.constraint_norm(x)
            if residual > CONE_TOL:
                logger.warning(f"Cone projection did not converge (residual {residual:.3e}); sample dropped")
                continue
            desc.samples.append(Sample(x, -1, residual))
            partner = _flat_section_partner(desc, x, rng)
            desc.samples.append(Sample(partner, -1, desc.constraint_norm(partner),
                                       partner_of=len(desc.samples) - 1))
        _label_orbits(desc, rng)
    return desc
