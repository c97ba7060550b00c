#!/usr/bin/env python3
"""
Randomized property suites behind `flatmoduli verify-identities`.

Every suite takes a SuiteCase (torus, group, twist), a seeded generator, a
trial count and the tolerance table, and returns Check records. A suite
reports the worst residual over its trials, so one bad trial fails it.

Random gauges are drawn inside the band: exp factors of nilpotent
degree-0 forms, constant group elements and diagonal characters, chosen so
that every grid product stays inside the cutoff.
"""

from collections import defaultdict
from dataclasses import dataclass, replace
from math import comb
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from certificates import hodge_certificate, verify_certificate
from derham import (CharacterFactor, ConstantFactor, ExpFactor, Flavor, GaugeMap, TwistContext,
                    adjoint_action, check_crossed_hom, curvature, delta0, gauge_apply, make_twist,
                    picard_coordinates, picard_lift, random_twist_coefficients, reduce_picard, tau,
                    transfer_r_gamma, transfer_rbar_chi, twist_check_records, twisted_differential,
                    type_project, is_picard)
from errors import HarmonicObstructionError, ObstructionError
from holonomy import COMMUTATOR_TOL, holonomy, holonomy_character_check, holonomy_commutators
from lie import GroupSpec, build_group, matrix_exp, random_algebra_matrix
from logging_config import AppLogger, LoggedOperation, create_component_logger
from moduli import (EQUIVALENT, ModuliDescription, Sector, admissible_set, canonicalize, equivalent,
                    match_harmonic, project_to_cone, reconstruct)
from reports import Check, check_exact, check_le
from torus import (FrequencyShift, LieForm, TorusGeom, conjugate_transpose, constant_form, differential,
                   evaluate, harmonic_dimension, harmonic_part, hodge_decompose, laplacian,
                   project_bidegree, solve_ddbar, twisted_harmonic_basis, wedge_bracket)

logger = create_component_logger('suites')

DEFAULT_TOLERANCES = {
    "flat": 1e-9,
    "identity": 1e-9,
    "kahler": 1e-10,
    "harmonic": 1e-12,
    "ddbar": 1e-8,
    "canonical": 1e-8,
    "holonomy": 1e-9,
    "character": 1e-10,
    "accept": 1e-8,
    "reject": 1e-4,
}

EXACT_TOL = 1e-14
FD_STEP = 1e-4
FD_TOL = 1e-6
CERTIFIED_GROUPS = (("Triangular", 2), ("Triangular", 3), ("Triangular", 4), ("BorelSp", 4), ("BorelSO", 5))


@dataclass(frozen=True)
class SuiteCase:
    geom: TorusGeom
    spec: GroupSpec
    ctx: TwistContext


# --- random data -------------------------------------------------------------

def random_form(geom: TorusGeom, spec: GroupSpec, degree: int, rng: np.random.Generator, band: int = 1,
                scale: float = 1.0, shift: Optional[FrequencyShift] = None, nilpotent: bool = False,
                bidegree: Optional[Tuple[int, int]] = None) -> LieForm:
    """Random 𝔤-valued form with frequencies |m| <= band (strictly upper entries if nilpotent)."""
    form = LieForm.zero(geom, spec, degree, shift)
    coeffs = np.zeros(form.coeffs.shape, dtype=complex)
    K = geom.cutoff
    window = (slice(None),) + (slice(K - band, K + band + 1),) * geom.real_dim
    sub = coeffs[window]
    sub[...] = scale * (rng.normal(size=sub.shape) + 1j * rng.normal(size=sub.shape)) / (2 * band + 1) ** (
        geom.real_dim / 2)
    coeffs[window] = sub
    mask = spec.pattern & np.triu(np.ones_like(spec.pattern), 1) if nilpotent else spec.pattern
    coeffs[..., ~mask] = 0
    form = form.with_coeffs(coeffs)
    return project_bidegree(form, *bidegree) if bidegree is not None else form


def mode_form(geom: TorusGeom, spec: GroupSpec, degree: int, frame: Sequence[int], m: Sequence[int],
              matrix: np.ndarray) -> LieForm:
    """matrix · e^{2πi⟨m,t⟩} θ_frame."""
    form = LieForm.zero(geom, spec, degree)
    coeffs = np.array(form.coeffs)
    index = (geom.frame_index[degree][tuple(frame)],) + tuple(int(k) + geom.cutoff for k in m)
    coeffs[index] = spec.enforce(np.asarray(matrix, dtype=complex))
    return form.with_coeffs(coeffs)


def band_of(alpha: LieForm, tol: float = 1e-13) -> int:
    """Largest |m| carrying a non-negligible coefficient."""
    size = np.abs(alpha.coeffs)
    if not np.any(size):
        return 0
    idx = np.nonzero(size > tol * size.max())
    return int(max(np.abs(np.array(idx[1:1 + alpha.geom.real_dim]) - alpha.geom.cutoff).max(), 0))


def random_gauge(geom: TorusGeom, spec: GroupSpec, rng: np.random.Generator,
                 sample_band: Optional[int] = None, reach: Optional[int] = None,
                 scale: float = 0.3, characters: bool = True, constant: bool = True) -> GaugeMap:
    """
    Random global gauge constant·exp(f)·character.

    `sample_band` bounds the band of the sampled values of g and g⁻¹; `reach`
    bounds how far Ad g and δ₀(g) can move frequencies.
    """
    half = geom.cutoff // 2 if sample_band is None else sample_band
    reach = half if reach is None else reach
    depth = spec.max_level
    fband = 1 if depth <= min(half, reach) else 0
    factors = []
    if constant:
        X = random_algebra_matrix(spec, rng, scale)
        factors.append(ConstantFactor(spec.enforce(matrix_exp(X))))
    f = random_form(geom, spec, 0, rng, band=fband, scale=scale, nilpotent=True) if fband else \
        constant_form(geom, spec, 0, {(): random_algebra_matrix(spec, rng, scale, nilpotent=True)})
    factors.append(ExpFactor(f))
    if characters and depth * fband + 1 <= half and depth * fband + 2 <= reach and spec.torus_basis:
        T = spec.torus_basis[rng.integers(len(spec.torus_basis))]
        direction = np.zeros(geom.real_dim)
        direction[rng.integers(geom.real_dim)] = rng.choice([-1, 1])
        factors.append(CharacterFactor(np.outer(np.real(np.diag(T)), direction).round().astype(int)))
    return GaugeMap(geom, spec, tuple(factors))


def random_admissible_psi(desc: ModuliDescription, rng: np.random.Generator, scale: float = 0.5) -> LieForm:
    """A random point of the admissible cone as a harmonic form."""
    if desc.dimension == 0:
        return desc.form_of(np.zeros(0))
    x0 = scale * (rng.normal(size=desc.dimension) + 1j * rng.normal(size=desc.dimension))
    return desc.form_of(project_to_cone(desc.constraint_tensor, x0))


# --- helpers -----------------------------------------------------------------

class _Worst:
    """Collect residuals per check name and keep the worst one."""

    def __init__(self):
        self.values: Dict[str, List[float]] = defaultdict(list)
        self.tolerances: Dict[str, float] = {}

    def add(self, name: str, value: float, tolerance: float):
        self.values[name].append(float(value))
        self.tolerances[name] = tolerance

    def checks(self) -> List[Check]:
        return [check_le(name, max(values), self.tolerances[name]) for name, values in self.values.items()]


def _rel(residual: float, scale: float) -> float:
    return float(residual) / max(float(scale), 1e-300)


def _tol(tolerances: Optional[Dict[str, float]]) -> Dict[str, float]:
    merged = dict(DEFAULT_TOLERANCES)
    merged.update(tolerances or {})
    return merged


# --- suites ------------------------------------------------------------------

def operator_identities(case: SuiteCase, rng: np.random.Generator, trials: int,
                        tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """d² = 0, Leibniz, and the gauge identities (Ad, crossed homomorphism, equivariance)."""
    tol = _tol(tolerances)
    geom, spec = case.geom, case.spec
    K = geom.cutoff
    wave = 1.0 + geom.max_wavenumber
    worst = _Worst()
    pairs = [(0, 0), (0, 1), (1, 0)] + ([(1, 1)] if geom.real_dim >= 3 else [])

    for trial in range(trials):
        for degree in range(max(geom.real_dim - 1, 1)):
            alpha = random_form(geom, spec, degree, rng)
            size = alpha.norm() * wave ** 2
            worst.add("identities.d_squared", _rel(differential(differential(alpha)).norm(), size), 1e-12)
            worst.add("identities.del_squared",
                      _rel(differential(differential(alpha, 'del'), 'del').norm(), size), 1e-12)
            worst.add("identities.dbar_squared",
                      _rel(differential(differential(alpha, 'dbar'), 'dbar').norm(), size), 1e-12)
            anti = differential(differential(alpha, 'del'), 'dbar') + differential(differential(alpha, 'dbar'), 'del')
            worst.add("identities.del_dbar_anticommute", _rel(anti.norm(), size), 1e-12)

        p, q = pairs[trial % len(pairs)]
        a = random_form(geom, spec, p, rng)
        b = random_form(geom, spec, q, rng)
        lhs = differential(wedge_bracket(a, b))
        rhs = wedge_bracket(differential(a), b) + wedge_bracket(a, differential(b)) * (-1) ** p
        worst.add("identities.leibniz",
                  _rel((lhs - rhs).norm(), (1 + a.norm()) * (1 + b.norm()) * wave), tol["identity"])

        g = random_gauge(geom, spec, rng, reach=K - 2)
        alpha = random_form(geom, spec, 1, rng, scale=0.5)
        scale = (1 + alpha.norm()) ** 2

        # d(Ad g β) = Ad g(dβ) + [δ₀g, Ad g β]
        beta = random_form(geom, spec, trial % 2, rng, scale=0.5)
        moved = adjoint_action(g, beta)
        residual = differential(moved) - adjoint_action(g, differential(beta)) - wedge_bracket(delta0(g), moved)
        worst.add("identities.adjoint_derivative", _rel(residual.norm(), scale * wave), tol["identity"])

        # δ₁(ρ(g)α) = Ad g(δ₁α)
        lhs = curvature(gauge_apply(g, alpha)).form
        rhs = adjoint_action(g, curvature(alpha).form)
        worst.add("identities.curvature_equivariance", _rel((lhs - rhs).norm(), scale), tol["identity"])

        lhs = curvature(gauge_apply(g, alpha, Flavor.DOLBEAULT), Flavor.DOLBEAULT).form
        rhs = adjoint_action(g, curvature(alpha, Flavor.DOLBEAULT).form)
        worst.add("identities.dolbeault_equivariance", _rel((lhs - rhs).norm(), scale), tol["identity"])

        projected = type_project(gauge_apply(g, alpha), 0, 1) - gauge_apply(g, alpha, Flavor.DOLBEAULT)
        worst.add("identities.projection_commutes", _rel(projected.norm(), scale), tol["identity"])

        d0 = delta0(g)
        worst.add("identities.pure_gauge_flat", _rel(curvature(d0).norm, (1 + d0.norm()) ** 2), tol["flat"])

        g1 = random_gauge(geom, spec, rng, sample_band=K // 4, reach=K // 2)
        g2 = random_gauge(geom, spec, rng, sample_band=K // 4, reach=K // 2)
        worst.add("identities.crossed_homomorphism", check_crossed_hom(g1, g2), tol["identity"])

        harmonic = constant_form(geom, spec, 0, {(): random_algebra_matrix(spec, rng, 0.5)})
        worst.add("identities.delta0_harmonic", delta0(GaugeMap.exp(harmonic)).norm(), tol["harmonic"])
    return worst.checks()


def kahler(case: SuiteCase, rng: np.random.Generator, trials: int,
           tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """Δ = 2Δ_∂ = 2Δ_∂̄, Hodge decomposition and a finite-difference check of Δ."""
    tol = _tol(tolerances)
    geom, spec = case.geom, case.spec
    worst = _Worst()
    for _ in range(trials):
        for degree in range(geom.real_dim + 1):
            alpha = random_form(geom, spec, degree, rng, band=2)
            full = laplacian(alpha)
            size = alpha.norm()
            worst.add("kahler.del_laplacian", _rel((full - laplacian(alpha, 'del') * 2).norm(), size), tol["kahler"])
            worst.add("kahler.dbar_laplacian", _rel((full - laplacian(alpha, 'dbar') * 2).norm(), size),
                      tol["kahler"])
            split = hodge_decompose(alpha)
            h, e, c = split.parts()
            worst.add("hodge.reconstruction", _rel(split.residual, size), tol["identity"])
            ortho = max(abs(h.inner(e)), abs(h.inner(c)), abs(e.inner(c)))
            worst.add("hodge.orthogonality", _rel(ortho, size ** 2), tol["kahler"])
            worst.add("hodge.harmonic_in_kernel", _rel(laplacian(h).norm(), size), tol["kahler"])

        constant = constant_form(geom, spec, 0, {(): random_algebra_matrix(spec, rng)})
        worst.add("kahler.constant_kernel", laplacian(constant).norm(), tol["harmonic"])

        m = rng.integers(-1, 2, size=geom.real_dim)
        if not np.any(m):
            m[0] = 1
        f = mode_form(geom, spec, 0, (), m, random_algebra_matrix(spec, rng))
        x0 = rng.uniform(size=geom.real_dim)
        exact = evaluate(laplacian(f), geom.to_fractional(x0)[None])[0, 0]
        center = evaluate(f, geom.to_fractional(x0)[None])[0, 0]
        estimate = np.zeros_like(center)
        for k in range(geom.real_dim):
            step = np.zeros(geom.real_dim)
            step[k] = FD_STEP
            ahead = evaluate(f, geom.to_fractional(x0 + step)[None])[0, 0]
            behind = evaluate(f, geom.to_fractional(x0 - step)[None])[0, 0]
            estimate -= (ahead - 2 * center + behind) / FD_STEP ** 2
        worst.add("kahler.finite_difference", _rel(np.linalg.norm(estimate - exact), np.linalg.norm(exact)), FD_TOL)
    return worst.checks()


def ddbar(case: SuiteCase, rng: np.random.Generator, trials: int,
          tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """Harmonic forms are closed, and the ∂∂̄ solver round-trips and reports obstructions."""
    tol = _tol(tolerances)
    geom, spec = case.geom, case.spec
    g = geom.g
    worst = _Worst()
    shift = case.ctx.twisted_shift()
    for p in range(1, g + 1):
        for form in twisted_harmonic_basis(geom, spec, shift, (p, 0)):
            worst.add("harmonic.holomorphic_dbar_closed", differential(form, 'dbar').norm(), tol["harmonic"])
        for form in twisted_harmonic_basis(geom, spec, shift, (0, p)):
            worst.add("harmonic.antiholomorphic_del_closed", differential(form, 'del').norm(), tol["harmonic"])

    obstructions = 0
    for _ in range(trials):
        degree = int(rng.integers(0, geom.real_dim + 1))
        H = harmonic_part(random_form(geom, spec, degree, rng, band=0))
        for which in ('d', 'del', 'dbar'):
            worst.add(f"harmonic.{which}_closed", differential(H, which).norm(), tol["harmonic"])

        f = random_form(geom, spec, 0, rng, band=2)
        f = f - harmonic_part(f)
        phi = differential(differential(f, 'dbar'), 'del')
        psi = solve_ddbar(phi)
        size = phi.norm()
        worst.add("ddbar.round_trip", _rel((differential(differential(psi, 'dbar'), 'del') - phi).norm(), size),
                  tol["ddbar"])
        worst.add("ddbar.recovers_potential", _rel((psi - f).norm(), f.norm()), tol["ddbar"])

        X = random_algebra_matrix(spec, rng)
        try:
            solve_ddbar(constant_form(geom, spec, 2, {(0, g): X}))
        except HarmonicObstructionError:
            obstructions += 1

    zero = LieForm.zero(geom, spec, 2)
    worst.add("ddbar.zero_input", solve_ddbar(zero).norm(), 0.0)
    return worst.checks() + [check_exact("ddbar.harmonic_obstructions", obstructions, trials)]


def twisted_dichotomy(case: SuiteCase, rng: np.random.Generator, trials: int,
                      tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """Twisted harmonic dimension counts exactly the entries whose character is trivial."""
    geom, spec = case.geom, case.spec
    g = geom.g
    picard_trials = max(1, trials // 4)
    mismatches = 0
    jumps = 0
    for trial in range(trials):
        on_lattice = trial < picard_trials
        ctx = make_twist(random_twist_coefficients(geom, spec, rng, picard=on_lattice), geom, spec)
        sigma = ctx.exponents
        diff = sigma[None, :, :] - sigma[:, None, :]
        trivial = np.all(np.abs(diff - np.round(diff)) <= 1e-9, axis=-1)
        elements = sum(1 for X in spec.basis if np.all(trivial[X != 0]))
        for p, q in ((0, 1), (1, 0), (1, 1)):
            expected = elements * comb(g, p) * comb(g, q)
            computed = harmonic_dimension(geom, spec, ctx.twisted_shift(), (p, q))
            listed = len(twisted_harmonic_basis(geom, spec, ctx.twisted_shift(), (p, q)))
            mismatches += int(computed != expected) + int(listed != expected)
        if on_lattice and elements == spec.dim:
            jumps += 1
    return [check_exact("dichotomy.mismatches", mismatches, 0),
            check_exact("dichotomy.picard_full_dimension", jumps, picard_trials)]


def twisting(case: SuiteCase, rng: np.random.Generator, trials: int,
             tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """Transfers r_γ and r̄_χ: type compatibility, twisted differential and flatness."""
    tol = _tol(tolerances)
    geom, spec = case.geom, case.spec
    wave = 1.0 + geom.max_wavenumber
    worst = _Worst()
    for trial in range(trials):
        ctx = case.ctx if trial == 0 else make_twist(0.3 * random_twist_coefficients(geom, spec, rng), geom, spec)
        shift = ctx.twisted_shift()
        alpha = random_form(geom, spec, 1, rng, scale=0.5, shift=shift)
        scale = (1 + alpha.norm()) ** 2

        diagram = type_project(transfer_r_gamma(alpha, ctx), 0, 1) - transfer_rbar_chi(alpha, ctx)
        worst.add("twist.type_compatible", diagram.norm(), tol["kahler"])

        residual = tau(differential(alpha), ctx) - twisted_differential(tau(alpha, ctx), ctx.gamma)
        worst.add("twist.differential", _rel(residual.norm(), scale * wave), tol["identity"])

        flat = curvature(transfer_r_gamma(alpha, ctx)).form - tau(curvature(alpha).form, ctx)
        worst.add("twist.curvature_transfer", _rel(flat.norm(), scale), tol["identity"])

        back = transfer_r_gamma(transfer_r_gamma(alpha, ctx), ctx, "toTwisted") - alpha
        worst.add("twist.round_trip", back.norm(), EXACT_TOL)
        zero = transfer_r_gamma(LieForm.zero(geom, spec, 1, shift), ctx) - ctx.gamma
        worst.add("twist.zero_maps_to_gamma", zero.norm(), EXACT_TOL)
        for name, deviation in twist_check_records(ctx):
            worst.add(name, deviation, EXACT_TOL)
    return worst.checks()


def picard(case: SuiteCase, rng: np.random.Generator, trials: int,
           tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """picard_lift inverts Π_{0,1} on constant diagonal data; Picard classes have trivial holonomy."""
    tol = _tol(tolerances)
    geom, spec = case.geom, case.spec
    g = geom.g
    worst = _Worst()
    membership = 0
    eye = np.eye(spec.ambient_dim)
    for trial in range(trials):
        c = random_twist_coefficients(geom, spec, rng)
        omega = constant_form(geom, spec, 1, {(g + j,): np.diag(c[j]) for j in range(g)})
        gamma = picard_lift(omega)
        worst.add("picard.projection_inverse", (type_project(gamma, 0, 1) - omega).norm(), EXACT_TOL)
        worst.add("picard.lift_inverse", (picard_lift(type_project(gamma, 0, 1)) - gamma).norm(), EXACT_TOL)
        worst.add("picard.real_form", (gamma + conjugate_transpose(gamma)).norm(), EXACT_TOL)
        worst.add("picard.flat", curvature(gamma).norm, tol["flat"])

        lattice = random_twist_coefficients(geom, spec, rng, picard=True)
        ctx = make_twist(lattice, geom, spec)
        membership += int(ctx.is_picard and all(is_picard(geom, lattice[:, i]) for i in range(spec.ambient_dim)))
        worst.add("picard.trivial_holonomy", max(np.abs(z - eye).max() for z in ctx.holonomy_character),
                  tol["character"])

        _, rest = reduce_picard(geom, c[:, 0])
        sigma = picard_coordinates(geom, rest)
        worst.add("picard.reduced_range", max(0.0, float(np.max(np.maximum(-0.5 - sigma, sigma - 0.5)))),
                  EXACT_TOL)

        if trial < 3:
            for check in holonomy_character_check(make_twist(c, geom, spec), tol["character"]):
                worst.add(check.name, check.value, check.tolerance)
    for check in holonomy_character_check(case.ctx, tol["character"]):
        worst.add(check.name, check.value, check.tolerance)
    return worst.checks() + [check_exact("picard.lattice_membership", membership, trials)]


def _cone_description(case: SuiteCase, samples: int = 0, rng=None) -> ModuliDescription:
    return admissible_set(case.spec, case.ctx, case.geom, Sector.FULL, samples=samples, rng=rng)


def canonical_round_trip(case: SuiteCase, rng: np.random.Generator, trials: int,
                         tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """reconstruct → random gauge → canonicalize recovers ψ up to a flat section."""
    tol = _tol(tolerances)
    geom, spec, ctx = case.geom, case.spec, case.ctx
    desc = _cone_description(case)
    worst = _Worst()
    decided = 0
    witnessed = 0
    for _ in range(trials):
        psi = random_admissible_psi(desc, rng)
        built = reconstruct(psi, ctx, flat_tol=tol["canonical"])
        omega = built.global_omega
        g = random_gauge(geom, spec, rng, sample_band=geom.cutoff // 4,
                         reach=max(geom.cutoff // 2 - band_of(omega), 0))
        moved = gauge_apply(g, omega)
        canon = canonicalize(moved, ctx)
        for check in canon.checks(tol["canonical"]):
            worst.add(check.name, check.value, check.tolerance)
        worst.add("round_trip.reconstruct_flat", built.flat_residual, tol["canonical"] * (1 + psi.norm()) ** 2)
        match = match_harmonic(psi, canon.psi, rng, tol["accept"], tol["reject"])
        decided += int(match.decision == EQUIVALENT)
        witnessed += int(match.witness is not None)
        worst.add("round_trip.match_residual", match.residual, tol["accept"])
    return worst.checks() + [check_exact("round_trip.equivalent", decided, trials),
                             check_exact("round_trip.witnessed", witnessed, trials)]


def uniqueness(case: SuiteCase, rng: np.random.Generator, trials: int,
               tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """Canonical data are reproducible, gauge-independent up to a flat section, and obstructions are caught."""
    tol = _tol(tolerances)
    geom, spec, ctx = case.geom, case.spec, case.ctx
    desc = _cone_description(case, samples=max(1, trials // 5), rng=rng)
    worst = _Worst()
    for sample in desc.samples:
        worst.add("cone.sample_constraint", sample.constraint, 1e-10)

    equivalent_count = 0
    rejected = 0
    off_cone = 0
    for _ in range(trials):
        psi = random_admissible_psi(desc, rng)
        first = reconstruct(psi, ctx)
        second = reconstruct(psi, ctx)
        worst.add("uniqueness.h_reproducible", (first.h - second.h).norm(), tol["canonical"])

        omega = first.global_omega
        reach = max(geom.cutoff // 2 - band_of(omega), 0)
        moved = gauge_apply(random_gauge(geom, spec, rng, sample_band=geom.cutoff // 4, reach=reach), omega)
        a = canonicalize(moved, ctx)
        b = canonicalize(moved, ctx)
        worst.add("uniqueness.psi_reproducible", (a.psi - b.psi).norm(), 1e-10)
        other = canonicalize(gauge_apply(random_gauge(geom, spec, rng, sample_band=geom.cutoff // 4, reach=reach),
                                         omega), ctx)
        match = match_harmonic(a.psi, other.psi, rng, tol["accept"], tol["reject"])
        equivalent_count += int(match.decision == EQUIVALENT)
        worst.add("uniqueness.psi_up_to_flat_section", match.residual, 1e-10)

        if desc.dimension:
            x = 0.5 * (rng.normal(size=desc.dimension) + 1j * rng.normal(size=desc.dimension))
            if desc.constraint_norm(x) > 1e-6:
                off_cone += 1
                try:
                    reconstruct(desc.form_of(x), ctx)
                except ObstructionError:
                    rejected += 1
    return worst.checks() + [check_exact("uniqueness.equivalent", equivalent_count, trials),
                             check_exact("cone.non_members_rejected", rejected, off_cone)]


def equivalence(case: SuiteCase, rng: np.random.Generator, trials: int,
                tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """equivalent() on gauge-related flat connections, with the witness checked at the constant level."""
    tol = _tol(tolerances)
    geom, spec, ctx = case.geom, case.spec, case.ctx
    desc = _cone_description(case)
    decided = 0
    worst = _Worst()
    for _ in range(trials):
        omega = reconstruct(random_admissible_psi(desc, rng), ctx).global_omega
        reach = max(geom.cutoff // 2 - band_of(omega), 0)
        moved = gauge_apply(random_gauge(geom, spec, rng, sample_band=geom.cutoff // 4, reach=reach), omega)
        result = equivalent(omega, moved, ctx, spec, rng, tol["accept"], tol["reject"])
        decided += int(result.equivalent and result.witness is not None)
        worst.add("equivalence.residual", result.residual, tol["accept"])
    return worst.checks() + [check_exact("equivalence.decided", decided, trials)]


def holonomy_suite(case: SuiteCase, rng: np.random.Generator, trials: int,
                   tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """Closed form for constant connections, commuting generators, gauge covariance."""
    tol = _tol(tolerances)
    geom, spec, ctx = case.geom, case.spec, case.ctx
    g = geom.g
    worst = _Worst()
    desc = _cone_description(case)
    for trial in range(trials):
        if trial % 2 == 0:
            X = random_algebra_matrix(spec, rng, 0.5)
            weights = 0.5 * (rng.normal(size=2 * g) + 1j * rng.normal(size=2 * g))
            omega = constant_form(geom, spec, 1, {(a,): weights[a] * X for a in range(2 * g)})
            values = {a: weights[a] * X for a in range(2 * g)}
        else:
            D = [np.diag(np.diag(random_algebra_matrix(spec, rng, 0.5))) for _ in range(2 * g)]
            omega = constant_form(geom, spec, 1, {(a,): D[a] for a in range(2 * g)})
            values = dict(enumerate(D))
        for a in range(geom.real_dim):
            lam = geom.period_matrix[:, a]
            exponent = sum(values[j] * lam[j] + values[g + j] * np.conj(lam[j]) for j in range(g))
            expected = matrix_exp(exponent)
            worst.add("holonomy.closed_form",
                      _rel(np.linalg.norm(holonomy(omega, a, tol["holonomy"] * 1e-2).matrix - expected),
                           np.linalg.norm(expected)), tol["holonomy"])

        flat = reconstruct(random_admissible_psi(desc, rng), ctx).global_omega
        for _, value in holonomy_commutators(flat, tol["holonomy"] * 1e-2):
            worst.add("holonomy.generators_commute", value, COMMUTATOR_TOL)

        reach = max(geom.cutoff // 2 - band_of(flat), 0)
        gauge = random_gauge(geom, spec, rng, sample_band=geom.cutoff // 4, reach=reach)
        moved = gauge_apply(gauge, flat)
        g0 = gauge.origin_value().matrix
        for a in range(geom.real_dim):
            H = holonomy(flat, a, tol["holonomy"] * 1e-2).matrix
            H_moved = holonomy(moved, a, tol["holonomy"] * 1e-2).matrix
            expected = g0 @ H @ np.linalg.inv(g0)
            worst.add("holonomy.gauge_covariance", _rel(np.linalg.norm(H_moved - expected), np.linalg.norm(expected)),
                      1e-8)

    zero = LieForm.zero(geom, spec, 1)
    worst.add("holonomy.zero_is_identity", np.linalg.norm(holonomy(zero, 0).matrix - np.eye(spec.ambient_dim)),
              EXACT_TOL)
    return worst.checks() + holonomy_character_check(ctx, tol["character"])


def certificates(case: SuiteCase, rng: np.random.Generator, trials: int,
                 tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """Certificate chains verify exactly; a tampered chain fails its abelian check."""
    specs = [build_group(f, r) for f, r in CERTIFIED_GROUPS]
    if case.spec.key not in {s.key for s in specs}:
        specs.append(case.spec)
    checks = []
    for spec in specs:
        for bottom_out in (True, False):
            report = verify_certificate(hodge_certificate(spec, bottom_out=bottom_out))
            suffix = "" if bottom_out else ".to_torus"
            checks.append(check_exact(f"certificate.{spec.name}{suffix}.violations", len(report.failed()), 0))
    checks.append(check_exact("certificate.tampered_rejected", int(tampered_certificate_fails()), 1))
    return checks


def tampered_certificate_fails(spec: Optional[GroupSpec] = None) -> bool:
    """Add a non-commuting element of A to the first B; the abelian check must catch it."""
    spec = spec if spec is not None else build_group("Triangular", 3)
    cert = hodge_certificate(spec)
    step = cert.chain[0]
    intruder = next(x for x in step.A if not np.any(np.tril(x))
                    and any(np.any(x @ b - b @ x) for b in step.B))
    tampered = replace(cert, chain=(replace(step, B=step.B + (intruder,)),) + cert.chain[1:])
    report = verify_certificate(tampered)
    return any(c.name == "step0.B_abelian" for c in report.failed())


SUITES: Dict[str, Callable[..., List[Check]]] = {
    "identities": operator_identities,
    "kahler": kahler,
    "ddbar": ddbar,
    "dichotomy": twisted_dichotomy,
    "twisting": twisting,
    "picard": picard,
    "round_trip": canonical_round_trip,
    "uniqueness": uniqueness,
    "equivalence": equivalence,
    "holonomy": holonomy_suite,
    "certificates": certificates,
}


def run_suites(case: SuiteCase, names: Optional[Iterable[str]] = None, seed: int = 0, trials: int = 20,
               tolerances: Optional[Dict[str, float]] = None) -> List[Check]:
    """Run the named suites (all by default); each gets its own generator derived from the seed."""
    names = list(SUITES) if names is None else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"Unknown suites: {unknown}; known: {sorted(SUITES)}")
    checks: List[Check] = []
    for index, name in enumerate(SUITES):
        if name not in names:
            continue
        rng = np.random.default_rng([seed, index])
        with LoggedOperation('suites', name, {'group': case.spec.name, 'trials': trials}):
            results = SUITES[name](case, rng, trials, tolerances)
        for check in results:
            AppLogger.log_check('suites', check.name, check.value, check.tolerance, check.passed)
        checks.extend(results)
    return checks
