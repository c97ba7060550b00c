#!/usr/bin/env python3
"""
Non-abelian de Rham and Dolbeault cochains with values in a solvable matrix group.

    δ₀(g) = (dg)g⁻¹            ρ(g)α = Ad g(α) + δ₀(g)
    δ₁(α) = dα - α∧α           (matrix convention, [α, α] = 2α∧α)

and the Dolbeault versions with ∂̄ and (0,1)-forms. Gauge maps are factor
lists (constants, exponentials, diagonal characters); everything that mixes
factors is done on exact grid samples and transformed back once, with a
band-limit check on the samples.

Twisting: a constant diagonal (0,1)-form χ fixes γ = -χ̄ + χ and the frame
u(x) = exp(γ(x)). Twisted forms satisfy α(x+λ) = Ad z_λ⁻¹ α(x) with
z_λ = exp(γ(λ)), and r_γ(α) = Ad u(α) + γ identifies them with global forms.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from errors import BandLimitError, SpecMismatchError, TwistError, TwistMismatchError
from lie import GroupElement, GroupSpec, matrix_exp
from logging_config import AppLogger, create_component_logger
from torus import (FrequencyShift, LieForm, TorusGeom, conjugate_transpose, constant_form, differential,
                   evaluate, project_bidegree, wedge, wedge_bracket)

logger = create_component_logger('derham')

BAND_TOL = 1e-10
FLAT_TOL = 1e-9


class Flavor(str, Enum):
    DERHAM = "deRham"
    DOLBEAULT = "Dolbeault"

    @classmethod
    def parse(cls, flavor) -> "Flavor":
        if isinstance(flavor, Flavor):
            return flavor
        for member in cls:
            if member.value.lower() == str(flavor).lower():
                return member
        raise ValueError(f"Unknown flavor: {flavor}")


# --- gauge factors -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConstantFactor:
    matrix: np.ndarray

    def samples(self, geom: TorusGeom, gauge: "GaugeMap") -> np.ndarray:
        return np.broadcast_to(self.matrix, (geom.grid,) * geom.real_dim + self.matrix.shape).copy()

    def inverse(self, gauge: "GaugeMap") -> "ConstantFactor":
        return ConstantFactor(gauge.spec.element(self.matrix).inverse().matrix)

    def delta0_samples(self, geom: TorusGeom, gauge: "GaugeMap") -> Optional[np.ndarray]:
        return None

    def at(self, points: np.ndarray, gauge: "GaugeMap") -> np.ndarray:
        return np.broadcast_to(self.matrix, (len(points),) + self.matrix.shape).copy()


@dataclass(frozen=True, eq=False)
class ExpFactor:
    """exp(F) for a band-limited degree-0 form F (periodic part when twisted)."""
    exponent: LieForm

    def _grid(self, geom: TorusGeom) -> np.ndarray:
        return geom.to_grid(self.exponent.coeffs)[0]

    def samples(self, geom: TorusGeom, gauge: "GaugeMap") -> np.ndarray:
        return matrix_exp(self._grid(geom))

    def inverse(self, gauge: "GaugeMap") -> "ExpFactor":
        return ExpFactor(-self.exponent)

    def delta0_samples(self, geom: TorusGeom, gauge: "GaugeMap") -> np.ndarray:
        P = self._grid(geom)
        dP = geom.to_grid(differential(self.exponent).coeffs)
        n = P.shape[-1]
        if not np.any(np.tril(self.exponent.coeffs)):
            # Σ ad_P^k(dP)/(k+1)! terminates for nilpotent P.
            term = dP
            total = dP.copy()
            for k in range(1, 2 * n):
                term = (P[None] @ term - term @ P[None]) / (k + 1)
                if not np.any(term):
                    break
                total = total + term
            return total
        # Fréchet derivative of exp from the block exponential [[P, dP], [0, P]].
        block = np.zeros(dP.shape[:-2] + (2 * n, 2 * n), dtype=complex)
        block[..., :n, :n] = P[None]
        block[..., n:, n:] = P[None]
        block[..., :n, n:] = dP
        frechet = scipy.linalg.expm(block)[..., :n, n:]
        return frechet @ matrix_exp(-P)[None]

    def at(self, points: np.ndarray, gauge: "GaugeMap") -> np.ndarray:
        return matrix_exp(evaluate(self.exponent, points)[:, 0])


@dataclass(frozen=True, eq=False)
class CharacterFactor:
    """diag(e^{2πi⟨m_i, t⟩}) for integer frequency vectors m_i (rows of `frequencies`)."""
    frequencies: np.ndarray

    def _phase(self, t: np.ndarray) -> np.ndarray:
        phase = np.exp(2j * np.pi * np.einsum('...a,ia->...i', t, self.frequencies))
        out = np.zeros(phase.shape + (phase.shape[-1],), dtype=complex)
        idx = np.arange(phase.shape[-1])
        out[..., idx, idx] = phase
        return out

    def samples(self, geom: TorusGeom, gauge: "GaugeMap") -> np.ndarray:
        return self._phase(geom.grid_points())

    def inverse(self, gauge: "GaugeMap") -> "CharacterFactor":
        return CharacterFactor(-self.frequencies)

    def delta0_samples(self, geom: TorusGeom, gauge: "GaugeMap") -> np.ndarray:
        return np.broadcast_to(self.delta0_constant(geom)[(slice(None),) + (None,) * geom.real_dim],
                               (geom.real_dim,) + (geom.grid,) * geom.real_dim + (len(self.frequencies),) * 2)

    def delta0_constant(self, geom: TorusGeom) -> np.ndarray:
        """Per frame a: diag(σ_a(m_i)), shape (2g, n, n)."""
        n = len(self.frequencies)
        out = np.zeros((geom.real_dim, n, n), dtype=complex)
        for i, m in enumerate(self.frequencies):
            out[:, i, i] = geom.frequency_symbols(m)
        return out

    def at(self, points: np.ndarray, gauge: "GaugeMap") -> np.ndarray:
        return self._phase(np.asarray(points, dtype=float))


Factor = Union[ConstantFactor, ExpFactor, CharacterFactor]


@dataclass(frozen=True, eq=False)
class GaugeMap:
    """g = factors[0]·factors[1]·…, a section of the (possibly twisted) group bundle."""
    geom: TorusGeom
    spec: GroupSpec
    factors: Tuple[Factor, ...] = ()
    shift: Optional[FrequencyShift] = None

    def __post_init__(self):
        object.__setattr__(self, 'factors', tuple(self.factors))
        trivial = (np.ones((self.spec.ambient_dim,) * 2, dtype=bool) if self.shift is None
                   else self.shift.trivial_entries())
        for factor in self.factors:
            if isinstance(factor, ConstantFactor):
                self.spec.element(factor.matrix)
                if np.any(factor.matrix[~trivial]):
                    raise TwistMismatchError("Constant gauge factor is not a flat section of the twisted bundle")
            elif isinstance(factor, ExpFactor):
                f = factor.exponent
                if f.degree != 0 or f.geom is not self.geom or f.spec.key != self.spec.key:
                    raise SpecMismatchError("Exponential gauge factor must be a degree-0 form of the same group")
                if np.any(f.coeffs[..., ~self.spec.pattern]):
                    raise SpecMismatchError("Exponential gauge factor violates the zero pattern")
                shift = self.shift if self.shift is not None else FrequencyShift.trivial(
                    self.spec.ambient_dim, self.geom.g)
                if not shift.same_as(f.shift):
                    raise TwistMismatchError("Exponential gauge factor carries a different twist")
            elif isinstance(factor, CharacterFactor):
                m = np.asarray(factor.frequencies)
                if m.shape != (self.spec.ambient_dim, self.geom.real_dim) or np.any(m != np.round(m)):
                    raise SpecMismatchError("Character frequencies must be an integer (n, 2g) array")
                for a in range(self.geom.real_dim):
                    if not self.spec.contains(np.diag(m[:, a]).astype(complex)):
                        raise SpecMismatchError(f"Character is not {self.spec.name}-valued")
            else:
                raise TypeError(f"Unknown gauge factor: {type(factor).__name__}")

    @classmethod
    def identity(cls, geom: TorusGeom, spec: GroupSpec, shift: Optional[FrequencyShift] = None) -> "GaugeMap":
        return cls(geom, spec, (), shift)

    @classmethod
    def constant(cls, geom: TorusGeom, spec: GroupSpec, matrix,
                 shift: Optional[FrequencyShift] = None) -> "GaugeMap":
        return cls(geom, spec, (ConstantFactor(np.asarray(matrix, dtype=complex)),), shift)

    @classmethod
    def exp(cls, f: LieForm) -> "GaugeMap":
        return cls(f.geom, f.spec, (ExpFactor(f),), f.shift)

    @classmethod
    def character(cls, geom: TorusGeom, spec: GroupSpec, frequencies,
                  shift: Optional[FrequencyShift] = None) -> "GaugeMap":
        return cls(geom, spec, (CharacterFactor(np.asarray(frequencies, dtype=int)),), shift)

    @property
    def is_identity(self) -> bool:
        return not self.factors

    def compose(self, other: "GaugeMap") -> "GaugeMap":
        """self·other (other acts first)."""
        if other.geom is not self.geom or other.spec.key != self.spec.key:
            raise SpecMismatchError("Gauge maps live on different tori or groups")
        mine = self.shift or FrequencyShift.trivial(self.spec.ambient_dim, self.geom.g)
        if not mine.same_as(other.shift):
            raise TwistMismatchError("Gauge maps carry different twists")
        return GaugeMap(self.geom, self.spec, self.factors + other.factors, self.shift or other.shift)

    def __matmul__(self, other: "GaugeMap") -> "GaugeMap":
        return self.compose(other)

    def inverse(self) -> "GaugeMap":
        return GaugeMap(self.geom, self.spec, tuple(f.inverse(self) for f in reversed(self.factors)), self.shift)

    def samples(self) -> np.ndarray:
        """Values (periodic parts when twisted) on the grid, shape (M.., n, n)."""
        n = self.spec.ambient_dim
        out = np.broadcast_to(np.eye(n, dtype=complex), (self.geom.grid,) * self.geom.real_dim + (n, n)).copy()
        for factor in self.factors:
            out = out @ factor.samples(self.geom, self)
        return out

    def value_at(self, points) -> np.ndarray:
        """Actual values at fractional points (S, 2g), shape (S, n, n)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        n = self.spec.ambient_dim
        out = np.broadcast_to(np.eye(n, dtype=complex), (len(points), n, n)).copy()
        for factor in self.factors:
            out = out @ factor.at(points, self)
        if self.shift is not None and not self.shift.is_trivial:
            twist = np.exp(2j * np.pi * np.einsum('ija,sa->sij', self.shift.table(), points))
            out = out * twist
        return out

    def origin_value(self) -> GroupElement:
        return self.spec.element(self.spec.enforce(self.value_at(np.zeros((1, self.geom.real_dim)))[0]))


# --- band checks and grid helpers --------------------------------------------

def _check_band(geom: TorusGeom, values: np.ndarray, band: int, what: str):
    tail = np.sqrt(geom.tail_fraction(values, band))
    if tail > BAND_TOL:
        AppLogger.log_check('derham', f'band.{what}', tail, BAND_TOL, False)
        raise BandLimitError(f"{what} exceeds the band limit {band}: relative tail {tail:.3e}")


def _gauge_samples(g: GaugeMap) -> Tuple[np.ndarray, np.ndarray]:
    geom = g.geom
    values = g.samples()
    inverse = g.inverse().samples()
    _check_band(geom, values[None], geom.cutoff // 2, 'gauge')
    _check_band(geom, inverse[None], geom.cutoff // 2, 'inverse gauge')
    return values, inverse


def _to_form(geom: TorusGeom, spec: GroupSpec, degree: int, grid_values: np.ndarray,
             shift: Optional[FrequencyShift], what: str) -> LieForm:
    _check_band(geom, grid_values, geom.cutoff, what)
    return LieForm(geom, spec, degree, spec.enforce(geom.from_grid(grid_values)), shift)


def _delta0_grid(g: GaugeMap) -> np.ndarray:
    """δ₀ of a product from the right: D ← δ₀(f) + Ad f(D)."""
    geom = g.geom
    n = g.spec.ambient_dim
    shape = (geom.real_dim,) + (geom.grid,) * geom.real_dim + (n, n)
    total = np.zeros(shape, dtype=complex)
    for factor in reversed(g.factors):
        values = factor.samples(geom, g)
        inverse = factor.inverse(g).samples(geom, g)
        total = values[None] @ total @ inverse[None]
        own = factor.delta0_samples(geom, g)
        if own is not None:
            total = total + own
    return total


# --- operations --------------------------------------------------------------

def type_project(alpha: LieForm, p: int, q: int) -> LieForm:
    """Π_{p,q}: keep the frame components of bidegree (p, q)."""
    if p + q != alpha.degree:
        raise ValueError(f"Bidegree ({p},{q}) does not match degree {alpha.degree}")
    return project_bidegree(alpha, p, q)


def delta0(g: GaugeMap, flavor=Flavor.DERHAM) -> LieForm:
    """(dg)g⁻¹ by the factor rule; Dolbeault flavor keeps the (0,1) part."""
    flavor = Flavor.parse(flavor)
    geom = g.geom
    if g.is_identity:
        return LieForm.zero(geom, g.spec, 1, g.shift)
    _gauge_samples(g)
    form = _to_form(geom, g.spec, 1, _delta0_grid(g), g.shift, 'delta0')
    AppLogger.log_algorithm_step('derham', 'delta0', {'factors': len(g.factors), 'norm': f"{form.norm():.3e}"})
    return type_project(form, 0, 1) if flavor is Flavor.DOLBEAULT else form


def delta0_sampled(g: GaugeMap) -> LieForm:
    """δ₀ from spectral differentiation of the sampled product, independent of the factor rule."""
    geom = g.geom
    values, inverse = _gauge_samples(g)
    shift_table = (g.shift.table() if g.shift is not None
                   else np.zeros((g.spec.ambient_dim,) * 2 + (geom.real_dim,)))
    spectrum = geom.full_spectrum(values[None])[0]
    symbols = geom.grid_symbols(shift_table)
    axes = tuple(range(1, 1 + geom.real_dim))
    derivative = np.fft.ifftn(symbols * spectrum[None], axes=axes) * geom.grid ** geom.real_dim
    return _to_form(geom, g.spec, 1, derivative @ inverse[None], g.shift, 'sampled delta0')


def adjoint_action(g: GaugeMap, alpha: LieForm) -> LieForm:
    """Ad g(α) = g α g⁻¹ pointwise."""
    _check_compatible(g, alpha)
    if g.is_identity:
        return alpha
    geom = g.geom
    values, inverse = _gauge_samples(g)
    grid = values[None] @ geom.to_grid(alpha.coeffs) @ inverse[None]
    return _to_form(geom, g.spec, alpha.degree, grid, alpha.shift or g.shift, 'adjoint')


def _check_compatible(g: GaugeMap, alpha: LieForm):
    if alpha.geom is not g.geom or alpha.spec.key != g.spec.key:
        raise SpecMismatchError("Gauge map and form live on different tori or groups")
    shift = g.shift or FrequencyShift.trivial(g.spec.ambient_dim, g.geom.g)
    if alpha.shift is not None and not shift.same_as(alpha.shift):
        raise TwistMismatchError("Gauge map and form carry different twists")


def gauge_apply(g: GaugeMap, alpha: LieForm, flavor=Flavor.DERHAM) -> LieForm:
    """ρ(g)(α) = Ad g(α) + δ₀(g); ρ̄(g) uses δ̄₀ and (0,1)-forms."""
    flavor = Flavor.parse(flavor)
    if alpha.degree != 1:
        raise ValueError(f"Gauge action is defined on 1-forms, got degree {alpha.degree}")
    _check_compatible(g, alpha)
    if flavor is Flavor.DOLBEAULT:
        alpha = type_project(alpha, 0, 1)
    if g.is_identity:
        return alpha
    geom = g.geom
    values, inverse = _gauge_samples(g)
    grid = values[None] @ geom.to_grid(alpha.coeffs) @ inverse[None] + _delta0_grid(g)
    shift = g.shift if alpha.shift is None else alpha.shift
    out = _to_form(geom, g.spec, 1, grid, shift, 'gauge action')
    return type_project(out, 0, 1) if flavor is Flavor.DOLBEAULT else out


@dataclass(frozen=True)
class Curvature:
    form: LieForm
    norm: float
    tolerance: float
    flat: bool


def curvature(alpha: LieForm, flavor=Flavor.DERHAM, tol: float = FLAT_TOL) -> Curvature:
    """δ₁(α) = dα - α∧α, or ∂̄α - α∧α on the (0,1)-part."""
    flavor = Flavor.parse(flavor)
    if alpha.degree != 1:
        raise ValueError(f"Curvature is defined on 1-forms, got degree {alpha.degree}")
    if flavor is Flavor.DOLBEAULT:
        alpha = type_project(alpha, 0, 1)
        form = differential(alpha, 'dbar') - wedge(alpha, alpha)
    else:
        form = differential(alpha) - wedge(alpha, alpha)
    size = form.norm()
    tolerance = tol * (1.0 + alpha.norm() ** 2)
    return Curvature(form, size, tolerance, bool(size <= tolerance))


def check_crossed_hom(g: GaugeMap, h: GaugeMap) -> float:
    """‖δ₀(gh) - δ₀(g) - Ad g(δ₀(h))‖ with δ₀(gh) taken from samples."""
    lhs = delta0_sampled(g.compose(h))
    rhs = delta0(g) + adjoint_action(g, delta0(h))
    residual = (lhs - rhs).norm()
    AppLogger.log_check('derham', 'crossed_hom', residual, FLAT_TOL, residual <= FLAT_TOL)
    return residual


# --- twisting ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TwistContext:
    """Harmonic class χ, γ = -χ̄ + χ, holonomy character z and entry shifts."""
    geom: TorusGeom
    spec: GroupSpec
    chi: LieForm
    gamma: LieForm
    chi_coeffs: np.ndarray
    exponents: np.ndarray
    holonomy_character: np.ndarray
    shift: FrequencyShift = field(repr=False)

    @property
    def is_trivial(self) -> bool:
        return self.shift.is_trivial

    @property
    def is_picard(self) -> bool:
        """χ lies in the Picard lattice: the flat bundle is trivial."""
        return bool(np.all(np.abs(self.exponents - np.round(self.exponents)) <= 1e-9))

    def z(self, lattice_coords) -> np.ndarray:
        """z_λ for λ = Σ_a k_a λ_a with integer coordinates k."""
        k = np.asarray(lattice_coords, dtype=float)
        return np.diag(np.exp(2j * np.pi * (self.exponents @ k)))

    def twisted_shift(self) -> Optional[FrequencyShift]:
        return None if self.is_trivial else self.shift


def _chi_coefficients(chi, geom: TorusGeom, spec: GroupSpec) -> np.ndarray:
    n = spec.ambient_dim
    if isinstance(chi, LieForm):
        if chi.degree != 1:
            raise TwistError("χ must be a 1-form")
        if not chi.is_harmonic():
            raise TwistError("χ must be constant (harmonic)")
        if chi.bidegrees() not in ([], [(0, 1)]):
            raise TwistError("χ must be a (0,1)-form")
        matrices = chi.constant_part()[geom.g:]
    else:
        arr = np.asarray(chi, dtype=complex)
        if arr.ndim == 1 and geom.g == 1:
            arr = arr[None]
        if arr.shape == (geom.g, n):
            matrices = np.array([np.diag(row) for row in arr])
        elif arr.shape == (geom.g, n, n):
            matrices = arr
        else:
            raise TwistError(f"χ coefficients must have shape {(geom.g, n)} or {(geom.g, n, n)}, got {arr.shape}")
    for M in matrices:
        if np.any(M - np.diag(np.diag(M))):
            raise TwistError("χ must be diagonal")
        if not spec.contains(M):
            raise TwistError(f"χ is not valued in the torus of {spec.name}")
    return np.array([np.diag(M) for M in matrices])


def make_twist(chi, geom: TorusGeom, spec: GroupSpec) -> TwistContext:
    """Build the twist context of a constant diagonal (0,1)-form χ = Σ_j C_j dz̄_j."""
    c = _chi_coefficients(chi, geom, spec)
    g = geom.g
    chi_form = constant_form(geom, spec, 1, {(g + j,): np.diag(c[j]) for j in range(g)})
    gamma = constant_form(geom, spec, 1, {**{(j,): np.diag(-np.conj(c[j])) for j in range(g)},
                                          **{(g + j,): np.diag(c[j]) for j in range(g)}})
    # γ(λ_a) = 2i·Im Σ_j c_j·conj(λ_a,j) = 2πi σ[a]
    P = geom.period_matrix
    exponents = (np.einsum('ji,ja->ia', c, np.conj(P)).imag / np.pi)
    holonomy = np.array([np.diag(np.exp(2j * np.pi * exponents[:, a])) for a in range(geom.real_dim)])
    shift = FrequencyShift.from_exponents(exponents)
    AppLogger.log_algorithm_step('derham', 'make_twist', {
        'trivial': shift.is_trivial, 'exponents': np.round(exponents, 6).tolist()})
    return TwistContext(geom, spec, chi_form, gamma, c, exponents, holonomy, shift)


def trivial_twist(geom: TorusGeom, spec: GroupSpec) -> TwistContext:
    return make_twist(np.zeros((geom.g, spec.ambient_dim)), geom, spec)


def _relabel(coeffs: np.ndarray, offsets: np.ndarray, geom: TorusGeom) -> np.ndarray:
    """Move entry (i, j) coefficients from frequency m to m + offsets[i, j], zero-filled."""
    out = np.zeros_like(coeffs)
    L = geom.band
    n = coeffs.shape[-1]
    for i in range(n):
        for j in range(n):
            shift = offsets[i, j]
            entry = coeffs[..., i, j]
            if not np.any(shift):
                out[..., i, j] = entry
                continue
            src = [slice(None)]
            dst = [slice(None)]
            for s in shift:
                s = int(s)
                if abs(s) >= L:
                    src.append(slice(0, 0))
                    dst.append(slice(0, 0))
                elif s >= 0:
                    src.append(slice(0, L - s))
                    dst.append(slice(s, L))
                else:
                    src.append(slice(-s, L))
                    dst.append(slice(0, L + s))
            moved = entry[tuple(src)]
            lost = np.sum(np.abs(entry) ** 2) - np.sum(np.abs(moved) ** 2)
            if lost > (BAND_TOL ** 2) * max(1.0, np.sum(np.abs(entry) ** 2)):
                raise BandLimitError(f"Relabelling entry ({i + 1},{j + 1}) pushes coefficients past the cutoff")
            out[(Ellipsis,) + tuple(dst[1:]) + (i, j)] = moved
    return out


def tau(alpha: LieForm, ctx: TwistContext, direction: str = "toGlobal") -> LieForm:
    """Ad u relabelling between twisted periodic parts and global coefficients, any degree."""
    offsets = ctx.shift.offsets()
    if direction == "toGlobal":
        if not ctx.shift.same_as(alpha.shift):
            raise TwistMismatchError("Form is not twisted by this context")
        coeffs = _relabel(alpha.coeffs, offsets, ctx.geom)
        return LieForm(alpha.geom, alpha.spec, alpha.degree, coeffs, None)
    if direction == "toTwisted":
        if alpha.shift is not None and not alpha.shift.is_trivial:
            raise TwistMismatchError("toTwisted expects a global form")
        coeffs = _relabel(alpha.coeffs, -offsets, ctx.geom)
        return LieForm(alpha.geom, alpha.spec, alpha.degree, coeffs, ctx.twisted_shift())
    raise ValueError(f"Unknown direction: {direction}")


def transfer_r_gamma(alpha: LieForm, ctx: TwistContext, direction: str = "toGlobal") -> LieForm:
    """r_γ(α) = Ad u(α) + γ and its inverse."""
    if alpha.degree != 1:
        raise ValueError("r_γ acts on 1-forms")
    if direction == "toGlobal":
        return tau(alpha, ctx, direction) + ctx.gamma
    return tau(alpha - ctx.gamma, ctx, direction)


def transfer_rbar_chi(alpha: LieForm, ctx: TwistContext, direction: str = "toGlobal") -> LieForm:
    """r̄_χ(α) = Ad u(α) + χ on (0,1)-forms and its inverse."""
    if alpha.degree != 1:
        raise ValueError("r̄_χ acts on 1-forms")
    alpha = type_project(alpha, 0, 1)
    if direction == "toGlobal":
        return tau(alpha, ctx, direction) + ctx.chi
    return tau(alpha - ctx.chi, ctx, direction)


def twisted_differential(beta: LieForm, gamma: LieForm) -> LieForm:
    """(d - ad γ)β = dβ - [γ, β] on global forms."""
    return differential(beta) - wedge_bracket(gamma, beta)


def picard_lift(omega01: LieForm) -> LieForm:
    """γ = -ω̄ + ω for a constant diagonal (0,1)-form ω."""
    if omega01.degree != 1 or not omega01.is_harmonic():
        raise TwistError("picard_lift expects a constant 1-form")
    const = omega01.constant_part()
    if np.any(const - np.einsum('...ii->...i', const)[..., None] * np.eye(const.shape[-1])):
        raise TwistError("picard_lift expects a diagonal form")
    omega01 = type_project(omega01, 0, 1)
    return omega01 - conjugate_transpose(omega01)


# --- Picard lattice ----------------------------------------------------------

def _picard_matrix(geom: TorusGeom) -> np.ndarray:
    """Real map (Re c, Im c) ↦ σ with σ[a] = Im(Σ_j c_j·conj(λ_a,j))/π."""
    P = geom.period_matrix
    return np.hstack([-P.imag.T, P.real.T]) / np.pi


def picard_coordinates(geom: TorusGeom, c) -> np.ndarray:
    """Holonomy exponents σ (2g,) of χ = Σ_j c_j dz̄_j; χ is in the Picard lattice iff σ is integral."""
    c = np.asarray(c, dtype=complex).reshape(geom.g)
    return _picard_matrix(geom) @ np.concatenate([c.real, c.imag])


def is_picard(geom: TorusGeom, c, tol: float = 1e-9) -> bool:
    sigma = picard_coordinates(geom, c)
    return bool(np.all(np.abs(sigma - np.round(sigma)) <= tol))


def picard_element(geom: TorusGeom, m) -> np.ndarray:
    """(0,1) coefficients of δ₀ of the character e^{2πi⟨m,t⟩}."""
    return geom.frequency_symbols(np.asarray(m, dtype=float))[geom.g:]


def picard_lattice_basis(geom: TorusGeom) -> np.ndarray:
    """Generators (2g, g) of the Picard lattice, one per unit holonomy exponent."""
    return np.array([picard_element(geom, e) for e in np.eye(geom.real_dim)])


def reduce_picard(geom: TorusGeom, c) -> Tuple[np.ndarray, np.ndarray]:
    """Split c into a lattice part (as integer frequencies m) and the remainder with σ ∈ [-1/2, 1/2)."""
    sigma = picard_coordinates(geom, c)
    m = np.floor(sigma + 0.5)
    return m.astype(int), np.asarray(c, dtype=complex).reshape(geom.g) - picard_element(geom, m)


def random_twist_coefficients(geom: TorusGeom, spec: GroupSpec, rng: np.random.Generator,
                              picard: bool = False, entries: Optional[Sequence[int]] = None) -> np.ndarray:
    """Random diagonal χ coefficients (g, n) valued in the torus of spec."""
    n = spec.ambient_dim
    c = np.zeros((geom.g, n), dtype=complex)
    for T in spec.torus_basis:
        i = int(np.argmax(np.abs(np.diag(T))))
        if entries is not None and i not in entries:
            continue
        if picard:
            value = picard_element(geom, rng.integers(-2, 3, size=geom.real_dim))
        else:
            value = rng.normal(size=geom.g) + 1j * rng.normal(size=geom.g)
        c += value[:, None] * np.diag(T)[None, :]
    return c


def twist_check_records(ctx: TwistContext) -> List[Tuple[str, float]]:
    """Exact invariants of a context as (name, deviation) pairs."""
    anti_hermitian = (ctx.gamma + conjugate_transpose(ctx.gamma)).norm()
    chi_part = (type_project(ctx.gamma, 0, 1) - ctx.chi).norm()
    unitary = float(max(np.abs(np.abs(np.diag(z)) - 1).max() for z in ctx.holonomy_character))
    return [("twist.gamma_anti_hermitian", anti_hermitian),
            ("twist.gamma_01_is_chi", chi_part),
            ("twist.character_unitary", unitary)]
