#!/usr/bin/env python3
"""
Hodge theory on flat complex tori, exact at the band limit.

Coordinates: a point of ℂ^g is the real vector x = (x_1..x_g, y_1..y_g); the
lattice Λ is spanned by the columns of the real 2g×2g period matrix B, and
t = B⁻¹x are fractional coordinates. A Fourier mode with (possibly shifted)
frequency ν ∈ ℝ^{2g} is e^{2πi⟨ν,t⟩}, with wave vector k = 2π B⁻ᵀ ν.

Forms are expanded in the frame θ_0..θ_{2g-1} = dz_1..dz_g, dz̄_1..dz̄_g and
stored as dense arrays of shape (frames, L, ..., L, n, n), L = 2·cutoff+1,
indexed by frame tuple, integer frequency m ∈ [-cutoff, cutoff]^{2g} and matrix
entry. A twisted form stores only periodic parts; entry (i, j) carries the
actual frequency m + r_ij, where r_ij = ρ_j - ρ_i comes from a FrequencyShift.
Since r is a cocycle, products of periodic parts are periodic parts of
products and all operators act on periodic parts through shifted symbols.

Metric: standard flat Kähler metric, |dz_j|² = 2, so Δ = |k|² and
Δ_∂ = Δ_∂̄ = |k|²/2 per mode.
"""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import (BandLimitError, DegenerateLatticeError, HarmonicObstructionError,
                    NotClosedError, SpecMismatchError)
from lie import GroupSpec
from logging_config import AppLogger, create_component_logger

logger = create_component_logger('torus')

SNAP_TOL = 1e-9

Frame = Tuple[int, ...]


class Operator(str, Enum):
    D = "d"
    DEL = "del"
    DBAR = "dbar"

    @classmethod
    def parse(cls, which) -> "Operator":
        if isinstance(which, Operator):
            return which
        aliases = {"d": cls.D, "del": cls.DEL, "partial": cls.DEL, "∂": cls.DEL,
                   "dbar": cls.DBAR, "∂̄": cls.DBAR}
        try:
            return aliases[str(which).lower()]
        except KeyError:
            raise ValueError(f"Unknown operator: {which}") from None


def _permutation_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass(frozen=True, eq=False)
class TorusGeom:
    """Flat torus ℂ^g/Λ with spectral tables for band-limited forms."""
    g: int
    period_matrix: np.ndarray
    cutoff: int
    grid: int
    real_periods: np.ndarray
    dual: np.ndarray
    frames: Tuple[Tuple[Frame, ...], ...]
    frame_index: Tuple[Dict[Frame, int], ...]
    ext_table: Tuple[Tuple[Tuple[int, int, int, int], ...], ...]
    wedge_table: Dict[Tuple[int, int], Tuple[Tuple[int, int, int, int], ...]]
    freqs: np.ndarray

    @property
    def real_dim(self) -> int:
        return 2 * self.g

    @property
    def band(self) -> int:
        return 2 * self.cutoff + 1

    @property
    def spatial_axes(self) -> Tuple[int, ...]:
        return tuple(range(1, 1 + self.real_dim))

    @property
    def max_wavenumber(self) -> float:
        corners = np.array(np.meshgrid(*([[-self.cutoff, self.cutoff]] * self.real_dim), indexing='ij'))
        corners = corners.reshape(self.real_dim, -1)
        return float(np.linalg.norm(self.dual @ corners, axis=0).max())

    def bidegree(self, frame: Frame) -> Tuple[int, int]:
        holo = sum(1 for a in frame if a < self.g)
        return holo, len(frame) - holo

    def frame_count(self, degree: int) -> int:
        return len(self.frames[degree])

    def frame_name(self, frame: Frame) -> str:
        if not frame:
            return "1"
        parts = []
        for a in frame:
            base = "dz" if a < self.g else "dzbar"
            parts.append(f"{base}{(a % self.g) + 1}" if self.g > 1 else base)
        return "^".join(parts)

    def to_fractional(self, x: np.ndarray) -> np.ndarray:
        """Real coordinates (…, 2g) to fractional lattice coordinates."""
        return np.linalg.solve(self.real_periods, np.asarray(x, dtype=float).T).T

    def lattice_vector(self, generator: int) -> np.ndarray:
        """Complex vector (g,) of a lattice generator."""
        return self.period_matrix[:, generator]

    def real_vector(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex).reshape(self.g)
        return np.concatenate([v.real, v.imag])

    # --- spectral tables ---

    def _symbols_from_nu(self, nu: np.ndarray) -> np.ndarray:
        k = np.einsum('ba,a...->b...', self.dual, nu)
        g = self.g
        sym = np.empty(k.shape, dtype=complex)
        for j in range(g):
            sym[j] = 0.5j * (k[j] - 1j * k[g + j])
            sym[g + j] = 0.5j * (k[j] + 1j * k[g + j])
        return sym

    def frequency_symbols(self, nu) -> np.ndarray:
        """Frame symbols (2g,) of a single real frequency vector."""
        return self._symbols_from_nu(np.asarray(nu, dtype=float))

    def frequencies(self, shift_table: np.ndarray) -> np.ndarray:
        """Actual frequencies (2g, L.., n, n) for a shift table (n, n, 2g)."""
        return self.freqs[(Ellipsis,) + (None, None)] + np.moveaxis(shift_table, -1, 0)[
            (slice(None),) + (None,) * self.real_dim]

    def symbols(self, shift_table: np.ndarray) -> np.ndarray:
        """Frame symbols σ_a, shape (2g, L.., n, n): d(f) = Σ_a σ_a f θ_a per mode."""
        return self._symbols_from_nu(self.frequencies(shift_table))

    def wavenumber_sq(self, shift_table: np.ndarray) -> np.ndarray:
        k = np.einsum('ba,a...->b...', self.dual, self.frequencies(shift_table))
        return np.sum(k * k, axis=0)

    def harmonic_mask(self, shift_table: np.ndarray) -> np.ndarray:
        return np.all(self.frequencies(shift_table) == 0, axis=0)

    def grid_symbols(self, shift_table: np.ndarray) -> np.ndarray:
        """Frame symbols for every grid frequency in FFT order, shape (2g, M.., n, n)."""
        M = self.grid
        axis = np.fft.fftfreq(M, 1.0 / M)
        mesh = np.array(np.meshgrid(*([axis] * self.real_dim), indexing='ij'))
        nu = mesh[(Ellipsis,) + (None, None)] + np.moveaxis(shift_table, -1, 0)[
            (slice(None),) + (None,) * self.real_dim]
        return self._symbols_from_nu(nu)

    # --- grid transforms (arrays shaped (F, L.., n, n) <-> (F, M.., n, n)) ---

    def _band_slice(self) -> Tuple[slice, ...]:
        lo = self.grid // 2 - self.cutoff
        return (slice(None),) + (slice(lo, lo + self.band),) * self.real_dim + (Ellipsis,)

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        axes = self.spatial_axes
        shape = coeffs.shape[:1] + (self.grid,) * self.real_dim + coeffs.shape[1 + self.real_dim:]
        padded = np.zeros(shape, dtype=complex)
        padded[self._band_slice()] = coeffs
        padded = np.fft.ifftshift(padded, axes=axes)
        return np.fft.ifftn(padded, axes=axes) * self.grid ** self.real_dim

    def full_spectrum(self, values: np.ndarray) -> np.ndarray:
        """All grid Fourier coefficients, FFT order."""
        return np.fft.fftn(values, axes=self.spatial_axes) / self.grid ** self.real_dim

    def from_grid(self, values: np.ndarray) -> np.ndarray:
        spectrum = np.fft.fftshift(self.full_spectrum(values), axes=self.spatial_axes)
        return spectrum[self._band_slice()].copy()

    def tail_fraction(self, values: np.ndarray, band: int) -> float:
        """Fraction of spectral energy of grid values beyond frequency `band`."""
        spectrum = self.full_spectrum(values)
        axis = np.abs(np.fft.fftfreq(self.grid, 1.0 / self.grid))
        mesh = np.max(np.array(np.meshgrid(*([axis] * self.real_dim), indexing='ij')), axis=0)
        outside = (mesh > band)[(None,) + (Ellipsis,) + (None, None)]
        total = np.sum(np.abs(spectrum) ** 2)
        if total == 0:
            return 0.0
        return float(np.sum(np.abs(np.where(outside, spectrum, 0)) ** 2) / total)

    def grid_points(self) -> np.ndarray:
        """Fractional coordinates of grid points, shape (M.., 2g)."""
        axis = np.arange(self.grid) / self.grid
        return np.stack(np.meshgrid(*([axis] * self.real_dim), indexing='ij'), axis=-1)


def make_torus(g: int, period_matrix, cutoff: int, grid: Optional[int] = None) -> TorusGeom:
    """
    Build the geometry of ℂ^g/Λ.

    period_matrix holds the 2g generators as columns of a g×2g complex array
    (for g = 1 a flat pair [λ_1, λ_2] is accepted). The generators must be
    ℝ-independent and positively oriented for the complex structure.
    """
    g = int(g)
    if g < 1:
        raise DegenerateLatticeError(f"Complex dimension must be positive, got {g}")
    P = np.asarray(period_matrix, dtype=complex)
    if P.ndim == 1 and g == 1:
        P = P.reshape(1, -1)
    if P.shape != (g, 2 * g):
        raise DegenerateLatticeError(f"Period matrix must have shape {(g, 2 * g)}, got {P.shape}")
    if cutoff < 1:
        raise BandLimitError(f"cutoff must be at least 1, got {cutoff}")
    grid = 3 * cutoff + 1 if grid is None else int(grid)
    if grid < 3 * cutoff + 1:
        raise BandLimitError(f"grid {grid} too small for cutoff {cutoff}: need at least {3 * cutoff + 1}")

    B = np.vstack([P.real, P.imag])
    interleaved = B[[r for j in range(g) for r in (j, g + j)], :]
    scale = float(np.prod(np.linalg.norm(B, axis=0)))
    orientation = float(np.linalg.det(interleaved))
    if not orientation > 1e-10 * scale:
        raise DegenerateLatticeError(
            f"Lattice generators are dependent or negatively oriented (oriented volume {orientation:.3e})")

    d = 2 * g
    frames = tuple(tuple(combinations(range(d), p)) for p in range(d + 1))
    index = tuple({f: i for i, f in enumerate(fs)} for fs in frames)
    ext = []
    for p in range(d + 1):
        rows = []
        for src, I in enumerate(frames[p]):
            for a in range(d):
                if a in I:
                    continue
                J = tuple(sorted(I + (a,)))
                sign = -1 if sum(1 for i in I if i < a) % 2 else 1
                rows.append((a, src, index[p + 1][J], sign))
        ext.append(tuple(rows))
    wedge = {}
    for p in range(d + 1):
        for q in range(d + 1 - p):
            rows = []
            for i, I in enumerate(frames[p]):
                for j, J in enumerate(frames[q]):
                    if set(I) & set(J):
                        continue
                    rows.append((i, j, index[p + q][tuple(sorted(I + J))], _permutation_sign(I + J)))
            wedge[(p, q)] = tuple(rows)

    axis = np.arange(-cutoff, cutoff + 1, dtype=float)
    freqs = np.array(np.meshgrid(*([axis] * d), indexing='ij'))

    geom = TorusGeom(g=g, period_matrix=P, cutoff=int(cutoff), grid=grid, real_periods=B,
                     dual=2 * np.pi * np.linalg.inv(B).T, frames=frames, frame_index=index,
                     ext_table=tuple(ext), wedge_table=wedge, freqs=freqs)
    logger.debug(f"Torus g={g} cutoff={cutoff} grid={grid} volume={abs(np.linalg.det(B)):.6g}")
    return geom


@dataclass(frozen=True, eq=False)
class FrequencyShift:
    """
    Per-index reduced exponents ρ_i ∈ [-1/2, 1/2)^{2g} and integer windings
    with σ_i = ρ_i + winding_i. Entry (i, j) is shifted by ρ_j - ρ_i.
    """
    diag_shift: np.ndarray
    winding: np.ndarray

    @classmethod
    def trivial(cls, n: int, g: int) -> "FrequencyShift":
        return cls(np.zeros((n, 2 * g)), np.zeros((n, 2 * g)))

    @classmethod
    def from_exponents(cls, sigma: np.ndarray) -> "FrequencyShift":
        sigma = np.asarray(sigma, dtype=float)
        winding = np.floor(sigma + 0.5)
        rho = sigma - winding
        rho[np.abs(rho) < SNAP_TOL] = 0.0
        n, d = rho.shape
        for a in range(d):
            for j in range(n):
                for i in range(j):
                    diff = rho[j, a] - rho[i, a]
                    k = np.round(diff)
                    if abs(diff - k) < SNAP_TOL:
                        rho[j, a] = rho[i, a]
                        winding[j, a] += k
                        break
        return cls(rho, winding)

    @property
    def n(self) -> int:
        return self.diag_shift.shape[0]

    def table(self) -> np.ndarray:
        """Entry shifts r_ij = ρ_j - ρ_i, shape (n, n, 2g)."""
        return self.diag_shift[None, :, :] - self.diag_shift[:, None, :]

    def offsets(self) -> np.ndarray:
        """Integer relabelling d_ij = winding_i - winding_j between twisted and global frequencies."""
        return (self.winding[:, None, :] - self.winding[None, :, :]).astype(int)

    def trivial_entries(self) -> np.ndarray:
        return np.all(self.table() == 0, axis=-1)

    @property
    def is_trivial(self) -> bool:
        return bool(np.all(self.diag_shift == 0))

    def same_as(self, other: Optional["FrequencyShift"]) -> bool:
        other_table = np.zeros_like(self.table()) if other is None else other.table()
        return bool(np.array_equal(self.table(), other_table))


@dataclass(frozen=True, eq=False)
class LieForm:
    """Band-limited 𝔤-valued p-form, coefficients shaped (frames, L.., n, n)."""
    geom: TorusGeom
    spec: GroupSpec
    degree: int
    coeffs: np.ndarray
    shift: Optional[FrequencyShift] = None

    def __post_init__(self):
        object.__setattr__(self, 'coeffs', np.array(self.coeffs, copy=True))
        geom = self.geom
        expected = (geom.frame_count(self.degree),) + (geom.band,) * geom.real_dim + (
            self.spec.ambient_dim,) * 2
        if self.coeffs.shape != expected:
            raise SpecMismatchError(f"Coefficient shape {self.coeffs.shape} != {expected}")
        self.coeffs.setflags(write=False)

    # --- construction ---

    @classmethod
    def zero(cls, geom: TorusGeom, spec: GroupSpec, degree: int,
             shift: Optional[FrequencyShift] = None) -> "LieForm":
        shape = (geom.frame_count(degree),) + (geom.band,) * geom.real_dim + (spec.ambient_dim,) * 2
        return cls(geom, spec, degree, np.zeros(shape, dtype=complex), shift)

    def with_coeffs(self, coeffs: np.ndarray, degree: Optional[int] = None) -> "LieForm":
        return LieForm(self.geom, self.spec, self.degree if degree is None else degree,
                       np.asarray(coeffs, dtype=complex), self.shift)

    # --- data access ---

    @property
    def frames(self) -> Tuple[Frame, ...]:
        return self.geom.frames[self.degree]

    @property
    def center(self) -> Tuple[int, ...]:
        return (self.geom.cutoff,) * self.geom.real_dim

    @property
    def shift_table(self) -> np.ndarray:
        n = self.spec.ambient_dim
        if self.shift is None:
            return np.zeros((n, n, self.geom.real_dim))
        return self.shift.table()

    def constant_part(self) -> np.ndarray:
        """Zero-frequency coefficients, shape (frames, n, n)."""
        return np.array(self.coeffs[(slice(None),) + self.center])

    def component(self, frame: Frame) -> np.ndarray:
        return self.coeffs[self.geom.frame_index[self.degree][tuple(frame)]]

    def bidegrees(self) -> List[Tuple[int, int]]:
        return sorted({self.geom.bidegree(f) for i, f in enumerate(self.frames) if np.any(self.coeffs[i])})

    def restrict_entries(self, mask: np.ndarray) -> "LieForm":
        return self.with_coeffs(np.where(mask, self.coeffs, 0))

    def enforce(self) -> "LieForm":
        return self.with_coeffs(self.spec.enforce(self.coeffs))

    def is_harmonic(self, tol: float = 0.0) -> bool:
        """Support only on frequency + shift = 0 modes."""
        mask = self.geom.harmonic_mask(self.shift_table)
        off = np.where(mask[None], 0, self.coeffs)
        return bool(np.sqrt(np.sum(np.abs(off) ** 2)) <= tol * max(1.0, self.norm()))

    # --- arithmetic ---

    def _compatible(self, other: "LieForm"):
        if other.geom is not self.geom or other.spec.key != self.spec.key or other.degree != self.degree:
            raise SpecMismatchError("Forms live on different tori, groups or degrees")
        return common_shift(self, other)

    def __add__(self, other: "LieForm") -> "LieForm":
        shift = self._compatible(other)
        return LieForm(self.geom, self.spec, self.degree, self.coeffs + other.coeffs, shift)

    def __sub__(self, other: "LieForm") -> "LieForm":
        shift = self._compatible(other)
        return LieForm(self.geom, self.spec, self.degree, self.coeffs - other.coeffs, shift)

    def __neg__(self) -> "LieForm":
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: complex) -> "LieForm":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def inner(self, other: "LieForm") -> complex:
        """L² pairing (unit-volume torus, |θ_I|² = 2^p)."""
        return complex(2 ** self.degree * np.vdot(other.coeffs, self.coeffs))

    def norm(self) -> float:
        return float(np.sqrt(2 ** self.degree * np.sum(np.abs(self.coeffs) ** 2)))


def common_shift(a: LieForm, b: LieForm) -> Optional[FrequencyShift]:
    """Shift of a product: the nontrivial one; two different nontrivial shifts are incompatible."""
    if a.shift is None or a.shift.is_trivial:
        return b.shift if b.shift is not None else a.shift
    if b.shift is None or b.shift.is_trivial:
        # Untwisted diagonal data combines with any twisted form.
        if np.any(b.coeffs[..., ~np.eye(b.spec.ambient_dim, dtype=bool)]):
            raise SpecMismatchError("Untwisted off-diagonal form combined with a twisted form")
        return a.shift
    if not a.shift.same_as(b.shift):
        raise SpecMismatchError("Forms carry different frequency shifts")
    return a.shift


def constant_form(geom: TorusGeom, spec: GroupSpec, degree: int, components: Dict[Frame, np.ndarray],
                  shift: Optional[FrequencyShift] = None) -> LieForm:
    """Constant form Σ components[frame] θ_frame."""
    form = LieForm.zero(geom, spec, degree, shift)
    coeffs = np.array(form.coeffs)
    for frame, matrix in components.items():
        coeffs[(geom.frame_index[degree][tuple(frame)],) + form.center] = np.asarray(matrix, dtype=complex)
    return form.with_coeffs(coeffs)


# --- operators ---------------------------------------------------------------

def _frame_allowed(geom: TorusGeom, which: Operator, a: int) -> bool:
    if which is Operator.D:
        return True
    return (a < geom.g) == (which is Operator.DEL)


def differential(alpha: LieForm, which="d") -> LieForm:
    """d, ∂ or ∂̄ applied mode by mode with (shifted) frequency symbols."""
    which = Operator.parse(which)
    geom = alpha.geom
    if alpha.degree == geom.real_dim:
        return LieForm.zero(geom, alpha.spec, alpha.degree, alpha.shift)
    sym = geom.symbols(alpha.shift_table)
    out = np.zeros((geom.frame_count(alpha.degree + 1),) + alpha.coeffs.shape[1:], dtype=complex)
    for a, src, dst, sign in geom.ext_table[alpha.degree]:
        if _frame_allowed(geom, which, a):
            out[dst] += sign * sym[a] * alpha.coeffs[src]
    return LieForm(geom, alpha.spec, alpha.degree + 1, out, alpha.shift)


def codifferential(alpha: LieForm, which="d") -> LieForm:
    """Formal L² adjoints d*, ∂*, ∂̄*."""
    which = Operator.parse(which)
    geom = alpha.geom
    if alpha.degree == 0:
        return LieForm.zero(geom, alpha.spec, 0, alpha.shift)
    sym = np.conj(geom.symbols(alpha.shift_table))
    out = np.zeros((geom.frame_count(alpha.degree - 1),) + alpha.coeffs.shape[1:], dtype=complex)
    for a, src, dst, sign in geom.ext_table[alpha.degree - 1]:
        if _frame_allowed(geom, which, a):
            out[src] += 2 * sign * sym[a] * alpha.coeffs[dst]
    return LieForm(geom, alpha.spec, alpha.degree - 1, out, alpha.shift)


def laplacian(alpha: LieForm, which="d") -> LieForm:
    """Δ = dd* + d*d (or the ∂ / ∂̄ analogues), composed from the operators."""
    which = Operator.parse(which)
    return (differential(codifferential(alpha, which), which)
            + codifferential(differential(alpha, which), which))


def laplacian_symbol(alpha: LieForm, which="d") -> np.ndarray:
    """Per-mode eigenvalue of the chosen Laplacian, shape (L.., n, n)."""
    k2 = alpha.geom.wavenumber_sq(alpha.shift_table)
    return k2 if Operator.parse(which) is Operator.D else 0.5 * k2


def harmonic_part(alpha: LieForm) -> LieForm:
    mask = alpha.geom.harmonic_mask(alpha.shift_table)
    return alpha.with_coeffs(np.where(mask[None], alpha.coeffs, 0))


def green(alpha: LieForm, which="d") -> LieForm:
    """Inverse of the Laplacian on the orthogonal complement of harmonic forms."""
    mask = alpha.geom.harmonic_mask(alpha.shift_table)
    lam = laplacian_symbol(alpha, which)
    inv = np.where(mask, 0.0, 1.0 / np.where(mask, 1.0, lam))
    return alpha.with_coeffs(alpha.coeffs * inv[None])


def project_bidegree(alpha: LieForm, p: int, q: int) -> LieForm:
    keep = np.array([alpha.geom.bidegree(f) == (p, q) for f in alpha.frames])
    shape = (len(keep),) + (1,) * (alpha.coeffs.ndim - 1)
    return alpha.with_coeffs(np.where(keep.reshape(shape), alpha.coeffs, 0))


@dataclass(frozen=True)
class HodgeSplit:
    harmonic: LieForm
    exact_potential: Optional[LieForm]
    coexact_potential: Optional[LieForm]
    residual: float

    def parts(self) -> Tuple[LieForm, LieForm, LieForm]:
        """(harmonic, exact, coexact) pieces of the decomposed form."""
        base = self.harmonic
        exact = differential(self.exact_potential) if self.exact_potential is not None else base * 0
        coexact = codifferential(self.coexact_potential) if self.coexact_potential is not None else base * 0
        return base, exact, coexact


def hodge_decompose(alpha: LieForm) -> HodgeSplit:
    """α = H + d(G d*α) + d*(G dα), exact per mode."""
    geom = alpha.geom
    harmonic = harmonic_part(alpha)
    exact_pot = green(codifferential(alpha)) if alpha.degree > 0 else None
    coexact_pot = green(differential(alpha)) if alpha.degree < geom.real_dim else None
    rebuilt = harmonic
    if exact_pot is not None:
        rebuilt = rebuilt + differential(exact_pot)
    if coexact_pot is not None:
        rebuilt = rebuilt + codifferential(coexact_pot)
    residual = (alpha - rebuilt).norm()
    AppLogger.log_algorithm_step('torus', 'hodge_decompose', {
        'degree': alpha.degree, 'harmonic_norm': f"{harmonic.norm():.3e}", 'residual': f"{residual:.3e}"})
    return HodgeSplit(harmonic, exact_pot, coexact_pot, residual)


@dataclass(frozen=True)
class DolbeaultSplit:
    """α = harmonic + which(potential) + residual, potential = G which* α."""
    harmonic: LieForm
    potential: LieForm
    residual: float


def dolbeault_split(alpha: LieForm, which="dbar") -> DolbeaultSplit:
    """Split a ∂̄-closed (or ∂-closed) form into harmonic part and ∂̄ (∂) of a potential."""
    which = Operator.parse(which)
    potential = green(codifferential(alpha, which), which)
    harmonic = harmonic_part(alpha)
    residual = (alpha - harmonic - differential(potential, which)).norm()
    return DolbeaultSplit(harmonic, potential, residual)


# --- products ----------------------------------------------------------------

def _grid_products(alpha: LieForm, beta: LieForm, pairs) -> np.ndarray:
    geom = alpha.geom
    ag = geom.to_grid(alpha.coeffs)
    bg = geom.to_grid(beta.coeffs)
    out = np.zeros((geom.frame_count(alpha.degree + beta.degree),) + ag.shape[1:], dtype=complex)
    for left, right, swap in pairs:
        table = geom.wedge_table[(left.degree, right.degree)]
        lg, rg = (bg, ag) if swap else (ag, bg)
        for i, j, dst, sign in table:
            out[dst] += sign * (lg[i] @ rg[j])
    return out


def _check_product(alpha: LieForm, beta: LieForm) -> Optional[FrequencyShift]:
    if alpha.geom is not beta.geom or alpha.spec.key != beta.spec.key:
        raise SpecMismatchError("Forms live on different tori or groups")
    if alpha.degree + beta.degree > alpha.geom.real_dim:
        raise BandLimitError("Product degree exceeds the real dimension")
    return common_shift(alpha, beta)


def wedge(alpha: LieForm, beta: LieForm) -> LieForm:
    """Matrix wedge α∧β = Σ A_I B_J θ_I∧θ_J, dealiased on the padded grid."""
    shift = _check_product(alpha, beta)
    grid = _grid_products(alpha, beta, [(alpha, beta, False)])
    coeffs = alpha.spec.enforce(alpha.geom.from_grid(grid))
    return LieForm(alpha.geom, alpha.spec, alpha.degree + beta.degree, coeffs, shift)


def wedge_bracket(alpha: LieForm, beta: LieForm) -> LieForm:
    """[α, β] = α∧β - (-1)^{pq} β∧α; for 1-forms [α, α] = 2 α∧α."""
    shift = _check_product(alpha, beta)
    geom = alpha.geom
    ag = geom.to_grid(alpha.coeffs)
    bg = geom.to_grid(beta.coeffs)
    p, q = alpha.degree, beta.degree
    out = np.zeros((geom.frame_count(p + q),) + ag.shape[1:], dtype=complex)
    sign_swap = -1 if (p * q) % 2 == 0 else 1
    for i, j, dst, sign in geom.wedge_table[(p, q)]:
        out[dst] += sign * (ag[i] @ bg[j])
    for j, i, dst, sign in geom.wedge_table[(q, p)]:
        out[dst] += sign_swap * sign * (bg[j] @ ag[i])
    coeffs = alpha.spec.enforce(geom.from_grid(out))
    return LieForm(geom, alpha.spec, p + q, coeffs, shift)


# --- solvers -----------------------------------------------------------------

def solve_ddbar(phi: LieForm, closed_tol: float = 1e-8, harmonic_tol: float = 1e-10,
                residual_tol: float = 1e-8) -> LieForm:
    """
    Solve ∂∂̄ψ = φ for a d-closed (p,q)-form with p, q ≥ 1 and no harmonic part.

    ψ = ∂̄* G ∂* G φ is the solution with zero harmonic projection.
    """
    geom = phi.geom
    degrees = phi.bidegrees()
    if phi.degree < 2:
        raise ValueError(f"solve_ddbar needs a form of degree ≥ 2, got {phi.degree}")
    if len(degrees) > 1 or any(p < 1 or q < 1 for p, q in degrees):
        raise ValueError(f"solve_ddbar needs a pure (p,q)-form with p,q ≥ 1, got bidegrees {degrees}")
    size = phi.norm()
    if size == 0:
        return LieForm.zero(geom, phi.spec, phi.degree - 2, phi.shift)

    closed = differential(phi).norm()
    if closed > closed_tol * size * (1.0 + geom.max_wavenumber):
        raise NotClosedError(f"Right-hand side is not d-closed (‖dφ‖ = {closed:.3e})")
    harmonic = harmonic_part(phi).norm()
    if harmonic > harmonic_tol * size:
        raise HarmonicObstructionError("Right-hand side of the ddbar equation has a harmonic part", harmonic)

    beta = codifferential(green(phi, Operator.DEL), Operator.DEL)
    psi = codifferential(green(beta, Operator.DBAR), Operator.DBAR)
    residual = (differential(differential(psi, Operator.DBAR), Operator.DEL) - phi).norm()
    AppLogger.log_algorithm_step('torus', 'solve_ddbar', {
        'rhs_norm': f"{size:.3e}", 'residual': f"{residual:.3e}"})
    if residual > residual_tol * size:
        raise NotClosedError(f"Right-hand side is not ddbar-exact (residual {residual:.3e})")
    return psi


def twisted_harmonic_basis(geom: TorusGeom, spec: GroupSpec, shift: Optional[FrequencyShift],
                           bidegree: Tuple[int, int]) -> List[LieForm]:
    """Constant forms X θ_I for X in the 𝔤-basis on trivially shifted entries, θ_I of the bidegree."""
    p, q = bidegree
    degree = p + q
    trivial = np.ones((spec.ambient_dim,) * 2, dtype=bool) if shift is None else shift.trivial_entries()
    frames = [f for f in geom.frames[degree] if geom.bidegree(f) == (p, q)]
    basis = []
    for frame in frames:
        for X in spec.basis:
            if np.all(trivial[X != 0]):
                basis.append(constant_form(geom, spec, degree, {frame: X}, shift))
    return basis


def harmonic_dimension(geom: TorusGeom, spec: GroupSpec, shift: Optional[FrequencyShift],
                       bidegree: Tuple[int, int]) -> int:
    """Number of twisted harmonic forms; equals trivial basis elements × frame count."""
    p, q = bidegree
    trivial = np.ones((spec.ambient_dim,) * 2, dtype=bool) if shift is None else shift.trivial_entries()
    count = sum(1 for X in spec.basis if np.all(trivial[X != 0]))
    return count * comb(geom.g, p) * comb(geom.g, q)


# --- evaluation and conjugation ---------------------------------------------

def evaluate(alpha: LieForm, points: np.ndarray, chunk: int = 128) -> np.ndarray:
    """
    Exact values at fractional points (S, 2g), shape (S, frames, n, n).

    Twisted forms include the phase e^{2πi⟨r_ij, t⟩} of the shifted frequency.
    """
    geom = alpha.geom
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = np.arange(-geom.cutoff, geom.cutoff + 1)
    out = []
    for start in range(0, len(points), chunk):
        t = points[start:start + chunk]
        phase = np.exp(2j * np.pi * t[:, :, None] * m[None, None, :])  # (S, 2g, L)
        acc = np.einsum('fa...,sa->fs...', alpha.coeffs, phase[:, 0, :])
        for a in range(1, geom.real_dim):
            acc = np.einsum('fsa...,sa->fs...', acc, phase[:, a, :])
        if alpha.shift is not None and not alpha.shift.is_trivial:
            twist = np.exp(2j * np.pi * np.einsum('ija,sa->sij', alpha.shift_table, t))
            acc = acc * twist[None]
        out.append(np.moveaxis(acc, 1, 0))
    return np.concatenate(out, axis=0)


def conjugate_transpose(alpha: LieForm) -> LieForm:
    """Pointwise conjugate-transpose α^† of an untwisted 0- or 1-form (dz ↔ dz̄)."""
    if alpha.shift is not None and not alpha.shift.is_trivial:
        raise SpecMismatchError("conjugate_transpose is defined for untwisted forms only")
    if alpha.degree > 1:
        raise ValueError("conjugate_transpose is implemented for degrees 0 and 1")
    geom = alpha.geom
    flipped = np.conj(np.flip(alpha.coeffs, axis=geom.spatial_axes)).swapaxes(-1, -2)
    if alpha.degree == 1:
        g = geom.g
        order = [a + g if a < g else a - g for a in range(2 * g)]
        flipped = flipped[order]
    # Lower-triangular result: it leaves 𝔤, so the pattern is not enforced.
    return LieForm(geom, alpha.spec, alpha.degree, flipped)
