#!/usr/bin/env python3
"""
Solvable matrix Lie groups and algebras.

Every group is realized as upper-triangular matrices G = N ⋊ S with N unipotent
(strictly upper part of the algebra) and S diagonal:
- Triangular(n): all invertible upper-triangular n×n matrices
- BorelSp(2n): Borel of Sp for the form [[0, K], [-K, 0]], K antidiagonal ones
- BorelSO(m): Borel of SO for the antidiagonal symmetric form

Because the invariant forms are antidiagonal, the algebra is spanned by matrix
units E_ij paired with E_{j'i'} (a' = N-1-a), so zero patterns are literal and
every bracket of basis elements is an exact integer computation.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from errors import (NonUnipotentError, SingularElementError, SpecMismatchError,
                    UnsupportedGroupError)
from logging_config import create_component_logger

logger = create_component_logger('lie')

MAX_AMBIENT_DIM = 6


class GroupFamily(str, Enum):
    TRIANGULAR = "Triangular"
    BOREL_SP = "BorelSp"
    BOREL_SO = "BorelSO"

    @classmethod
    def parse(cls, name: str) -> "GroupFamily":
        for member in cls:
            if member.value.lower() == str(name).lower() or member.name.lower() == str(name).lower():
                return member
        raise UnsupportedGroupError(f"Unknown group family: {name}")


@dataclass(frozen=True)
class CompactForm:
    """K ≅ U(1)^rank: exponentials of the anti-Hermitian diagonal generators."""
    rank: int
    generators: Tuple[np.ndarray, ...]

    def contains(self, X: np.ndarray, tol: float = 1e-12) -> bool:
        """True when X lies in the Lie algebra of K (anti-Hermitian and diagonal)."""
        X = np.asarray(X)
        off = X - np.diag(np.diag(X))
        return bool(np.abs(off).max(initial=0.0) <= tol and np.abs(X + X.conj().T).max(initial=0.0) <= tol)


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """A solvable matrix group N ⋊ S with its filtration and compact torus."""
    family: GroupFamily
    rank: int
    ambient_dim: int
    nilpotent_basis: Tuple[np.ndarray, ...]
    torus_basis: Tuple[np.ndarray, ...]
    filtration_level: Tuple[int, ...]
    nilpotent_labels: Tuple[str, ...]
    torus_labels: Tuple[str, ...]
    grading: np.ndarray
    parabolic_step: Tuple[np.ndarray, ...] = ()
    _coord_matrix: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        stacked = np.array([b.reshape(-1) for b in self.basis]).T if self.basis else np.zeros(
            (self.ambient_dim ** 2, 0))
        object.__setattr__(self, '_coord_matrix', stacked)

    @property
    def key(self) -> Tuple[str, int]:
        return (self.family.value, self.rank)

    @property
    def name(self) -> str:
        return f"{self.family.value}({self.rank})"

    @property
    def basis(self) -> Tuple[np.ndarray, ...]:
        """𝔫-basis followed by 𝔰-basis."""
        return tuple(self.nilpotent_basis) + tuple(self.torus_basis)

    @property
    def basis_labels(self) -> Tuple[str, ...]:
        return tuple(self.nilpotent_labels) + tuple(self.torus_labels)

    @property
    def dim(self) -> int:
        return len(self.nilpotent_basis) + len(self.torus_basis)

    @property
    def torus_rank(self) -> int:
        return len(self.torus_basis)

    @property
    def compact_form(self) -> CompactForm:
        return CompactForm(self.torus_rank, tuple(1j * t for t in self.torus_basis))

    @property
    def pattern(self) -> np.ndarray:
        """Boolean mask of matrix entries that may be nonzero in 𝔤."""
        mask = np.zeros((self.ambient_dim, self.ambient_dim), dtype=bool)
        for b in self.basis:
            mask |= b != 0
        return mask

    @property
    def max_level(self) -> int:
        return max(self.filtration_level, default=0)

    def entry_levels(self) -> np.ndarray:
        """Filtration level per matrix entry; 0 on the diagonal, -1 off the pattern."""
        h = self.grading
        levels = np.rint(h[:, None] - h[None, :]).astype(int)
        levels[~self.pattern] = -1
        return levels

    def enforce(self, X: np.ndarray) -> np.ndarray:
        """Zero the structural entries of X (works on stacked arrays too)."""
        return np.where(self.pattern, X, 0)

    def coordinates(self, X: np.ndarray) -> np.ndarray:
        """Coordinates of X in `basis` (least squares; exact for X in 𝔤)."""
        coords, *_ = np.linalg.lstsq(self._coord_matrix.astype(complex),
                                     np.asarray(X, dtype=complex).reshape(-1), rcond=None)
        return coords

    def from_coordinates(self, coords: Sequence[complex]) -> np.ndarray:
        return (self._coord_matrix @ np.asarray(coords, dtype=complex)).reshape(
            self.ambient_dim, self.ambient_dim)

    def contains(self, X: np.ndarray, tol: float = 1e-12) -> bool:
        X = np.asarray(X, dtype=complex)
        residual = X - self.from_coordinates(self.coordinates(X))
        return bool(np.abs(residual).max(initial=0.0) <= tol * max(1.0, np.abs(X).max(initial=0.0)))

    def algebra(self, matrix) -> "AlgebraElement":
        return AlgebraElement(np.asarray(matrix, dtype=complex), self)

    def element(self, matrix) -> "GroupElement":
        return GroupElement(np.asarray(matrix, dtype=complex), self)

    def identity(self) -> "GroupElement":
        return GroupElement(np.eye(self.ambient_dim, dtype=complex), self)


def _check_pattern(matrix: np.ndarray, spec: GroupSpec, what: str):
    n = spec.ambient_dim
    if matrix.shape != (n, n):
        raise SpecMismatchError(f"{what} has shape {matrix.shape}, expected {(n, n)} for {spec.name}")
    if np.any(matrix[~spec.pattern] != 0):
        raise SpecMismatchError(f"{what} violates the zero pattern of {spec.name}")


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    matrix: np.ndarray
    spec: GroupSpec

    def __post_init__(self):
        _check_pattern(self.matrix, self.spec, "Algebra element")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_spec(self.spec, other.spec)
        return AlgebraElement(self.matrix + other.matrix, self.spec)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        _same_spec(self.spec, other.spec)
        return AlgebraElement(self.matrix - other.matrix, self.spec)

    def __mul__(self, scalar: complex) -> "AlgebraElement":
        return AlgebraElement(self.matrix * scalar, self.spec)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray
    spec: GroupSpec

    def __post_init__(self):
        _check_pattern(self.matrix, self.spec, "Group element")
        if np.any(np.diag(self.matrix) == 0):
            raise SingularElementError(f"Group element of {self.spec.name} has a zero diagonal entry")

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        _same_spec(self.spec, other.spec)
        return GroupElement(self.matrix @ other.matrix, self.spec)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.spec.enforce(_inverse(self.matrix)), self.spec)


def _same_spec(a: GroupSpec, b: GroupSpec):
    if a.key != b.key:
        raise SpecMismatchError(f"Group mismatch: {a.name} vs {b.name}")


def _inverse(matrix: np.ndarray) -> np.ndarray:
    diag = np.diag(matrix)
    if np.min(np.abs(diag)) == 0:
        raise SingularElementError("Matrix is singular")
    # Triangular solve keeps the zero pattern exact.
    return scipy.linalg.solve_triangular(matrix, np.eye(matrix.shape[0], dtype=complex))


def nilpotent_exp(X: np.ndarray) -> np.ndarray:
    """Terminating exponential series for strictly upper-triangular (stacked) matrices."""
    n = X.shape[-1]
    result = np.broadcast_to(np.eye(n, dtype=complex), X.shape).copy()
    term = result.copy()
    for k in range(1, n):
        term = term @ X / k
        result = result + term
    return result


def matrix_exp(X: np.ndarray) -> np.ndarray:
    """Exponential of a matrix or a stack of matrices (last two axes)."""
    X = np.asarray(X, dtype=complex)
    if not np.any(np.tril(X)):
        return nilpotent_exp(X)
    return scipy.linalg.expm(X)


def bracket(X: AlgebraElement, Y: AlgebraElement) -> AlgebraElement:
    """Matrix commutator XY - YX."""
    _same_spec(X.spec, Y.spec)
    return AlgebraElement(X.spec.enforce(X.matrix @ Y.matrix - Y.matrix @ X.matrix), X.spec)


def exp_element(X: AlgebraElement) -> GroupElement:
    """exp X; the nilpotent case uses the terminating series."""
    return GroupElement(X.spec.enforce(matrix_exp(X.matrix)), X.spec)


def log_unipotent(g: GroupElement) -> AlgebraElement:
    """Terminating Mercator series log(I + N)."""
    n = g.spec.ambient_dim
    if np.abs(np.diag(g.matrix) - 1).max() > 1e-12:
        raise NonUnipotentError(f"Element of {g.spec.name} is not unipotent: diagonal {np.diag(g.matrix)}")
    N = np.triu(g.matrix, 1)
    result = np.zeros((n, n), dtype=complex)
    power = np.eye(n, dtype=complex)
    for k in range(1, n):
        power = power @ N
        result += ((-1) ** (k + 1)) * power / k
    return AlgebraElement(g.spec.enforce(result), g.spec)


def semidirect_split(X: AlgebraElement) -> Tuple[AlgebraElement, AlgebraElement]:
    """(X_𝔫, X_𝔰): strictly upper part and diagonal part."""
    diag = np.diag(np.diag(X.matrix))
    return AlgebraElement(X.matrix - diag, X.spec), AlgebraElement(diag, X.spec)


def adjoint(g: GroupElement, X: AlgebraElement) -> AlgebraElement:
    """Ad g(X) = g X g⁻¹."""
    _same_spec(g.spec, X.spec)
    return AlgebraElement(g.spec.enforce(g.matrix @ X.matrix @ _inverse(g.matrix)), g.spec)


# --- construction -----------------------------------------------------------

def _unit(n: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((n, n), dtype=complex)
    E[i, j] = 1
    return E


def _symplectic_form(N: int) -> np.ndarray:
    n = N // 2
    J = np.zeros((N, N))
    for a in range(N):
        J[a, N - 1 - a] = 1.0 if a < n else -1.0
    return J


def _paired_basis(N: int, symplectic: bool) -> List[Tuple[Tuple[int, int], np.ndarray]]:
    """Basis of upper-triangular elements of 𝔰𝔭_N or 𝔰𝔬_N for antidiagonal forms."""
    J = _symplectic_form(N) if symplectic else None
    out = []
    for i in range(N):
        for j in range(i, N):
            partner = (N - 1 - j, N - 1 - i)
            if partner < (i, j):
                continue
            X = _unit(N, i, j)
            if partner == (i, j):
                if not symplectic:
                    continue
            else:
                if symplectic:
                    sign = J[N - 1 - i, i] * J[j, N - 1 - j]
                else:
                    sign = -1.0
                X = X + sign * _unit(N, *partner)
            out.append(((i, j), X))
    return out


def _grading(family: GroupFamily, N: int) -> np.ndarray:
    """Diagonal grading element on which every simple root takes the value 1."""
    if family is GroupFamily.TRIANGULAR:
        return np.arange(N - 1, -1, -1, dtype=float)
    k = N // 2
    if family is GroupFamily.BOREL_SP:
        c = np.array([k - a - 0.5 for a in range(k)])
    elif N % 2:
        c = np.array([k - a for a in range(k)], dtype=float)
    else:
        c = np.array([k - 1 - a for a in range(k)], dtype=float)
    middle = [0.0] if N % 2 else []
    return np.concatenate([c, middle, -c[::-1]])


def _verify_spec(spec: GroupSpec):
    """Ideal, abelian torus, direct sum and filtration compatibility (exact)."""
    nil_span = np.array([b.reshape(-1) for b in spec.nilpotent_basis]).T
    n2 = spec.ambient_dim ** 2
    if nil_span.size == 0:
        nil_span = np.zeros((n2, 0))
    levels = spec.entry_levels()
    for X in spec.nilpotent_basis:
        for Y in spec.basis:
            Z = X @ Y - Y @ X
            if not np.any(Z):
                continue
            coords, *_ = np.linalg.lstsq(nil_span, Z.reshape(-1), rcond=None)
            if np.abs(nil_span @ coords - Z.reshape(-1)).max() > 1e-12:
                raise UnsupportedGroupError(f"{spec.name}: 𝔫 is not an ideal")
    for a, S in enumerate(spec.torus_basis):
        for T in spec.torus_basis[a + 1:]:
            if np.any(S @ T - T @ S):
                raise UnsupportedGroupError(f"{spec.name}: 𝔰 is not abelian")
    if np.linalg.matrix_rank(spec._coord_matrix) != spec.dim:
        raise UnsupportedGroupError(f"{spec.name}: 𝔫 + 𝔰 is not direct")
    for X, lx in zip(spec.nilpotent_basis, spec.filtration_level):
        for Y, ly in zip(spec.nilpotent_basis, spec.filtration_level):
            Z = X @ Y - Y @ X
            support = levels[Z != 0]
            if support.size and support.min() < lx + ly:
                raise UnsupportedGroupError(f"{spec.name}: filtration does not respect brackets")


@lru_cache(maxsize=None)
def _build(family: GroupFamily, rank: int) -> GroupSpec:
    if family is GroupFamily.TRIANGULAR:
        N = rank
        entries = [((i, j), _unit(N, i, j)) for i in range(N) for j in range(i, N)]
    elif family is GroupFamily.BOREL_SP:
        if rank % 2:
            raise UnsupportedGroupError(f"BorelSp needs an even rank, got {rank}")
        N = rank
        entries = _paired_basis(N, symplectic=True)
    else:
        N = rank
        entries = _paired_basis(N, symplectic=False)

    grading = _grading(family, N)
    nil = [(ij, X) for ij, X in entries if ij[0] != ij[1]]
    nil.sort(key=lambda item: (round(grading[item[0][0]] - grading[item[0][1]]), item[0]))
    torus = [(ij, X) for ij, X in entries if ij[0] == ij[1]]

    if family is GroupFamily.BOREL_SP:
        half = N // 2
        step = tuple(X for (i, j), X in nil if i < half <= j)
    elif family is GroupFamily.BOREL_SO:
        step = tuple(X for (i, j), X in nil if i == 0 and j <= N - 2)
    else:
        step = ()

    spec = GroupSpec(
        family=family,
        rank=rank,
        ambient_dim=N,
        nilpotent_basis=tuple(X for _, X in nil),
        torus_basis=tuple(X for _, X in torus),
        filtration_level=tuple(int(round(grading[i] - grading[j])) for (i, j), _ in nil),
        nilpotent_labels=tuple(f"{i + 1}{j + 1}" for (i, j), _ in nil),
        torus_labels=tuple(f"{i + 1}{i + 1}" for (i, _), _ in torus),
        grading=grading,
        parabolic_step=step,
    )
    _verify_spec(spec)
    logger.debug(f"Built {spec.name}: dim 𝔫={len(spec.nilpotent_basis)}, rank 𝔰={spec.torus_rank}")
    return spec


def build_group(family, rank: int) -> GroupSpec:
    """Build (and cache) the matrix realization of Triangular(n), BorelSp(2n) or BorelSO(m)."""
    family = family if isinstance(family, GroupFamily) else GroupFamily.parse(family)
    lowest = 1 if family is GroupFamily.TRIANGULAR else 2
    if not lowest <= int(rank) <= MAX_AMBIENT_DIM:
        raise UnsupportedGroupError(
            f"{family.value}({rank}) unsupported: rank must lie in [{lowest}, {MAX_AMBIENT_DIM}]")
    return _build(family, int(rank))


def random_algebra_matrix(spec: GroupSpec, rng: np.random.Generator, scale: float = 1.0,
                          nilpotent: bool = False, allowed: Optional[np.ndarray] = None) -> np.ndarray:
    """Random complex element of 𝔤 (or 𝔫), optionally restricted to allowed entries."""
    basis = spec.nilpotent_basis if nilpotent else spec.basis
    X = np.zeros((spec.ambient_dim, spec.ambient_dim), dtype=complex)
    for B in basis:
        if allowed is not None and not np.all(allowed[B != 0]):
            continue
        X += scale * (rng.normal() + 1j * rng.normal()) * B
    return X
