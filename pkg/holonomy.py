#!/usr/bin/env python3
"""
Holonomy of flat connections along straight lattice loops.

Parallel transport solves dc/ds = A(s)·c, c(0) = I, along x(s) = s·λ with
A(s) = ω(x(s))(λ). A fourth-order Magnus step on the two Gauss-Legendre nodes
is used and the step count doubles until successive endpoints agree.
"""

from typing import List, Sequence, Tuple, Union

import numpy as np

from derham import TwistContext, curvature
from errors import NonFlatError, TwistMismatchError
from lie import GroupElement, matrix_exp
from logging_config import AppLogger, create_component_logger
from reports import Check, check_le
from torus import LieForm, evaluate

logger = create_component_logger('holonomy')

HOLONOMY_TOL = 1e-9
CHARACTER_TOL = 1e-10
COMMUTATOR_TOL = 1e-8
FLAT_TOL = 1e-9
START_STEPS = 16
MAX_STEPS = 2 ** 14

_NODE_OFFSET = np.sqrt(3.0) / 6.0

Loop = Union[int, Sequence[int]]


def _lattice_coords(geom, loop: Loop) -> np.ndarray:
    if isinstance(loop, (int, np.integer)):
        if not 0 <= int(loop) < geom.real_dim:
            raise ValueError(f"Generator index {loop} out of range for g={geom.g}")
        k = np.zeros(geom.real_dim)
        k[int(loop)] = 1.0
        return k
    k = np.asarray(loop, dtype=float)
    if k.shape != (geom.real_dim,) or np.any(k != np.round(k)):
        raise ValueError(f"Lattice vector must be {geom.real_dim} integer coordinates, got {loop}")
    return k


def _pairing(omega: LieForm, k: np.ndarray, s: np.ndarray) -> np.ndarray:
    """A(s) = Σ_j a_j(x) λ_j + b_j(x) conj(λ_j) at x = s·λ."""
    geom = omega.geom
    lam = geom.period_matrix @ k
    values = evaluate(omega, s[:, None] * k[None, :])
    weights = np.concatenate([lam, np.conj(lam)])
    return np.einsum('sfij,f->sij', values, weights)


def _magnus(omega: LieForm, k: np.ndarray, steps: int) -> np.ndarray:
    h = 1.0 / steps
    starts = np.arange(steps) * h
    nodes = np.concatenate([starts + h * (0.5 - _NODE_OFFSET), starts + h * (0.5 + _NODE_OFFSET)])
    A = _pairing(omega, k, nodes)
    A1, A2 = A[:steps], A[steps:]
    Omega = 0.5 * h * (A1 + A2) + (np.sqrt(3.0) / 12.0) * h * h * (A2 @ A1 - A1 @ A2)
    propagators = matrix_exp(Omega)
    c = np.eye(omega.spec.ambient_dim, dtype=complex)
    for P in propagators:
        c = P @ c
    return c


def holonomy(omega: LieForm, loop: Loop, tol: float = HOLONOMY_TOL, flat_tol: float = FLAT_TOL) -> GroupElement:
    """Transport of the flat global connection ω around the lattice loop λ (generator index or coordinates)."""
    if omega.degree != 1:
        raise ValueError("holonomy needs a 1-form")
    if omega.shift is not None and not omega.shift.is_trivial:
        raise TwistMismatchError("holonomy needs a global form; transfer twisted forms with r_γ first")
    curv = curvature(omega, tol=flat_tol)
    if not curv.flat:
        raise NonFlatError("Holonomy of a non-flat connection depends on the path", curv.norm)

    k = _lattice_coords(omega.geom, loop)
    steps = START_STEPS
    previous = _magnus(omega, k, steps)
    change = np.inf
    while steps < MAX_STEPS:
        steps *= 2
        current = _magnus(omega, k, steps)
        change = float(np.linalg.norm(current - previous))
        previous = current
        if change <= tol:
            break
    else:
        logger.warning(f"Holonomy refinement stopped at {steps} steps with change {change:.3e}")
    AppLogger.log_algorithm_step('holonomy', 'holonomy', {
        'loop': k.astype(int).tolist(), 'steps': steps, 'change': f"{change:.3e}"})
    return omega.spec.element(omega.spec.enforce(previous))


def holonomy_commutators(omega: LieForm, tol: float = HOLONOMY_TOL) -> List[Tuple[Tuple[int, int], float]]:
    """‖[H_a, H_b]‖ for every pair of generator holonomies."""
    geom = omega.geom
    H = [holonomy(omega, a, tol).matrix for a in range(geom.real_dim)]
    out = []
    for a in range(geom.real_dim):
        for b in range(a + 1, geom.real_dim):
            out.append(((a, b), float(np.linalg.norm(H[a] @ H[b] - H[b] @ H[a]))))
    return out


def holonomy_character_check(ctx: TwistContext, tol: float = CHARACTER_TOL) -> List[Check]:
    """holonomy(γ, λ_a) = z_{λ_a} for every generator."""
    checks = []
    for a in range(ctx.geom.real_dim):
        H = holonomy(ctx.gamma, a, tol=tol * 1e-2)
        deviation = float(np.linalg.norm(H.matrix - ctx.holonomy_character[a]))
        checks.append(check_le(f"holonomy.character_{a + 1}", deviation, tol))
    return checks
