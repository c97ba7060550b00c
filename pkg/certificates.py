#!/usr/bin/env python3
"""
Hodge-property certificates for the supported solvable groups.

A certificate is a chain of splittings ambient = B ⊕ A where B is an abelian
unipotent ideal of the step's ambient algebra and A is the subalgebra the next
step works in. The chain ends either in an algebraic torus or in a group whose
certificate is known (SO(3) and SO(6) are referred to Triangular(2) and
Triangular(4)). ℂ^× factors split off along the way are recorded as central
quotients so the verifier can check that they really are central.

All checks are bracket computations on 0/±1 matrices, so they are exact.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from errors import UncertifiedGroupError
from lie import GroupFamily, GroupSpec, build_group
from logging_config import AppLogger, create_component_logger
from reports import Check, check_le

logger = create_component_logger('certificates')

EXACT_TOL = 1e-12

# Families whose Borel subgroups have no known Hodge-property certificate here.
UNKNOWN_FAMILIES = ("E6", "E7", "E8", "F4", "G2")


class TerminalKind(str, Enum):
    TORUS = "Torus"
    KNOWN = "KnownHodgeGroup"


@dataclass(frozen=True)
class CertificateStep:
    ambient: Tuple[np.ndarray, ...]
    B: Tuple[np.ndarray, ...]
    A: Tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Modification:
    """A central-quotient or subtorus move applied to the A of `step` (len(chain) means the terminal)."""
    kind: str  # "central_quotient" | "subtorus"
    step: int
    basis: Tuple[np.ndarray, ...]


@dataclass(frozen=True)
class HodgeCertificate:
    group: str
    chain: Tuple[CertificateStep, ...]
    terminal: TerminalKind
    spec: GroupSpec
    reference: Optional[Tuple[str, int]] = None
    modifications: Tuple[Modification, ...] = ()

    @property
    def b_dims(self) -> List[int]:
        return [len(step.B) for step in self.chain]

    @property
    def final_algebra(self) -> Tuple[np.ndarray, ...]:
        return self.chain[-1].A if self.chain else tuple(self.spec.basis)


@dataclass
class CertificateReport:
    group: str
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]


def hodge_status(family_name: str) -> str:
    """'certified' for the implemented families, 'unknown' otherwise; never 'false'."""
    try:
        GroupFamily.parse(family_name)
        return "certified"
    except ValueError:
        return "unknown"


# --- construction -----------------------------------------------------------

def _unit(n: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((n, n), dtype=complex)
    E[i, j] = 1
    return E


def _triangular_chain(block: Sequence[int], carried: List[np.ndarray],
                      phi: Callable[[int, int], np.ndarray],
                      steps: List[CertificateStep], moves: List[Modification]):
    """Peel the last column of the active triangular block, recurse on the rest."""
    block = list(block)
    if len(block) <= 1:
        return
    *head, last = block
    ambient = [phi(i, j) for a, i in enumerate(block) for j in block[a:]] + carried
    B = [phi(i, last) for i in head]
    peeled = phi(last, last)
    A = [phi(i, j) for a, i in enumerate(head) for j in head[a:]] + [peeled] + carried
    moves.append(Modification("central_quotient", len(steps), (peeled,)))
    steps.append(CertificateStep(tuple(ambient), tuple(B), tuple(A)))
    _triangular_chain(head, carried + [peeled], phi, steps, moves)


def _block_basis(spec: GroupSpec, lo: int, hi: int) -> List[np.ndarray]:
    out = []
    for X in spec.basis:
        rows, cols = np.nonzero(X)
        if rows.min() >= lo and cols.max() <= hi:
            out.append(X)
    return out


def _so_chain(spec: GroupSpec, lo: int, hi: int, carried: List[np.ndarray], bottom_out: bool,
              steps: List[CertificateStep], moves: List[Modification]) -> Tuple[TerminalKind, Optional[Tuple[str, int]]]:
    size = hi - lo + 1
    N = spec.ambient_dim
    if size <= 2:
        return TerminalKind.TORUS, None
    if bottom_out and size in (3, 6):
        if carried:
            moves.append(Modification("central_quotient", len(steps), tuple(carried)))
        return TerminalKind.KNOWN, (GroupFamily.TRIANGULAR.value, 2 if size == 3 else 4)
    ambient = _block_basis(spec, lo, hi) + carried
    B = [_unit(N, lo, j) - _unit(N, lo + hi - j, hi) for j in range(lo + 1, hi)]
    peeled = _unit(N, lo, lo) - _unit(N, hi, hi)
    A = _block_basis(spec, lo + 1, hi - 1) + [peeled] + carried
    moves.append(Modification("central_quotient", len(steps), (peeled,)))
    steps.append(CertificateStep(tuple(ambient), tuple(B), tuple(A)))
    return _so_chain(spec, lo + 1, hi - 1, carried + [peeled], bottom_out, steps, moves)


def hodge_certificate(spec: GroupSpec, bottom_out: bool = True) -> HodgeCertificate:
    """
    Build the certificate chain for a built group.

    Triangular(n) peels the last column (B ≅ ℂ^{n-1}, A ≅ T_{n-1} × ℂ^×);
    BorelSp(2n) splits off the Siegel block U and continues with the Levi
    Triangular(n); BorelSO(m) splits off the first-row radical and continues with
    BorelSO(m-2) × ℂ^×, stopping at SO(3)/SO(6) unless `bottom_out` is False.
    """
    steps: List[CertificateStep] = []
    moves: List[Modification] = []
    N = spec.ambient_dim
    terminal, reference = TerminalKind.TORUS, None

    if spec.family is GroupFamily.TRIANGULAR:
        _triangular_chain(range(N), [], lambda i, j: _unit(N, i, j), steps, moves)
    elif spec.family is GroupFamily.BOREL_SP:
        half = N // 2
        U = tuple(spec.parabolic_step)
        levi = tuple(X for X in spec.basis if not any(X is u for u in U))
        steps.append(CertificateStep(tuple(spec.basis), U, levi))

        def phi(i, j):
            return _unit(N, i, j) - _unit(N, N - 1 - j, N - 1 - i)

        _triangular_chain(range(half), [], phi, steps, moves)
    elif spec.family is GroupFamily.BOREL_SO:
        terminal, reference = _so_chain(spec, 0, N - 1, [], bottom_out, steps, moves)
    else:
        raise UncertifiedGroupError(f"No Hodge certificate known for {spec.name}")

    cert = HodgeCertificate(spec.name, tuple(steps), terminal, spec, reference, tuple(moves))
    AppLogger.log_algorithm_step('certificates', 'chain_built', {
        'group': spec.name, 'b_dims': cert.b_dims, 'terminal': terminal.value, 'reference': reference})
    return cert


# --- verification -----------------------------------------------------------

def _span_residual(basis: Sequence[np.ndarray], Z: np.ndarray) -> float:
    if not np.any(Z):
        return 0.0
    if not basis:
        return float(np.abs(Z).max())
    M = np.array([b.reshape(-1) for b in basis]).T
    coords, *_ = np.linalg.lstsq(M, Z.reshape(-1), rcond=None)
    return float(np.abs(M @ coords - Z.reshape(-1)).max())


def _rank(basis: Sequence[np.ndarray]) -> int:
    if not basis:
        return 0
    return int(np.linalg.matrix_rank(np.array([b.reshape(-1) for b in basis])))


def _comm(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return X @ Y - Y @ X


def _max_or_zero(values) -> float:
    return max(values, default=0.0)


def _verify_step(i: int, step: CertificateStep) -> List[Check]:
    checks = []
    B, A, ambient = step.B, step.A, step.ambient
    checks.append(check_le(f"step{i}.B_abelian",
                           _max_or_zero(float(np.abs(_comm(x, y)).max()) for x in B for y in B), EXACT_TOL))
    checks.append(check_le(f"step{i}.B_ideal",
                           _max_or_zero(_span_residual(B, _comm(x, b)) for x in ambient for b in B), EXACT_TOL))
    checks.append(check_le(f"step{i}.B_unipotent",
                           _max_or_zero(float(np.abs(np.tril(b)).max()) for b in B), EXACT_TOL))
    checks.append(check_le(f"step{i}.A_closed",
                           _max_or_zero(_span_residual(A, _comm(x, y)) for x in A for y in A), EXACT_TOL))
    defect = abs(_rank(list(B) + list(A)) - _rank(ambient)) + abs(_rank(list(B) + list(A)) - len(B) - len(A))
    defect += _max_or_zero(_span_residual(ambient, x) for x in list(B) + list(A))
    checks.append(check_le(f"step{i}.direct_sum", float(defect), EXACT_TOL))
    return checks


def _same_span(first: Sequence[np.ndarray], second: Sequence[np.ndarray]) -> float:
    return float(abs(_rank(list(first) + list(second)) - _rank(first))
                 + abs(_rank(list(first) + list(second)) - _rank(second)))


def _algebra_shape(basis: Sequence[np.ndarray]) -> Tuple[int, int]:
    """(dimension of the strictly upper part, number of diagonal generators)."""
    nil = [b for b in basis if not np.any(np.diag(b))]
    return len(nil), len(basis) - len(nil)


def verify_certificate(cert: HodgeCertificate) -> CertificateReport:
    """Check every chain condition and recorded move; failures are reported, not raised."""
    report = CertificateReport(cert.group)
    checks = report.checks
    if cert.chain:
        checks.append(check_le("chain.starts_at_group",
                               _same_span(cert.chain[0].ambient, cert.spec.basis), EXACT_TOL))
    for i, step in enumerate(cert.chain):
        checks.extend(_verify_step(i, step))
        if i + 1 < len(cert.chain):
            checks.append(check_le(f"step{i}.links_next", _same_span(step.A, cert.chain[i + 1].ambient), EXACT_TOL))

    final = cert.final_algebra
    terminal_moves = [m for m in cert.modifications if m.step == len(cert.chain)]
    if cert.terminal is TerminalKind.TORUS:
        off_diag = _max_or_zero(float(np.abs(x - np.diag(np.diag(x))).max()) for x in final)
        commutators = _max_or_zero(float(np.abs(_comm(x, y)).max()) for x in final for y in final)
        checks.append(check_le("terminal.torus", off_diag + commutators, EXACT_TOL))
    else:
        family, rank = cert.reference
        ref_spec = build_group(family, rank)
        ref_report = verify_certificate(hodge_certificate(ref_spec))
        checks.append(check_le(f"terminal.reference_{ref_spec.name}", float(len(ref_report.failed())), 0.0))
        nil_dim, torus_dim = _algebra_shape(final)
        quotient = sum(len(m.basis) for m in terminal_moves if m.kind == "central_quotient")
        # The reference Triangular(n) is compared modulo its scalar center.
        mismatch = abs(nil_dim - len(ref_spec.nilpotent_basis)) + abs(torus_dim - quotient - (ref_spec.torus_rank - 1))
        checks.append(check_le("terminal.reference_shape", float(mismatch), 0.0))

    for k, move in enumerate(cert.modifications):
        target = cert.chain[move.step].A if move.step < len(cert.chain) else final
        diag_defect = _max_or_zero(float(np.abs(x - np.diag(np.diag(x))).max()) for x in move.basis)
        if move.kind == "central_quotient":
            defect = diag_defect + _max_or_zero(float(np.abs(_comm(x, a)).max()) for x in move.basis for a in target)
        elif move.kind == "subtorus":
            torus = [a for a in target if not np.any(a - np.diag(np.diag(a)))]
            defect = diag_defect + _max_or_zero(_span_residual(torus, x) for x in move.basis)
        else:
            defect = float('inf')
        checks.append(check_le(f"move{k}.{move.kind}", defect, EXACT_TOL))

    for c in checks:
        AppLogger.log_check('certificates', f"{cert.group}.{c.name}", c.value, c.tolerance, c.passed)
    return report
