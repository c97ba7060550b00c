#!/usr/bin/env python3
"""
Unit tests for holonomy along lattice loops.
"""

import pytest
import numpy as np
import scipy.linalg
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from errors import NonFlatError, TwistMismatchError
from holonomy import COMMUTATOR_TOL, holonomy, holonomy_character_check, holonomy_commutators
from moduli import admissible_set, reconstruct
from suites import random_admissible_psi
from torus import LieForm, constant_form


@pytest.mark.quick
@pytest.mark.unit
class TestHolonomy:

    def test_constant_connection_closed_form(self, sheared, t2):
        X = np.array([[0.3, 0.2 - 0.1j], [0.0, -0.4j]])
        omega = constant_form(sheared, t2, 1, {(0,): X, (1,): 0.5 * X})
        for a in range(2):
            lam = sheared.lattice_vector(a)[0]
            expected = scipy.linalg.expm(X * lam + 0.5 * X * np.conj(lam))
            assert np.allclose(holonomy(omega, a).matrix, expected, atol=1e-10)

    def test_lattice_vector_loop(self, square, t2):
        D = np.diag([0.2, -0.1j])
        omega = constant_form(square, t2, 1, {(0,): D})
        lam = square.lattice_vector(0)[0] + square.lattice_vector(1)[0]
        expected = scipy.linalg.expm(D * lam)
        assert np.allclose(holonomy(omega, [1, 1]).matrix, expected, atol=1e-10)

    def test_zero_connection_is_identity(self, square, t3):
        H = holonomy(LieForm.zero(square, t3, 1), 0)
        assert np.abs(H.matrix - np.eye(3)).max() <= 1e-14

    def test_flat_connection_generators_commute(self, trivial_ctx_t2, rng):
        desc = admissible_set(trivial_ctx_t2.spec, trivial_ctx_t2)
        omega = reconstruct(random_admissible_psi(desc, rng), trivial_ctx_t2).global_omega
        for (a, b), value in holonomy_commutators(omega, 1e-11):
            assert value <= COMMUTATOR_TOL, (a, b)

    def test_character_of_twist(self, twisted_ctx_t3):
        checks = holonomy_character_check(twisted_ctx_t3)
        assert [c.name for c in checks] == ["holonomy.character_1", "holonomy.character_2"]
        assert all(c.passed for c in checks)


@pytest.mark.quick
@pytest.mark.unit
class TestHolonomyErrors:

    def test_rejects_non_flat(self, square, t2):
        omega = constant_form(square, t2, 1, {(0,): np.diag([1.0, 0.0]), (1,): np.array([[0, 1.0], [0, 0]])})
        with pytest.raises(NonFlatError):
            holonomy(omega, 0)

    def test_rejects_twisted_form(self, twisted_ctx_t3):
        ctx = twisted_ctx_t3
        with pytest.raises(TwistMismatchError):
            holonomy(LieForm.zero(ctx.geom, ctx.spec, 1, ctx.twisted_shift()), 0)

    def test_rejects_wrong_degree(self, square, t2):
        with pytest.raises(ValueError):
            holonomy(LieForm.zero(square, t2, 0), 0)

    @pytest.mark.parametrize("loop", [2, -1, [1, 0, 0], [0.5, 1]])
    def test_rejects_bad_loops(self, square, t2, loop):
        with pytest.raises(ValueError):
            holonomy(LieForm.zero(square, t2, 1), loop)
