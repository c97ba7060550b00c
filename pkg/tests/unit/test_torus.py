#!/usr/bin/env python3
"""
Unit tests for the torus geometry and the spectral form operators.
"""

import pytest
import numpy as np
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from errors import (BandLimitError, DegenerateLatticeError, HarmonicObstructionError, SpecMismatchError)
from suites import mode_form, random_form
from torus import (FrequencyShift, LieForm, Operator, codifferential, constant_form, differential,
                   evaluate, harmonic_dimension, harmonic_part, hodge_decompose, laplacian,
                   laplacian_symbol, make_torus, solve_ddbar, twisted_harmonic_basis, wedge, wedge_bracket)

E11 = np.array([[1, 0], [0, 0]], dtype=complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def _rel(a, b):
    return (a - b).norm() / max(b.norm(), 1e-300)


@pytest.mark.quick
@pytest.mark.unit
class TestGeometry:

    def test_grid_defaults_to_dealiasing_size(self, square):
        assert square.grid == 3 * square.cutoff + 1
        assert square.band == 2 * square.cutoff + 1
        assert square.real_dim == 2

    def test_negative_orientation_rejected(self):
        with pytest.raises(DegenerateLatticeError):
            make_torus(1, [1j, 1.0], 4)

    def test_dependent_generators_rejected(self):
        with pytest.raises(DegenerateLatticeError):
            make_torus(1, [1.0, 2.0], 4)

    def test_wrong_shape_rejected(self):
        with pytest.raises(DegenerateLatticeError):
            make_torus(2, [1.0, 1j], 4)

    def test_grid_too_small(self):
        with pytest.raises(BandLimitError):
            make_torus(1, [1.0, 1j], 4, grid=12)
        with pytest.raises(BandLimitError):
            make_torus(1, [1.0, 1j], 0)

    def test_product_torus_frames(self, product_torus):
        assert product_torus.frame_count(1) == 4
        assert product_torus.frame_count(2) == 6
        assert product_torus.bidegree((0, 2)) == (1, 1)
        assert product_torus.frame_name((0, 3)) == "dz1^dzbar2"

    def test_fractional_coordinates(self, sheared):
        lam = sheared.real_vector(sheared.lattice_vector(1))
        assert np.allclose(sheared.to_fractional(lam), [0.0, 1.0])

    def test_operator_aliases(self):
        assert Operator.parse("∂̄") is Operator.DBAR
        assert Operator.parse("partial") is Operator.DEL
        with pytest.raises(ValueError):
            Operator.parse("laplace")


@pytest.mark.quick
@pytest.mark.unit
class TestOperators:

    @pytest.mark.parametrize("degree", [0, 1])
    def test_d_squared_vanishes(self, sheared, t2, rng, degree):
        alpha = random_form(sheared, t2, degree, rng, band=2)
        assert differential(differential(alpha)).norm() <= 1e-12 * max(1.0, sheared.max_wavenumber ** 2)

    def test_del_dbar_anticommute(self, square, t3, rng):
        f = random_form(square, t3, 0, rng, band=2)
        lhs = differential(differential(f, "dbar"), "del")
        rhs = differential(differential(f, "del"), "dbar")
        assert _rel(lhs, -rhs) <= 1e-12

    def test_d_is_del_plus_dbar(self, product_torus, t2, rng):
        alpha = random_form(product_torus, t2, 1, rng)
        assert _rel(differential(alpha, "del") + differential(alpha, "dbar"), differential(alpha)) <= 1e-12

    def test_laplacian_is_diagonal_in_modes(self, sheared, t2, rng):
        alpha = random_form(sheared, t2, 1, rng, band=2)
        for which in ("d", "dbar"):
            expected = alpha.with_coeffs(alpha.coeffs * laplacian_symbol(alpha, which)[None])
            assert _rel(laplacian(alpha, which), expected) <= 1e-10

    def test_kahler_laplacians(self, square, t2, rng):
        alpha = random_form(square, t2, 1, rng, band=2)
        half = laplacian(alpha) * 0.5
        assert _rel(laplacian(alpha, "del"), half) <= 1e-10
        assert _rel(laplacian(alpha, "dbar"), half) <= 1e-10

    def test_codifferential_is_adjoint(self, sheared, t2, rng):
        f = random_form(sheared, t2, 0, rng, band=2)
        beta = random_form(sheared, t2, 1, rng, band=2)
        lhs = differential(f).inner(beta)
        rhs = f.inner(codifferential(beta))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_harmonic_part_keeps_zero_mode(self, square, t2):
        alpha = mode_form(square, t2, 1, (1,), (0, 0), E12) + mode_form(square, t2, 1, (1,), (1, -1), E11)
        H = harmonic_part(alpha)
        assert np.allclose(H.constant_part()[1], E12)
        assert H.norm() == pytest.approx(np.sqrt(2.0))


@pytest.mark.quick
@pytest.mark.unit
class TestHodge:

    def test_decomposition_reconstructs(self, sheared, t3, rng):
        alpha = random_form(sheared, t3, 1, rng, band=2)
        split = hodge_decompose(alpha)
        harmonic, exact, coexact = split.parts()
        assert split.residual <= 1e-10 * alpha.norm()
        assert _rel(harmonic + exact + coexact, alpha) <= 1e-10

    def test_parts_are_orthogonal(self, square, t2, rng):
        alpha = random_form(square, t2, 1, rng, band=2)
        harmonic, exact, coexact = hodge_decompose(alpha).parts()
        scale = alpha.norm() ** 2
        assert abs(harmonic.inner(exact)) <= 1e-10 * scale
        assert abs(harmonic.inner(coexact)) <= 1e-10 * scale
        assert abs(exact.inner(coexact)) <= 1e-10 * scale

    def test_top_and_bottom_degrees(self, square, t2, rng):
        f = random_form(square, t2, 0, rng)
        assert hodge_decompose(f).exact_potential is None
        top = random_form(square, t2, 2, rng)
        assert hodge_decompose(top).coexact_potential is None

    def test_harmonic_dimension_untwisted(self, square, product_torus, t2):
        assert harmonic_dimension(square, t2, None, (0, 1)) == 3
        assert harmonic_dimension(product_torus, t2, None, (1, 1)) == 12

    def test_harmonic_dimension_twisted(self, square, t2):
        shift = FrequencyShift.from_exponents(np.array([[0.0, 0.0], [1.25, -0.5]]))
        assert np.allclose(shift.diag_shift[1], [0.25, -0.5])
        assert np.array_equal(shift.winding[1], [1.0, 0.0])
        assert shift.trivial_entries().tolist() == [[True, False], [False, True]]
        assert harmonic_dimension(square, t2, shift, (0, 1)) == 2

    def test_twisted_harmonic_basis(self, square, t2):
        shift = FrequencyShift.from_exponents(np.array([[0.0, 0.0], [1.25, -0.5]]))
        basis = twisted_harmonic_basis(square, t2, shift, (0, 1))
        assert len(basis) == 2
        for form in basis:
            assert form.is_harmonic(1e-12)
            assert form.constant_part()[1][0, 1] == 0
        assert len(twisted_harmonic_basis(square, t2, None, (0, 1))) == 3


@pytest.mark.quick
@pytest.mark.unit
class TestDdbar:

    def test_solves_exact_right_hand_side(self, sheared, t2, rng):
        f = random_form(sheared, t2, 0, rng, band=2)
        phi = differential(differential(f, "dbar"), "del")
        psi = solve_ddbar(phi)
        assert _rel(differential(differential(psi, "dbar"), "del"), phi) <= 1e-8
        assert harmonic_part(psi).norm() <= 1e-12 * max(1.0, psi.norm())

    def test_harmonic_obstruction(self, square, t2):
        phi = constant_form(square, t2, 2, {(0, 1): E12})
        with pytest.raises(HarmonicObstructionError) as info:
            solve_ddbar(phi)
        assert info.value.norm > 0

    def test_rejects_wrong_degree(self, square, t2, rng):
        with pytest.raises(ValueError):
            solve_ddbar(random_form(square, t2, 1, rng))

    def test_zero_right_hand_side(self, square, t2):
        psi = solve_ddbar(LieForm.zero(square, t2, 2))
        assert psi.degree == 0 and psi.norm() == 0


@pytest.mark.quick
@pytest.mark.unit
class TestProducts:

    def test_constant_wedge(self, square, t2):
        a = constant_form(square, t2, 1, {(0,): E11})
        b = constant_form(square, t2, 1, {(1,): E12})
        product = wedge(a, b)
        assert product.degree == 2
        assert np.allclose(product.constant_part()[0], E12)
        assert np.allclose(wedge(b, a).constant_part()[0], 0)

    def test_bracket_of_one_form_is_twice_wedge(self, square, t3, rng):
        alpha = random_form(square, t3, 1, rng, band=2)
        assert _rel(wedge_bracket(alpha, alpha), wedge(alpha, alpha) * 2) <= 1e-10

    def test_wedge_is_exact_at_band_limit(self, square, t2):
        K = square.cutoff
        a = mode_form(square, t2, 0, (), (K // 2, 0), E11)
        b = mode_form(square, t2, 1, (1,), (K - K // 2, 0), E12)
        product = wedge(a, b)
        index = (1, K + K, K)
        assert np.allclose(product.coeffs[index], E12)

    def test_mismatched_groups_rejected(self, square, t2, t3):
        with pytest.raises(SpecMismatchError):
            wedge(LieForm.zero(square, t2, 1), LieForm.zero(square, t3, 1))


@pytest.mark.quick
@pytest.mark.unit
class TestEvaluate:

    def test_single_mode(self, square, t2):
        alpha = mode_form(square, t2, 1, (0,), (1, 0), E12)
        values = evaluate(alpha, np.array([[0.25, 0.0], [0.5, 0.3]]))
        assert values.shape == (2, 2, 2, 2)
        assert np.allclose(values[0, 0], 1j * E12)
        assert np.allclose(values[1, 0], -E12)
        assert np.allclose(values[:, 1], 0)

    def test_twisted_phase(self, square, t2):
        shift = FrequencyShift.from_exponents(np.array([[0.0, 0.0], [0.25, 0.0]]))
        alpha = constant_form(square, t2, 0, {(): E12}, shift)
        value = evaluate(alpha, np.array([[1.0, 0.0]]))[0, 0]
        assert np.allclose(value, np.exp(2j * np.pi * 0.25) * E12)

    def test_shape_mismatch_rejected(self, square, t2):
        with pytest.raises(SpecMismatchError):
            LieForm(square, t2, 1, np.zeros((1, 3, 3, 2, 2), dtype=complex))

    def test_caller_array_stays_writable(self, square, t2):
        coeffs = np.zeros(LieForm.zero(square, t2, 1).coeffs.shape, dtype=complex)
        alpha = LieForm(square, t2, 1, coeffs)
        coeffs[0, square.cutoff, square.cutoff] = E12
        assert alpha.norm() == 0
        assert not alpha.coeffs.flags.writeable
