#!/usr/bin/env python3
"""
Unit tests for the non-abelian cochains, gauge maps and twisting.
"""

import pytest
import numpy as np
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from derham import (Flavor, GaugeMap, adjoint_action, check_crossed_hom, curvature, delta0, delta0_sampled,
                    gauge_apply, is_picard, make_twist, picard_coordinates, picard_element, picard_lift,
                    reduce_picard, tau, transfer_r_gamma, transfer_rbar_chi, trivial_twist,
                    twist_check_records, type_project)
from errors import BandLimitError, SpecMismatchError, TwistError, TwistMismatchError
from suites import random_form, random_gauge
from torus import LieForm, constant_form, conjugate_transpose

E11 = np.array([[1, 0], [0, 0]], dtype=complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)


@pytest.mark.quick
@pytest.mark.unit
class TestCurvature:

    def test_abelian_constant_form_is_flat(self, square, t2):
        alpha = constant_form(square, t2, 1, {(0,): np.diag([1.0, 2.0]), (1,): np.diag([0.5j, -1.0])})
        result = curvature(alpha)
        assert result.flat
        assert result.norm <= 1e-14

    def test_non_commuting_constants_are_not_flat(self, square, t2):
        alpha = constant_form(square, t2, 1, {(0,): E11, (1,): E12})
        result = curvature(alpha)
        assert not result.flat
        assert np.allclose(result.form.constant_part()[0], -E12)

    def test_dolbeault_curvature_ignores_10_part(self, square, t2):
        alpha = constant_form(square, t2, 1, {(0,): E11, (1,): E12})
        assert curvature(alpha, Flavor.DOLBEAULT).flat

    def test_pure_gauge_is_flat(self, square, t2, rng):
        g = random_gauge(square, t2, rng)
        assert curvature(delta0(g)).flat

    def test_rejects_wrong_degree(self, square, t2):
        with pytest.raises(ValueError):
            curvature(LieForm.zero(square, t2, 0))
        with pytest.raises(ValueError):
            Flavor.parse("Cech")


@pytest.mark.quick
@pytest.mark.unit
class TestGaugeAction:

    def test_curvature_is_equivariant(self, square, t2, rng):
        g = random_gauge(square, t2, rng, reach=square.cutoff - 2)
        alpha = random_form(square, t2, 1, rng, scale=0.5)
        lhs = curvature(gauge_apply(g, alpha)).form
        rhs = adjoint_action(g, curvature(alpha).form)
        assert (lhs - rhs).norm() <= 1e-9 * (1 + alpha.norm()) ** 2

    def test_dolbeault_action_commutes_with_projection(self, square, t3, rng):
        g = random_gauge(square, t3, rng, reach=square.cutoff - 2)
        alpha = random_form(square, t3, 1, rng, scale=0.5)
        full = type_project(gauge_apply(g, alpha), 0, 1)
        assert (full - gauge_apply(g, alpha, Flavor.DOLBEAULT)).norm() <= 1e-9 * (1 + alpha.norm())

    def test_factor_rule_matches_sampled_derivative(self, square, t3, rng):
        g = random_gauge(square, t3, rng, sample_band=square.cutoff // 4, reach=square.cutoff // 2)
        assert (delta0(g) - delta0_sampled(g)).norm() <= 1e-9

    def test_crossed_homomorphism(self, square, t2, rng):
        K = square.cutoff
        g = random_gauge(square, t2, rng, sample_band=K // 4, reach=K // 2)
        h = random_gauge(square, t2, rng, sample_band=K // 4, reach=K // 2)
        assert check_crossed_hom(g, h) <= 1e-9

    def test_identity_gauge(self, square, t2, rng):
        alpha = random_form(square, t2, 1, rng)
        identity = GaugeMap.identity(square, t2)
        assert gauge_apply(identity, alpha) is alpha
        assert delta0(identity).norm() == 0.0

    def test_constant_gauge_is_adjoint(self, square, t2, rng):
        alpha = random_form(square, t2, 1, rng)
        g = GaugeMap.constant(square, t2, [[2.0, 1.0], [0.0, 0.5]])
        moved = gauge_apply(g, alpha)
        assert (moved - adjoint_action(g, alpha)).norm() <= 1e-12 * alpha.norm()

    def test_character_delta0_is_constant(self, square, t2):
        g = GaugeMap.character(square, t2, [[1, 0], [0, -1]])
        d0 = delta0(g)
        assert d0.is_harmonic(1e-12)
        assert np.allclose(np.diag(d0.constant_part()[1]), [picard_element(square, [1, 0])[0],
                                                            picard_element(square, [0, -1])[0]])

    def test_wide_gauge_is_rejected(self, square, t2):
        K = square.cutoff
        f = LieForm.zero(square, t2, 0)
        coeffs = np.array(f.coeffs)
        coeffs[0, K + K, K] = E12
        with pytest.raises(BandLimitError):
            delta0(GaugeMap.exp(f.with_coeffs(coeffs)))

    def test_bad_character_rejected(self, square, t2):
        with pytest.raises(SpecMismatchError):
            GaugeMap.character(square, t2, [[1, 0, 0], [0, 0, 0]])

    def test_inverse_composes_to_identity(self, square, t3, rng):
        g = random_gauge(square, t3, rng)
        points = rng.uniform(size=(5, 2))
        values = (g @ g.inverse()).value_at(points)
        assert np.allclose(values, np.eye(3)[None], atol=1e-12)


@pytest.mark.quick
@pytest.mark.unit
class TestTwisting:

    def test_trivial_context(self, trivial_ctx_t2):
        assert trivial_ctx_t2.is_trivial
        assert trivial_ctx_t2.is_picard
        assert trivial_ctx_t2.twisted_shift() is None

    def test_only_third_index_is_shifted(self, twisted_ctx_t3):
        ctx = twisted_ctx_t3
        assert not ctx.is_trivial
        assert not ctx.is_picard
        assert np.all(ctx.shift.winding == 0)
        table = ctx.shift.table()
        assert not np.any(table[:2, :2])
        assert np.all(np.any(table[:2, 2] != 0, axis=-1))

    def test_check_records_are_exact(self, twisted_ctx_t3):
        for name, deviation in twist_check_records(twisted_ctx_t3):
            assert deviation <= 1e-14, name

    def test_gamma_is_flat_and_anti_hermitian(self, twisted_ctx_t3):
        gamma = twisted_ctx_t3.gamma
        assert curvature(gamma).norm <= 1e-12
        assert (gamma + conjugate_transpose(gamma)).norm() <= 1e-14

    def test_transfer_round_trip(self, twisted_ctx_t3, rng):
        ctx = twisted_ctx_t3
        alpha = random_form(ctx.geom, ctx.spec, 1, rng, scale=0.5, shift=ctx.twisted_shift())
        back = transfer_r_gamma(transfer_r_gamma(alpha, ctx), ctx, "toTwisted")
        assert (back - alpha).norm() <= 1e-14

    def test_transfer_is_type_compatible(self, twisted_ctx_t3, rng):
        ctx = twisted_ctx_t3
        alpha = random_form(ctx.geom, ctx.spec, 1, rng, scale=0.5, shift=ctx.twisted_shift())
        lhs = type_project(transfer_r_gamma(alpha, ctx), 0, 1)
        assert (lhs - transfer_rbar_chi(alpha, ctx)).norm() <= 1e-12

    def test_zero_transfers_to_gamma(self, twisted_ctx_t3):
        ctx = twisted_ctx_t3
        zero = LieForm.zero(ctx.geom, ctx.spec, 1, ctx.twisted_shift())
        assert (transfer_r_gamma(zero, ctx) - ctx.gamma).norm() == 0.0

    def test_tau_rejects_foreign_twist(self, twisted_ctx_t3, rng):
        ctx = twisted_ctx_t3
        untwisted = random_form(ctx.geom, ctx.spec, 1, rng)
        with pytest.raises(TwistMismatchError):
            tau(untwisted, ctx)
        with pytest.raises(ValueError):
            tau(untwisted, ctx, "sideways")

    def test_non_diagonal_chi_rejected(self, square, t2):
        with pytest.raises(TwistError):
            make_twist(np.array([[[0.0, 1.0], [0.0, 0.0]]]), square, t2)
        with pytest.raises(TwistError):
            make_twist(np.zeros((2, 2)), square, t2)

    def test_chi_must_be_antiholomorphic(self, square, t2):
        chi = constant_form(square, t2, 1, {(0,): np.diag([0.1, 0.0])})
        with pytest.raises(TwistError):
            make_twist(chi, square, t2)

    def test_holonomy_character_from_exponents(self, twisted_ctx_t3):
        ctx = twisted_ctx_t3
        for a in range(ctx.geom.real_dim):
            k = np.zeros(ctx.geom.real_dim)
            k[a] = 1
            assert np.allclose(ctx.z(k), ctx.holonomy_character[a])


@pytest.mark.quick
@pytest.mark.unit
class TestPicard:

    def test_lattice_element_has_integer_exponents(self, sheared):
        c = picard_element(sheared, [1, -2])
        assert np.allclose(picard_coordinates(sheared, c), [1, -2])
        assert is_picard(sheared, c)
        assert not is_picard(sheared, c + 0.1)

    def test_reduce_picard(self, square):
        c = picard_element(square, [3, 1]) + np.array([0.05 + 0.02j])
        m, rest = reduce_picard(square, c)
        assert m.tolist() == [3, 1]
        assert np.all(np.abs(picard_coordinates(square, rest)) <= 0.5)

    def test_picard_twist_is_trivial_holonomy(self, square, t2):
        c = picard_element(square, [1, 1])
        ctx = make_twist(np.array([[c[0], 0.0]]), square, t2)
        assert ctx.is_picard
        assert np.allclose(ctx.holonomy_character, np.eye(2)[None])

    def test_lift_inverts_projection(self, square, t2):
        omega = constant_form(square, t2, 1, {(1,): np.diag([0.2 + 0.1j, -0.3j])})
        gamma = picard_lift(omega)
        assert (type_project(gamma, 0, 1) - omega).norm() <= 1e-15
        assert (gamma + conjugate_transpose(gamma)).norm() <= 1e-15

    def test_lift_rejects_non_diagonal(self, square, t2):
        with pytest.raises(TwistError):
            picard_lift(constant_form(square, t2, 1, {(1,): E12}))

    def test_trivial_twist_matches_zero_chi(self, square, t2):
        ctx = trivial_twist(square, t2)
        assert np.all(ctx.exponents == 0)
        assert ctx.gamma.norm() == 0.0
