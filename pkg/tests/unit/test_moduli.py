#!/usr/bin/env python3
"""
Unit tests for canonical forms, reconstruction, equivalence and the
admissible harmonic set.
"""

import pytest
import numpy as np
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from derham import delta0, gauge_apply, trivial_twist
from errors import HarmonicObstructionError, NonFlatError, ObstructionError, TwistMismatchError
from moduli import (EQUIVALENT, INEQUIVALENT, UNDECIDED, Sector, admissible_set, canonicalize, equivalent,
                    match_harmonic, project_to_cone, reconstruct)
from suites import band_of, random_admissible_psi, random_gauge
from torus import LieForm, constant_form

E11 = np.array([[1, 0], [0, 0]], dtype=complex)
E12 = np.array([[0, 1], [0, 0]], dtype=complex)


def _moved(omega, rng):
    geom = omega.geom
    reach = max(geom.cutoff // 2 - band_of(omega), 0)
    g = random_gauge(geom, omega.spec, rng, sample_band=geom.cutoff // 4, reach=reach)
    return gauge_apply(g, omega)


@pytest.mark.quick
@pytest.mark.unit
class TestAdmissibleSet:

    def test_triangular2_full_sector(self, t2, trivial_ctx_t2):
        desc = admissible_set(t2, trivial_ctx_t2)
        assert desc.names == ["a12", "a11", "a22", "b12"]
        assert desc.equations == [{("a11", "b12"): 1.0, ("a22", "b12"): -1.0}]
        assert desc.symmetry["kind"] == "constants"
        assert desc.symmetry["dimension"] == 3

    def test_triangular2_unipotent_sector(self, t2, trivial_ctx_t2):
        desc = admissible_set(t2, trivial_ctx_t2, sector=Sector.UNIPOTENT)
        assert desc.names == ["a12", "b12"]
        assert desc.equations == []

    def test_sector_accepts_strings(self, t2, trivial_ctx_t2):
        assert admissible_set(t2, trivial_ctx_t2, sector="unipotent").sector is Sector.UNIPOTENT

    def test_twisted_ambient_drops_shifted_entries(self, t3, twisted_ctx_t3):
        desc = admissible_set(t3, twisted_ctx_t3)
        assert desc.names == ["a12", "a11", "a22", "a33", "b12"]
        assert desc.symmetry["kind"] == "centralizer"
        assert desc.symmetry["dimension"] == 4
        assert "13" not in desc.symmetry["entries"]

    def test_product_torus_names(self, product_torus, t2):
        desc = admissible_set(t2, trivial_twist(product_torus, t2), sector=Sector.UNIPOTENT)
        assert desc.names == ["a12_1", "a12_2", "b12_1", "b12_2"]

    def test_samples_lie_on_cone(self, t2, trivial_ctx_t2, rng):
        desc = admissible_set(t2, trivial_ctx_t2, samples=2, rng=rng)
        assert len(desc.samples) == 4
        for sample in desc.samples:
            assert sample.constraint <= 1e-10
            assert sample.decision == EQUIVALENT
        partners = [s for s in desc.samples if s.partner_of is not None]
        assert len(partners) == 2
        for partner in partners:
            assert partner.orbit == desc.samples[partner.partner_of].orbit

    def test_projection_reaches_cone(self, t2, trivial_ctx_t2, rng):
        desc = admissible_set(t2, trivial_ctx_t2)
        x = project_to_cone(desc.constraint_tensor, rng.normal(size=4) + 1j * rng.normal(size=4))
        assert desc.constraint_norm(x) <= 1e-10

    def test_coordinates_round_trip(self, t3, twisted_ctx_t3, rng):
        desc = admissible_set(t3, twisted_ctx_t3)
        x = rng.normal(size=desc.dimension) + 1j * rng.normal(size=desc.dimension)
        assert np.allclose(desc.coordinates_of(desc.form_of(x)), x)


@pytest.mark.quick
@pytest.mark.unit
class TestReconstruct:

    def test_reconstruct_is_flat_and_canonical(self, trivial_ctx_t2, rng):
        desc = admissible_set(trivial_ctx_t2.spec, trivial_ctx_t2)
        psi = random_admissible_psi(desc, rng)
        built = reconstruct(psi, trivial_ctx_t2)
        for check in built.checks(1e-8):
            assert check.passed, check.name

    def test_twisted_reconstruct(self, twisted_ctx_t3, rng):
        desc = admissible_set(twisted_ctx_t3.spec, twisted_ctx_t3)
        psi = random_admissible_psi(desc, rng)
        built = reconstruct(psi, twisted_ctx_t3)
        assert built.global_omega.shift is None
        assert all(c.passed for c in built.checks(1e-8))

    def test_off_cone_is_obstructed(self, t2, trivial_ctx_t2):
        desc = admissible_set(t2, trivial_ctx_t2)
        x = np.zeros(desc.dimension, dtype=complex)
        x[desc.names.index("a11")] = 1.0
        x[desc.names.index("b12")] = 1.0
        with pytest.raises(ObstructionError) as info:
            reconstruct(desc.form_of(x), trivial_ctx_t2)
        assert info.value.level == 1

    @pytest.mark.parametrize("ctx_name", ["trivial_ctx_t2", "twisted_ctx_t3"])
    def test_level_sources_are_harmonic(self, request, ctx_name, rng):
        ctx = request.getfixturevalue(ctx_name)
        desc = admissible_set(ctx.spec, ctx)
        for _ in range(5):
            built = reconstruct(random_admissible_psi(desc, rng), ctx)
            assert built.h.norm() == 0.0

    def test_obstruction_comes_from_ddbar_solver(self, t2, trivial_ctx_t2):
        desc = admissible_set(t2, trivial_ctx_t2)
        x = np.zeros(desc.dimension, dtype=complex)
        x[desc.names.index("a12")] = 1.0
        x[desc.names.index("a11")] = 1.0
        x[desc.names.index("b12")] = 1.0
        with pytest.raises(ObstructionError) as info:
            reconstruct(desc.form_of(x), trivial_ctx_t2)
        assert isinstance(info.value.__cause__, HarmonicObstructionError)
        assert info.value.norm > 0

    def test_rejects_diagonal_01_part(self, square, t2, trivial_ctx_t2):
        psi = constant_form(square, t2, 1, {(1,): E11})
        with pytest.raises(ValueError):
            reconstruct(psi, trivial_ctx_t2)

    def test_rejects_non_harmonic(self, square, t2, trivial_ctx_t2):
        psi = LieForm.zero(square, t2, 1)
        coeffs = np.array(psi.coeffs)
        coeffs[1, square.cutoff + 1, square.cutoff] = E12
        with pytest.raises(ValueError):
            reconstruct(psi.with_coeffs(coeffs), trivial_ctx_t2)

    def test_rejects_foreign_twist(self, t3, twisted_ctx_t3, square):
        psi = constant_form(square, t3, 1, {(1,): np.zeros((3, 3))})
        with pytest.raises(TwistMismatchError):
            reconstruct(psi, twisted_ctx_t3)


@pytest.mark.quick
@pytest.mark.unit
class TestCanonicalize:

    def test_round_trip_recovers_psi(self, trivial_ctx_t2, rng):
        ctx = trivial_ctx_t2
        desc = admissible_set(ctx.spec, ctx)
        psi = random_admissible_psi(desc, rng)
        omega = reconstruct(psi, ctx).global_omega
        canon = canonicalize(_moved(omega, rng), ctx)
        assert all(c.passed for c in canon.checks(1e-8))
        assert match_harmonic(psi, canon.psi, rng).decision == EQUIVALENT

    def test_zero_connection(self, square, t2, trivial_ctx_t2):
        canon = canonicalize(LieForm.zero(square, t2, 1), trivial_ctx_t2)
        assert canon.psi.norm() <= 1e-14
        assert canon.h.norm() <= 1e-14
        points = np.array([[0.1, 0.7], [0.5, 0.5]])
        assert np.allclose(canon.gauge.value_at(points), np.eye(2)[None], atol=1e-14)

    def test_pure_gauge_has_zero_class(self, square, t2, trivial_ctx_t2, rng):
        K = square.cutoff
        g = random_gauge(square, t2, rng, sample_band=K // 4, reach=K // 2)
        canon = canonicalize(delta0(g), trivial_ctx_t2)
        assert canon.psi.norm() <= 1e-9
        assert canon.h.norm() <= 1e-9

    def test_non_flat_rejected(self, square, t2, trivial_ctx_t2):
        omega = constant_form(square, t2, 1, {(0,): E11, (1,): E12})
        with pytest.raises(NonFlatError) as info:
            canonicalize(omega, trivial_ctx_t2)
        assert info.value.residual > 0

    def test_twisted_round_trip(self, twisted_ctx_t3, rng):
        ctx = twisted_ctx_t3
        desc = admissible_set(ctx.spec, ctx)
        psi = random_admissible_psi(desc, rng)
        omega = reconstruct(psi, ctx).global_omega
        canon = canonicalize(_moved(omega, rng), ctx)
        assert all(c.passed for c in canon.checks(1e-8))
        assert match_harmonic(psi, canon.psi, rng).decision == EQUIVALENT


@pytest.mark.quick
@pytest.mark.unit
class TestEquivalence:

    def test_scaled_nilpotent_is_equivalent(self, square, t2, rng):
        psi1 = constant_form(square, t2, 1, {(1,): E12})
        psi2 = constant_form(square, t2, 1, {(1,): 2 * E12})
        match = match_harmonic(psi1, psi2, rng)
        assert match.decision == EQUIVALENT
        a = match.witness
        assert np.allclose(a @ E12 @ np.linalg.inv(a), 2 * E12)

    def test_zero_is_equivalent_to_itself(self, square, t2, trivial_ctx_t2, rng):
        zero = LieForm.zero(square, t2, 1)
        result = equivalent(zero, zero, trivial_ctx_t2, rng=rng)
        assert result.decision == EQUIVALENT
        assert np.allclose(result.witness, np.eye(2))

    def test_zero_and_nonzero_are_inequivalent(self, square, t2, rng):
        psi1 = LieForm.zero(square, t2, 1)
        psi2 = constant_form(square, t2, 1, {(1,): E12})
        assert match_harmonic(psi1, psi2, rng).decision == INEQUIVALENT

    def test_diagonal_gap_decides(self, square, t2, rng):
        psi1 = constant_form(square, t2, 1, {(0,): E11})
        psi2 = constant_form(square, t2, 1, {(0,): 3 * E11})
        match = match_harmonic(psi1, psi2, rng)
        assert match.decision == INEQUIVALENT
        assert match.method == "diagonal"

    def test_small_gap_is_undecided(self, square, t2, rng):
        psi1 = LieForm.zero(square, t2, 1)
        psi2 = constant_form(square, t2, 1, {(0,): 1e-6 * E11})
        match = match_harmonic(psi1, psi2, rng)
        assert match.decision == UNDECIDED
        check = match.check()
        assert check.undecided and not check.passed

    def test_gauge_related_connections(self, trivial_ctx_t2, rng):
        ctx = trivial_ctx_t2
        desc = admissible_set(ctx.spec, ctx)
        omega = reconstruct(random_admissible_psi(desc, rng), ctx).global_omega
        result = equivalent(omega, _moved(omega, rng), ctx, rng=rng)
        assert result.equivalent
        assert result.gauge_witness is not None
        assert result.check().passed

    def test_borel_sp_uses_least_squares(self, square, borel_sp4, rng):
        X = borel_sp4.nilpotent_basis[0]
        psi1 = constant_form(square, borel_sp4, 1, {(1,): X})
        psi2 = constant_form(square, borel_sp4, 1, {(1,): 2 * X})
        match = match_harmonic(psi1, psi2, rng)
        assert match.method == "least_squares"
        assert match.decision == EQUIVALENT
