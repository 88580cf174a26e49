from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backends import EXACT
from bilinear import (
    BIGRADED,
    GRADED,
    BilinearDecomposition,
    GapWeights,
    alpha_by_expansion,
    cky_residual,
    decomposition_residual,
    gap_forms,
    grade_section,
    kahlerian_cky_residual,
    operator_action_residual,
    prop2_condition_check,
    proof_identity_residuals,
    reconstruction_residual,
    square_fiber,
    square_fiber_components,
    square_map,
    square_map_components,
    theorem1_residual,
    variant_weights,
    verify_theorem1,
)
from fiber_algebra import FormFiber, GradeError, Involution
from fields import Monomial, PolySection, position_form
from kahler_structure import BigradeError, flat_structure
from spinor_rep import SpinorFiber, build_pairing, build_rep, type_projectors
from strategies import forms, spinors
from twistor import PreconditionError, TwistorVariant, solve_space

REP1, REP2 = build_rep(1), build_rep(2)
NON_CONJUGATING = ['xi', 'xi-eta']
ALL_PAIRINGS = ['xi', 'xi*', 'xi-eta', 'xi-eta*']


def pairing(name, rep=REP2):
    return build_pairing(rep, Involution.parse(name))


def typed_constant(m, r):
    basis = type_projectors(build_rep(m), flat_structure(m))[r].basis()
    return PolySection.constant(basis[0])


def vanishes(s):
    return s.coefficient_max_abs() == 0


def linear_non_solution():
    # ∇_1ψ = s 而 ½ e_1.Dψ = ½ s
    return PolySection.monomial(Monomial.coordinate(1, 0), SpinorFiber.basis(1, 0))


class TestSquareMap:
    @settings(max_examples=30)
    @given(st.sampled_from(ALL_PAIRINGS), spinors(2), spinors(2))
    def test_two_paths_agree(self, name, psi, phi):
        p = pairing(name)
        assert square_fiber(psi, phi, p, REP2).equals(square_fiber_components(psi, phi, p, REP2))

    @settings(max_examples=30)
    @given(st.sampled_from(ALL_PAIRINGS), spinors(2), spinors(2), spinors(2))
    def test_reconstruction(self, name, psi, phi, kappa):
        assert reconstruction_residual(psi, phi, kappa, pairing(name), REP2) == 0

    @given(st.sampled_from(ALL_PAIRINGS), spinors(2))
    def test_scalar_part(self, name, psi):
        p = pairing(name)
        omega = square_fiber(psi, psi, p, REP2)
        assert omega.coefficient(0) == p.pair(psi, psi) * EXACT.convert(Fraction(1, 4))

    def test_dimension_mismatch(self):
        psi = typed_constant(1, 0).terms
        fiber = next(iter(psi.values()))
        with pytest.raises(ValueError):
            square_fiber(fiber, fiber, pairing('xi'), REP2)

    @pytest.mark.parametrize('name', ALL_PAIRINGS)
    def test_sections_agree(self, name):
        for psi in solve_space(TwistorVariant.kahlerian(1), 2, 1).basis:
            assert vanishes(square_map(psi, pairing(name), REP2) - square_map_components(psi, pairing(name), REP2))

    def test_requires_spinor(self):
        with pytest.raises(TypeError):
            square_map(position_form(1), pairing('xi', REP1), REP1)


class TestDecomposition:
    def test_parts_sum_to_square(self):
        psi = solve_space(TwistorVariant.kahlerian(1), 2, 1).basis[0]
        decomposition = BilinearDecomposition.from_spinor(psi, pairing('xi'), REP2)
        total = PolySection.zero(2, degree_bound=decomposition.omega.degree_bound)
        for part in decomposition.parts().values():
            total = total + part
        assert vanishes(total - decomposition.omega)

    def test_grade_part_out_of_range(self):
        decomposition = BilinearDecomposition.from_spinor(typed_constant(2, 0), pairing('xi'), REP2)
        with pytest.raises(GradeError):
            decomposition.grade_part(5)

    def test_pq_part_out_of_range(self):
        decomposition = BilinearDecomposition.from_spinor(typed_constant(2, 0), pairing('xi'), REP2)
        with pytest.raises(BigradeError):
            decomposition.pq_part(3, 0)


class TestGapForms:
    def test_weight_readings(self):
        with pytest.raises(ValueError):
            GapWeights.from_kl(1, 1, l_phase='other')
        with pytest.raises(ValueError):
            GapWeights.hijazi(1, 1, mu_reading='other')

    def test_riemannian_weights(self):
        weights = variant_weights(TwistorVariant.riemannian(), 2)
        assert weights == GapWeights.hijazi(Fraction(1, 4), 0)

    @pytest.mark.parametrize('name', NON_CONJUGATING)
    def test_alpha_two_paths(self, name):
        weights = variant_weights(TwistorVariant.kahlerian(1), 2)
        for psi in solve_space(TwistorVariant.kahlerian(1), 2, 1).basis:
            gaps = gap_forms(psi, weights, pairing(name), REP2)
            assert vanishes(gaps.alpha - alpha_by_expansion(psi, weights, pairing(name), REP2))

    @pytest.mark.parametrize('r', [0, 1])
    @pytest.mark.parametrize('name', NON_CONJUGATING)
    def test_decomposition_and_operator_action(self, r, name):
        variant = TwistorVariant.kahlerian(r)
        weights = variant_weights(variant, 2)
        for psi in solve_space(variant, 2, 1).basis:
            gaps = gap_forms(psi, weights, pairing(name), REP2)
            assert decomposition_residual(gaps).passed
            assert all(row.passed for row in operator_action_residual(gaps))

    @settings(max_examples=30)
    @given(forms(2), st.integers(0, 3), st.integers(0, 3))
    def test_proof_identities(self, sigma, k, l):
        residuals = proof_identity_residuals(sigma, k, l)
        assert all(residuals[key] == 0 for key in ('(e,e)', '(Je,Je)', '(Je,e)', '(e,Je)'))
        assert 'literal-sign(e,Je)' in residuals


class TestTheorem1:
    @pytest.mark.parametrize('r', [0, 1])
    @pytest.mark.parametrize('name', NON_CONJUGATING)
    def test_graded_rows_pass(self, r, name):
        space = solve_space(TwistorVariant.kahlerian(r), 2, 1)
        result = verify_theorem1(space, pairing(name), REP2, reading=GRADED)
        assert not result.vacuous
        assert result.rows
        assert result.passed
        assert len(result.prop2) == space.dimension * 5

    def test_constant_spinor_passes_every_reading(self):
        psi = typed_constant(2, 1)
        variant = TwistorVariant.kahlerian(1)
        for p in range(3):
            for q in range(3):
                assert theorem1_residual(psi, variant, p, q, pairing('xi'), REP2, reading=BIGRADED).passed
        assert theorem1_residual(psi, variant, 2, None, pairing('xi'), REP2, reading=GRADED).passed

    def test_requires_pairing(self):
        with pytest.raises(ValueError):
            theorem1_residual(typed_constant(2, 1), TwistorVariant.kahlerian(1), 1)

    def test_bigraded_requires_q(self):
        with pytest.raises(BigradeError):
            theorem1_residual(typed_constant(2, 1), TwistorVariant.kahlerian(1), 1, None, pairing('xi'), REP2,
                              reading=BIGRADED)

    def test_unknown_reading(self):
        with pytest.raises(ValueError):
            theorem1_residual(typed_constant(2, 1), TwistorVariant.kahlerian(1), 1, 0, pairing('xi'), REP2,
                              reading='other')

    def test_non_solution_rejected(self):
        with pytest.raises(PreconditionError):
            theorem1_residual(linear_non_solution(), TwistorVariant.riemannian(), 1, None, pairing('xi', REP1), REP1)

    def test_empty_basis_is_vacuous(self):
        space = solve_space(TwistorVariant.kahlerian(1), 2, 0)
        result = verify_theorem1(space, pairing('xi'), REP2, basis=[])
        assert result.vacuous
        assert result.passed
        assert not result.rows

    def test_corrupted_basis_fails_precondition(self):
        space = solve_space(TwistorVariant.riemannian(), 1, 1)
        corrupted = space.basis[0] + linear_non_solution()
        result = verify_theorem1(space, pairing('xi', REP1), REP1, basis=[corrupted])
        assert not result.passed
        assert result.rows[0].equation == 'precondition'


class TestKahlerianCkyRows:
    @pytest.mark.parametrize('reading', [GRADED, BIGRADED])
    @pytest.mark.parametrize('r', [0, 1])
    def test_conditions_imply_kahlerian_cky(self, r, reading):
        space = solve_space(TwistorVariant.kahlerian(r), 2, 1)
        result = verify_theorem1(space, pairing('xi'), REP2, reading=reading)
        held = [entry for entry in result.prop2 if entry['pass']]
        assert held
        assert all(entry['kahlerian_cky']['pass'] for entry in held)
        assert all('kahlerian_cky' not in entry for entry in result.prop2 if not entry['pass'])
        rows = [row for row in result.rows if row.equation.startswith('kahlerian-cky')]
        assert len(rows) == len(held)
        assert all(row.passed and 'prop2' in row.detail for row in rows)

    def test_cky_failure_fails_result(self, failing_kahlerian_cky):
        space = solve_space(TwistorVariant.kahlerian(1), 2, 1)
        result = verify_theorem1(space, pairing('xi'), REP2)
        assert any(entry['pass'] for entry in result.prop2)
        assert result.passed is False
        assert not any(row.passed for row in result.rows if row.equation.startswith('kahlerian-cky'))


class TestAlternateConstants:
    @pytest.mark.parametrize('variant', [TwistorVariant.holomorphic(1), TwistorVariant.anti_holomorphic(1)])
    def test_rederived_constants_pass(self, variant):
        space = solve_space(variant, 2, 1)
        weights = variant_weights(variant, 2, constants_reading='rederived')
        result = verify_theorem1(space, pairing('xi'), REP2, weights=weights)
        rows = [row for row in result.rows if row.equation.startswith('theorem1')]
        assert len(rows) == space.dimension * 5
        assert all(row.passed for row in rows)

    @pytest.mark.parametrize('variant', [TwistorVariant.holomorphic(1), TwistorVariant.anti_holomorphic(1)])
    def test_literal_constants_mismatch(self, variant):
        space = solve_space(variant, 2, 1)
        weights = variant_weights(variant, 2, constants_reading='literal')
        failures = []
        for name in NON_CONJUGATING:
            result = verify_theorem1(space, pairing(name), REP2, weights=weights)
            failures.extend(row for row in result.rows if row.equation.startswith('theorem1') and not row.passed)
        assert failures

    def test_kirchberg_text_matches_kahlerian(self):
        # m=2, r=1 时两者都是 k=1/8, l=0 的合并方程
        space = solve_space(TwistorVariant.kirchberg_text(1), 2, 1)
        result = verify_theorem1(space, pairing('xi'), REP2)
        assert not result.vacuous
        assert result.passed

    def test_kirchberg_display_rows(self):
        space = solve_space(TwistorVariant.kirchberg_display(1), 2, 1)
        result = verify_theorem1(space, pairing('xi'), REP2)
        assert not result.vacuous
        rows = [row for row in result.rows if row.equation.startswith('theorem1')]
        assert len(rows) == space.dimension * 5
        assert all(row.passed for row in rows)


class TestCky:
    def test_riemannian_bilinears_are_cky(self):
        for psi in solve_space(TwistorVariant.riemannian(), 1, 1).basis:
            omega = square_map(psi, pairing('xi', REP1), REP1)
            for p in range(3):
                assert cky_residual(grade_section(omega, p), p).passed

    def test_mixed_degree_rejected(self):
        omega = PolySection.constant(FormFiber.scalar(1) + FormFiber.generator(1, 0))
        with pytest.raises(GradeError):
            cky_residual(omega, 0)

    def test_position_form_is_closed_conformal(self):
        assert cky_residual(position_form(2), 1).passed

    def test_kahlerian_cky_requires_pure_type(self):
        with pytest.raises(BigradeError):
            kahlerian_cky_residual(position_form(1), 1, 0)
        with pytest.raises(BigradeError):
            kahlerian_cky_residual(position_form(1), 1)

    def test_prop2_on_constant(self):
        gaps = gap_forms(typed_constant(2, 0), variant_weights(TwistorVariant.kahlerian(0), 2), pairing('xi'), REP2)
        report = prop2_condition_check(gaps, 1, 0)
        assert report.passed
        assert report.to_dict()['pass']
        assert prop2_condition_check(gaps, 2, reading=GRADED).passed

    def test_prop2_bigraded_requires_q(self):
        gaps = gap_forms(typed_constant(2, 0), variant_weights(TwistorVariant.kahlerian(0), 2), pairing('xi'), REP2)
        with pytest.raises(BigradeError):
            prop2_condition_check(gaps, 1)
