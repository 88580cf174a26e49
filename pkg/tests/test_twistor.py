from fractions import Fraction

import pytest

import twistor
from backends import EXACT, FLOAT
from fields import PolySection, act_sections, position_form
from kahler_structure import flat_structure
from spinor_rep import CalibrationError, SpinorFiber, build_rep, type_projectors
from twistor import (
    BoundViolationError,
    KLConstants,
    PreconditionError,
    TwistorVariant,
    VariantError,
    assemble_system,
    combined_residual,
    constants_kl,
    dimension_bound,
    reduction_readings,
    holomorphy_check,
    kirchberg_coefficient,
    pair_constants,
    residual,
    solve_space,
    holomorphic_constants,
    verify_solution_space,
)


def typed_constant(m, r):
    basis = type_projectors(build_rep(m), flat_structure(m))[r].basis()
    return PolySection.constant(basis[0])


class TestConstants:
    def test_constants_kl(self):
        assert constants_kl(2, 1) == KLConstants(Fraction(1, 8), Fraction(0))
        assert constants_kl(2, 0) == KLConstants(Fraction(1, 6), Fraction(1, 12))

    def test_pair_constants(self):
        assert pair_constants(2, 0) == (Fraction(1, 6), Fraction(1, 2))
        assert pair_constants(3, 3) == (Fraction(1, 2), Fraction(1, 8))

    def test_pair_constants_follow_from_k_and_l(self):
        for m in range(1, 5):
            for r in range(m + 1):
                c = constants_kl(m, r)
                assert pair_constants(m, r) == (2 * (c.k - c.l), 2 * (c.k + c.l))

    def test_constants_readings(self):
        assert holomorphic_constants(2, 1) == KLConstants(Fraction(1, 32), Fraction(-1, 32))
        assert holomorphic_constants(2, 1, holomorphic=False) == KLConstants(Fraction(1, 32), Fraction(1, 32))
        assert holomorphic_constants(2, 1, reading='rederived').k == Fraction(1, 16)
        with pytest.raises(ValueError):
            holomorphic_constants(2, 1, reading='other')

    def test_kirchberg_coefficients(self):
        assert kirchberg_coefficient(TwistorVariant.kirchberg_display(2)) == Fraction(1, 8)
        assert kirchberg_coefficient(TwistorVariant.kirchberg_text(2)) == Fraction(1, 12)
        with pytest.raises(VariantError):
            kirchberg_coefficient(TwistorVariant.kirchberg_display(0))

    def test_dimension_bound(self):
        assert dimension_bound(2, 1) == 4
        assert dimension_bound(3, 0) == 4
        assert dimension_bound(2, 2) == 3

    def test_type_out_of_range(self):
        with pytest.raises(VariantError):
            constants_kl(2, 3)


class TestVariants:
    def test_labels(self):
        assert TwistorVariant.kahlerian(1).label == 'kahlerian(r=1)'
        assert TwistorVariant.riemannian().label == 'riemannian'
        assert not TwistorVariant.riemannian().type_restricted

    def test_middle_requires_even_m(self):
        assert TwistorVariant.middle(2).r == 1
        with pytest.raises(VariantError):
            TwistorVariant.middle(3)

    @pytest.mark.parametrize('name, m, r', [
        ('kahlerian', 2, 3),
        ('kirchberg-display', 2, 0),
        ('middle', 3, 1),
        ('hijazi', 2, 0),
        ('unknown', 2, 0),
    ])
    def test_invalid(self, name, m, r):
        with pytest.raises(VariantError):
            TwistorVariant.from_name(name, m, r)

    def test_hijazi_parameters(self):
        variant = TwistorVariant.from_name('hijazi', 2, a='1/4', b=0)
        assert variant.a == Fraction(1, 4)
        assert variant.b == 0


class TestResidual:
    @pytest.mark.parametrize('r', [0, 1, 2])
    def test_constant_typed_spinor_solves(self, r):
        report = residual(TwistorVariant.kahlerian(r), typed_constant(2, r))
        assert report.passed
        assert report.exact_zero

    def test_impure_type_rejected(self):
        with pytest.raises(PreconditionError):
            residual(TwistorVariant.kahlerian(0), typed_constant(2, 1))

    @pytest.mark.parametrize('m', [1, 2])
    def test_riemannian_linear_solution(self, m):
        rep = build_rep(m)
        psi = act_sections(position_form(m), PolySection.constant(SpinorFiber.basis(m, 0)), rep)
        assert residual(TwistorVariant.riemannian(), psi, rep).passed

    def test_non_solution_fails(self):
        rep = build_rep(1)
        psi = act_sections(position_form(1), PolySection.constant(SpinorFiber.basis(1, 0)), rep)
        assert not residual(TwistorVariant.hijazi(1, 0), psi, rep).passed

    def test_form_section_rejected(self):
        with pytest.raises(TypeError):
            residual(TwistorVariant.riemannian(), position_form(1))

    def test_holomorphy_of_constant(self):
        report = holomorphy_check(typed_constant(2, 1))
        assert report.classification == 'both'
        assert report.claims_hold

    def test_reduction_readings_on_constant(self):
        reports = reduction_readings(typed_constant(2, 0), 0)
        assert set(reports) == {'literal', 'd-minus'}
        assert all(report.passed for report in reports.values())

    def test_reduction_literal_reading_on_solutions(self):
        # 全纯解的 D^+ψ = 0，字面读法右端只剩 X̃^-.D^+ψ 项
        holomorphic = [element for element in solve_space(TwistorVariant.holomorphic(1), 2, 1).basis
                       if element.degree > 0]
        assert holomorphic
        for element in holomorphic:
            reports = reduction_readings(element, 1)
            assert set(reports) == {'literal', 'd-minus'}
            assert not reports['literal'].passed
        kahlerian = solve_space(TwistorVariant.kahlerian(1), 2, 1).basis
        assert any(not reduction_readings(element, 1)['literal'].passed for element in kahlerian)


class TestSolver:
    @pytest.mark.parametrize('variant, m, expected', [
        (TwistorVariant.riemannian(), 1, 4),
        (TwistorVariant.kahlerian(0), 2, 1),
        (TwistorVariant.kahlerian(1), 2, 4),
        (TwistorVariant.holomorphic(1), 2, 3),
        (TwistorVariant.anti_holomorphic(1), 2, 3),
    ])
    def test_dimensions(self, variant, m, expected):
        space = solve_space(variant, m, 1)
        assert space.dimension == expected
        assert space.bound_respected

    def test_hijazi_matches_riemannian(self):
        variant = TwistorVariant.from_name('hijazi', 1, a=Fraction(1, 2), b=0)
        assert solve_space(variant, 1, 1).dimension == 4

    def test_float_backend(self):
        space = solve_space(TwistorVariant.riemannian(), 1, 1, backend=FLOAT)
        assert space.dimension == 4
        assert all(report.passed for report in verify_solution_space(space))

    def test_basis_elements_are_solutions(self):
        space = solve_space(TwistorVariant.kahlerian(1), 2, 1)
        reports = verify_solution_space(space)
        assert len(reports) == space.dimension
        assert all(report.passed and report.exact_zero for report in reports)

    @pytest.mark.parametrize('r', [0, 1, 2])
    def test_solutions_satisfy_combined_equation(self, r):
        constants = constants_kl(2, r)
        for element in solve_space(TwistorVariant.kahlerian(r), 2, 1).basis:
            assert combined_residual(element, constants.k, constants.l).passed

    def test_summary(self):
        summary = solve_space(TwistorVariant.kahlerian(1), 2, 1).summary()
        assert summary['bound'] == 4
        assert summary['dimension'] == 4
        assert summary['r'] == 1

    def test_riemannian_has_no_bound(self):
        assert solve_space(TwistorVariant.riemannian(), 1, 0).bound is None

    def test_negative_degree(self):
        with pytest.raises(ValueError):
            assemble_system(TwistorVariant.riemannian(), 1, -1)

    def test_system_shape(self):
        system = assemble_system(TwistorVariant.riemannian(), 1, 1, backend=EXACT)
        assert system.ncols == 3 * 2
        assert system.nrows > 0

    def test_bound_violation_is_calibration_error(self):
        assert issubclass(BoundViolationError, CalibrationError)

    def test_bound_violation_raised(self, monkeypatch):
        monkeypatch.setattr(twistor, 'dimension_bound', lambda m, r: 0)
        with pytest.raises(BoundViolationError):
            solve_space(TwistorVariant.kahlerian(1), 2, 1)
        assert solve_space(TwistorVariant.riemannian(), 1, 1).dimension == 4
