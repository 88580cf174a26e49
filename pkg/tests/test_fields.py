import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import config
from backends import EXACT, FLOAT
from fiber_algebra import DimensionError, FormFiber
from fields import (
    FORM,
    SPINOR,
    Monomial,
    PolySection,
    coderiv,
    d_c,
    delta_c,
    dirac,
    dirac_c,
    dirac_pm,
    dslash,
    dslash_c,
    evaluate,
    ext_d,
    laplacian,
    max_abs_at_points,
    monomials_of_degree,
    monomials_up_to,
    nabla,
    position_form,
    random_section,
    sample_points,
    section_from_json,
    section_to_json,
    wedge_sections,
)
from kahler_structure import flat_structure, kahler_form
from spinor_rep import SpinorFiber, build_rep

seeds = st.integers(0, 2 ** 32 - 1)


def vanishes(s: PolySection) -> bool:
    return s.coefficient_max_abs() == 0


def random_form_section(m, seed, degree=3):
    return random_section(m, degree, FORM, np.random.default_rng(seed), density=0.25)


def random_spinor_section(m, seed, degree=3):
    return random_section(m, degree, SPINOR, np.random.default_rng(seed), density=0.4)


class TestMonomials:
    def test_counts(self):
        assert len(monomials_of_degree(2, 2)) == 10
        assert len(monomials_up_to(1, 3)) == 10

    def test_derivative(self):
        mono = Monomial((2, 1))
        assert mono.derivative(0) == (2, Monomial((1, 1)))
        assert Monomial((0, 1)).derivative(0) is None

    def test_str(self):
        assert str(Monomial((2, 0, 1, 0))) == 'x1^2*x3'
        assert str(Monomial.one(2)) == '1'


class TestPolySection:
    def test_degree_bound_enforced(self):
        with pytest.raises(ValueError):
            PolySection(1, 0, {Monomial.coordinate(1, 0): FormFiber.scalar(1)})

    def test_kind_mismatch(self):
        with pytest.raises(DimensionError):
            PolySection(1, 0, {Monomial.one(1): SpinorFiber.basis(1, 0)}, FORM)

    def test_zero_terms_dropped(self):
        s = PolySection.constant(FormFiber.zero(1))
        assert s.is_zero()

    def test_mixing_kinds_rejected(self):
        form = PolySection.constant(FormFiber.scalar(1))
        spinor = PolySection.constant(SpinorFiber.basis(1, 0))
        with pytest.raises(DimensionError):
            form + spinor

    def test_evaluate_position_form(self):
        value = evaluate(position_form(1), (2, -3))
        assert value.equals(FormFiber(1, {1: 2, 2: -3}))

    def test_json_round_trip(self):
        s = random_form_section(2, 11)
        restored = section_from_json(json.loads(json.dumps(section_to_json(s))))
        assert restored.degree_bound == s.degree_bound
        assert vanishes(restored - s)

    def test_json_round_trip_spinor(self):
        s = random_spinor_section(1, 3)
        restored = section_from_json(section_to_json(s))
        assert restored.kind == SPINOR
        assert vanishes(restored - s)


class TestDerivatives:
    def test_nabla_of_position_form(self):
        for k in range(4):
            assert vanishes(nabla(k, position_form(2)) - PolySection.constant(FormFiber.generator(2, k)))

    def test_d_and_delta_of_position_form(self):
        x = position_form(2)
        assert vanishes(ext_d(x))
        assert vanishes(coderiv(x) - PolySection.constant(FormFiber.scalar(2, -4)))

    def test_laplacian_of_square(self):
        square = PolySection.monomial(Monomial((2, 0)), FormFiber.scalar(1))
        assert vanishes(laplacian(square) - PolySection.constant(FormFiber.scalar(1, 2)))

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_d_squared(self, seed):
        s = random_form_section(2, seed)
        assert vanishes(ext_d(ext_d(s)))
        assert vanishes(coderiv(coderiv(s)))

    @settings(max_examples=30, deadline=None)
    @given(seeds)
    def test_dslash_splits(self, seed):
        s = random_form_section(2, seed)
        J = flat_structure(2)
        assert vanishes(dslash(s) - ext_d(s) + coderiv(s))
        assert vanishes(dslash_c(s, J) - d_c(s, J) + delta_c(s, J))

    @settings(max_examples=20, deadline=None)
    @given(seeds, st.integers(0, 4))
    def test_leibniz(self, seed, p):
        rng = np.random.default_rng(seed)
        a = random_section(2, 2, FORM, rng, density=0.3, grades=[p])
        b = random_section(2, 2, FORM, rng, density=0.3)
        sign = -1 if p % 2 else 1
        lhs = ext_d(wedge_sections(a, b))
        rhs = wedge_sections(ext_d(a), b) + wedge_sections(a, ext_d(b)).scale(sign)
        assert vanishes(lhs - rhs)

    def test_kahler_form_closed(self):
        omega = PolySection.constant(kahler_form(flat_structure(2), EXACT), 1)
        assert vanishes(ext_d(omega))
        assert vanishes(d_c(omega))


class TestDirac:
    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_squares(self, seed):
        rep = build_rep(2)
        psi = random_spinor_section(2, seed)
        D2 = dirac(dirac(psi, rep), rep)
        assert vanishes(D2 - laplacian(psi))
        assert vanishes(D2 - dirac_c(dirac_c(psi, rep), rep))

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_pm_split(self, seed):
        rep = build_rep(2)
        psi = random_spinor_section(2, seed)
        plus, minus = dirac_pm(psi, rep)
        assert vanishes(dirac(psi, rep) - plus - minus)

    def test_requires_spinor(self):
        with pytest.raises(TypeError):
            dirac(position_form(1), build_rep(1))


class TestSampling:
    def test_deterministic(self):
        assert sample_points(2, seed=5) == sample_points(2, seed=5)
        assert sample_points(2, seed=5) != sample_points(2, seed=6)

    def test_inside_box(self):
        low, high = config.SAMPLE_BOX
        points = sample_points(3)
        assert len(points) == config.SAMPLE_POINTS
        assert all(low <= x <= high for point in points for x in point)

    def test_max_abs_at_points(self):
        x = position_form(1)
        assert max_abs_at_points(x, [(0.5, -0.25)]) == pytest.approx(0.5)
        assert max_abs_at_points(PolySection.zero(1), [(0.0, 0.0)]) == 0.0

    def test_float_backend_agrees(self):
        s = random_form_section(1, 7)
        point = (0.5, -1.0)
        exact_value = evaluate(s, (Fraction(1, 2), -1)).to_backend(FLOAT)
        assert evaluate(s.to_backend(FLOAT), point).equals(exact_value, 1e-12)
