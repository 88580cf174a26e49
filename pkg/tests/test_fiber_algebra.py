import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backends import EXACT, FLOAT
from fiber_algebra import (
    ETA,
    XI,
    XI_ETA,
    DimensionError,
    FormFiber,
    GradeError,
    Involution,
    VectorFiber,
    clifford_mul,
    contract,
    contract_basis,
    degree_operator,
    grade_involution,
    grade_parts,
    grade_project,
    involution_apply,
    popcount,
    reversion,
    wedge,
)
from strategies import directions, forms, vectors


def zero(m=2):
    return FormFiber.zero(m)


class TestFormFiber:
    def test_zero_coefficients_dropped(self):
        form = FormFiber(1, {0: 0, 1: 2})
        assert list(form.coeffs) == [1]

    def test_mask_out_of_range(self):
        with pytest.raises(DimensionError):
            FormFiber(1, {16: 1})

    def test_grade(self):
        assert FormFiber.blade(2, [0, 3]).grade() == 2
        assert zero().grade() == 0
        with pytest.raises(GradeError):
            (FormFiber.scalar(2) + FormFiber.generator(2, 0)).grade()

    def test_blade_sign(self):
        assert wedge(FormFiber.generator(2, 1), FormFiber.generator(2, 0)).equals(FormFiber.blade(2, [0, 1]).scale(-1))
        assert FormFiber.blade(2, [1, 0]).equals(FormFiber.blade(2, [0, 1]).scale(-1))

    def test_mixed_dimensions(self):
        with pytest.raises(DimensionError):
            wedge(FormFiber.generator(1, 0), FormFiber.generator(2, 0))

    def test_mixed_backends(self):
        with pytest.raises(TypeError):
            wedge(FormFiber.generator(1, 0), FormFiber.generator(1, 0, FLOAT))

    def test_popcount(self):
        assert popcount(0) == 0
        assert popcount(0b1011) == 3


class TestWedge:
    @given(forms(2), forms(2), forms(2))
    def test_associative(self, a, b, c):
        assert wedge(wedge(a, b), c).equals(wedge(a, wedge(b, c)))

    @given(directions(2))
    def test_one_form_squares_to_zero(self, k):
        e = FormFiber.generator(2, k)
        assert wedge(e, e).is_zero()

    @given(forms(2, grades=[1]), forms(2, grades=[1]))
    def test_one_forms_anticommute(self, u, v):
        assert (wedge(u, v) + wedge(v, u)).is_zero()


class TestClifford:
    @given(vectors(2), vectors(2))
    def test_clifford_relation(self, X, Y):
        u, v = X.dual(), Y.dual()
        g = sum((a * b for a, b in zip(X.components, Y.components)), EXACT.zero)
        assert (clifford_mul(u, v) + clifford_mul(v, u)).equals(FormFiber.scalar(2, g + g))

    @given(vectors(2), forms(2))
    def test_left_vector_product(self, X, a):
        v = X.dual()
        assert clifford_mul(v, a).equals(wedge(v, a) + contract(X, a))

    @given(vectors(2), forms(2))
    def test_right_vector_product(self, X, a):
        v = X.dual()
        eta = grade_involution(a)
        assert clifford_mul(a, v).equals(wedge(v, eta) - contract(X, eta))

    @settings(max_examples=50)
    @given(forms(2), forms(2), forms(2))
    def test_associative(self, a, b, c):
        assert clifford_mul(clifford_mul(a, b), c).equals(clifford_mul(a, clifford_mul(b, c)))

    @given(forms(2), forms(2))
    def test_reversion_anti_automorphism(self, a, b):
        assert reversion(clifford_mul(a, b)).equals(clifford_mul(reversion(b), reversion(a)))

    def test_generator_squares_to_one(self):
        for k in range(4):
            e = FormFiber.generator(2, k)
            assert clifford_mul(e, e).equals(FormFiber.scalar(2))


class TestContract:
    @given(vectors(2), st.integers(0, 4), forms(2), forms(2))
    def test_antiderivation(self, X, p, a, b):
        a = grade_project(a, p)
        sign = -1 if p % 2 else 1
        lhs = contract(X, wedge(a, b))
        rhs = wedge(contract(X, a), b) + wedge(a, contract(X, b)).scale(sign)
        assert lhs.equals(rhs)

    @given(vectors(2), forms(2))
    def test_squares_to_zero(self, X, a):
        assert contract(X, contract(X, a)).is_zero()

    def test_basis_contraction(self):
        e01 = FormFiber.blade(2, [0, 1])
        assert contract_basis(0, e01).equals(FormFiber.generator(2, 1))
        assert contract_basis(1, e01).equals(FormFiber.generator(2, 0).scale(-1))
        assert contract_basis(2, e01).is_zero()


class TestGrades:
    @given(forms(2))
    def test_parts_sum_to_form(self, a):
        total = zero()
        for part in grade_parts(a).values():
            total = total + part
        assert total.equals(a)

    @given(forms(2))
    def test_degree_operator(self, a):
        expected = zero()
        for p, part in grade_parts(a).items():
            expected = expected + part.scale(p)
        assert degree_operator(a).equals(expected)

    def test_project_out_of_range(self):
        with pytest.raises(GradeError):
            grade_project(FormFiber.scalar(2), 7)


class TestVectorFiber:
    def test_from_form(self):
        X = VectorFiber.from_form(FormFiber.generator(2, 3).scale(2))
        assert X.components[3] == EXACT.convert(2)

    def test_from_two_form_rejected(self):
        with pytest.raises(GradeError):
            VectorFiber.from_form(FormFiber.blade(2, [0, 1]))

    def test_wrong_length(self):
        with pytest.raises(DimensionError):
            VectorFiber(2, (1, 0, 0))

    @given(vectors(2))
    def test_dual_round_trip(self, X):
        assert VectorFiber.from_form(X.dual()).equals(X)


class TestInvolution:
    @pytest.mark.parametrize('name', ['xi', 'xi*', 'xi-eta', 'xi-eta*', 'eta'])
    def test_parse_name(self, name):
        assert Involution.parse(name).name == name

    def test_parse_unknown(self):
        with pytest.raises(ValueError):
            Involution.parse('zeta')

    def test_signs(self):
        assert [XI.sign(p) for p in range(5)] == [1, 1, -1, -1, 1]
        assert [ETA.sign(p) for p in range(5)] == [1, -1, 1, -1, 1]
        assert [XI_ETA.sign(p) for p in range(5)] == [1, -1, -1, 1, 1]
        assert XI.adjoint_sign() == 1
        assert XI_ETA.adjoint_sign() == -1

    def test_conjugating_involution(self):
        form = FormFiber(1, {0: (0, 1)})
        assert involution_apply(form, Involution.parse('xi*')).equals(FormFiber(1, {0: (0, -1)}))

    @given(forms(2))
    def test_involutive(self, a):
        for j in (XI, ETA, XI_ETA, Involution.parse('xi*')):
            assert involution_apply(involution_apply(a, j), j).equals(a)
