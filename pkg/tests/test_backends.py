from fractions import Fraction

import numpy as np
import pytest

from backends import EXACT, FLOAT, get_backend


class TestExactBackend:
    def test_convert_forms(self):
        assert EXACT.convert(3) == EXACT.convert((3, 0))
        assert EXACT.convert(Fraction(1, 2)) == EXACT.half
        assert EXACT.convert(2j) == EXACT.imag_unit * EXACT.convert(2)
        assert EXACT.convert(('1/3', '-2/5')) == EXACT.convert((Fraction(1, 3), Fraction(-2, 5)))

    def test_rejects_inexact_float(self):
        with pytest.raises(TypeError):
            EXACT.convert(0.1)

    def test_conj_and_magnitude(self):
        value = EXACT.convert((3, 4))
        assert EXACT.conj(value) == EXACT.convert((3, -4))
        assert EXACT.magnitude(value) == 5.0

    def test_json_round_trip_is_exact(self):
        value = EXACT.convert((Fraction(-7, 3), Fraction(5, 11)))
        assert EXACT.from_json(EXACT.to_json(value)) == value

    def test_nullspace(self):
        # x0 + x1 = 0, x2 free
        rows = {0: {0: EXACT.one, 1: EXACT.one}}
        basis = EXACT.nullspace(rows, 1, 3)
        assert len(basis) == 2
        for vector in basis:
            assert vector[0] + vector[1] == EXACT.zero

    def test_nullspace_of_zero_matrix_is_identity(self):
        basis = EXACT.nullspace({}, 0, 2)
        assert basis == [[EXACT.one, EXACT.zero], [EXACT.zero, EXACT.one]]

    def test_rank(self):
        one, two = EXACT.convert(1), EXACT.convert(2)
        assert EXACT.rank([[one, two], [two, EXACT.convert(4)]]) == 1
        assert EXACT.rank([[one, EXACT.zero], [EXACT.zero, EXACT.imag_unit]]) == 2

    def test_random_coefficient_is_small_gaussian_integer(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            value = EXACT.random_coefficient(rng)
            assert EXACT.magnitude(value) <= 3 * 2 ** 0.5


class TestFloatBackend:
    def test_nullspace(self):
        rows = {0: {0: 1 + 0j, 1: 1 + 0j}}
        basis = FLOAT.nullspace(rows, 1, 3)
        assert len(basis) == 2
        for vector in basis:
            assert abs(vector[0] + vector[1]) < 1e-12

    def test_rank(self):
        assert FLOAT.rank([[1, 2], [2, 4]]) == 1

    def test_same_random_sequence_as_exact(self):
        exact = EXACT.random_coefficient(np.random.default_rng(5))
        floating = FLOAT.random_coefficient(np.random.default_rng(5))
        assert FLOAT.convert(exact) == floating


def test_get_backend():
    assert get_backend('exact') is EXACT
    assert get_backend('float') is FLOAT
    with pytest.raises(ValueError):
        get_backend('quad')
