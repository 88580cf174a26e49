import pytest

from backends import FLOAT
from identity_suites import run_fiber_suite, run_field_suite, run_spinor_suite


def failed(rows):
    return [(row.equation, row.max_residual) for row in rows if not row.passed]


class TestFiberSuite:
    @pytest.mark.parametrize('m', [1, 2])
    def test_all_identities_hold(self, m):
        rows = run_fiber_suite(m, cases=15, seed=3)
        assert rows
        assert failed(rows) == []
        assert all(row.exact_zero for row in rows)

    def test_rows_name_each_identity_once(self):
        rows = run_fiber_suite(1, cases=4, seed=1)
        names = [row.equation for row in rows]
        assert len(names) == len(set(names))
        assert '[L,Lambda] = (r-m) on r-forms' in names
        assert all(row.detail == '4 cases' for row in rows if not row.equation.startswith('sigma'))

    def test_float_backend(self):
        rows = run_fiber_suite(2, cases=5, seed=2, backend=FLOAT)
        assert failed(rows) == []
        assert not any(row.exact for row in rows)


class TestFieldSuite:
    def test_all_identities_hold(self):
        rows = run_field_suite(2, cases=3, seed=5, degree=2)
        assert len(rows) == 15
        assert failed(rows) == []

    def test_m1(self):
        assert failed(run_field_suite(1, cases=5, seed=7)) == []


class TestSpinorSuite:
    @pytest.mark.parametrize('m', [1, 2])
    def test_all_checks_hold(self, m):
        rows = run_spinor_suite(m, cases=5, seed=11)
        assert failed(rows) == []
        names = {row.equation for row in rows}
        assert 'chirality consistency' in names
        assert any(name.startswith('pairing xi-eta*') for name in names)
