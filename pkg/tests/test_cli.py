import json

import pytest
from click.testing import CliRunner

import twistor
from cli import EXIT_FAILURE, EXIT_PASS, cli


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, report_path, *args):
    return runner.invoke(cli, [*args, '--out', str(report_path)])


def load(report_path):
    return json.loads(report_path.read_text(encoding='utf-8'))


class TestVerifyIdentities:
    def test_small_run_passes(self, runner, report_path):
        result = invoke(runner, report_path, 'verify-identities', '--m', '1', '--cases', '3')
        assert result.exit_code == EXIT_PASS, result.output
        report = load(report_path)
        assert report['summary']['failed'] == 0
        assert report['metadata']['run_config']['cases'] == 3

    def test_zero_tolerance_is_usage_error(self, runner, report_path):
        result = invoke(runner, report_path, 'verify-identities', '--tolerance', '0')
        assert result.exit_code == 2
        assert not report_path.exists()

    def test_unknown_involution_rejected(self, runner, report_path):
        result = invoke(runner, report_path, 'verify-identities', '--involution', 'eta')
        assert result.exit_code == 2


class TestSolveTwistor:
    def test_riemannian_dimension(self, runner, report_path):
        result = invoke(runner, report_path, 'solve-twistor', '--variant', 'riemannian', '--m', '1', '--degree', '1')
        assert result.exit_code == EXIT_PASS, result.output
        report = load(report_path)
        assert report['solution_space']['dimension'] == 4
        assert len(report['basis']) == 4
        assert report['solution_space']['bound'] is None

    def test_kahlerian_bound(self, runner, report_path):
        result = invoke(runner, report_path, 'solve-twistor', '--m', '2', '--r', '1', '--degree', '1')
        assert result.exit_code == EXIT_PASS, result.output
        summary = load(report_path)['solution_space']
        assert summary['dimension'] == 4
        assert summary['bound_respected']

    def test_middle_requires_even_m(self, runner, report_path):
        result = invoke(runner, report_path, 'solve-twistor', '--variant', 'middle', '--m', '3', '--r', '1')
        assert result.exit_code == 2

    def test_hijazi_requires_coefficients(self, runner, report_path):
        result = invoke(runner, report_path, 'solve-twistor', '--variant', 'hijazi', '--m', '1')
        assert result.exit_code == 2

    def test_bad_coefficient(self, runner, report_path):
        result = invoke(runner, report_path, 'solve-twistor', '--variant', 'hijazi', '--m', '1',
                        '--a', 'half', '--b', '0')
        assert result.exit_code == 2

    def test_bound_violation_exits_with_failure(self, runner, report_path, monkeypatch):
        monkeypatch.setattr(twistor, 'dimension_bound', lambda m, r: 0)
        result = invoke(runner, report_path, 'solve-twistor', '--m', '2', '--r', '1', '--degree', '1')
        assert result.exit_code == EXIT_FAILURE
        report = load(report_path)
        assert report['error']
        assert report['rows'] == []

    def test_report_is_deterministic(self, runner, report_path):
        args = ('solve-twistor', '--m', '2', '--r', '1', '--degree', '1')
        assert invoke(runner, report_path, *args).exit_code == EXIT_PASS
        first = report_path.read_bytes()
        assert invoke(runner, report_path, *args).exit_code == EXIT_PASS
        assert report_path.read_bytes() == first


class TestVerifyTheorem1:
    def test_passes_on_solution_space(self, runner, report_path):
        result = invoke(runner, report_path, 'verify-theorem1', '--m', '2', '--r', '0', '--degree', '1')
        assert result.exit_code == EXIT_PASS, result.output
        report = load(report_path)
        assert report['reading'] == 'graded'
        assert not report['vacuous']
        assert report['summary']['failed'] == 0

    def test_corrupted_basis_fails(self, runner, report_path):
        result = invoke(runner, report_path, 'verify-theorem1', '--m', '2', '--r', '0', '--degree', '1', '--corrupt')
        assert result.exit_code == EXIT_FAILURE
        assert load(report_path)['summary']['failed'] >= 1

    def test_kahlerian_cky_failure_fails_run(self, runner, report_path, failing_kahlerian_cky):
        result = invoke(runner, report_path, 'verify-theorem1', '--m', '2', '--r', '1', '--degree', '1')
        assert result.exit_code == EXIT_FAILURE
        report = load(report_path)
        failed = [row for row in report['rows'] if not row['pass']]
        assert failed
        assert all(row['equation'] == 'kahlerian-cky' for row in failed)

    def test_riemannian_adds_cky_rows(self, runner, report_path):
        invoke(runner, report_path, 'verify-theorem1', '--variant', 'riemannian', '--m', '1', '--degree', '1')
        rows = load(report_path)['rows']
        cky = [row for row in rows if row['equation'] == 'cky']
        assert len(cky) == 4 * 3
        assert all(row['pass'] for row in cky)
