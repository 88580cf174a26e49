import os
from dataclasses import replace

import pytest

import config


def make(**overrides):
    return replace(config.RunConfig(command='verify-theorem1'), **overrides)


class TestValidateRunConfig:
    def test_defaults_are_valid(self):
        config.validate_run_config(make())

    def test_default_reading_is_graded(self):
        assert make().reading == 'graded'

    @pytest.mark.parametrize('overrides', [
        {'tolerance': 0.0},
        {'tolerance': -1e-9},
        {'m': 0},
        {'m': config.MAX_HALF_DIMENSION + 1},
        {'r': 3, 'm': 2},
        {'r': -1},
        {'degree': -1},
        {'degree': config.MAX_ANSATZ_DEGREE + 1},
        {'backend': 'mpmath'},
        {'involution': 'eta'},
        {'variant': 'unknown'},
        {'variant': 'middle', 'm': 3, 'r': 1},
        {'variant': 'kirchberg-display', 'r': 0},
        {'variant': 'hijazi'},
        {'reading': 'tri-graded'},
        {'cases': 0},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ValueError):
            config.validate_run_config(make(**overrides))

    def test_hijazi_with_parameters(self):
        config.validate_run_config(make(variant='hijazi', hijazi_a='1/4', hijazi_b='0'))

    def test_to_dict_contains_seed_and_reading(self):
        data = make(seed=7).to_dict()
        assert data['seed'] == 7
        assert data['reading'] == 'graded'
        assert data['command'] == 'verify-theorem1'


class TestGetters:
    def test_exact_tolerance_is_zero(self):
        assert config.get_tolerance('exact', 1e-3) == 0.0

    def test_float_tolerance(self):
        assert config.get_tolerance('float') == config.DEFAULT_TOLERANCE
        assert config.get_tolerance('float', 1e-6) == 1e-6

    def test_sample_points(self):
        assert config.get_sample_points() == config.SAMPLE_POINTS
        assert config.get_sample_points(0) == 1

    def test_output_path(self):
        assert config.get_output_path('a/b.json') == 'a/b.json'
        assert config.get_output_path() == os.path.join(config.OUTPUT_FOLDER, config.REPORT_FILE)
