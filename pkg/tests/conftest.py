import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))
sys.path.insert(0, str(ROOT / 'scripts'))


@pytest.fixture
def report_path(tmp_path):
    return tmp_path / 'report.json'


@pytest.fixture
def failing_kahlerian_cky(monkeypatch):
    """让条件成立后的 Kähler 型 CKY 检验恒定失败"""
    import bilinear
    from reports import ResidualReport

    def fail(omega, p, q=None, *args, **kwargs):
        return ResidualReport('kahlerian-cky', kwargs.get('variant', ''), omega.m, 1.0, True, 0, 0.0, p=p, q=q)

    monkeypatch.setattr(bilinear, 'kahlerian_cky_residual', fail)
    return fail
