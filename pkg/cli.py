#!/usr/bin/env python3
"""
Kähler 扭量旋量检验命令行工具

三个子命令：
    verify-identities  纤维代数、场算子与旋量表示的恒等式套件
    solve-twistor      求解多项式扭量旋量的解空间并检查维数上界
    verify-theorem1    在解空间上检验双线性型方程及 Kähler 型 CKY 条件

所有命令写出 JSON 报告，退出码：0 全部通过，1 检验失败，2 用法错误
"""

import logging
import sys
from fractions import Fraction
from typing import List, Optional

import click

import config
from backends import get_backend
from bilinear import BIGRADED, GRADED, Theorem1Result, cky_residual, grade_section, square_map, verify_theorem1
from fiber_algebra import Involution
from fields import Monomial, PolySection, sample_points, section_to_json
from identity_suites import run_fiber_suite, run_field_suite, run_spinor_suite
from kahler_structure import flat_structure
from reports import ReportWriter, ResidualReport, summarize
from spinor_rep import CalibrationError, PairingError, SpinorFiber, build_pairing, build_rep
from twistor import (
    RIEMANNIAN,
    BoundViolationError,
    SolutionSpace,
    TwistorVariant,
    VariantError,
    solve_space,
    verify_solution_space,
)

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAILURE = 1


def _setup_logging(verbose: bool):
    logging.basicConfig(level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO), format=config.LOG_FORMAT)
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


def _parse_real(ctx, param, value: Optional[str]) -> Optional[str]:
    """--a / --b 接受有理数写法（如 1/4、0.25），原样保留字符串以便写入报告"""
    if value is None:
        return None
    try:
        Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"不是有效的实数: {value}")
    return value


def common_options(func):
    """三个子命令共用的选项"""
    options = [
        click.option('--m', 'm', type=int, default=2, show_default=True, help='复维数 m（实维数 2m）'),
        click.option('--r', 'r', type=int, default=0, show_default=True, help='旋量类型 r'),
        click.option('--degree', type=int, default=1, show_default=True, help='多项式拟设次数上界'),
        click.option('--variant', type=click.Choice(config.VARIANTS), default=config.DEFAULT_VARIANT,
                     show_default=True, help='扭量方程变体'),
        click.option('--involution', type=click.Choice(config.INVOLUTIONS), default=config.DEFAULT_INVOLUTION,
                     show_default=True, help='旋量配对的对合'),
        click.option('--backend', type=click.Choice(config.BACKENDS), default=config.DEFAULT_BACKEND,
                     show_default=True, help='exact: 高斯有理数; float: 双精度复数'),
        click.option('--seed', type=int, default=config.DEFAULT_SEED, show_default=True, help='随机种子'),
        click.option('--tolerance', type=float, default=config.DEFAULT_TOLERANCE, show_default=True,
                     help='浮点后端的残差容差（必须大于0）'),
        click.option('--out', type=click.Path(dir_okay=False), default=None, help='报告输出路径'),
        click.option('--a', 'hijazi_a', callback=_parse_real, default=None, help='hijazi 变体的系数 a'),
        click.option('--b', 'hijazi_b', callback=_parse_real, default=None, help='hijazi 变体的系数 b'),
        click.option('--verbose', '-v', is_flag=True, help='输出调试日志'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _build_config(command: str, params: dict) -> config.RunConfig:
    """由命令行参数构造并校验运行配置，非法时抛出 click.UsageError（退出码 2）"""
    fields = {key: value for key, value in params.items() if key != 'verbose'}
    cfg = config.RunConfig(command=command, **fields)
    try:
        config.validate_run_config(cfg)
    except ValueError as e:
        raise click.UsageError(str(e))
    return cfg


def _build_variant(cfg: config.RunConfig) -> TwistorVariant:
    a = Fraction(cfg.hijazi_a) if cfg.hijazi_a is not None else None
    b = Fraction(cfg.hijazi_b) if cfg.hijazi_b is not None else None
    try:
        return TwistorVariant.from_name(cfg.variant, cfg.m, cfg.r, a, b)
    except VariantError as e:
        raise click.UsageError(str(e))


def _save(payload: dict, cfg: config.RunConfig) -> bool:
    output_file = config.get_output_path(cfg.out)
    return ReportWriter.save(payload, output_file, cfg.to_dict())


def _echo_summary(title: str, rows: List[ResidualReport]):
    counts = summarize(rows)
    click.echo(f"{title}: {counts['passed']}/{counts['total']} 通过")
    for row in rows:
        if not row.passed:
            click.echo(f"  ✗ {row.equation} [{row.variant}] 残差 {row.max_residual:.3e}"
                       + (f" ({row.detail})" if row.detail else ''))


@click.group(epilog="""示例:

\b
  python cli.py verify-identities --m 1 --backend exact
  python cli.py solve-twistor --variant kahlerian --m 2 --r 1 --degree 1
  python cli.py verify-theorem1 --m 2 --r 0 --degree 1 --involution xi
  python cli.py verify-theorem1 --m 2 --corrupt
""")
def cli():
    """Kähler 扭量旋量及其双线性型的检验工具"""


@cli.command('verify-identities')
@common_options
@click.option('--cases', type=int, default=config.IDENTITY_CASES, show_default=True, help='纤维恒等式的随机用例数')
@click.pass_context
def verify_identities(ctx, **params):
    """运行纤维、场与旋量恒等式套件"""
    _setup_logging(params['verbose'])
    cfg = _build_config('verify-identities', params)
    backend = get_backend(cfg.backend)
    J = flat_structure(cfg.m)

    rows: List[ResidualReport] = []
    try:
        rows.extend(run_fiber_suite(cfg.m, cfg.cases, cfg.seed, backend, J, cfg.tolerance))
        rows.extend(run_field_suite(cfg.m, min(cfg.cases, config.FIELD_IDENTITY_CASES), cfg.seed, backend, J,
                                    tolerance=cfg.tolerance))
        rows.extend(run_spinor_suite(cfg.m, seed=cfg.seed, backend=backend, J=J, tolerance=cfg.tolerance))
    except CalibrationError as e:
        logger.error(f"表示校准失败: {e}")
        rows.append(ResidualReport('calibration', 'spinor', cfg.m, float('inf'), backend.exact, 0,
                                   config.get_tolerance(cfg.backend, cfg.tolerance), detail=str(e)))

    _echo_summary(f"恒等式套件 (m={cfg.m}, {cfg.backend})", rows)
    payload = {'command': cfg.command, 'rows': ReportWriter.rows_to_dicts(rows), 'summary': summarize(rows)}
    if not _save(payload, cfg):
        ctx.exit(EXIT_FAILURE)
    ctx.exit(EXIT_PASS if all(row.passed for row in rows) else EXIT_FAILURE)


@cli.command('solve-twistor')
@common_options
@click.pass_context
def solve_twistor(ctx, **params):
    """求解多项式扭量旋量解空间"""
    _setup_logging(params['verbose'])
    cfg = _build_config('solve-twistor', params)
    variant = _build_variant(cfg)
    backend = get_backend(cfg.backend)
    rep = build_rep(cfg.m, backend)
    J = flat_structure(cfg.m)

    try:
        space = solve_space(variant, cfg.m, cfg.degree, rep, J, backend)
    except BoundViolationError as e:
        logger.error(f"维数上界检查失败: {e}")
        click.echo(f"✗ {e}", err=True)
        _save({'command': cfg.command, 'error': str(e), 'rows': []}, cfg)
        ctx.exit(EXIT_FAILURE)

    rows = verify_solution_space(space, rep, J, cfg.seed)
    click.echo(f"解空间 {variant.label}: m={cfg.m}, 次数 {cfg.degree}, 维数 {space.dimension}"
               + (f", 上界 {space.bound}" if space.bound is not None else ''))
    _echo_summary("基元素复核", rows)
    payload = {
        'command': cfg.command,
        'solution_space': space.summary(),
        'basis': [section_to_json(element) for element in space.basis],
        'rows': ReportWriter.rows_to_dicts(rows),
        'summary': summarize(rows),
    }
    if not _save(payload, cfg):
        ctx.exit(EXIT_FAILURE)
    ctx.exit(EXIT_PASS if all(row.passed for row in rows) else EXIT_FAILURE)


def corrupted_basis(space: SolutionSpace) -> List[PolySection]:
    """负对照：在第一个基元素上叠加 x_1 s_0（一般不再是解）"""
    m = space.m
    perturbation = PolySection.monomial(Monomial.coordinate(m, 0), SpinorFiber.basis(m, 0, space.backend),
                                        max(space.degree, 1))
    if not space.basis:
        return [perturbation]
    first = space.basis[0].with_bound(max(space.degree, 1)) + perturbation
    return [first] + list(space.basis[1:])


def _cky_rows(space: SolutionSpace, basis: List[PolySection], pairing, rep, tolerance: float,
              seed: int) -> List[ResidualReport]:
    """Riemannian 解：每个次数的双线性型都应是共形 Killing-Yano 形式"""
    points = sample_points(space.m, seed=seed)
    rows = []
    for index, psi in enumerate(basis):
        omega = square_map(psi, pairing, rep)
        for p in range(2 * space.m + 1):
            row = cky_residual(grade_section(omega, p), p, tolerance, points, space.variant.label)
            row.detail = f"basis[{index}]"
            rows.append(row)
    return rows


@cli.command('verify-theorem1')
@common_options
@click.option('--reading', type=click.Choice(config.THEOREM1_READINGS), default=GRADED, show_default=True,
              help='graded: 按总次数; bigraded: 按 (p,q) 双次数')
@click.option('--corrupt', is_flag=True, help='负对照：扰动一个基元素，期望退出码 1')
@click.pass_context
def verify_theorem1_cmd(ctx, **params):
    """在解空间上检验双线性型方程"""
    _setup_logging(params['verbose'])
    cfg = _build_config('verify-theorem1', params)
    variant = _build_variant(cfg)
    backend = get_backend(cfg.backend)
    rep = build_rep(cfg.m, backend)
    J = flat_structure(cfg.m)
    tolerance = config.get_tolerance(cfg.backend, cfg.tolerance)

    try:
        pairing = build_pairing(rep, Involution.parse(cfg.involution))
        space = solve_space(variant, cfg.m, cfg.degree, rep, J, backend)
    except (PairingError, BoundViolationError) as e:
        logger.error(f"检验准备失败: {e}")
        click.echo(f"✗ {e}", err=True)
        _save({'command': cfg.command, 'error': str(e), 'rows': []}, cfg)
        ctx.exit(EXIT_FAILURE)

    basis = corrupted_basis(space) if cfg.corrupt else None
    if cfg.corrupt:
        logger.warning("负对照模式：第一个基元素已被扰动")
    result: Theorem1Result = verify_theorem1(space, pairing, rep, J, reading=cfg.reading, tolerance=cfg.tolerance,
                                             seed=cfg.seed, basis=basis)
    rows = list(result.rows)
    if variant.tag == RIEMANNIAN and not cfg.corrupt:
        rows.extend(_cky_rows(space, space.basis, pairing, rep, tolerance, cfg.seed))

    if result.vacuous:
        click.echo(f"解空间为空，检验为空真: {variant.label}, m={cfg.m}")
    _echo_summary(f"双线性型检验 ({cfg.reading}, {cfg.involution})", rows)
    payload = {
        'command': cfg.command,
        'solution_space': space.summary(),
        'vacuous': result.vacuous,
        'reading': cfg.reading if cfg.reading == GRADED else f"{BIGRADED}/frame",
        'rows': ReportWriter.rows_to_dicts(rows),
        'prop2': result.prop2,
        'summary': summarize(rows),
    }
    if not _save(payload, cfg):
        ctx.exit(EXIT_FAILURE)
    ctx.exit(EXIT_PASS if all(row.passed for row in rows) else EXIT_FAILURE)


def main():
    cli(prog_name='kts')


if __name__ == '__main__':
    sys.exit(main())
