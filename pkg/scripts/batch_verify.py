#!/usr/bin/env python3
"""
批量检验脚本
按 JSON 扫描配置展开 (m, r, 变体, 对合) 网格，并发运行双线性型检验，结果保存为 JSON

功能特性:
- 从扫描配置展开任务网格，跳过非法组合
- 线程池并发执行，带进度回调
- 单个任务异常不影响其他任务
- 结果按任务顺序保存，含汇总元数据
"""

import itertools
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import config  # noqa: E402
from backends import get_backend  # noqa: E402
from bilinear import verify_theorem1  # noqa: E402
from fiber_algebra import Involution  # noqa: E402
from kahler_structure import flat_structure  # noqa: E402
from reports import summarize  # noqa: E402
from spinor_rep import build_pairing, build_rep  # noqa: E402
from twistor import TwistorVariant, solve_space  # noqa: E402

logger = logging.getLogger(__name__)

DEFAULT_WORKERS = 4

ProgressCallback = Callable[[int, int, int], None]


def load_sweep_config(path: str) -> Dict[str, Any]:
    """读取扫描配置文件

    Raises:
        ValueError: 文件缺少 grid 段
    """
    with open(path, 'r', encoding='utf-8') as f:
        sweep = json.load(f)
    if 'grid' not in sweep:
        raise ValueError(f"扫描配置缺少 grid 段: {path}")
    return sweep


def expand_jobs(sweep: Dict[str, Any]) -> List[config.RunConfig]:
    """把网格展开为运行配置列表，非法组合记录警告后跳过"""
    grid = sweep['grid']
    base = config.RunConfig(
        command='verify-theorem1',
        degree=grid.get('degree', 1),
        backend=grid.get('backend', config.DEFAULT_BACKEND),
        seed=sweep.get('seed', config.DEFAULT_SEED),
        tolerance=sweep.get('tolerance', config.DEFAULT_TOLERANCE),
        reading=grid.get('reading', 'graded'),
        hijazi_a=grid.get('a'),
        hijazi_b=grid.get('b'),
    )
    jobs = []
    for m, r, variant, involution in itertools.product(grid.get('m', [2]), grid.get('r', [0]),
                                                      grid.get('variants', [config.DEFAULT_VARIANT]),
                                                      grid.get('involutions', [config.DEFAULT_INVOLUTION])):
        job = replace(base, m=m, r=r, variant=variant, involution=involution)
        try:
            config.validate_run_config(job)
        except ValueError as e:
            logger.warning(f"跳过非法组合 m={m}, r={r}, {variant}, {involution}: {e}")
            continue
        jobs.append(job)
    logger.info(f"扫描网格展开为 {len(jobs)} 个任务")
    return jobs


def run_job(cfg: config.RunConfig) -> Dict[str, Any]:
    """运行单个检验任务，返回可序列化的结果"""
    backend = get_backend(cfg.backend)
    a = Fraction(cfg.hijazi_a) if cfg.hijazi_a is not None else None
    b = Fraction(cfg.hijazi_b) if cfg.hijazi_b is not None else None
    variant = TwistorVariant.from_name(cfg.variant, cfg.m, cfg.r, a, b)
    rep = build_rep(cfg.m, backend)
    J = flat_structure(cfg.m)
    pairing = build_pairing(rep, Involution.parse(cfg.involution))
    space = solve_space(variant, cfg.m, cfg.degree, rep, J, backend)
    result = verify_theorem1(space, pairing, rep, J, reading=cfg.reading, tolerance=cfg.tolerance, seed=cfg.seed)
    return {
        'solution_space': space.summary(),
        'vacuous': result.vacuous,
        'passed': result.passed,
        'summary': summarize(result.rows),
        'failed_rows': [row.to_dict() for row in result.rows if not row.passed],
    }


class SweepRunner:
    """批量检验执行器"""

    def __init__(self, max_workers: int = DEFAULT_WORKERS, job_func: Callable[[config.RunConfig], Dict] = run_job):
        """
        初始化执行器

        Args:
            max_workers: 最大并发工作线程数
            job_func: 单个任务的执行函数
        """
        self.max_workers = max_workers
        self.job_func = job_func

    def run(self, jobs: List[config.RunConfig],
            progress_callback: Optional[ProgressCallback] = None) -> List[Dict[str, Any]]:
        """
        并发执行全部任务

        Args:
            jobs: 运行配置列表
            progress_callback: 进度回调函数 (completed, total, failed)

        Returns:
            按任务顺序排列的结果列表
        """
        logger.info(f"开始批量检验 {len(jobs)} 个任务，并发线程数: {self.max_workers}")
        results: List[Optional[Dict[str, Any]]] = [None] * len(jobs)
        completed = 0
        failed = 0
        start_time = time.time()

        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            future_to_index = {executor.submit(self.job_func, job): index for index, job in enumerate(jobs)}

            for future in as_completed(future_to_index):
                index = future_to_index[future]
                job = jobs[index]
                completed += 1
                entry = {'job': job.to_dict()}
                try:
                    data = future.result()
                    entry.update(success=data['passed'], data=data)
                    if data['passed']:
                        logger.info(f"[{completed}/{len(jobs)}] 通过: {job.variant} m={job.m} r={job.r} {job.involution}")
                    else:
                        failed += 1
                        logger.error(f"[{completed}/{len(jobs)}] 失败: {job.variant} m={job.m} r={job.r} {job.involution}")
                except Exception as e:
                    failed += 1
                    entry.update(success=False, error=str(e))
                    logger.error(f"[{completed}/{len(jobs)}] 异常: {job.variant} m={job.m} r={job.r} - {e}")
                results[index] = entry

                if progress_callback:
                    progress_callback(completed, len(jobs), failed)

        logger.info(f"批量检验完成: 通过 {len(jobs) - failed}/{len(jobs)}，耗时 {time.time() - start_time:.2f} 秒")
        return results


class ResultManager:
    """结果管理器"""

    @staticmethod
    def save_results(results: List[Dict[str, Any]], output_file: str, sweep: Optional[Dict[str, Any]] = None,
                     include_metadata: bool = True) -> bool:
        """
        保存结果到JSON文件（不含时间戳，同一扫描配置输出一致）

        Returns:
            保存是否成功
        """
        try:
            output_data: Dict[str, Any] = {'results': results}
            if include_metadata:
                output_data['metadata'] = {
                    'total_jobs': len(results),
                    'passed_jobs': sum(1 for r in results if r.get('success')),
                    'failed_jobs': sum(1 for r in results if not r.get('success')),
                    'vacuous_jobs': sum(1 for r in results if r.get('data', {}).get('vacuous')),
                    'sweep': sweep or {},
                    'tool_version': config.TOOL_VERSION,
                }

            output_dir = os.path.dirname(output_file)
            if output_dir:
                os.makedirs(output_dir, exist_ok=True)

            with open(output_file, 'w', encoding='utf-8') as f:
                json.dump(output_data, f, ensure_ascii=False, indent=2, sort_keys=True)
                f.write('\n')

            logger.info(f"结果已保存到: {output_file}")
            return True

        except (OSError, TypeError, ValueError) as e:
            logger.error(f"保存结果失败: {e}")
            return False


def create_progress_callback() -> ProgressCallback:
    """创建进度回调函数"""
    def progress_callback(completed: int, total: int, failed: int):
        percentage = (completed / total) * 100
        logger.info(f"进度: {completed}/{total} ({percentage:.1f}%) | 失败: {failed}")

    return progress_callback


@click.command(epilog="""使用示例:

\b
  python scripts/batch_verify.py scripts/sweep_config_example.json -o out/sweep.json
  python scripts/batch_verify.py sweep.json --workers 8 -v
""")
@click.argument('sweep_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--output', '-o', default=os.path.join(config.OUTPUT_FOLDER, 'sweep_results.json'),
              show_default=True, help='输出文件路径')
@click.option('--workers', type=int, default=None, help='并发工作线程数（默认取扫描配置中的 workers）')
@click.option('--verbose', '-v', is_flag=True, help='启用详细日志输出')
def main(sweep_file: str, output: str, workers: Optional[int], verbose: bool):
    """按扫描配置批量运行双线性型检验"""
    logging.basicConfig(level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO), format=config.LOG_FORMAT)
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        sweep = load_sweep_config(sweep_file)
    except (OSError, ValueError) as e:
        logger.error(f"读取扫描配置失败: {e}")
        sys.exit(2)

    jobs = expand_jobs(sweep)
    if not jobs:
        logger.warning("扫描网格中没有合法任务")
        sys.exit(0)

    runner = SweepRunner(workers or sweep.get('workers', DEFAULT_WORKERS))
    results = runner.run(jobs, create_progress_callback())
    if not ResultManager.save_results(results, output, sweep):
        sys.exit(1)
    sys.exit(0 if all(r.get('success') for r in results) else 1)


if __name__ == '__main__':
    main()
