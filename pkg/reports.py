"""
残差报告模块
逐方程的最大残差记录、残差测量以及 JSON 报告写出
"""

import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import config
from fields import PolySection, max_abs_at_points, sample_points

logger = logging.getLogger(__name__)

EXACT_ZERO = '0 (exact)'


@dataclass
class ResidualReport:
    """单个方程的残差检验结果"""
    equation: str
    variant: str
    m: int
    max_residual: float
    exact: bool
    points: int
    tolerance: float
    r: Optional[int] = None
    p: Optional[int] = None
    q: Optional[int] = None
    detail: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    @property
    def exact_zero(self) -> bool:
        return self.exact and self.max_residual == 0

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'equation': self.equation,
            'variant': self.variant,
            'm': self.m,
            'r': self.r,
            'p': self.p,
            'q': self.q,
            'max_residual': EXACT_ZERO if self.exact_zero else float(self.max_residual),
            'points': self.points,
            'pass': self.passed,
            'tolerance': self.tolerance,
        }
        if self.detail:
            data['detail'] = self.detail
        return data


def measure_residual(sections: Iterable[PolySection],
                     points: Optional[Sequence[Sequence[float]]] = None,
                     seed: int = config.DEFAULT_SEED) -> Tuple[float, bool, int]:
    """测量一组残差截面的最大值

    精确后端直接比较全部系数（符号意义下的零），浮点后端在采样点上求值。

    Returns:
        (最大残差, 是否精确计算, 采样点数；精确计算时为 0)
    """
    sections = list(sections)
    if not sections:
        return 0.0, True, 0
    if sections[0].backend.exact:
        return max(s.coefficient_max_abs() for s in sections), True, 0
    if points is None:
        points = sample_points(sections[0].m, seed=seed)
    return max(max_abs_at_points(s, points) for s in sections), False, len(points)


def make_report(equation: str, variant: str, m: int, sections: Iterable[PolySection],
                tolerance: float, points: Optional[Sequence[Sequence[float]]] = None,
                r: Optional[int] = None, p: Optional[int] = None, q: Optional[int] = None,
                detail: Optional[str] = None) -> ResidualReport:
    value, exact, count = measure_residual(sections, points)
    report = ResidualReport(equation, variant, m, value, exact, count, tolerance, r, p, q, detail)
    if not report.passed:
        logger.warning(f"残差超出容差: {equation} ({variant}, m={m}, r={r}, p={p}, q={q}) = {value:.3e}")
    return report


def summarize(rows: Sequence[ResidualReport]) -> Dict[str, int]:
    passed = sum(1 for row in rows if row.passed)
    return {'total': len(rows), 'passed': passed, 'failed': len(rows) - passed}


class ReportWriter:
    """报告写出器"""

    @staticmethod
    def save(payload: Dict[str, Any], output_file: str, run_config: Optional[Dict[str, Any]] = None,
             include_metadata: bool = True) -> bool:
        """
        保存报告到JSON文件（键排序，不含时间戳，同一配置输出逐字节一致）

        Args:
            payload: 报告内容
            output_file: 输出文件路径
            run_config: 运行配置，写入元数据
            include_metadata: 是否包含元数据

        Returns:
            保存是否成功
        """
        try:
            output_data = dict(payload)
            if include_metadata:
                rows = output_data.get('rows', [])
                output_data['metadata'] = {
                    'tool_version': config.TOOL_VERSION,
                    'run_config': run_config or {},
                    'total_rows': len(rows),
                    'passed_rows': sum(1 for row in rows if row.get('pass')),
                    'failed_rows': sum(1 for row in rows if not row.get('pass')),
                }

            # 确保输出目录存在
            output_dir = os.path.dirname(output_file)
            if output_dir:
                os.makedirs(output_dir, exist_ok=True)

            with open(output_file, 'w', encoding='utf-8') as f:
                json.dump(output_data, f, ensure_ascii=False, indent=2, sort_keys=True)
                f.write('\n')

            logger.info(f"报告已保存到: {output_file}")
            return True

        except (OSError, TypeError, ValueError) as e:
            logger.error(f"保存报告失败: {e}")
            return False

    @staticmethod
    def rows_to_dicts(rows: Iterable[ResidualReport]) -> List[Dict[str, Any]]:
        return [row.to_dict() for row in rows]
