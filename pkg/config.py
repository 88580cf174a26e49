import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

# 尝试加载.env文件中的环境变量
try:
    from dotenv import load_dotenv
except ImportError:  # python-dotenv 未安装时只使用进程环境变量
    load_dotenv = None

_env_path = Path('.') / '.env'
if load_dotenv is not None and _env_path.exists():
    load_dotenv(dotenv_path=_env_path)

TOOL_VERSION = '1.0.0'

# 维度配置
MIN_HALF_DIMENSION = 1  # 最小复维数 m
MAX_HALF_DIMENSION = 4  # 最大复维数 m（纤维维数 2^{2m} ≤ 256）

# 计算后端配置
BACKENDS = ('exact', 'float')
DEFAULT_BACKEND = os.environ.get('KTS_BACKEND', 'exact')  # exact: 高斯有理数; float: 双精度复数
FLOAT_NULLSPACE_RCOND = 1e-10  # 浮点零空间的奇异值截断

# 容差与采样配置
DEFAULT_TOLERANCE = float(os.environ.get('KTS_TOLERANCE', '1e-9'))  # 残差判定容差
SOLUTION_TOLERANCE = 1e-10  # 求解器解的复核容差
SAMPLE_POINTS = 20  # 浮点残差的采样点数
SAMPLE_BOX = (-1.0, 1.0)  # 采样点所在的立方体
DEFAULT_SEED = int(os.environ.get('KTS_SEED', '20240501'))

# 多项式与测试配置
DEFAULT_DEGREE_BOUND = 3  # 多项式截面的默认次数上界
MAX_ANSATZ_DEGREE = 3  # 求解器允许的最大拟设次数
IDENTITY_CASES = int(os.environ.get('KTS_IDENTITY_CASES', '1000'))  # 每个恒等式的随机用例数
FIELD_IDENTITY_CASES = 25  # 场恒等式的随机截面数
RANDOM_COEFFICIENT_RANGE = 3  # 随机高斯整数系数的范围 [-3, 3]

# 旋量配对配置
INVOLUTIONS = ('xi', 'xi*', 'xi-eta', 'xi-eta*')  # 可容许的对合
DEFAULT_INVOLUTION = 'xi'

# 扭量变体
VARIANTS = (
    'riemannian', 'kahlerian', 'hijazi', 'kirchberg-display', 'kirchberg-text',
    'middle', 'holomorphic', 'anti-holomorphic',
)
DEFAULT_VARIANT = 'kahlerian'
THEOREM1_READINGS = ('bigraded', 'graded')

# 输出配置
OUTPUT_FOLDER = os.environ.get('KTS_OUTPUT_FOLDER', 'out')  # 报告输出目录
REPORT_FILE = 'report.json'  # 默认报告文件名

# 日志配置
LOG_LEVEL = os.environ.get('KTS_LOG_LEVEL', 'INFO')
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


@dataclass
class RunConfig:
    """一次命令行运行的完整配置，种子决定所有随机采样"""
    command: str
    m: int = 2
    r: int = 0
    degree: int = 1
    variant: str = DEFAULT_VARIANT
    involution: str = DEFAULT_INVOLUTION
    backend: str = DEFAULT_BACKEND
    seed: int = DEFAULT_SEED
    tolerance: float = DEFAULT_TOLERANCE
    out: Optional[str] = None
    hijazi_a: Optional[str] = None
    hijazi_b: Optional[str] = None
    reading: str = 'graded'
    cases: int = IDENTITY_CASES
    corrupt: bool = False

    def to_dict(self) -> dict:
        return {
            'command': self.command,
            'm': self.m,
            'r': self.r,
            'degree': self.degree,
            'variant': self.variant,
            'involution': self.involution,
            'backend': self.backend,
            'seed': self.seed,
            'tolerance': self.tolerance,
            'reading': self.reading,
            'cases': self.cases,
            'corrupt': self.corrupt,
            'hijazi_a': self.hijazi_a,
            'hijazi_b': self.hijazi_b,
        }


def validate_config():
    """验证配置是否有效"""
    if not MIN_HALF_DIMENSION <= MAX_HALF_DIMENSION:
        raise ValueError("维度范围无效")

    if DEFAULT_BACKEND not in BACKENDS:
        raise ValueError(f"未知的计算后端: {DEFAULT_BACKEND}")

    if DEFAULT_TOLERANCE <= 0:
        raise ValueError(f"容差必须为正数: {DEFAULT_TOLERANCE}")

    if IDENTITY_CASES <= 0:
        raise ValueError(f"随机用例数必须为正数: {IDENTITY_CASES}")

    # 创建必要的目录
    if not os.path.exists(OUTPUT_FOLDER):
        os.makedirs(OUTPUT_FOLDER)


def validate_run_config(cfg: RunConfig):
    """验证一次运行的配置

    Args:
        cfg: 运行配置

    Raises:
        ValueError: 任一不变量被违反
    """
    if not cfg.tolerance > 0:
        raise ValueError(f"容差必须大于0: {cfg.tolerance}")
    if not MIN_HALF_DIMENSION <= cfg.m <= MAX_HALF_DIMENSION:
        raise ValueError(f"m 必须在 {MIN_HALF_DIMENSION}-{MAX_HALF_DIMENSION} 之间: {cfg.m}")
    if not 0 <= cfg.r <= cfg.m:
        raise ValueError(f"类型 r 必须在 0-{cfg.m} 之间: {cfg.r}")
    if not 0 <= cfg.degree <= MAX_ANSATZ_DEGREE:
        raise ValueError(f"拟设次数必须在 0-{MAX_ANSATZ_DEGREE} 之间: {cfg.degree}")
    if cfg.backend not in BACKENDS:
        raise ValueError(f"未知的计算后端: {cfg.backend}")
    if cfg.involution not in INVOLUTIONS:
        raise ValueError(f"未知的对合: {cfg.involution}")
    if cfg.variant not in VARIANTS:
        raise ValueError(f"未知的扭量变体: {cfg.variant}")
    if cfg.variant == 'middle' and cfg.m % 2:
        raise ValueError(f"中间类型要求 m 为偶数: m={cfg.m}")
    if cfg.variant == 'kirchberg-display' and cfg.r == 0:
        raise ValueError("Kirchberg 显示式系数 1/(4r) 在 r=0 时无定义")
    if cfg.variant == 'hijazi' and (cfg.hijazi_a is None or cfg.hijazi_b is None):
        raise ValueError("hijazi 变体需要 --a 与 --b 两个实数参数")
    if cfg.reading not in THEOREM1_READINGS:
        raise ValueError(f"未知的定理读法: {cfg.reading}")
    if cfg.cases <= 0:
        raise ValueError(f"随机用例数必须为正数: {cfg.cases}")


def get_tolerance(backend: str, tolerance: Optional[float] = None) -> float:
    """获取残差判定容差

    Args:
        backend: 计算后端名称
        tolerance: 显式给出的容差，None表示使用默认值

    Returns:
        精确后端返回0（要求精确为零），浮点后端返回容差
    """
    if backend == 'exact':
        return 0.0
    return DEFAULT_TOLERANCE if tolerance is None else tolerance


def get_sample_points(count: Optional[int] = None) -> int:
    """获取采样点数量"""
    return SAMPLE_POINTS if count is None else max(1, count)


def get_output_path(out: Optional[str] = None) -> str:
    """获取报告输出路径

    Args:
        out: 显式给出的输出路径

    Returns:
        输出文件路径，未指定时位于输出目录下
    """
    if out:
        return out
    return os.path.join(OUTPUT_FOLDER, REPORT_FILE)
