"""
系数后端模块
精确后端使用 sympy 的高斯有理数域 QQ_I，浮点后端使用双精度复数与 numpy/scipy
"""

import logging
from fractions import Fraction
from typing import Any, Dict, List, Sequence

import numpy as np
from scipy.linalg import null_space
from sympy import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

import config

logger = logging.getLogger(__name__)


class Backend:
    """系数后端接口：标量运算、序列化与线性代数"""

    name = 'base'
    exact = False

    def convert(self, value: Any) -> Any:
        raise NotImplementedError

    def conj(self, value: Any) -> Any:
        raise NotImplementedError

    def is_zero(self, value: Any) -> bool:
        """判断系数是否严格为零（构造时丢弃零项用）"""
        raise NotImplementedError

    def magnitude(self, value: Any) -> float:
        raise NotImplementedError

    def to_json(self, value: Any) -> list:
        raise NotImplementedError

    def from_json(self, pair: Sequence) -> Any:
        raise NotImplementedError

    def nullspace(self, rows: Dict[int, Dict[int, Any]], nrows: int, ncols: int) -> List[List[Any]]:
        raise NotImplementedError

    def rank(self, matrix: List[List[Any]]) -> int:
        raise NotImplementedError

    def fraction(self, numerator: int, denominator: int = 1) -> Any:
        return self.convert(Fraction(numerator, denominator))

    def random_coefficient(self, rng: np.random.Generator, bound: int = config.RANDOM_COEFFICIENT_RANGE) -> Any:
        """生成小的随机高斯整数系数（两个后端使用同一随机序列）"""
        re, im = rng.integers(-bound, bound + 1, size=2)
        return self.convert(complex(int(re), int(im)))

    def __repr__(self):
        return f"{self.__class__.__name__}()"


class ExactBackend(Backend):
    """高斯有理数后端，所有运算精确"""

    name = 'exact'
    exact = True

    def __init__(self):
        self.zero = QQ_I(0)
        self.one = QQ_I(1)
        self.imag_unit = QQ_I(0, 1)
        self.half = QQ_I(QQ(1, 2))

    def convert(self, value: Any) -> Any:
        if isinstance(value, QQ_I.dtype):
            return value
        if isinstance(value, bool):
            return QQ_I(int(value))
        if isinstance(value, int):
            return QQ_I(value)
        if isinstance(value, Fraction):
            return QQ_I(QQ(value.numerator, value.denominator))
        if isinstance(value, float):
            if not value.is_integer():
                raise TypeError(f"精确后端不接受非整数浮点系数: {value}")
            return QQ_I(int(value))
        if isinstance(value, (complex, np.complexfloating)):
            re, im = float(value.real), float(value.imag)
            if not (re.is_integer() and im.is_integer()):
                raise TypeError(f"精确后端不接受非整数复数系数: {value}")
            return QQ_I(int(re), int(im))
        if isinstance(value, np.integer):
            return QQ_I(int(value))
        if isinstance(value, tuple) and len(value) == 2:
            return QQ_I(self._rational(value[0]), self._rational(value[1]))
        return QQ_I.convert(value)

    @staticmethod
    def _rational(value: Any) -> Any:
        value = Fraction(value)
        return QQ(value.numerator, value.denominator)

    def conj(self, value: Any) -> Any:
        return value.new(value.x, -value.y)

    def is_zero(self, value: Any) -> bool:
        return not value

    def magnitude(self, value: Any) -> float:
        return abs(complex(float(value.x), float(value.y)))

    def to_json(self, value: Any) -> list:
        # 有理数以 "分子/分母" 字符串保存，保证逐位往返
        return [f"{value.x.numerator}/{value.x.denominator}",
                f"{value.y.numerator}/{value.y.denominator}"]

    def from_json(self, pair: Sequence) -> Any:
        return self.convert((Fraction(pair[0]), Fraction(pair[1])))

    def nullspace(self, rows: Dict[int, Dict[int, Any]], nrows: int, ncols: int) -> List[List[Any]]:
        """稀疏矩阵的精确零空间，返回基向量列表"""
        if ncols == 0:
            return []
        sparse = {i: {j: v for j, v in row.items() if v} for i, row in rows.items()}
        sparse = {i: row for i, row in sparse.items() if row}
        if not sparse:
            return [[self.one if i == j else self.zero for j in range(ncols)] for i in range(ncols)]
        matrix = DomainMatrix(sparse, (max(nrows, 1), ncols), QQ_I)
        basis = matrix.nullspace().to_list()
        logger.debug(f"精确零空间: {nrows}x{ncols} 矩阵, 零化度 {len(basis)}")
        return [self._normalize(vector) for vector in basis]

    def _normalize(self, vector: List[Any]) -> List[Any]:
        pivot = next((v for v in vector if v), None)
        if pivot is None:
            return vector
        return [v / pivot for v in vector]

    def rank(self, matrix: List[List[Any]]) -> int:
        if not matrix or not matrix[0]:
            return 0
        return DomainMatrix([list(row) for row in matrix], (len(matrix), len(matrix[0])), QQ_I).rank()


class FloatBackend(Backend):
    """双精度复数后端"""

    name = 'float'
    exact = False

    def __init__(self, rcond: float = config.FLOAT_NULLSPACE_RCOND):
        self.zero = 0j
        self.one = 1 + 0j
        self.imag_unit = 1j
        self.half = 0.5 + 0j
        self.rcond = rcond

    def convert(self, value: Any) -> Any:
        if isinstance(value, QQ_I.dtype):
            return complex(float(value.x), float(value.y))
        if isinstance(value, tuple) and len(value) == 2:
            return complex(float(Fraction(value[0])), float(Fraction(value[1])))
        return complex(value)

    def conj(self, value: Any) -> Any:
        return value.conjugate()

    def is_zero(self, value: Any) -> bool:
        return value == 0

    def magnitude(self, value: Any) -> float:
        return abs(value)

    def to_json(self, value: Any) -> list:
        return [value.real, value.imag]

    def from_json(self, pair: Sequence) -> Any:
        return complex(float(pair[0]), float(pair[1]))

    def nullspace(self, rows: Dict[int, Dict[int, Any]], nrows: int, ncols: int) -> List[List[Any]]:
        if ncols == 0:
            return []
        dense = np.zeros((max(nrows, 1), ncols), dtype=complex)
        for i, row in rows.items():
            for j, v in row.items():
                dense[i, j] = v
        basis = null_space(dense, rcond=self.rcond)
        logger.debug(f"浮点零空间: {nrows}x{ncols} 矩阵, 零化度 {basis.shape[1]}")
        vectors = []
        for column in basis.T:
            # 归一化到最大分量为1，便于按单位尺度比较残差
            index = int(np.argmax(np.abs(column)))
            vectors.append([complex(v) for v in column / column[index]])
        return vectors

    def rank(self, matrix: List[List[Any]]) -> int:
        if not matrix or not matrix[0]:
            return 0
        return int(np.linalg.matrix_rank(np.array(matrix, dtype=complex), tol=self.rcond))


EXACT = ExactBackend()
FLOAT = FloatBackend()

_BACKENDS = {'exact': EXACT, 'float': FLOAT}


def get_backend(name: str) -> Backend:
    """根据名称获取后端实例

    Args:
        name: 'exact' 或 'float'

    Returns:
        Backend: 共享的后端实例
    """
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"未知的计算后端: {name}") from None
