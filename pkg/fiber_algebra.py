"""
纤维代数模块
2m 维实余切纤维上的外代数与 Clifford 代数（复系数），包括对合与分次投影

基元素用 2m 位掩码表示：第 2a 位为 e^{a+1}，第 2a+1 位为 Je^{a+1}
Clifford 乘法约定 v.v = +g(v,v)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

import config
from backends import EXACT, Backend

logger = logging.getLogger(__name__)


class DimensionError(ValueError):
    """维数不匹配或超出范围"""


class GradeError(ValueError):
    """分次超出范围或输入不是齐次元素"""


_POPCOUNT = np.bitwise_count(np.arange(1 << (2 * config.MAX_HALF_DIMENSION), dtype=np.uint16)).tolist()


def popcount(mask: int) -> int:
    return _POPCOUNT[mask]


def check_half_dimension(m: int) -> int:
    if not isinstance(m, (int, np.integer)) or not config.MIN_HALF_DIMENSION <= m <= config.MAX_HALF_DIMENSION:
        raise DimensionError(f"复维数 m 必须在 {config.MIN_HALF_DIMENSION}-{config.MAX_HALF_DIMENSION} 之间: {m}")
    return int(m)


@lru_cache(maxsize=None)
def sign_table(m: int) -> List[List[int]]:
    """基元素乘积的符号表

    sign[A][B] = (-1)^{#(i∈A, j∈B, i>j)}，即把 e_A e_B 排成升序所需对换数的奇偶性。
    同一张表同时给出楔积（A∩B=∅ 时）与 Clifford 积的符号。

    Args:
        m: 复维数

    Returns:
        2^{2m} x 2^{2m} 的 ±1 列表
    """
    n = 2 * check_half_dimension(m)
    index = np.arange(1 << n, dtype=np.uint16)
    swaps = np.zeros((1 << n, 1 << n), dtype=np.int64)
    for j in range(n):
        in_b = ((index >> j) & 1).astype(np.int64)
        above = np.bitwise_count(index >> (j + 1)).astype(np.int64)
        swaps += np.outer(above, in_b)
    logger.debug(f"构建符号表: m={m}, 基元素数 {1 << n}")
    return (1 - 2 * (swaps & 1)).tolist()


@dataclass(frozen=True, eq=False)
class FormFiber:
    """纤维中的 Clifford 形式（多重向量），系数只保存非零项"""

    m: int
    coeffs: Mapping[int, Any]
    backend: Backend = EXACT

    def __post_init__(self):
        check_half_dimension(self.m)
        limit = 1 << (2 * self.m)
        cleaned = {}
        for mask, value in self.coeffs.items():
            if not 0 <= mask < limit:
                raise DimensionError(f"基元素 {mask} 超出 m={self.m} 的纤维")
            value = self.backend.convert(value)
            if not self.backend.is_zero(value):
                cleaned[mask] = value
        object.__setattr__(self, 'coeffs', MappingProxyType(cleaned))

    # 构造函数

    @classmethod
    def zero(cls, m: int, backend: Backend = EXACT) -> 'FormFiber':
        return cls(m, {}, backend)

    @classmethod
    def scalar(cls, m: int, value: Any = 1, backend: Backend = EXACT) -> 'FormFiber':
        return cls(m, {0: value}, backend)

    @classmethod
    def generator(cls, m: int, k: int, backend: Backend = EXACT) -> 'FormFiber':
        """第 k 个基 1-形式（k 从 0 开始，偶数为 e^a，奇数为 Je^a）"""
        if not 0 <= k < 2 * m:
            raise DimensionError(f"生成元下标超出范围: k={k}, m={m}")
        return cls(m, {1 << k: 1}, backend)

    @classmethod
    def blade(cls, m: int, indices: Sequence[int], value: Any = 1, backend: Backend = EXACT) -> 'FormFiber':
        """由生成元下标序列构造 e^{i1}∧...∧e^{ip}（按给定顺序，带排序符号）"""
        result = cls.scalar(m, value, backend)
        for k in indices:
            result = wedge(result, cls.generator(m, k, backend))
        return result

    # 基本性质

    @property
    def dimension(self) -> int:
        return 2 * self.m

    def grades(self) -> List[int]:
        return sorted({popcount(mask) for mask in self.coeffs})

    def grade(self) -> int:
        """齐次元素的次数；零元素返回 0"""
        present = self.grades()
        if len(present) > 1:
            raise GradeError(f"元素不是齐次的，包含次数 {present}")
        return present[0] if present else 0

    def is_homogeneous(self) -> bool:
        return len(self.grades()) <= 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, mask: int) -> Any:
        return self.coeffs.get(mask, self.backend.zero)

    def max_abs(self) -> float:
        return max((self.backend.magnitude(v) for v in self.coeffs.values()), default=0.0)

    def to_backend(self, backend: Backend) -> 'FormFiber':
        return FormFiber(self.m, {k: backend.convert(v) for k, v in self.coeffs.items()}, backend)

    # 线性运算

    def _check_same(self, other: 'FormFiber'):
        if not isinstance(other, FormFiber):
            raise TypeError(f"期望 FormFiber, 得到 {type(other).__name__}")
        _check_pair(self, other)

    def __add__(self, other: 'FormFiber') -> 'FormFiber':
        self._check_same(other)
        result = dict(self.coeffs)
        for mask, value in other.coeffs.items():
            result[mask] = result[mask] + value if mask in result else value
        return FormFiber(self.m, result, self.backend)

    def __neg__(self) -> 'FormFiber':
        return FormFiber(self.m, {k: -v for k, v in self.coeffs.items()}, self.backend)

    def __sub__(self, other: 'FormFiber') -> 'FormFiber':
        return self + (-other)

    def scale(self, factor: Any) -> 'FormFiber':
        factor = self.backend.convert(factor)
        return FormFiber(self.m, {k: v * factor for k, v in self.coeffs.items()}, self.backend)

    def __rmul__(self, factor: Any) -> 'FormFiber':
        return self.scale(factor)

    def conjugate(self) -> 'FormFiber':
        return FormFiber(self.m, {k: self.backend.conj(v) for k, v in self.coeffs.items()}, self.backend)

    def equals(self, other: 'FormFiber', tolerance: float = 0.0) -> bool:
        """逐系数比较；精确后端要求严格相等"""
        return (self - other).max_abs() <= tolerance

    def __repr__(self):
        if not self.coeffs:
            return f"FormFiber(m={self.m}, 0)"
        terms = ', '.join(f"{_mask_label(mask)}: {value}" for mask, value in sorted(self.coeffs.items()))
        return f"FormFiber(m={self.m}, {{{terms}}})"


def _mask_label(mask: int) -> str:
    if mask == 0:
        return '1'
    names = []
    k = 0
    while mask >> k:
        if (mask >> k) & 1:
            names.append(f"e{k // 2 + 1}" if k % 2 == 0 else f"Je{k // 2 + 1}")
        k += 1
    return '^'.join(names)


@dataclass(frozen=True, eq=False)
class VectorFiber:
    """切纤维中的复向量，分量按 X_1, JX_1, X_2, JX_2, ... 排列"""

    m: int
    components: Tuple[Any, ...]
    backend: Backend = EXACT

    def __post_init__(self):
        check_half_dimension(self.m)
        if len(self.components) != 2 * self.m:
            raise DimensionError(f"向量分量数必须为 {2 * self.m}: 得到 {len(self.components)}")
        object.__setattr__(self, 'components', tuple(self.backend.convert(c) for c in self.components))

    @classmethod
    def basis(cls, m: int, k: int, backend: Backend = EXACT) -> 'VectorFiber':
        if not 0 <= k < 2 * m:
            raise DimensionError(f"基向量下标超出范围: k={k}, m={m}")
        return cls(m, tuple(1 if i == k else 0 for i in range(2 * m)), backend)

    @classmethod
    def from_form(cls, form: FormFiber) -> 'VectorFiber':
        """1-形式的度量对偶"""
        if form.grades() not in ([], [1]):
            raise GradeError("只有 1-形式可以转为向量")
        return cls(form.m, tuple(form.coefficient(1 << k) for k in range(2 * form.m)), form.backend)

    def dual(self) -> FormFiber:
        """度量对偶 1-形式 X̃（单位度量）"""
        return FormFiber(self.m, {1 << k: c for k, c in enumerate(self.components)}, self.backend)

    def __add__(self, other: 'VectorFiber') -> 'VectorFiber':
        if other.m != self.m:
            raise DimensionError(f"维数不匹配: m={self.m} 与 m={other.m}")
        return VectorFiber(self.m, tuple(a + b for a, b in zip(self.components, other.components)), self.backend)

    def scale(self, factor: Any) -> 'VectorFiber':
        factor = self.backend.convert(factor)
        return VectorFiber(self.m, tuple(c * factor for c in self.components), self.backend)

    def equals(self, other: 'VectorFiber', tolerance: float = 0.0) -> bool:
        return all(self.backend.magnitude(a - b) <= tolerance for a, b in zip(self.components, other.components))


class InvolutionKind(Enum):
    XI = 'xi'
    ETA = 'eta'
    XI_ETA = 'xi-eta'


@dataclass(frozen=True)
class Involution:
    """Clifford 形式上的对合：ξ 为反转，η 为分次对合，可附加复共轭"""

    kind: InvolutionKind
    conjugate: bool = False

    @classmethod
    def parse(cls, name: str) -> 'Involution':
        """解析 'xi'、'xi*'、'xi-eta'、'xi-eta*'、'eta' 形式的名称"""
        conjugate = name.endswith('*')
        base = name[:-1] if conjugate else name
        try:
            return cls(InvolutionKind(base), conjugate)
        except ValueError:
            raise ValueError(f"未知的对合: {name}") from None

    @property
    def name(self) -> str:
        return self.kind.value + ('*' if self.conjugate else '')

    def sign(self, p: int) -> int:
        if self.kind is InvolutionKind.XI:
            return -1 if (p // 2) % 2 else 1
        if self.kind is InvolutionKind.ETA:
            return -1 if p % 2 else 1
        return -1 if (p // 2 + p) % 2 else 1

    def adjoint_sign(self) -> int:
        """对合在生成元上的符号（ξ 为 +1，ξη 与 η 为 -1）"""
        return self.sign(1)


XI = Involution(InvolutionKind.XI)
ETA = Involution(InvolutionKind.ETA)
XI_ETA = Involution(InvolutionKind.XI_ETA)


def _check_pair(a: FormFiber, b: FormFiber):
    if a.m != b.m:
        raise DimensionError(f"维数不匹配: m={a.m} 与 m={b.m}")
    if a.backend is not b.backend:
        raise TypeError(f"系数后端不一致: {a.backend.name} 与 {b.backend.name}")


def wedge(a: FormFiber, b: FormFiber) -> FormFiber:
    """外积 a∧b"""
    _check_pair(a, b)
    signs = sign_table(a.m)
    result: Dict[int, Any] = {}
    for ma, va in a.coeffs.items():
        row = signs[ma]
        for mb, vb in b.coeffs.items():
            if ma & mb:
                continue
            mask = ma | mb
            term = va * vb if row[mb] > 0 else -(va * vb)
            result[mask] = result[mask] + term if mask in result else term
    return FormFiber(a.m, result, a.backend)


def clifford_mul(a: FormFiber, b: FormFiber) -> FormFiber:
    """Clifford 积 a.b（e^k.e^k = +1）"""
    _check_pair(a, b)
    signs = sign_table(a.m)
    result: Dict[int, Any] = {}
    for ma, va in a.coeffs.items():
        row = signs[ma]
        for mb, vb in b.coeffs.items():
            mask = ma ^ mb
            term = va * vb if row[mb] > 0 else -(va * vb)
            result[mask] = result[mask] + term if mask in result else term
    return FormFiber(a.m, result, a.backend)


def clifford_product(factors: Iterable[FormFiber]) -> FormFiber:
    factors = list(factors)
    if not factors:
        raise ValueError("至少需要一个因子")
    result = factors[0]
    for factor in factors[1:]:
        result = clifford_mul(result, factor)
    return result


def contract_basis(k: int, a: FormFiber) -> FormFiber:
    """沿第 k 个基向量的缩并 i_{X_k}"""
    if not 0 <= k < 2 * a.m:
        raise DimensionError(f"基向量下标超出范围: k={k}, m={a.m}")
    bit = 1 << k
    below = bit - 1
    result = {}
    for mask, value in a.coeffs.items():
        if mask & bit:
            result[mask ^ bit] = -value if popcount(mask & below) % 2 else value
    return FormFiber(a.m, result, a.backend)


def contract(X: VectorFiber, a: FormFiber) -> FormFiber:
    """内导数 i_X a"""
    if X.m != a.m:
        raise DimensionError(f"维数不匹配: m={X.m} 与 m={a.m}")
    result = FormFiber.zero(a.m, a.backend)
    for k, component in enumerate(X.components):
        if not X.backend.is_zero(component):
            result = result + contract_basis(k, a).scale(component)
    return result


def grade_project(a: FormFiber, p: int) -> FormFiber:
    """取 p 次齐次部分"""
    if not 0 <= p <= 2 * a.m:
        raise GradeError(f"次数必须在 0-{2 * a.m} 之间: p={p}")
    return FormFiber(a.m, {mask: v for mask, v in a.coeffs.items() if popcount(mask) == p}, a.backend)


def grade_parts(a: FormFiber) -> Dict[int, FormFiber]:
    """按次数拆分，只返回非零部分"""
    return {p: grade_project(a, p) for p in a.grades()}


def involution_apply(a: FormFiber, j: Involution) -> FormFiber:
    """对每个次数施加符号律，带共轭标志时同时共轭系数"""
    result = {}
    for mask, value in a.coeffs.items():
        if j.conjugate:
            value = a.backend.conj(value)
        result[mask] = value if j.sign(popcount(mask)) > 0 else -value
    return FormFiber(a.m, result, a.backend)


def reversion(a: FormFiber) -> FormFiber:
    return involution_apply(a, XI)


def grade_involution(a: FormFiber) -> FormFiber:
    return involution_apply(a, ETA)


def degree_operator(a: FormFiber) -> FormFiber:
    """次数算子 N：p 次部分乘以 p"""
    return FormFiber(a.m, {mask: v * a.backend.convert(popcount(mask)) for mask, v in a.coeffs.items()}, a.backend)


def linear_combination(m: int, terms: Iterable[Tuple[Any, FormFiber]], backend: Optional[Backend] = None) -> FormFiber:
    result = FormFiber.zero(m, backend or EXACT)
    for factor, form in terms:
        result = result + form.scale(factor)
    return result
