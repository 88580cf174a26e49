"""
Kähler 结构模块
纤维上的复结构 J、Kähler 形式 Ω、Lefschetz 型算子 L 与 Λ，以及 (p,q) 双分次
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from backends import Backend
from fiber_algebra import (
    DimensionError,
    FormFiber,
    GradeError,
    VectorFiber,
    check_half_dimension,
    contract,
    contract_basis,
    grade_project,
    popcount,
    wedge,
)

logger = logging.getLogger(__name__)


class ComplexStructureError(ValueError):
    """J² ≠ -I 或 J 不正交"""


class BigradeError(ValueError):
    """双分次无效或输入不是纯双分次"""


@dataclass(frozen=True)
class ComplexStructure:
    """纤维上的正交复结构

    j_matrix[l][k] 为 J(g^k) 在 g^l 上的分量，对向量与 1-形式同样作用（单位度量）。
    """

    m: int
    j_matrix: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        check_half_dimension(self.m)
        n = 2 * self.m
        matrix = tuple(tuple(int(v) for v in row) for row in self.j_matrix)
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise DimensionError(f"J 必须是 {n}x{n} 矩阵")
        object.__setattr__(self, 'j_matrix', matrix)
        array = np.array(matrix, dtype=np.int64)
        identity = np.eye(n, dtype=np.int64)
        if not np.array_equal(array @ array, -identity):
            raise ComplexStructureError("J² 必须等于 -I")
        if not np.array_equal(array.T @ array, identity):
            raise ComplexStructureError("J 必须保持度量 g(JX,JY)=g(X,Y)")

    @classmethod
    def flat(cls, m: int) -> 'ComplexStructure':
        """标准复结构：J(e^a) = Je^a, J(Je^a) = -e^a"""
        n = 2 * check_half_dimension(m)
        matrix = [[0] * n for _ in range(n)]
        for a in range(m):
            matrix[2 * a + 1][2 * a] = 1
            matrix[2 * a][2 * a + 1] = -1
        return cls(m, tuple(tuple(row) for row in matrix))

    @classmethod
    def conjugated(cls, m: int, permutation: Sequence[int], signs: Sequence[int]) -> 'ComplexStructure':
        """用带符号置换 P 共轭标准结构：P J P^T，仍是正交复结构"""
        n = 2 * check_half_dimension(m)
        if sorted(permutation) != list(range(n)) or len(signs) != n:
            raise DimensionError("置换或符号长度无效")
        p = np.zeros((n, n), dtype=np.int64)
        for i, (target, sign) in enumerate(zip(permutation, signs)):
            p[target, i] = 1 if sign >= 0 else -1
        flat = np.array(cls.flat(m).j_matrix, dtype=np.int64)
        return cls(m, tuple(tuple(int(v) for v in row) for row in (p @ flat @ p.T).tolist()))

    @property
    def is_flat(self) -> bool:
        return self == flat_structure(self.m)

    def image_form(self, k: int, backend: Backend) -> FormFiber:
        """J(g^k)"""
        return FormFiber(self.m, {1 << l: self.j_matrix[l][k] for l in range(2 * self.m)}, backend)

    def image_vector(self, k: int, backend: Backend) -> VectorFiber:
        """J X_k"""
        return VectorFiber(self.m, tuple(self.j_matrix[l][k] for l in range(2 * self.m)), backend)

    def apply_vector(self, X: VectorFiber) -> VectorFiber:
        if X.m != self.m:
            raise DimensionError(f"维数不匹配: m={X.m} 与 m={self.m}")
        n = 2 * self.m
        components = []
        for l in range(n):
            total = X.backend.zero
            for k in range(n):
                if self.j_matrix[l][k]:
                    total = total + X.components[k] * X.backend.convert(self.j_matrix[l][k])
            components.append(total)
        return VectorFiber(self.m, tuple(components), X.backend)

    def apply_one_form(self, form: FormFiber) -> FormFiber:
        """J 在 1-形式上的矩阵作用"""
        if form.grades() not in ([], [1]):
            raise GradeError("J 的矩阵作用只定义在 1-形式上")
        return self.apply_vector(VectorFiber.from_form(form)).dual()


@dataclass(frozen=True)
class Bigrade:
    p: int
    q: int

    def validate(self, m: int) -> 'Bigrade':
        if not (0 <= self.p <= m and 0 <= self.q <= m):
            raise BigradeError(f"双分次 ({self.p},{self.q}) 必须满足 0 ≤ p,q ≤ {m}")
        return self

    @property
    def degree(self) -> int:
        return self.p + self.q

    def __str__(self):
        return f"({self.p},{self.q})"


def bigrades_of_degree(m: int, degree: int) -> List[Bigrade]:
    return [Bigrade(p, degree - p) for p in range(max(0, degree - m), min(degree, m) + 1)]


def all_bigrades(m: int) -> List[Bigrade]:
    return [Bigrade(p, q) for p in range(m + 1) for q in range(m + 1)]


@lru_cache(maxsize=None)
def flat_structure(m: int) -> ComplexStructure:
    return ComplexStructure.flat(m)


def _default(J: Optional[ComplexStructure], m: int) -> ComplexStructure:
    return flat_structure(m) if J is None else J


def split_pm(X: VectorFiber, J: ComplexStructure) -> Tuple[VectorFiber, VectorFiber]:
    """X^± = ½(X ∓ iJX)

    Returns:
        (X^+, X^-)，满足 X = X^+ + X^- 且 J X^± = ±i X^±
    """
    if X.m != J.m:
        raise DimensionError(f"维数不匹配: m={X.m} 与 m={J.m}")
    backend = X.backend
    jx = J.apply_vector(X).scale(backend.imag_unit)
    plus = (X + jx.scale(-1)).scale(backend.half)
    minus = (X + jx).scale(backend.half)
    return plus, minus


def split_pm_form(form: FormFiber, J: ComplexStructure) -> Tuple[FormFiber, FormFiber]:
    """1-形式的 (1,0)/(0,1) 分解：g^± = ½(g ∓ iJg)"""
    backend = form.backend
    jform = J.apply_one_form(form).scale(backend.imag_unit)
    return (form - jform).scale(backend.half), (form + jform).scale(backend.half)


@lru_cache(maxsize=None)
def kahler_form(J: ComplexStructure, backend: Backend) -> FormFiber:
    """Ω = Σ_{k<l} g(JX_k, X_l) g^k∧g^l，标准结构下为 Σ_a e^a∧Je^a"""
    n = 2 * J.m
    coeffs = {}
    for k in range(n):
        for l in range(k + 1, n):
            if J.j_matrix[l][k]:
                coeffs[(1 << k) | (1 << l)] = J.j_matrix[l][k]
    return FormFiber(J.m, coeffs, backend)


def evaluate_two_form(omega: FormFiber, X: VectorFiber, Y: VectorFiber) -> Any:
    """ω(X, Y) = i_Y i_X ω 的标量部分"""
    return contract(Y, contract(X, grade_project(omega, 2))).coefficient(0)


def op_L(a: FormFiber, J: Optional[ComplexStructure] = None) -> FormFiber:
    """Lα = Ω∧α"""
    return wedge(kahler_form(_default(J, a.m), a.backend), a)


def op_Lambda(a: FormFiber, J: Optional[ComplexStructure] = None) -> FormFiber:
    """Λα = ½ Σ_k i_{JX_k} i_{X_k} α（对全部 2m 个实基求和）"""
    J = _default(J, a.m)
    result = FormFiber.zero(a.m, a.backend)
    for k in range(2 * a.m):
        result = result + contract(J.image_vector(k, a.backend), contract_basis(k, a))
    return result.scale(a.backend.half)


def op_J_derivation(a: FormFiber, J: Optional[ComplexStructure] = None) -> FormFiber:
    """Jα = Σ_k J(g^k)∧i_{X_k}α，在 1-形式上与矩阵作用一致"""
    J = _default(J, a.m)
    result = FormFiber.zero(a.m, a.backend)
    for k in range(2 * a.m):
        part = contract_basis(k, a)
        if not part.is_zero():
            result = result + wedge(J.image_form(k, a.backend), part)
    return result


def lefschetz_commutator(a: FormFiber, J: Optional[ComplexStructure] = None) -> FormFiber:
    """[L, Λ]α"""
    return op_L(op_Lambda(a, J), J) - op_Lambda(op_L(a, J), J)


@lru_cache(maxsize=4096)
def _blade_bigrades(J: ComplexStructure, mask: int, backend: Backend) -> Tuple[FormFiber, ...]:
    """把基元素按 (1,0)/(0,1) 本征基展开，返回按全纯次数 p 索引的各部分"""
    parts = [FormFiber.scalar(J.m, 1, backend)]
    for k in range(2 * J.m):
        if not (mask >> k) & 1:
            continue
        plus, minus = split_pm_form(FormFiber.generator(J.m, k, backend), J)
        extended = []
        for p in range(len(parts) + 1):
            term = FormFiber.zero(J.m, backend)
            if p < len(parts):
                term = term + wedge(parts[p], minus)
            if p > 0:
                term = term + wedge(parts[p - 1], plus)
            extended.append(term)
        parts = extended
    return tuple(parts)


def bigrade_project(a: FormFiber, J: ComplexStructure, bg: Bigrade) -> FormFiber:
    """投影到 Λ^{p,q}；对 p+q=r 求和恢复 grade_project(a, r)"""
    if a.m != J.m:
        raise DimensionError(f"维数不匹配: m={a.m} 与 m={J.m}")
    bg.validate(a.m)
    result = FormFiber.zero(a.m, a.backend)
    for mask, value in a.coeffs.items():
        if popcount(mask) != bg.degree:
            continue
        result = result + _blade_bigrades(J, mask, a.backend)[bg.p].scale(value)
    return result


def bigrade_project_spectral(a: FormFiber, J: ComplexStructure, bg: Bigrade) -> FormFiber:
    """用 J-导子的谱投影（Λ^{p,q} 上本征值 i(p-q)）计算双分次投影"""
    bg.validate(a.m)
    backend = a.backend
    degree = bg.degree
    result = grade_project(a, degree)
    for other in bigrades_of_degree(a.m, degree):
        if other.p == bg.p:
            continue
        # (D - i(p'-q')) / (i(p-q) - i(p'-q'))
        shifted = op_J_derivation(result, J) - result.scale(backend.convert((0, other.p - other.q)))
        gap = 2 * (bg.p - other.p)
        result = shifted.scale(backend.convert((0, Fraction(-1, gap))))
    return result


def bigrade_project_frame(a: FormFiber, bg: Bigrade) -> FormFiber:
    """按标架计数的双分次：p 个 e 型生成元、q 个 Je 型生成元（只适用于标准结构）"""
    bg.validate(a.m)
    even = int('01' * a.m, 2)
    coeffs = {
        mask: value for mask, value in a.coeffs.items()
        if popcount(mask & even) == bg.p and popcount(mask & ~even) == bg.q
    }
    return FormFiber(a.m, coeffs, a.backend)


def bigrade_decompose(a: FormFiber, J: ComplexStructure) -> Dict[Bigrade, FormFiber]:
    """全部非零双分次分量"""
    parts = {}
    for degree in a.grades():
        for bg in bigrades_of_degree(a.m, degree):
            part = bigrade_project(a, J, bg)
            if not part.is_zero():
                parts[bg] = part
    return parts


def bigrade_of(a: FormFiber, J: ComplexStructure, tolerance: float = 0.0) -> Bigrade:
    """纯双分次元素的双分次，不纯时抛出 BigradeError"""
    parts = {bg: part for bg, part in bigrade_decompose(a, J).items() if part.max_abs() > tolerance}
    if len(parts) > 1:
        raise BigradeError(f"元素不是纯双分次的: {sorted(str(bg) for bg in parts)}")
    if not parts:
        return Bigrade(0, 0)
    return next(iter(parts))


def is_primitive(a: FormFiber, J: Optional[ComplexStructure] = None, tolerance: float = 0.0) -> bool:
    """Λα = 0"""
    return op_Lambda(a, J).max_abs() <= tolerance
