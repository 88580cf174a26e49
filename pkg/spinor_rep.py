"""
旋量表示模块
Clifford 纤维在 2^m 维复旋量空间上的不可约表示、复体积形式、Ω 本征分解（r 型旋量）、
X̃^± 的升降作用以及带对合 𝒥 的旋量不变配对
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from backends import EXACT, Backend
from fiber_algebra import (
    DimensionError,
    FormFiber,
    Involution,
    InvolutionKind,
    check_half_dimension,
    clifford_mul,
)
from kahler_structure import ComplexStructure, kahler_form, split_pm_form

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[Any, ...], ...]


class CalibrationError(RuntimeError):
    """类型分解的谱或秩与预期不符"""


class PairingError(RuntimeError):
    """交织约束无解或解退化"""


@dataclass(frozen=True, eq=False)
class SpinorFiber:
    """旋量纤维中的元素，分量个数为 2^m"""

    m: int
    components: Tuple[Any, ...]
    backend: Backend = EXACT

    def __post_init__(self):
        check_half_dimension(self.m)
        if len(self.components) != 1 << self.m:
            raise DimensionError(f"旋量分量数必须为 {1 << self.m}: 得到 {len(self.components)}")
        object.__setattr__(self, 'components', tuple(self.backend.convert(c) for c in self.components))

    @classmethod
    def zero(cls, m: int, backend: Backend = EXACT) -> 'SpinorFiber':
        return cls(m, (0,) * (1 << m), backend)

    @classmethod
    def basis(cls, m: int, index: int, backend: Backend = EXACT) -> 'SpinorFiber':
        return cls(m, tuple(1 if i == index else 0 for i in range(1 << m)), backend)

    @property
    def dimension(self) -> int:
        return 1 << self.m

    def _check_same(self, other: 'SpinorFiber'):
        if other.m != self.m:
            raise DimensionError(f"维数不匹配: m={self.m} 与 m={other.m}")
        if other.backend is not self.backend:
            raise TypeError(f"系数后端不一致: {self.backend.name} 与 {other.backend.name}")

    def __add__(self, other: 'SpinorFiber') -> 'SpinorFiber':
        self._check_same(other)
        return SpinorFiber(self.m, tuple(a + b for a, b in zip(self.components, other.components)), self.backend)

    def __neg__(self) -> 'SpinorFiber':
        return SpinorFiber(self.m, tuple(-a for a in self.components), self.backend)

    def __sub__(self, other: 'SpinorFiber') -> 'SpinorFiber':
        return self + (-other)

    def scale(self, factor: Any) -> 'SpinorFiber':
        factor = self.backend.convert(factor)
        return SpinorFiber(self.m, tuple(a * factor for a in self.components), self.backend)

    def __rmul__(self, factor: Any) -> 'SpinorFiber':
        return self.scale(factor)

    def conjugate(self) -> 'SpinorFiber':
        return SpinorFiber(self.m, tuple(self.backend.conj(a) for a in self.components), self.backend)

    def is_zero(self) -> bool:
        return all(self.backend.is_zero(a) for a in self.components)

    def max_abs(self) -> float:
        return max(self.backend.magnitude(a) for a in self.components)

    def equals(self, other: 'SpinorFiber', tolerance: float = 0.0) -> bool:
        return (self - other).max_abs() <= tolerance

    def to_backend(self, backend: Backend) -> 'SpinorFiber':
        return SpinorFiber(self.m, tuple(backend.convert(a) for a in self.components), backend)


# 稠密矩阵辅助函数（元素为后端标量）

def mat_identity(n: int, backend: Backend) -> List[List[Any]]:
    return [[backend.one if i == j else backend.zero for j in range(n)] for i in range(n)]


def mat_mul(a: Sequence[Sequence[Any]], b: Sequence[Sequence[Any]], backend: Backend) -> List[List[Any]]:
    n, inner, cols = len(a), len(b), len(b[0])
    result = []
    for i in range(n):
        row = [backend.zero] * cols
        for l in range(inner):
            value = a[i][l]
            if backend.is_zero(value):
                continue
            b_row = b[l]
            for j in range(cols):
                row[j] = row[j] + value * b_row[j]
        result.append(row)
    return result


def mat_add(a, b) -> List[List[Any]]:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a, b) -> List[List[Any]]:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_scale(a, factor) -> List[List[Any]]:
    return [[x * factor for x in row] for row in a]


def mat_vec(a, v: Sequence[Any], backend: Backend) -> List[Any]:
    result = []
    for row in a:
        total = backend.zero
        for x, y in zip(row, v):
            total = total + x * y
        result.append(total)
    return result


def mat_max_abs(a, backend: Backend) -> float:
    return max((backend.magnitude(x) for row in a for x in row), default=0.0)


def _freeze(a) -> Matrix:
    return tuple(tuple(row) for row in a)


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _jordan_wigner(m: int, a: int, block: np.ndarray) -> np.ndarray:
    result = np.eye(1, dtype=complex)
    for position in range(m):
        if position < a:
            factor = _PAULI_Z
        elif position == a:
            factor = block
        else:
            factor = np.eye(2, dtype=complex)
        result = np.kron(result, factor)
    return result


@dataclass(frozen=True, eq=False)
class GammaRep:
    """生成元的表示矩阵，以单项式形式保存：γ_k e_j = phase[k][j] e_{perm[k][j]}"""

    m: int
    backend: Backend
    perms: Tuple[Tuple[int, ...], ...]
    phases: Tuple[Tuple[Any, ...], ...]
    blade_perms: Tuple[Tuple[int, ...], ...] = field(repr=False, default=())
    blade_phases: Tuple[Tuple[Any, ...], ...] = field(repr=False, default=())

    @property
    def dimension(self) -> int:
        return 1 << self.m

    def generator_matrix(self, k: int) -> List[List[Any]]:
        n = self.dimension
        matrix = [[self.backend.zero] * n for _ in range(n)]
        for j in range(n):
            matrix[self.perms[k][j]][j] = self.phases[k][j]
        return matrix


@lru_cache(maxsize=None)
def build_rep(m: int, backend: Backend = EXACT) -> GammaRep:
    """构造 Jordan-Wigner 型不可约表示

    γ(e^a) = Z^{⊗(a-1)} ⊗ X ⊗ I，γ(Je^a) = Z^{⊗(a-1)} ⊗ Y ⊗ I，满足 γ_kγ_l + γ_lγ_k = 2δ_{kl}

    Args:
        m: 复维数 (1 ≤ m ≤ 4)
        backend: 系数后端

    Returns:
        GammaRep: 含全部基元素作用的表示
    """
    check_half_dimension(m)
    n = 1 << m
    perms, phases = [], []
    for a in range(m):
        for block in (_PAULI_X, _PAULI_Y):
            matrix = _jordan_wigner(m, a, block)
            rows = np.argmax(np.abs(matrix), axis=0)
            perms.append(tuple(int(i) for i in rows))
            phases.append(tuple(backend.convert(complex(matrix[i, j])) for j, i in enumerate(rows)))

    # 基元素 e_A = e^{k1}.e_{A\k1}（k1 为最低位），逐位组合
    blade_perms: List[Tuple[int, ...]] = [tuple(range(n))]
    blade_phases: List[Tuple[Any, ...]] = [(backend.one,) * n]
    for mask in range(1, 1 << (2 * m)):
        k = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << k)
        rest_perm, rest_phase = blade_perms[rest], blade_phases[rest]
        blade_perms.append(tuple(perms[k][rest_perm[j]] for j in range(n)))
        blade_phases.append(tuple(rest_phase[j] * phases[k][rest_perm[j]] for j in range(n)))

    logger.info(f"构建旋量表示: m={m}, 旋量维数 {n}, 后端 {backend.name}")
    return GammaRep(m, backend, tuple(perms), tuple(phases), tuple(blade_perms), tuple(blade_phases))


def _check_rep(a_m: int, rep: GammaRep):
    if a_m != rep.m:
        raise DimensionError(f"维数不匹配: m={a_m} 与表示的 m={rep.m}")


def clifford_act(a: FormFiber, psi: SpinorFiber, rep: GammaRep) -> SpinorFiber:
    """Clifford 形式在旋量上的作用 a.ψ"""
    _check_rep(a.m, rep)
    _check_rep(psi.m, rep)
    backend = rep.backend
    out = [backend.zero] * rep.dimension
    components = psi.components
    for mask, coefficient in a.coeffs.items():
        perm, phase = rep.blade_perms[mask], rep.blade_phases[mask]
        for j, value in enumerate(components):
            if backend.is_zero(value):
                continue
            out[perm[j]] = out[perm[j]] + coefficient * phase[j] * value
    return SpinorFiber(rep.m, tuple(out), backend)


def action_matrix(a: FormFiber, rep: GammaRep) -> List[List[Any]]:
    """a 的作用矩阵"""
    _check_rep(a.m, rep)
    backend = rep.backend
    n = rep.dimension
    matrix = [[backend.zero] * n for _ in range(n)]
    for mask, coefficient in a.coeffs.items():
        perm, phase = rep.blade_perms[mask], rep.blade_phases[mask]
        for j in range(n):
            matrix[perm[j]][j] = matrix[perm[j]][j] + coefficient * phase[j]
    return matrix


_I_POWERS = ((1, 0), (0, 1), (-1, 0), (0, -1))


def complex_volume(rep: GammaRep) -> FormFiber:
    """z^ℂ = i^m ∏_a e^a.Je^a"""
    backend = rep.backend
    volume = FormFiber.scalar(rep.m, backend.one, backend)
    for a in range(rep.m):
        volume = clifford_mul(volume, FormFiber.generator(rep.m, 2 * a, backend))
        volume = clifford_mul(volume, FormFiber.generator(rep.m, 2 * a + 1, backend))
    return volume.scale(backend.convert(_I_POWERS[rep.m % 4]))


def type_eigenvalue(m: int, r: int, backend: Backend) -> Any:
    """Σ_r 上 Ω 作用的本征值 i(2r-m)"""
    return backend.convert((0, 2 * r - m))


@dataclass(frozen=True, eq=False)
class TypeProjector:
    """Σ_r 的谱投影 Π_r"""

    m: int
    r: int
    matrix: Matrix
    backend: Backend

    @property
    def rank(self) -> int:
        return self.backend.rank([list(row) for row in self.matrix])

    def apply(self, psi: SpinorFiber) -> SpinorFiber:
        return SpinorFiber(self.m, tuple(mat_vec(self.matrix, psi.components, self.backend)), self.backend)

    def basis(self) -> List[SpinorFiber]:
        """Σ_r 的一组基（I - Π_r 的零空间）"""
        n = 1 << self.m
        rows = {}
        for i in range(n):
            row = {}
            for j in range(n):
                value = (self.backend.one if i == j else self.backend.zero) - self.matrix[i][j]
                if not self.backend.is_zero(value):
                    row[j] = value
            rows[i] = row
        vectors = self.backend.nullspace(rows, n, n)
        return [SpinorFiber(self.m, tuple(v), self.backend) for v in vectors]


@lru_cache(maxsize=None)
def type_projectors(rep: GammaRep, J: ComplexStructure) -> Tuple[TypeProjector, ...]:
    """Ω 的 Clifford 作用的谱投影

    对本征值 λ_r = i(2r-m) 做 Lagrange 插值：Π_r = ∏_{s≠r} (W - λ_s)/(λ_r - λ_s)，
    并逐一检验幂等性、秩 C(m,r)、本征方程与完备性。

    Raises:
        CalibrationError: 谱或秩不符（说明基求和范围的约定有误）
    """
    _check_rep(J.m, rep)
    backend = rep.backend
    m, n = rep.m, rep.dimension
    omega = action_matrix(kahler_form(J, backend), rep)
    identity = mat_identity(n, backend)
    tolerance = 0.0 if backend.exact else 1e-9

    projectors = []
    total = [[backend.zero] * n for _ in range(n)]
    for r in range(m + 1):
        projector = identity
        for s in range(m + 1):
            if s == r:
                continue
            shifted = mat_sub(omega, mat_scale(identity, type_eigenvalue(m, s, backend)))
            # 1/(λ_r - λ_s) = 1/(2i(r-s)) = -i/(2(r-s))
            factor = backend.convert((0, Fraction(-1, 2 * (r - s))))
            projector = mat_scale(mat_mul(projector, shifted, backend), factor)
        eigen_gap = mat_sub(mat_mul(omega, projector, backend), mat_scale(projector, type_eigenvalue(m, r, backend)))
        if mat_max_abs(eigen_gap, backend) > tolerance:
            raise CalibrationError(f"Ω 作用的谱与 i(2r-m) 不符: r={r}")
        if mat_max_abs(mat_sub(mat_mul(projector, projector, backend), projector), backend) > tolerance:
            raise CalibrationError(f"Π_{r} 不是幂等的")
        item = TypeProjector(m, r, _freeze(projector), backend)
        if item.rank != comb(m, r):
            raise CalibrationError(f"rank Π_{r} = {item.rank}，期望 {comb(m, r)}")
        projectors.append(item)
        total = mat_add(total, projector)
    if mat_max_abs(mat_sub(total, identity), backend) > tolerance:
        raise CalibrationError("Σ_r Π_r ≠ I")
    logger.info(f"类型分解完成: m={m}, 秩 {[comb(m, r) for r in range(m + 1)]}")
    return tuple(projectors)


def spinor_type(psi: SpinorFiber, projectors: Sequence[TypeProjector], tolerance: float = 0.0) -> Optional[int]:
    """纯类型旋量的类型 r；零旋量或混合类型返回 None"""
    present = [p.r for p in projectors if p.apply(psi).max_abs() > tolerance]
    return present[0] if len(present) == 1 else None


@dataclass
class ShiftReport:
    """X̃^± 在各 Σ_r 上的平移方向"""
    plus_shifts: List[int]
    minus_shifts: List[int]
    violations: List[str]

    @property
    def plus_shift(self) -> Optional[int]:
        return self.plus_shifts[0] if len(self.plus_shifts) == 1 else None

    @property
    def minus_shift(self) -> Optional[int]:
        return self.minus_shifts[0] if len(self.minus_shifts) == 1 else None

    @property
    def passed(self) -> bool:
        return (not self.violations and self.plus_shift in (1, -1)
                and self.minus_shift == -self.plus_shift)

    def to_dict(self) -> dict:
        return {
            'plus_shift': self.plus_shift,
            'minus_shift': self.minus_shift,
            'violations': self.violations,
            'pass': self.passed,
        }


def raising_lowering_check(rep: GammaRep, J: ComplexStructure) -> ShiftReport:
    """检验 Π_s γ(X̃^±) Π_r 只在唯一的 s - r 上非零，并报告观测到的方向

    在 v.v = +g 的约定下 X̃^+ = ½(X̃ - iJX̃) 使类型降低 1，X̃^- 使类型升高 1。
    """
    backend = rep.backend
    projectors = type_projectors(rep, J)
    tolerance = 0.0 if backend.exact else 1e-9
    shifts = {'+': set(), '-': set()}
    for k in range(2 * rep.m):
        plus, minus = split_pm_form(FormFiber.generator(rep.m, k, backend), J)
        for label, form in (('+', plus), ('-', minus)):
            action = action_matrix(form, rep)
            for source in projectors:
                moved = mat_mul(action, source.matrix, backend)
                for target in projectors:
                    block = mat_mul(target.matrix, moved, backend)
                    if mat_max_abs(block, backend) > tolerance:
                        shifts[label].add(target.r - source.r)
    violations = []
    for label, observed in shifts.items():
        if len(observed) != 1:
            violations.append(f"X̃^{label} 的平移不唯一: {sorted(observed)}")
    report = ShiftReport(sorted(shifts['+']), sorted(shifts['-']), violations)
    logger.debug(f"升降检查: X̃^+ 平移 {report.plus_shifts}, X̃^- 平移 {report.minus_shifts}")
    return report


@dataclass
class ChiralityReport:
    """各 Σ_r 所在的 z^ℂ 本征空间"""
    signs: Dict[int, Optional[int]]
    commutes: bool

    @property
    def passed(self) -> bool:
        return self.commutes and all(sign == (-1) ** r for r, sign in self.signs.items())

    def to_dict(self) -> dict:
        return {'signs': {str(r): s for r, s in self.signs.items()}, 'commutes': self.commutes, 'pass': self.passed}


def chirality_consistency(rep: GammaRep, J: ComplexStructure) -> ChiralityReport:
    """检验 Σ_r 位于 z^ℂ 的 (-1)^r 本征空间，且 [z^ℂ, Π_r] = 0"""
    backend = rep.backend
    tolerance = 0.0 if backend.exact else 1e-9
    volume = action_matrix(complex_volume(rep), rep)
    signs: Dict[int, Optional[int]] = {}
    commutes = True
    for projector in type_projectors(rep, J):
        zp = mat_mul(volume, projector.matrix, backend)
        pz = mat_mul(projector.matrix, volume, backend)
        commutes = commutes and mat_max_abs(mat_sub(zp, pz), backend) <= tolerance
        sign = None
        for candidate in (1, -1):
            if mat_max_abs(mat_sub(zp, mat_scale(projector.matrix, backend.convert(candidate))), backend) <= tolerance:
                sign = candidate
        signs[projector.r] = sign
    return ChiralityReport(signs, commutes)


@dataclass(frozen=True, eq=False)
class PairingMatrix:
    """旋量不变配对 (φ, ψ) = φ^T A ψ，共轭型对合时为 φ^† A ψ"""

    m: int
    matrix: Matrix
    involution: Involution
    backend: Backend
    solution_dimension: int = 1

    def pair(self, phi: SpinorFiber, psi: SpinorFiber) -> Any:
        left = phi.conjugate() if self.involution.conjugate else phi
        return sum_products(left.components, mat_vec(self.matrix, psi.components, self.backend), self.backend)

    def covector(self, phi: SpinorFiber) -> List[Any]:
        """φ 对应的对偶行向量 φ̄，使 (φ, κ) = φ̄ κ"""
        left = phi.conjugate() if self.involution.conjugate else phi
        n = len(left.components)
        return [sum_products(left.components, [self.matrix[i][j] for i in range(n)], self.backend)
                for j in range(n)]


def sum_products(a: Sequence[Any], b: Sequence[Any], backend: Backend) -> Any:
    total = backend.zero
    for x, y in zip(a, b):
        total = total + x * y
    return total


@lru_cache(maxsize=None)
def build_pairing(rep: GammaRep, j: Involution) -> PairingMatrix:
    """求解交织约束 A γ_k = σ M_k A 得到满足 (φ, ω.ψ) = (ω^𝒥.φ, ψ) 的配对

    M_k 为 γ_k^T（非共轭型）或 γ_k^†（共轭型），σ 为 𝒥 在 1-形式上的符号。
    结果按第一个非零元素归一化为 1。

    Raises:
        PairingError: 解空间为空或解矩阵退化
    """
    if j.kind is InvolutionKind.ETA:
        raise PairingError("η 不是可容许的配对对合")
    backend = rep.backend
    n = rep.dimension
    sigma = backend.convert(j.adjoint_sign())
    rows: Dict[int, Dict[int, Any]] = {}
    row_index = 0
    for k in range(2 * rep.m):
        perm, phase = rep.perms[k], rep.phases[k]
        for i in range(n):
            left_phase = backend.conj(phase[i]) if j.conjugate else phase[i]
            for col in range(n):
                row: Dict[int, Any] = {}
                # (A γ_k)_{i,col} = A_{i, perm[col]} phase[col]
                u = i * n + perm[col]
                row[u] = row.get(u, backend.zero) + phase[col]
                # (M_k A)_{i,col} = phase[i]^{(*)} A_{perm[i], col}
                v = perm[i] * n + col
                row[v] = row.get(v, backend.zero) - sigma * left_phase
                rows[row_index] = row
                row_index += 1
    basis = backend.nullspace(rows, row_index, n * n)
    if not basis:
        raise PairingError(f"对合 {j.name} 在 m={rep.m} 上没有相容的配对")
    if len(basis) > 1:
        logger.warning(f"对合 {j.name} 的配对解空间维数为 {len(basis)}，取第一个解")
    vector = basis[0]
    tolerance = 0.0 if backend.exact else 1e-9
    pivot = next(v for v in vector if backend.magnitude(v) > tolerance)
    vector = [v / pivot for v in vector]
    matrix = [[vector[i * n + col] for col in range(n)] for i in range(n)]
    if backend.rank(matrix) != n:
        raise PairingError(f"对合 {j.name} 的配对矩阵退化")
    logger.info(f"配对构建完成: m={rep.m}, 对合 {j.name}, 解空间维数 {len(basis)}")
    return PairingMatrix(rep.m, _freeze(matrix), j, backend, len(basis))
