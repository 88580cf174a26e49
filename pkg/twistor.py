"""
扭量旋量模块
各类扭量方程的残差计算，以及在多项式拟设上求解全部解的零空间求解器
"""

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple

import config
from backends import EXACT, Backend
from fiber_algebra import FormFiber
from fields import (
    SPINOR,
    Monomial,
    PolySection,
    act_sections,
    dirac,
    dirac_c,
    dirac_pm,
    monomials_up_to,
    nabla,
    sample_points,
)
from kahler_structure import ComplexStructure, flat_structure, split_pm_form
from reports import ResidualReport, make_report
from spinor_rep import (
    CalibrationError,
    GammaRep,
    SpinorFiber,
    build_rep,
    type_projectors,
)

logger = logging.getLogger(__name__)


class PreconditionError(ValueError):
    """输入不满足前提（类型不纯或不是解）"""


class BoundViolationError(CalibrationError):
    """解空间维数超出上界"""


class VariantError(ValueError):
    """扭量变体参数无效"""


RIEMANNIAN = 'riemannian'
KAHLERIAN = 'kahlerian'
HIJAZI = 'hijazi'
KIRCHBERG_DISPLAY = 'kirchberg-display'
KIRCHBERG_TEXT = 'kirchberg-text'
MIDDLE = 'middle'
HOLOMORPHIC = 'holomorphic'
ANTI_HOLOMORPHIC = 'anti-holomorphic'

# 满足成对方程 (∇_{X^±}ψ = c_± X̃^±.D^∓ψ) 的变体，其解空间受维数上界约束
KAHLERIAN_FAMILY = (KAHLERIAN, MIDDLE, HOLOMORPHIC, ANTI_HOLOMORPHIC)


@dataclass(frozen=True)
class TwistorVariant:
    """扭量方程变体"""
    tag: str
    r: Optional[int] = None
    a: Optional[Fraction] = None
    b: Optional[Fraction] = None

    @classmethod
    def riemannian(cls) -> 'TwistorVariant':
        return cls(RIEMANNIAN)

    @classmethod
    def kahlerian(cls, r: int) -> 'TwistorVariant':
        return cls(KAHLERIAN, r)

    @classmethod
    def hijazi(cls, a: Any, b: Any) -> 'TwistorVariant':
        return cls(HIJAZI, None, Fraction(a), Fraction(b))

    @classmethod
    def kirchberg_display(cls, r: int) -> 'TwistorVariant':
        return cls(KIRCHBERG_DISPLAY, r)

    @classmethod
    def kirchberg_text(cls, r: int) -> 'TwistorVariant':
        return cls(KIRCHBERG_TEXT, r)

    @classmethod
    def middle(cls, m: int) -> 'TwistorVariant':
        if m % 2:
            raise VariantError(f"中间类型要求 m 为偶数: m={m}")
        return cls(MIDDLE, m // 2)

    @classmethod
    def holomorphic(cls, r: int) -> 'TwistorVariant':
        return cls(HOLOMORPHIC, r)

    @classmethod
    def anti_holomorphic(cls, r: int) -> 'TwistorVariant':
        return cls(ANTI_HOLOMORPHIC, r)

    @classmethod
    def from_name(cls, name: str, m: int, r: int = 0, a: Any = None, b: Any = None) -> 'TwistorVariant':
        """由命令行名称构造变体并校验"""
        if name == RIEMANNIAN:
            variant = cls.riemannian()
        elif name == HIJAZI:
            if a is None or b is None:
                raise VariantError("hijazi 变体需要参数 a 与 b")
            variant = cls.hijazi(a, b)
        elif name == MIDDLE:
            variant = cls.middle(m)
        elif name in (KAHLERIAN, KIRCHBERG_DISPLAY, KIRCHBERG_TEXT, HOLOMORPHIC, ANTI_HOLOMORPHIC):
            variant = cls(name, r)
        else:
            raise VariantError(f"未知的扭量变体: {name}")
        return variant.validate(m)

    def validate(self, m: int) -> 'TwistorVariant':
        if self.tag in (RIEMANNIAN, HIJAZI):
            return self
        if self.r is None or not 0 <= self.r <= m:
            raise VariantError(f"类型 r 必须在 0-{m} 之间: {self.r}")
        if self.tag == MIDDLE and (m % 2 or self.r != m // 2):
            raise VariantError(f"中间类型要求 m 为偶数且 r = m/2: m={m}, r={self.r}")
        if self.tag == KIRCHBERG_DISPLAY and self.r == 0:
            raise VariantError("Kirchberg 显示式系数 1/(4r) 在 r=0 时无定义")
        return self

    @property
    def type_restricted(self) -> bool:
        return self.tag not in (RIEMANNIAN, HIJAZI)

    @property
    def label(self) -> str:
        if self.tag == HIJAZI:
            return f"{HIJAZI}(a={self.a}, b={self.b})"
        if self.r is None:
            return self.tag
        return f"{self.tag}(r={self.r})"


@dataclass(frozen=True)
class KLConstants:
    """合并方程中的常数 k 与 l"""
    k: Fraction
    l: Fraction


def _check_type(m: int, r: int):
    if not 0 <= r <= m:
        raise VariantError(f"类型 r 必须在 0-{m} 之间: {r}")


def constants_kl(m: int, r: int) -> KLConstants:
    """k = (m+2)/(8(r+1)(m-r+1)), l = (m-2r)/(8(r+1)(m-r+1))"""
    _check_type(m, r)
    denominator = 8 * (r + 1) * (m - r + 1)
    return KLConstants(Fraction(m + 2, denominator), Fraction(m - 2 * r, denominator))


def pair_constants(m: int, r: int) -> Tuple[Fraction, Fraction]:
    """成对方程的系数 (c_+, c_-) = (1/(2(m-r+1)), 1/(2(r+1)))"""
    _check_type(m, r)
    return Fraction(1, 2 * (m - r + 1)), Fraction(1, 2 * (r + 1))


def holomorphic_constants(m: int, r: int, holomorphic: bool = True, reading: str = 'literal') -> KLConstants:
    """全纯/反全纯解的常数

    literal: 全纯 k = -l = 1/(16(m-r+1))，反全纯 k = l = 1/(16(r+1))
    rederived: 直接展开成对方程得到 k = ∓l = c_±/4，即 1/(8(m-r+1)) 与 1/(8(r+1))
    """
    _check_type(m, r)
    if reading not in ('literal', 'rederived'):
        raise ValueError(f"未知的常数读法: {reading}")
    factor = 16 if reading == 'literal' else 8
    if holomorphic:
        value = Fraction(1, factor * (m - r + 1))
        return KLConstants(value, -value)
    value = Fraction(1, factor * (r + 1))
    return KLConstants(value, value)


def kirchberg_coefficient(variant: TwistorVariant) -> Fraction:
    if variant.tag == KIRCHBERG_DISPLAY:
        if not variant.r:
            raise VariantError("Kirchberg 显示式系数 1/(4r) 在 r=0 时无定义")
        return Fraction(1, 4 * variant.r)
    return Fraction(1, 4 * (variant.r + 1))


def dimension_bound(m: int, r: int) -> int:
    """C(m,r) + C(m,r+1) + C(m,r-1)"""
    return comb(m, r) + (comb(m, r + 1) if r + 1 <= m else 0) + (comb(m, r - 1) if r >= 1 else 0)


class _DiracData:
    """一个旋量截面的 ∇、D、D^c、D^± 缓存"""

    def __init__(self, psi: PolySection, rep: GammaRep, J: ComplexStructure):
        self.psi = psi
        self.rep = rep
        self.J = J
        self.backend = psi.backend
        self.gradient = [nabla(k, psi) for k in range(2 * psi.m)]
        self.D = dirac(psi, rep)
        self.Dc = dirac_c(psi, rep, J)
        self.D_plus, self.D_minus = dirac_pm(psi, rep, J)

    def act(self, form: FormFiber, section: PolySection) -> PolySection:
        return act_sections(PolySection.constant(form), section, self.rep)

    def nabla_direction(self, k: int) -> PolySection:
        return self.gradient[k]

    def nabla_j(self, k: int) -> PolySection:
        """∇_{JX_k} = Σ_l J_{lk} ∇_l"""
        result = PolySection.zero(self.psi.m, SPINOR, self.backend, self.psi.degree_bound)
        for l in range(2 * self.psi.m):
            if self.J.j_matrix[l][k]:
                result = result + self.gradient[l].scale(self.J.j_matrix[l][k])
        return result

    def nabla_pm(self, k: int) -> Tuple[PolySection, PolySection]:
        """(∇_{X_k^+}ψ, ∇_{X_k^-}ψ)"""
        i = self.backend.imag_unit
        half = self.backend.half
        twisted = self.nabla_j(k).scale(i)
        return (self.gradient[k] - twisted).scale(half), (self.gradient[k] + twisted).scale(half)

    def generator(self, k: int) -> FormFiber:
        return FormFiber.generator(self.psi.m, k, self.backend)

    def j_generator(self, k: int) -> FormFiber:
        return self.J.image_form(k, self.backend)

    def pm_forms(self, k: int) -> Tuple[FormFiber, FormFiber]:
        return split_pm_form(self.generator(k), self.J)


def _frac(backend: Backend, value: Fraction) -> Any:
    return backend.convert(Fraction(value))


def pair_sections(data: _DiracData, r: int) -> Dict[str, PolySection]:
    """∇_{X_k^+}ψ - c_+ X̃_k^+.D^-ψ 与 ∇_{X_k^-}ψ - c_- X̃_k^-.D^+ψ"""
    c_plus, c_minus = pair_constants(data.psi.m, r)
    sections = {}
    for k in range(2 * data.psi.m):
        plus_form, minus_form = data.pm_forms(k)
        nabla_plus, nabla_minus = data.nabla_pm(k)
        sections[f"k={k},+"] = nabla_plus - data.act(plus_form, data.D_minus).scale(_frac(data.backend, c_plus))
        sections[f"k={k},-"] = nabla_minus - data.act(minus_form, data.D_plus).scale(_frac(data.backend, c_minus))
    return sections


def combined_sections_from(data: _DiracData, k_value: Fraction, l_value: Fraction) -> Dict[str, PolySection]:
    """∇_kψ - [k(g^k.Dψ + Jg^k.D^cψ) + i l (Jg^k.Dψ - g^k.D^cψ)]"""
    backend = data.backend
    kk = _frac(backend, k_value)
    il = _frac(backend, l_value) * backend.imag_unit
    sections = {}
    for k in range(2 * data.psi.m):
        e, je = data.generator(k), data.j_generator(k)
        first = data.act(e, data.D) + data.act(je, data.Dc)
        second = data.act(je, data.D) - data.act(e, data.Dc)
        sections[f"k={k}"] = data.nabla_direction(k) - first.scale(kk) - second.scale(il)
    return sections


def _hijazi_sections(data: _DiracData, a: Fraction, b: Fraction) -> Dict[str, PolySection]:
    backend = data.backend
    sections = {}
    for k in range(2 * data.psi.m):
        rhs = (data.act(data.generator(k), data.D).scale(_frac(backend, a))
               + data.act(data.j_generator(k), data.Dc).scale(_frac(backend, b)))
        sections[f"k={k}"] = data.nabla_direction(k) - rhs
    return sections


def _middle_sections(data: _DiracData) -> Dict[str, PolySection]:
    """∇_kψ - 1/(m+2) (X̃_k^+.D^-ψ + X̃_k^-.D^+ψ)"""
    factor = _frac(data.backend, Fraction(1, data.psi.m + 2))
    sections = {}
    for k in range(2 * data.psi.m):
        plus_form, minus_form = data.pm_forms(k)
        rhs = data.act(plus_form, data.D_minus) + data.act(minus_form, data.D_plus)
        sections[f"k={k}"] = data.nabla_direction(k) - rhs.scale(factor)
    return sections


def _context(psi: PolySection, rep: Optional[GammaRep], J: Optional[ComplexStructure]) -> Tuple[GammaRep, ComplexStructure]:
    if psi.kind != SPINOR:
        raise TypeError("扭量方程只作用于旋量截面")
    return (build_rep(psi.m, psi.backend) if rep is None else rep,
            flat_structure(psi.m) if J is None else J)


def equation_sections(variant: TwistorVariant, psi: PolySection, rep: Optional[GammaRep] = None,
                      J: Optional[ComplexStructure] = None) -> Dict[str, PolySection]:
    """变体定义方程的逐方向残差截面（键按方向排序）"""
    rep, J = _context(psi, rep, J)
    variant.validate(psi.m)
    data = _DiracData(psi, rep, J)
    m = psi.m
    if variant.tag == RIEMANNIAN:
        return _hijazi_sections(data, Fraction(1, 2 * m), Fraction(0))
    if variant.tag == HIJAZI:
        return _hijazi_sections(data, variant.a, variant.b)
    if variant.tag in (KIRCHBERG_DISPLAY, KIRCHBERG_TEXT):
        c = kirchberg_coefficient(variant)
        return _hijazi_sections(data, c, c)
    if variant.tag == MIDDLE:
        return _middle_sections(data)
    sections = pair_sections(data, variant.r)
    if variant.tag == HOLOMORPHIC:
        sections['D+'] = data.D_plus
    elif variant.tag == ANTI_HOLOMORPHIC:
        sections['D-'] = data.D_minus
    return sections


def combined_sections(psi: PolySection, k_value: Any, l_value: Any, rep: Optional[GammaRep] = None,
                      J: Optional[ComplexStructure] = None) -> Dict[str, PolySection]:
    """任意 (k, l) 的合并方程残差截面"""
    rep, J = _context(psi, rep, J)
    return combined_sections_from(_DiracData(psi, rep, J), Fraction(k_value), Fraction(l_value))


def check_type_purity(psi: PolySection, r: int, rep: GammaRep, J: ComplexStructure, tolerance: float = 0.0):
    """检查 Π_r ψ = ψ

    Raises:
        PreconditionError: 类型不纯，错误信息指出投影 Π_r
    """
    projector = type_projectors(rep, J)[r]
    defect = psi - psi.map_fiber(projector.apply)
    if defect.coefficient_max_abs() > tolerance:
        raise PreconditionError(
            f"旋量不是 {r} 型的: |ψ - Π_{r}ψ| = {defect.coefficient_max_abs():.3e}")


def residual(variant: TwistorVariant, psi: PolySection, rep: Optional[GammaRep] = None,
             J: Optional[ComplexStructure] = None, tolerance: Optional[float] = None,
             points: Optional[Sequence[Sequence[float]]] = None) -> ResidualReport:
    """变体定义方程在全部基方向（与采样点）上的最大残差

    Raises:
        PreconditionError: Kähler 型变体的输入类型不纯
    """
    rep, J = _context(psi, rep, J)
    variant.validate(psi.m)
    tolerance = config.get_tolerance(psi.backend.name, tolerance)
    if variant.type_restricted:
        check_type_purity(psi, variant.r, rep, J, tolerance)
    sections = equation_sections(variant, psi, rep, J)
    return make_report('twistor', variant.label, psi.m, sections.values(), tolerance, points, r=variant.r)


def combined_residual(psi: PolySection, k_value: Any, l_value: Any, rep: Optional[GammaRep] = None,
                      J: Optional[ComplexStructure] = None, tolerance: Optional[float] = None,
                      points=None, variant_label: str = 'combined') -> ResidualReport:
    rep, J = _context(psi, rep, J)
    tolerance = config.get_tolerance(psi.backend.name, tolerance)
    sections = combined_sections(psi, k_value, l_value, rep, J)
    return make_report('combined', variant_label, psi.m, sections.values(), tolerance, points)


def reduction_readings(psi: PolySection, r: int, rep: Optional[GammaRep] = None,
                  J: Optional[ComplexStructure] = None, tolerance: Optional[float] = None,
                  points=None) -> Dict[str, ResidualReport]:
    """比较约化式两种读法与合并方程右端的差（作为算子恒等式）

    literal: 1/(4(m-r+1)) X̃^+.D^+ψ - 1/(4(r+1)) X̃^-.D^+ψ
    d-minus: 1/(4(m-r+1)) X̃^+.D^-ψ - 1/(4(r+1)) X̃^-.D^+ψ
    """
    rep, J = _context(psi, rep, J)
    m = psi.m
    tolerance = config.get_tolerance(psi.backend.name, tolerance)
    check_type_purity(psi, r, rep, J, tolerance)
    data = _DiracData(psi, rep, J)
    constants = constants_kl(m, r)
    combined = combined_sections_from(data, constants.k, constants.l)
    first = _frac(data.backend, Fraction(1, 4 * (m - r + 1)))
    second = _frac(data.backend, Fraction(1, 4 * (r + 1)))
    reports = {}
    for reading, first_operator in (('literal', data.D_plus), ('d-minus', data.D_minus)):
        sections = []
        for k in range(2 * m):
            plus_form, minus_form = data.pm_forms(k)
            reduced = (data.act(plus_form, first_operator).scale(first)
                       - data.act(minus_form, data.D_plus).scale(second))
            # combined[k] = ∇_kψ - RHS，因此 RHS = ∇_kψ - combined[k]
            rhs = data.nabla_direction(k) - combined[f"k={k}"]
            sections.append(reduced - rhs)
        reports[reading] = make_report('reduction', reading, m, sections, tolerance, points, r=r)
    return reports


@dataclass
class HolomorphyReport:
    holomorphic: bool
    anti_holomorphic: bool
    parallel_minus: bool
    parallel_plus: bool

    @property
    def classification(self) -> str:
        if self.holomorphic and self.anti_holomorphic:
            return 'both'
        if self.holomorphic:
            return 'holomorphic'
        if self.anti_holomorphic:
            return 'anti-holomorphic'
        return 'neither'

    @property
    def claims_hold(self) -> bool:
        """全纯解沿 X^- 平行，反全纯解沿 X^+ 平行"""
        return (not self.holomorphic or self.parallel_minus) and (not self.anti_holomorphic or self.parallel_plus)

    def to_dict(self) -> dict:
        return {
            'classification': self.classification,
            'parallel_minus': self.parallel_minus,
            'parallel_plus': self.parallel_plus,
            'claims_hold': self.claims_hold,
        }


def holomorphy_check(psi: PolySection, rep: Optional[GammaRep] = None, J: Optional[ComplexStructure] = None,
                     tolerance: Optional[float] = None, points=None) -> HolomorphyReport:
    """按 D^+ψ = 0 / D^-ψ = 0 分类，并交叉检查沿 X^∓ 的平行性"""
    rep, J = _context(psi, rep, J)
    tolerance = config.get_tolerance(psi.backend.name, tolerance)
    data = _DiracData(psi, rep, J)

    def vanishes(sections: List[PolySection]) -> bool:
        return make_report('holomorphy', 'check', psi.m, sections, tolerance, points).passed

    pm = [data.nabla_pm(k) for k in range(2 * psi.m)]
    return HolomorphyReport(
        holomorphic=vanishes([data.D_plus]),
        anti_holomorphic=vanishes([data.D_minus]),
        parallel_minus=vanishes([minus for _, minus in pm]),
        parallel_plus=vanishes([plus for plus, _ in pm]),
    )


@dataclass
class LinearSystem:
    """拟设系数上的线性方程组，零空间对应多项式解"""
    variant: TwistorVariant
    m: int
    degree: int
    rows: Dict[int, Dict[int, Any]]
    nrows: int
    columns: List[PolySection]
    backend: Backend

    @property
    def ncols(self) -> int:
        return len(self.columns)


def ansatz_columns(variant: TwistorVariant, m: int, degree: int, rep: GammaRep,
                   J: ComplexStructure) -> List[PolySection]:
    """拟设基：单项式 × 纤维基（Kähler 型变体限制在 Σ_r 的基上）"""
    backend = rep.backend
    if variant.type_restricted:
        fiber_basis = type_projectors(rep, J)[variant.r].basis()
    else:
        fiber_basis = [SpinorFiber.basis(m, i, backend) for i in range(1 << m)]
    return [PolySection.monomial(mono, spinor, degree)
            for mono in monomials_up_to(m, degree) for spinor in fiber_basis]


def assemble_system(variant: TwistorVariant, m: int, degree: int, rep: Optional[GammaRep] = None,
                    J: Optional[ComplexStructure] = None, backend: Backend = EXACT) -> LinearSystem:
    """组装线性方程组：每一列为一个拟设基元素的方程残差展开"""
    if degree < 0:
        raise ValueError(f"拟设次数必须非负: {degree}")
    variant.validate(m)
    rep = build_rep(m, backend) if rep is None else rep
    J = flat_structure(m) if J is None else J
    columns = ansatz_columns(variant, m, degree, rep, J)

    row_index: Dict[Tuple[str, Monomial, int], int] = {}
    rows: Dict[int, Dict[int, Any]] = {}
    for col, section in enumerate(columns):
        for label, equation in equation_sections(variant, section, rep, J).items():
            for mono, spinor in equation.terms.items():
                for i, value in enumerate(spinor.components):
                    if backend.is_zero(value):
                        continue
                    key = (label, mono, i)
                    if key not in row_index:
                        row_index[key] = len(row_index)
                    rows.setdefault(row_index[key], {})[col] = value
    logger.info(f"方程组组装完成: {variant.label}, m={m}, 次数 {degree}, {len(row_index)} 行 x {len(columns)} 列")
    return LinearSystem(variant, m, degree, rows, len(row_index), columns, backend)


@dataclass
class SolutionSpace:
    """多项式解空间"""
    variant: TwistorVariant
    m: int
    degree: int
    basis: List[PolySection]
    backend: Backend
    bound: Optional[int] = None
    elapsed: float = field(default=0.0, compare=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def bound_respected(self) -> bool:
        return self.bound is None or self.dimension <= self.bound

    def summary(self) -> dict:
        return {
            'variant': self.variant.label,
            'm': self.m,
            'r': self.variant.r,
            'degree': self.degree,
            'dimension': self.dimension,
            'bound': self.bound,
            'bound_respected': self.bound_respected,
        }


def solve_space(variant: TwistorVariant, m: int, degree: int, rep: Optional[GammaRep] = None,
                J: Optional[ComplexStructure] = None, backend: Backend = EXACT) -> SolutionSpace:
    """求解多项式解空间的一组基

    Raises:
        BoundViolationError: Kähler 型变体的解空间维数超过 C(m,r)+C(m,r+1)+C(m,r-1)
    """
    start = time.time()
    rep = build_rep(m, backend) if rep is None else rep
    J = flat_structure(m) if J is None else J
    system = assemble_system(variant, m, degree, rep, J, backend)
    vectors = backend.nullspace(system.rows, system.nrows, system.ncols)

    basis = []
    for vector in vectors:
        solution = PolySection.zero(m, SPINOR, backend, degree)
        for coefficient, column in zip(vector, system.columns):
            if not backend.is_zero(coefficient):
                solution = solution + column.scale(coefficient)
        basis.append(solution)

    bound = dimension_bound(m, variant.r) if variant.tag in KAHLERIAN_FAMILY else None
    space = SolutionSpace(variant, m, degree, basis, backend, bound, time.time() - start)
    logger.info(f"解空间: {variant.label}, m={m}, 次数 {degree}, 维数 {space.dimension}"
                + (f" (上界 {bound})" if bound is not None else '') + f", 耗时 {space.elapsed:.2f} 秒")
    if not space.bound_respected:
        raise BoundViolationError(f"解空间维数 {space.dimension} 超过上界 {bound}: {variant.label}, m={m}")
    if not space.basis:
        logger.warning(f"解空间为空: {variant.label}, m={m}, 次数 {degree}")
    return space


def verify_solution_space(space: SolutionSpace, rep: Optional[GammaRep] = None,
                          J: Optional[ComplexStructure] = None, seed: int = config.DEFAULT_SEED) -> List[ResidualReport]:
    """用独立的残差计算复核每个基元素（精确后端符号为零，浮点后端在采样点上 ≤ 1e-10）"""
    rep = build_rep(space.m, space.backend) if rep is None else rep
    J = flat_structure(space.m) if J is None else J
    points = sample_points(space.m, seed=seed)
    tolerance = 0.0 if space.backend.exact else config.SOLUTION_TOLERANCE
    reports = []
    for index, element in enumerate(space.basis):
        report = residual(space.variant, element, rep, J, tolerance, points)
        report.detail = f"basis[{index}]"
        reports.append(report)
    return reports
