"""
场模块
平直 ℝ^{2m} 上取值于纤维的多项式截面，以及全部一阶算子：
∇、d、δ、d^c、δ^c、∂̸ = e^a.∇、∂̸^c = Je^a.∇ 与 Dirac 算子 D、D^c、D^±
"""

import itertools
import logging
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Callable, Dict, Generic, Iterable, List, Mapping, Optional, Sequence, Tuple, TypeVar

import numpy as np

import config
from backends import EXACT, FLOAT, Backend, get_backend
from fiber_algebra import (
    DimensionError,
    FormFiber,
    VectorFiber,
    check_half_dimension,
    clifford_mul,
    contract,
    contract_basis,
    popcount,
    wedge,
)
from kahler_structure import ComplexStructure, flat_structure
from spinor_rep import GammaRep, SpinorFiber, clifford_act

logger = logging.getLogger(__name__)

Fiber = TypeVar('Fiber', FormFiber, SpinorFiber)

FORM = 'form'
SPINOR = 'spinor'


@dataclass(frozen=True, order=True)
class Monomial:
    """坐标单项式 (x^1)^{n_1}...(x^{2m})^{n_{2m}}"""

    exponents: Tuple[int, ...]

    def __post_init__(self):
        if any(e < 0 for e in self.exponents):
            raise ValueError(f"指数必须非负: {self.exponents}")
        object.__setattr__(self, 'exponents', tuple(int(e) for e in self.exponents))

    @classmethod
    def one(cls, m: int) -> 'Monomial':
        return cls((0,) * (2 * m))

    @classmethod
    def coordinate(cls, m: int, k: int) -> 'Monomial':
        return cls(tuple(1 if i == k else 0 for i in range(2 * m)))

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def derivative(self, k: int) -> Optional[Tuple[int, 'Monomial']]:
        """∂_k 作用：返回 (系数, 单项式)，结果为零时返回 None"""
        power = self.exponents[k]
        if power == 0:
            return None
        lowered = list(self.exponents)
        lowered[k] -= 1
        return power, Monomial(tuple(lowered))

    def __mul__(self, other: 'Monomial') -> 'Monomial':
        return Monomial(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def evaluate(self, point: Sequence[Any], backend: Backend) -> Any:
        value = backend.one
        for coordinate, power in zip(point, self.exponents):
            for _ in range(power):
                value = value * coordinate
        return value

    def __str__(self):
        factors = [f"x{k + 1}" + (f"^{p}" if p > 1 else '') for k, p in enumerate(self.exponents) if p]
        return '*'.join(factors) if factors else '1'


def monomials_of_degree(m: int, degree: int) -> List[Monomial]:
    """全部 d 次单项式（按字典序）"""
    result = []
    for combo in itertools.combinations_with_replacement(range(2 * m), degree):
        exponents = [0] * (2 * m)
        for k in combo:
            exponents[k] += 1
        result.append(Monomial(tuple(exponents)))
    return sorted(result)


def monomials_up_to(m: int, degree: int) -> List[Monomial]:
    return [mono for d in range(degree + 1) for mono in monomials_of_degree(m, d)]


def _fiber_kind(fiber) -> str:
    if isinstance(fiber, FormFiber):
        return FORM
    if isinstance(fiber, SpinorFiber):
        return SPINOR
    raise TypeError(f"不支持的纤维类型: {type(fiber).__name__}")


def zero_fiber(kind: str, m: int, backend: Backend):
    if kind == FORM:
        return FormFiber.zero(m, backend)
    return SpinorFiber.zero(m, backend)


@dataclass(frozen=True, eq=False)
class PolySection(Generic[Fiber]):
    """多项式截面：单项式到纤维元素的映射，次数不超过 degree_bound"""

    m: int
    degree_bound: int
    terms: Mapping[Monomial, Any]
    kind: str = FORM
    backend: Backend = EXACT

    def __post_init__(self):
        check_half_dimension(self.m)
        if self.kind not in (FORM, SPINOR):
            raise ValueError(f"未知的截面类型: {self.kind}")
        cleaned = {}
        for mono, fiber in self.terms.items():
            if len(mono.exponents) != 2 * self.m:
                raise DimensionError(f"单项式变量数必须为 {2 * self.m}")
            if fiber.m != self.m or _fiber_kind(fiber) != self.kind:
                raise DimensionError("截面各项的纤维与截面不一致")
            if mono.degree > self.degree_bound:
                raise ValueError(f"单项式 {mono} 的次数超过上界 {self.degree_bound}")
            if not fiber.is_zero():
                cleaned[mono] = fiber
        object.__setattr__(self, 'terms', MappingProxyType(dict(sorted(cleaned.items()))))

    @classmethod
    def zero(cls, m: int, kind: str = FORM, backend: Backend = EXACT, degree_bound: int = 0) -> 'PolySection':
        return cls(m, degree_bound, {}, kind, backend)

    @classmethod
    def constant(cls, fiber, degree_bound: int = 0) -> 'PolySection':
        return cls(fiber.m, degree_bound, {Monomial.one(fiber.m): fiber}, _fiber_kind(fiber), fiber.backend)

    @classmethod
    def monomial(cls, mono: Monomial, fiber, degree_bound: Optional[int] = None) -> 'PolySection':
        bound = mono.degree if degree_bound is None else degree_bound
        return cls(fiber.m, bound, {mono: fiber}, _fiber_kind(fiber), fiber.backend)

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[Monomial, Any]], m: int, kind: str,
                   backend: Backend, degree_bound: Optional[int] = None) -> 'PolySection':
        """合并同类项构造截面"""
        collected: Dict[Monomial, Any] = {}
        for mono, fiber in terms:
            collected[mono] = collected[mono] + fiber if mono in collected else fiber
        bound = max((mono.degree for mono in collected), default=0) if degree_bound is None else degree_bound
        return cls(m, bound, collected, kind, backend)

    def _check_same(self, other: 'PolySection'):
        if other.m != self.m or other.kind != self.kind:
            raise DimensionError(f"截面不匹配: ({self.m}, {self.kind}) 与 ({other.m}, {other.kind})")

    def __add__(self, other: 'PolySection') -> 'PolySection':
        self._check_same(other)
        return PolySection.from_terms(
            itertools.chain(self.terms.items(), other.terms.items()),
            self.m, self.kind, self.backend, max(self.degree_bound, other.degree_bound))

    def __neg__(self) -> 'PolySection':
        return self.map_fiber(lambda fiber: -fiber)

    def __sub__(self, other: 'PolySection') -> 'PolySection':
        return self + (-other)

    def scale(self, factor: Any) -> 'PolySection':
        factor = self.backend.convert(factor)
        return self.map_fiber(lambda fiber: fiber.scale(factor))

    def __rmul__(self, factor: Any) -> 'PolySection':
        return self.scale(factor)

    def map_fiber(self, func: Callable[[Any], Any], kind: Optional[str] = None) -> 'PolySection':
        """对每一项的纤维施加逐点线性映射"""
        target = self.kind if kind is None else kind
        return PolySection(self.m, self.degree_bound,
                           {mono: func(fiber) for mono, fiber in self.terms.items()}, target, self.backend)

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self) -> int:
        return max((mono.degree for mono in self.terms), default=0)

    def coefficient_max_abs(self) -> float:
        """全部系数的最大模"""
        return max((fiber.max_abs() for fiber in self.terms.values()), default=0.0)

    def to_backend(self, backend: Backend) -> 'PolySection':
        return PolySection(self.m, self.degree_bound,
                           {mono: fiber.to_backend(backend) for mono, fiber in self.terms.items()},
                           self.kind, backend)

    def with_bound(self, degree_bound: int) -> 'PolySection':
        return PolySection(self.m, degree_bound, dict(self.terms), self.kind, self.backend)

    def __repr__(self):
        return f"PolySection(m={self.m}, kind={self.kind}, degree_bound={self.degree_bound}, terms={len(self.terms)})"


def nabla(k: int, s: PolySection) -> PolySection:
    """平直空间中沿 X_k 的协变导数（坐标偏导）"""
    if not 0 <= k < 2 * s.m:
        raise DimensionError(f"方向下标超出范围: k={k}, m={s.m}")
    terms = []
    for mono, fiber in s.terms.items():
        lowered = mono.derivative(k)
        if lowered is not None:
            power, target = lowered
            terms.append((target, fiber.scale(power)))
    return PolySection.from_terms(terms, s.m, s.kind, s.backend, max(s.degree_bound - 1, 0))


def gradient(s: PolySection) -> List[PolySection]:
    return [nabla(k, s) for k in range(2 * s.m)]


def _require_form(s: PolySection):
    if s.kind != FORM:
        raise TypeError("该算子只作用于形式值截面")


def _require_spinor(s: PolySection):
    if s.kind != SPINOR:
        raise TypeError("该算子只作用于旋量值截面")


def _default_structure(J: Optional[ComplexStructure], m: int) -> ComplexStructure:
    return flat_structure(m) if J is None else J


def _sum_sections(parts: Iterable[PolySection], m: int, kind: str, backend: Backend, bound: int) -> PolySection:
    result = PolySection.zero(m, kind, backend, bound)
    for part in parts:
        result = result + part
    return result.with_bound(bound)


def _apply_left(s: PolySection, factor_for: Callable[[int], FormFiber],
                product: Callable[[FormFiber, FormFiber], FormFiber]) -> PolySection:
    bound = max(s.degree_bound - 1, 0)
    parts = []
    for k in range(2 * s.m):
        derivative = nabla(k, s)
        if derivative.is_zero():
            continue
        factor = factor_for(k)
        parts.append(derivative.map_fiber(lambda fiber, f=factor: product(f, fiber)))
    return _sum_sections(parts, s.m, s.kind, s.backend, bound)


def ext_d(s: PolySection) -> PolySection:
    """d = Σ_k g^k∧∇_k"""
    _require_form(s)
    return _apply_left(s, lambda k: FormFiber.generator(s.m, k, s.backend), wedge)


def coderiv(s: PolySection) -> PolySection:
    """δ = -Σ_k i_{X_k}∇_k"""
    _require_form(s)
    bound = max(s.degree_bound - 1, 0)
    parts = [nabla(k, s).map_fiber(lambda fiber, k=k: -contract_basis(k, fiber)) for k in range(2 * s.m)]
    return _sum_sections(parts, s.m, s.kind, s.backend, bound)


def d_c(s: PolySection, J: Optional[ComplexStructure] = None) -> PolySection:
    """d^c = Σ_k J(g^k)∧∇_k"""
    _require_form(s)
    J = _default_structure(J, s.m)
    return _apply_left(s, lambda k: J.image_form(k, s.backend), wedge)


def delta_c(s: PolySection, J: Optional[ComplexStructure] = None) -> PolySection:
    """δ^c = -Σ_k i_{JX_k}∇_k"""
    _require_form(s)
    J = _default_structure(J, s.m)
    bound = max(s.degree_bound - 1, 0)
    parts = []
    for k in range(2 * s.m):
        vector = J.image_vector(k, s.backend)
        parts.append(nabla(k, s).map_fiber(lambda fiber, v=vector: -contract(v, fiber)))
    return _sum_sections(parts, s.m, s.kind, s.backend, bound)


def dslash(s: PolySection) -> PolySection:
    """∂̸ = Σ_k g^k.∇_k（Clifford 积）"""
    _require_form(s)
    return _apply_left(s, lambda k: FormFiber.generator(s.m, k, s.backend), clifford_mul)


def dslash_c(s: PolySection, J: Optional[ComplexStructure] = None) -> PolySection:
    """∂̸^c = Σ_k J(g^k).∇_k"""
    _require_form(s)
    J = _default_structure(J, s.m)
    return _apply_left(s, lambda k: J.image_form(k, s.backend), clifford_mul)


def dirac(s: PolySection, rep: GammaRep) -> PolySection:
    """D = Σ_k g^k.∇_k 作用于旋量截面"""
    _require_spinor(s)
    return _apply_left(s, lambda k: FormFiber.generator(s.m, k, s.backend),
                       lambda form, psi: clifford_act(form, psi, rep))


def dirac_c(s: PolySection, rep: GammaRep, J: Optional[ComplexStructure] = None) -> PolySection:
    """D^c = Σ_k J(g^k).∇_k"""
    _require_spinor(s)
    J = _default_structure(J, s.m)
    return _apply_left(s, lambda k: J.image_form(k, s.backend),
                       lambda form, psi: clifford_act(form, psi, rep))


def dirac_pm(s: PolySection, rep: GammaRep, J: Optional[ComplexStructure] = None) -> Tuple[PolySection, PolySection]:
    """D^± = ½(D ∓ iD^c)

    Returns:
        (D^+ s, D^- s)
    """
    backend = s.backend
    plain = dirac(s, rep)
    twisted = dirac_c(s, rep, J).scale(backend.imag_unit)
    return (plain - twisted).scale(backend.half), (plain + twisted).scale(backend.half)


def laplacian(s: PolySection) -> PolySection:
    """坐标拉普拉斯 Σ_k ∂_k∂_k（在 v.v = +1 约定下 D² 等于它）"""
    bound = max(s.degree_bound - 2, 0)
    return _sum_sections((nabla(k, nabla(k, s)) for k in range(2 * s.m)), s.m, s.kind, s.backend, bound)


def _product_sections(a: PolySection, b: PolySection, product: Callable[[Any, Any], Any], kind: str) -> PolySection:
    if a.m != b.m:
        raise DimensionError(f"维数不匹配: m={a.m} 与 m={b.m}")
    terms = []
    for mono_a, fiber_a in a.terms.items():
        for mono_b, fiber_b in b.terms.items():
            terms.append((mono_a * mono_b, product(fiber_a, fiber_b)))
    return PolySection.from_terms(terms, a.m, kind, a.backend, a.degree_bound + b.degree_bound)


def wedge_sections(a: PolySection, b: PolySection) -> PolySection:
    _require_form(a)
    _require_form(b)
    return _product_sections(a, b, wedge, FORM)


def clifford_sections(a: PolySection, b: PolySection) -> PolySection:
    _require_form(a)
    _require_form(b)
    return _product_sections(a, b, clifford_mul, FORM)


def act_sections(a: PolySection, psi: PolySection, rep: GammaRep) -> PolySection:
    """形式截面对旋量截面的逐点 Clifford 作用"""
    _require_form(a)
    _require_spinor(psi)
    return _product_sections(a, psi, lambda form, spinor: clifford_act(form, spinor, rep), SPINOR)


def contract_section(X: VectorFiber, s: PolySection) -> PolySection:
    _require_form(s)
    return s.map_fiber(lambda fiber: contract(X, fiber))


def position_form(m: int, backend: Backend = EXACT) -> PolySection:
    """位置 1-形式 x̃ = Σ_k x^k g^k"""
    terms = [(Monomial.coordinate(m, k), FormFiber.generator(m, k, backend)) for k in range(2 * m)]
    return PolySection.from_terms(terms, m, FORM, backend, 1)


def evaluate(s: PolySection, point: Sequence[Any]):
    """在一点处求值，得到纤维元素"""
    if len(point) != 2 * s.m:
        raise DimensionError(f"采样点坐标数必须为 {2 * s.m}")
    point = [s.backend.convert(x) for x in point]
    result = zero_fiber(s.kind, s.m, s.backend)
    for mono, fiber in s.terms.items():
        result = result + fiber.scale(mono.evaluate(point, s.backend))
    return result


def sample_points(m: int, count: Optional[int] = None, seed: int = config.DEFAULT_SEED) -> List[Tuple[float, ...]]:
    """[-1,1]^{2m} 中的固定种子伪随机采样点"""
    rng = np.random.default_rng(seed)
    low, high = config.SAMPLE_BOX
    points = rng.uniform(low, high, size=(config.get_sample_points(count), 2 * m))
    return [tuple(float(x) for x in row) for row in points]


def max_abs_at_points(s: PolySection, points: Sequence[Sequence[float]]) -> float:
    """截面在采样点上的最大模（转换到浮点后端求值）"""
    if s.is_zero():
        return 0.0
    floating = s.to_backend(FLOAT) if s.backend is not FLOAT else s
    return max(evaluate(floating, point).max_abs() for point in points)


def random_form(m: int, rng: np.random.Generator, backend: Backend = EXACT, density: float = 0.3,
                grades: Optional[Sequence[int]] = None) -> FormFiber:
    """稀疏随机形式，系数为小高斯整数"""
    coeffs = {}
    for mask in range(1 << (2 * m)):
        if grades is not None and popcount(mask) not in grades:
            continue
        if rng.random() < density:
            coeffs[mask] = backend.random_coefficient(rng)
    return FormFiber(m, coeffs, backend)


def random_spinor(m: int, rng: np.random.Generator, backend: Backend = EXACT) -> SpinorFiber:
    return SpinorFiber(m, tuple(backend.random_coefficient(rng) for _ in range(1 << m)), backend)


def random_section(m: int, degree: int, kind: str, rng: np.random.Generator, backend: Backend = EXACT,
                   density: float = 0.3, grades: Optional[Sequence[int]] = None) -> PolySection:
    """随机多项式截面，每个单项式以给定密度出现"""
    terms = []
    for mono in monomials_up_to(m, degree):
        if rng.random() >= density:
            continue
        if kind == FORM:
            terms.append((mono, random_form(m, rng, backend, density, grades)))
        else:
            terms.append((mono, random_spinor(m, rng, backend)))
    return PolySection.from_terms(terms, m, kind, backend, degree)


def section_to_json(s: PolySection) -> dict:
    """序列化为 {m, degree_bound, kind, backend, terms: [{exponents, fiber}]}

    精确后端的有理数保存为 "分子/分母" 字符串，保证逐位往返。
    """
    terms = []
    for mono, fiber in s.terms.items():
        if s.kind == FORM:
            entries = {str(mask): s.backend.to_json(value) for mask, value in sorted(fiber.coeffs.items())}
        else:
            entries = {str(i): s.backend.to_json(value) for i, value in enumerate(fiber.components)
                       if not s.backend.is_zero(value)}
        terms.append({'exponents': list(mono.exponents), 'fiber': entries})
    return {
        'm': s.m,
        'degree_bound': s.degree_bound,
        'kind': s.kind,
        'backend': s.backend.name,
        'terms': terms,
    }


def section_from_json(data: Mapping[str, Any]) -> PolySection:
    backend = get_backend(data.get('backend', 'exact'))
    m = int(data['m'])
    kind = data.get('kind', FORM)
    terms = {}
    for item in data['terms']:
        mono = Monomial(tuple(item['exponents']))
        values = {int(key): backend.from_json(pair) for key, pair in item['fiber'].items()}
        if kind == FORM:
            terms[mono] = FormFiber(m, values, backend)
        else:
            terms[mono] = SpinorFiber(m, tuple(values.get(i, backend.zero) for i in range(1 << m)), backend)
    return PolySection(m, int(data['degree_bound']), terms, kind, backend)
