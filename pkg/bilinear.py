"""
旋量双线性型模块
平方映射 ψψ̄、p-形式与 (p,q)-形式双线性型、间隙形式 α、β、γ、μ，
以及 CKY 方程、Kähler 型 CKY 方程与双线性型方程的残差检验
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import config
from fiber_algebra import (
    XI,
    FormFiber,
    GradeError,
    VectorFiber,
    clifford_mul,
    contract,
    contract_basis,
    degree_operator,
    grade_involution,
    grade_project,
    popcount,
    reversion,
    wedge,
)
from fields import (
    FORM,
    SPINOR,
    PolySection,
    coderiv,
    d_c,
    delta_c,
    dslash,
    dslash_c,
    ext_d,
    nabla,
    sample_points,
)
from kahler_structure import (
    Bigrade,
    BigradeError,
    ComplexStructure,
    bigrade_project,
    bigrade_project_frame,
    flat_structure,
    op_J_derivation,
    op_L,
    op_Lambda,
)
from reports import ResidualReport, make_report, measure_residual
from spinor_rep import GammaRep, PairingMatrix, SpinorFiber, build_rep, clifford_act
from twistor import (
    ANTI_HOLOMORPHIC,
    HIJAZI,
    HOLOMORPHIC,
    KIRCHBERG_DISPLAY,
    KIRCHBERG_TEXT,
    RIEMANNIAN,
    PreconditionError,
    SolutionSpace,
    TwistorVariant,
    constants_kl,
    kirchberg_coefficient,
    residual,
    holomorphic_constants,
)

logger = logging.getLogger(__name__)

HOLOMORPHIC_BIGRADING = 'holomorphic'
FRAME_BIGRADING = 'frame'
BIGRADINGS = (HOLOMORPHIC_BIGRADING, FRAME_BIGRADING)

GRADED = 'graded'
BIGRADED = 'bigraded'

# 复有理数以 (实部, 虚部) 保存，由后端转换
Complex = Tuple[Fraction, Fraction]


def _cx(re: Any, im: Any = 0) -> Complex:
    return Fraction(re), Fraction(im)


# ---------------------------------------------------------------------------
# 平方映射
# ---------------------------------------------------------------------------

def _square_fiber(psi: SpinorFiber, covector: Sequence[Any], rep: GammaRep) -> FormFiber:
    """算子 ψ⊗φ̄ 在 Clifford 基上的展开：c_I = 2^{-m} tr(γ(e_I^ξ) ψφ̄)"""
    backend = rep.backend
    normalization = backend.convert(Fraction(1, rep.dimension))
    coeffs = {}
    for mask in range(1 << (2 * rep.m)):
        perm, phase = rep.blade_perms[mask], rep.blade_phases[mask]
        # tr(γ_I ψ φ̄) = Σ_j φ̄_{perm[j]} phase[j] ψ_j
        total = backend.zero
        for j, value in enumerate(psi.components):
            if backend.is_zero(value):
                continue
            total = total + covector[perm[j]] * phase[j] * value
        if not backend.is_zero(total):
            sign = XI.sign(popcount(mask))
            coeffs[mask] = total * normalization if sign > 0 else -(total * normalization)
    return FormFiber(rep.m, coeffs, backend)


def square_fiber(psi: SpinorFiber, phi: SpinorFiber, pairing: PairingMatrix, rep: GammaRep) -> FormFiber:
    """纤维上的 ψφ̄，满足 (ψφ̄).κ = (φ,κ)ψ"""
    if psi.m != rep.m or phi.m != rep.m or pairing.m != rep.m:
        raise ValueError(f"维数不匹配: 旋量与表示/配对的 m 不一致 (m={rep.m})")
    return _square_fiber(psi, pairing.covector(phi), rep)


def square_fiber_components(psi: SpinorFiber, phi: SpinorFiber, pairing: PairingMatrix,
                            rep: GammaRep) -> FormFiber:
    """分量公式：c_I = 2^{-m} (φ, e_I^ξ.ψ)，逐个基元素独立计算"""
    backend = rep.backend
    normalization = backend.convert(Fraction(1, rep.dimension))
    coeffs = {}
    for mask in range(1 << (2 * rep.m)):
        blade = reversion(FormFiber(rep.m, {mask: 1}, backend))
        value = pairing.pair(phi, clifford_act(blade, psi, rep))
        if not backend.is_zero(value):
            coeffs[mask] = value * normalization
    return FormFiber(rep.m, coeffs, backend)


def reconstruction_residual(psi: SpinorFiber, phi: SpinorFiber, kappa: SpinorFiber,
                            pairing: PairingMatrix, rep: GammaRep) -> float:
    """|(ψφ̄).κ - (φ,κ)ψ|"""
    lhs = clifford_act(square_fiber(psi, phi, pairing, rep), kappa, rep)
    rhs = psi.scale(pairing.pair(phi, kappa))
    return (lhs - rhs).max_abs()


def _mixed(psi: PolySection, phi: PolySection, pairing: PairingMatrix, rep: GammaRep,
           fiber_square: Callable[[SpinorFiber, SpinorFiber], FormFiber]) -> PolySection:
    if psi.kind != SPINOR or phi.kind != SPINOR:
        raise TypeError("平方映射只作用于旋量截面")
    terms = []
    for mono_b, fiber_b in phi.terms.items():
        for mono_a, fiber_a in psi.terms.items():
            terms.append((mono_a * mono_b, fiber_square(fiber_a, fiber_b)))
    return PolySection.from_terms(terms, psi.m, FORM, psi.backend, psi.degree_bound + phi.degree_bound)


def mixed_square(psi: PolySection, phi: PolySection, pairing: PairingMatrix,
                 rep: Optional[GammaRep] = None) -> PolySection:
    """截面 ψφ̄（例如 ψ(∇_bψ)‾）"""
    rep = build_rep(psi.m, psi.backend) if rep is None else rep
    covectors: Dict[int, List[Any]] = {}

    def fiber_square(a: SpinorFiber, b: SpinorFiber) -> FormFiber:
        key = id(b)
        if key not in covectors:
            covectors[key] = pairing.covector(b)
        return _square_fiber(a, covectors[key], rep)

    return _mixed(psi, phi, pairing, rep, fiber_square)


def square_map(psi: PolySection, pairing: PairingMatrix, rep: Optional[GammaRep] = None) -> PolySection:
    """ψψ̄（算子分解），全局常数 c_m = 2^{-m} 由 (ψφ̄).κ = (φ,κ)ψ 固定"""
    return mixed_square(psi, psi, pairing, rep)


def square_map_components(psi: PolySection, pairing: PairingMatrix, rep: Optional[GammaRep] = None) -> PolySection:
    """ψψ̄（分量公式），与 square_map 是同一对象的两条独立计算路径"""
    rep = build_rep(psi.m, psi.backend) if rep is None else rep
    return _mixed(psi, psi, pairing, rep, lambda a, b: square_fiber_components(a, b, pairing, rep))


# ---------------------------------------------------------------------------
# 次数与双分次投影
# ---------------------------------------------------------------------------

def _zero_form(s: PolySection) -> PolySection:
    return PolySection.zero(s.m, FORM, s.backend, s.degree_bound)


def grade_section(s: PolySection, degree: int) -> PolySection:
    if not 0 <= degree <= 2 * s.m:
        return _zero_form(s)
    return s.map_fiber(lambda fiber: grade_project(fiber, degree))


def bigrade_section(s: PolySection, p: int, q: int, J: Optional[ComplexStructure] = None,
                    bigrading: str = HOLOMORPHIC_BIGRADING) -> PolySection:
    """截面的 (p,q) 投影；超出范围的双分次给出零截面"""
    J = flat_structure(s.m) if J is None else J
    if bigrading not in BIGRADINGS:
        raise ValueError(f"未知的双分次方式: {bigrading}")
    if not (0 <= p <= s.m and 0 <= q <= s.m):
        return _zero_form(s)
    bg = Bigrade(p, q)
    if bigrading == FRAME_BIGRADING:
        if not J.is_flat:
            raise BigradeError("标架双分次只适用于标准复结构")
        return s.map_fiber(lambda fiber: bigrade_project_frame(fiber, bg))
    return s.map_fiber(lambda fiber: bigrade_project(fiber, J, bg))


@dataclass
class BilinearDecomposition:
    """ψψ̄ 按次数与双分次的分解"""
    psi: PolySection
    omega: PolySection
    J: ComplexStructure
    bigrading: str = HOLOMORPHIC_BIGRADING

    @classmethod
    def from_spinor(cls, psi: PolySection, pairing: PairingMatrix, rep: Optional[GammaRep] = None,
                    J: Optional[ComplexStructure] = None,
                    bigrading: str = HOLOMORPHIC_BIGRADING) -> 'BilinearDecomposition':
        J = flat_structure(psi.m) if J is None else J
        return cls(psi, square_map(psi, pairing, rep), J, bigrading)

    def grade_part(self, p: int) -> PolySection:
        if not 0 <= p <= 2 * self.psi.m:
            raise GradeError(f"次数必须在 0-{2 * self.psi.m} 之间: p={p}")
        return grade_section(self.omega, p)

    def pq_part(self, p: int, q: int) -> PolySection:
        Bigrade(p, q).validate(self.psi.m)
        return bigrade_section(self.omega, p, q, self.J, self.bigrading)

    def parts(self) -> Dict[Bigrade, PolySection]:
        """全部非零 (p,q) 分量"""
        result = {}
        for p in range(self.psi.m + 1):
            for q in range(self.psi.m + 1):
                part = self.pq_part(p, q)
                if not part.is_zero():
                    result[Bigrade(p, q)] = part
        return result


# ---------------------------------------------------------------------------
# 间隙形式
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapWeights:
    """α = a_A 𝒜 + a_B ℬ, β = b_C 𝒞 + b_D 𝒟, γ = g_B ℬ + g_A 𝒜, μ = u_D 𝒟 + u_C 𝒞"""
    alpha: Tuple[Complex, Complex]
    beta: Tuple[Complex, Complex]
    gamma: Tuple[Complex, Complex]
    mu: Tuple[Complex, Complex]
    mu_reading: str = 'corrected'
    label: str = ''

    @classmethod
    def from_kl(cls, k: Any, l: Any, l_phase: str = 'imaginary') -> 'GapWeights':
        """由 (k, l) 构造

        Args:
            k, l: 合并方程中的常数
            l_phase: 'literal' 直接使用 l；'imaginary' 使用 i·l（合并方程展开后实际出现的系数）
        """
        if l_phase not in ('literal', 'imaginary'):
            raise ValueError(f"未知的 l 相位读法: {l_phase}")
        kk = _cx(k)
        ll = _cx(l) if l_phase == 'literal' else _cx(0, l)
        minus_ll = (-ll[0], -ll[1])
        return cls(alpha=(kk, ll), beta=(kk, ll), gamma=(kk, minus_ll), mu=(kk, minus_ll),
                   label=f"k={Fraction(k)}, l={Fraction(l)}, {l_phase}")

    @classmethod
    def hijazi(cls, a: Any, b: Any, mu_reading: str = 'corrected') -> 'GapWeights':
        """α = b𝒜, β = b𝒞, γ = aℬ, μ = a𝒟

        mu_reading: 'corrected' 把 μ 投影到 (p+1,q)，'literal' 投影到 (p,q-1)
        """
        if mu_reading not in ('corrected', 'literal'):
            raise ValueError(f"未知的 μ 读法: {mu_reading}")
        zero = _cx(0)
        return cls(alpha=(_cx(b), zero), beta=(_cx(b), zero), gamma=(_cx(a), zero), mu=(_cx(a), zero),
                   mu_reading=mu_reading, label=f"a={Fraction(a)}, b={Fraction(b)}")


def variant_weights(variant: TwistorVariant, m: int, l_phase: str = 'imaginary',
                    constants_reading: str = 'rederived', mu_reading: str = 'corrected') -> GapWeights:
    """各变体对应的间隙形式权重"""
    if variant.tag == RIEMANNIAN:
        return GapWeights.hijazi(Fraction(1, 2 * m), 0, mu_reading)
    if variant.tag == HIJAZI:
        return GapWeights.hijazi(variant.a, variant.b, mu_reading)
    if variant.tag in (KIRCHBERG_DISPLAY, KIRCHBERG_TEXT):
        return GapWeights.from_kl(kirchberg_coefficient(variant), 0, l_phase)
    if variant.tag in (HOLOMORPHIC, ANTI_HOLOMORPHIC):
        constants = holomorphic_constants(m, variant.r, variant.tag == HOLOMORPHIC, constants_reading)
        return GapWeights.from_kl(constants.k, constants.l, l_phase)
    constants = constants_kl(m, variant.r)
    return GapWeights.from_kl(constants.k, constants.l, l_phase)


@dataclass
class GapForms:
    """未投影的 𝒜、ℬ、𝒞、𝒟 与 α、β、γ、μ"""
    omega: PolySection
    A: PolySection
    B: PolySection
    C: PolySection
    D: PolySection
    alpha: PolySection
    beta: PolySection
    gamma: PolySection
    mu: PolySection
    weights: GapWeights
    J: ComplexStructure

    def projected(self, p: int, q: int, bigrading: str = FRAME_BIGRADING) -> Dict[str, PolySection]:
        """α_{(p,q-1)}, β_{(p,q+1)}, γ_{(p-1,q)}, μ_{(p+1,q)}（μ 的读法由权重决定）"""
        mu_bigrade = (p + 1, q) if self.weights.mu_reading == 'corrected' else (p, q - 1)
        return {
            'alpha': bigrade_section(self.alpha, p, q - 1, self.J, bigrading),
            'beta': bigrade_section(self.beta, p, q + 1, self.J, bigrading),
            'gamma': bigrade_section(self.gamma, p - 1, q, self.J, bigrading),
            'mu': bigrade_section(self.mu, *mu_bigrade, self.J, bigrading),
        }

    def graded(self, degree: int) -> Dict[str, PolySection]:
        """α、γ 取 degree-1 次部分，β、μ 取 degree+1 次部分"""
        return {
            'alpha': grade_section(self.alpha, degree - 1),
            'beta': grade_section(self.beta, degree + 1),
            'gamma': grade_section(self.gamma, degree - 1),
            'mu': grade_section(self.mu, degree + 1),
        }


def _combine(first: PolySection, second: PolySection, weights: Tuple[Complex, Complex]) -> PolySection:
    backend = first.backend
    return first.scale(backend.convert(weights[0])) + second.scale(backend.convert(weights[1]))


def _sum(sections: Sequence[PolySection], template: PolySection) -> PolySection:
    result = _zero_form(template)
    for section in sections:
        result = result + section
    return result


@dataclass
class _SpinorData:
    psi: PolySection
    omega: PolySection
    sigmas: List[PolySection]
    rep: GammaRep
    J: ComplexStructure


def _spinor_data(psi: PolySection, pairing: PairingMatrix, rep: GammaRep, J: ComplexStructure) -> _SpinorData:
    """ψψ̄ 与 σ_b = ψ(∇_bψ)‾"""
    omega = square_map(psi, pairing, rep)
    sigmas = [mixed_square(psi, nabla(b, psi), pairing, rep) for b in range(2 * psi.m)]
    return _SpinorData(psi, omega, sigmas, rep, J)


def _gap_forms_from(data: _SpinorData, weights: GapWeights) -> GapForms:
    m, backend, J = data.psi.m, data.psi.backend, data.J
    omega, sigmas = data.omega, data.sigmas
    two = backend.convert(2)

    wedge_plain = _sum([s.map_fiber(lambda f, b=b: wedge(FormFiber.generator(m, b, backend), f))
                        for b, s in enumerate(sigmas)], omega)
    wedge_j = _sum([s.map_fiber(lambda f, b=b: wedge(J.image_form(b, backend), f))
                    for b, s in enumerate(sigmas)], omega)
    contract_plain = _sum([s.map_fiber(lambda f, b=b: contract_basis(b, f))
                           for b, s in enumerate(sigmas)], omega)
    contract_j = _sum([s.map_fiber(lambda f, b=b: contract(J.image_vector(b, backend), f))
                       for b, s in enumerate(sigmas)], omega)

    slash, slash_c = dslash(omega), dslash_c(omega, J)
    A = slash_c - wedge_j.scale(two)
    B = slash - wedge_plain.scale(two)
    C = slash_c - contract_j.scale(two)
    D = slash - contract_plain.scale(two)
    return GapForms(
        omega=omega, A=A, B=B, C=C, D=D,
        alpha=_combine(A, B, weights.alpha),
        beta=_combine(C, D, weights.beta),
        gamma=_combine(B, A, weights.gamma),
        mu=_combine(D, C, weights.mu),
        weights=weights, J=J,
    )


def _context(psi: PolySection, rep: Optional[GammaRep], J: Optional[ComplexStructure]):
    if psi.kind != SPINOR:
        raise TypeError("双线性型只由旋量截面构造")
    return (build_rep(psi.m, psi.backend) if rep is None else rep,
            flat_structure(psi.m) if J is None else J)


def gap_forms(psi: PolySection, weights: GapWeights, pairing: PairingMatrix, rep: Optional[GammaRep] = None,
              J: Optional[ComplexStructure] = None) -> GapForms:
    """由 ψψ̄ 与 ψ(∇_bψ)‾ 构造间隙形式"""
    rep, J = _context(psi, rep, J)
    return _gap_forms_from(_spinor_data(psi, pairing, rep, J), weights)


def alpha_by_expansion(psi: PolySection, weights: GapWeights, pairing: PairingMatrix,
                       rep: Optional[GammaRep] = None, J: Optional[ComplexStructure] = None) -> PolySection:
    """α 的第二条计算路径：∂̸ = d - δ，外积由 Clifford 积的对称化 v∧σ = ½(v.σ + σ̂.v) 得到"""
    rep, J = _context(psi, rep, J)
    backend = psi.backend
    m = psi.m
    omega = square_map_components(psi, pairing, rep)
    half = backend.half

    def clifford_wedge(v: FormFiber, fiber: FormFiber) -> FormFiber:
        return (clifford_mul(v, fiber) + clifford_mul(grade_involution(fiber), v)).scale(half)

    wedge_plain, wedge_j = _zero_form(omega), _zero_form(omega)
    for b in range(2 * m):
        sigma = mixed_square(psi, nabla(b, psi), pairing, rep)
        e, je = FormFiber.generator(m, b, backend), J.image_form(b, backend)
        wedge_plain = wedge_plain + sigma.map_fiber(lambda f, v=e: clifford_wedge(v, f))
        wedge_j = wedge_j + sigma.map_fiber(lambda f, v=je: clifford_wedge(v, f))

    two = backend.convert(2)
    A = d_c(omega, J) - delta_c(omega, J) - wedge_j.scale(two)
    B = ext_d(omega) - coderiv(omega) - wedge_plain.scale(two)
    return _combine(A, B, weights.alpha)


def proof_identity_residuals(sigma: FormFiber, k: int, l: int, J: Optional[ComplexStructure] = None) -> Dict[str, float]:
    """σ.v.u - u.v.σ = -2u∧v∧σ - 2 i_U i_V σ 在四种 (u, v) 组合上的残差

    'literal-sign(e,Je)' 为第四个恒等式按原符号 -(σ.v.u) - (u.v.σ) = 2u∧v∧σ + 2i_U i_V σ 的残差，
    一般不为零，仅供对照。
    """
    J = flat_structure(sigma.m) if J is None else J
    backend = sigma.backend
    e_k, e_l = FormFiber.generator(sigma.m, k, backend), FormFiber.generator(sigma.m, l, backend)
    je_k, je_l = J.image_form(k, backend), J.image_form(l, backend)

    def contract_vector(form: FormFiber, target: FormFiber) -> FormFiber:
        return contract(VectorFiber.from_form(form), target)

    def defect(u: FormFiber, v: FormFiber) -> FormFiber:
        lhs = clifford_mul(clifford_mul(sigma, v), u) - clifford_mul(u, clifford_mul(v, sigma))
        rhs = (wedge(u, wedge(v, sigma)) + contract_vector(u, contract_vector(v, sigma))).scale(-2)
        return lhs - rhs

    literal_lhs = -clifford_mul(clifford_mul(sigma, je_l), e_k) - clifford_mul(e_k, clifford_mul(je_l, sigma))
    literal_rhs = (wedge(e_k, wedge(je_l, sigma)) + contract_vector(e_k, contract_vector(je_l, sigma))).scale(2)
    return {
        '(e,e)': defect(e_k, e_l).max_abs(),
        '(Je,Je)': defect(je_k, je_l).max_abs(),
        '(Je,e)': defect(je_k, e_l).max_abs(),
        '(e,Je)': defect(e_k, je_l).max_abs(),
        'literal-sign(e,Je)': (literal_lhs - literal_rhs).max_abs(),
    }


# ---------------------------------------------------------------------------
# 截面上的代数算子
# ---------------------------------------------------------------------------

def _L(s: PolySection, J: ComplexStructure) -> PolySection:
    return s.map_fiber(lambda f: op_L(f, J))


def _Lambda(s: PolySection, J: ComplexStructure) -> PolySection:
    return s.map_fiber(lambda f: op_Lambda(f, J))


def _Jder(s: PolySection, J: ComplexStructure) -> PolySection:
    return s.map_fiber(lambda f: op_J_derivation(f, J))


def _N(s: PolySection) -> PolySection:
    return s.map_fiber(degree_operator)


def _co_N(s: PolySection) -> PolySection:
    """(2m - N)"""
    two_m = s.backend.convert(2 * s.m)
    return s.map_fiber(lambda f: f.scale(two_m) - degree_operator(f))


def _wedge_e(k: int, s: PolySection) -> PolySection:
    return s.map_fiber(lambda f: wedge(FormFiber.generator(s.m, k, s.backend), f))


def _wedge_je(k: int, s: PolySection, J: ComplexStructure) -> PolySection:
    return s.map_fiber(lambda f: wedge(J.image_form(k, s.backend), f))


def _contract_x(k: int, s: PolySection) -> PolySection:
    return s.map_fiber(lambda f: contract_basis(k, f))


def _contract_jx(k: int, s: PolySection, J: ComplexStructure) -> PolySection:
    return s.map_fiber(lambda f: contract(J.image_vector(k, s.backend), f))


def _frac(s: PolySection, value: Fraction) -> Any:
    return s.backend.convert(Fraction(value))


# ---------------------------------------------------------------------------
# 残差检验
# ---------------------------------------------------------------------------

def _tolerance(s: PolySection, tolerance: Optional[float]) -> float:
    return config.get_tolerance(s.backend.name, tolerance)


def decomposition_sections(gaps: GapForms) -> List[PolySection]:
    """∇_kω - (e^k∧γ + i_{X_k}μ + Je^k∧α + i_{JX_k}β)"""
    omega, J = gaps.omega, gaps.J
    sections = []
    for k in range(2 * omega.m):
        rhs = (_wedge_e(k, gaps.gamma) + _contract_x(k, gaps.mu)
               + _wedge_je(k, gaps.alpha, J) + _contract_jx(k, gaps.beta, J))
        sections.append(nabla(k, omega) - rhs)
    return sections


def decomposition_residual(gaps: GapForms, variant: str = '', tolerance: Optional[float] = None,
                           points=None, r: Optional[int] = None) -> ResidualReport:
    tolerance = _tolerance(gaps.omega, tolerance)
    return make_report('decomposition', variant, gaps.omega.m, decomposition_sections(gaps), tolerance, points, r=r)


def operator_action_sections(gaps: GapForms) -> Dict[str, PolySection]:
    """dω = Nμ + 2Lα - Jβ, d^cω = -2Lγ + Jμ + Nβ, δω = -(2m-N)γ + Jα + 2Λβ, δ^cω = -Jγ - 2Λμ - (2m-N)α"""
    omega, J = gaps.omega, gaps.J
    two = omega.backend.convert(2)
    alpha, beta, gamma, mu = gaps.alpha, gaps.beta, gaps.gamma, gaps.mu
    return {
        'd': ext_d(omega) - (_N(mu) + _L(alpha, J).scale(two) - _Jder(beta, J)),
        'd^c': d_c(omega, J) - (-_L(gamma, J).scale(two) + _Jder(mu, J) + _N(beta)),
        'delta': coderiv(omega) - (-_co_N(gamma) + _Jder(alpha, J) + _Lambda(beta, J).scale(two)),
        'delta^c': delta_c(omega, J) - (-_Jder(gamma, J) - _Lambda(mu, J).scale(two) - _co_N(alpha)),
    }


def operator_action_residual(gaps: GapForms, variant: str = '', tolerance: Optional[float] = None,
                             points=None, r: Optional[int] = None) -> List[ResidualReport]:
    tolerance = _tolerance(gaps.omega, tolerance)
    return [make_report(f"operator-action:{name}", variant, gaps.omega.m, [section], tolerance, points, r=r)
            for name, section in operator_action_sections(gaps).items()]


def graded_theorem1_sections(gaps: GapForms, degree: int) -> List[PolySection]:
    """总次数形式：α、γ 取 degree-1 次，β、μ 取 degree+1 次，对全部 2m 个方向"""
    omega, J = gaps.omega, gaps.J
    m = omega.m
    part = grade_section(omega, degree)
    g = gaps.graded(degree)
    two = omega.backend.convert(2)
    up = _frac(omega, Fraction(1, degree + 1))
    down = _frac(omega, Fraction(1, 2 * m - degree + 1))

    bracket_d = grade_section(ext_d(part) - _L(g['alpha'], J).scale(two) + _Jder(g['beta'], J), degree + 1)
    bracket_delta = grade_section(coderiv(part) - _Jder(g['alpha'], J) - _Lambda(g['beta'], J).scale(two), degree - 1)
    bracket_dc = grade_section(d_c(part, J) + _L(g['gamma'], J).scale(two) - _Jder(g['mu'], J), degree + 1)
    bracket_deltac = grade_section(delta_c(part, J) + _Jder(g['gamma'], J) + _Lambda(g['mu'], J).scale(two),
                                   degree - 1)
    sections = []
    for k in range(2 * m):
        rhs = (_contract_x(k, bracket_d).scale(up) - _wedge_e(k, bracket_delta).scale(down)
               + _contract_jx(k, bracket_dc, J).scale(up) - _wedge_je(k, bracket_deltac, J).scale(down))
        sections.append(nabla(k, part) - rhs)
    return sections


def bigraded_theorem1_sections(gaps: GapForms, p: int, q: int, bigrading: str = FRAME_BIGRADING) -> List[PolySection]:
    """按双分次形式：四个括号分别投影到 (p+1,q)、(p-1,q)、(p,q+1)、(p,q-1)，方向取 e_a（a = 1..m）"""
    omega, J = gaps.omega, gaps.J
    m = omega.m
    Bigrade(p, q).validate(m)
    part = bigrade_section(omega, p, q, J, bigrading)
    g = gaps.projected(p, q, bigrading)
    two = omega.backend.convert(2)

    def project(s: PolySection, pp: int, qq: int) -> PolySection:
        return bigrade_section(s, pp, qq, J, bigrading)

    bracket_d = project(ext_d(part) - _L(g['alpha'], J).scale(two) - _Jder(g['beta'], J).scale(two), p + 1, q)
    bracket_delta = project(coderiv(part) - _Jder(g['alpha'], J) - _Lambda(g['beta'], J).scale(two), p - 1, q)
    bracket_dc = project(d_c(part, J) + _L(g['gamma'], J).scale(two) - _Jder(g['mu'], J).scale(two), p, q + 1)
    bracket_deltac = project(delta_c(part, J) - _Jder(g['gamma'], J) - _Lambda(g['mu'], J).scale(two), p, q - 1)

    c_d = _frac(omega, Fraction(1, p + 1))
    c_delta = _frac(omega, Fraction(1, m - p + 1))
    c_dc = _frac(omega, Fraction(1, q + 1))
    c_deltac = _frac(omega, Fraction(1, m - q + 1))
    sections = []
    for a in range(m):
        k = 2 * a
        rhs = (_contract_x(k, bracket_d).scale(c_d) - _wedge_e(k, bracket_delta).scale(c_delta)
               + _contract_jx(k, bracket_dc, J).scale(c_dc) - _wedge_je(k, bracket_deltac, J).scale(c_deltac))
        sections.append(nabla(k, part) - rhs)
    return sections


def _check_solution(psi: PolySection, variant: TwistorVariant, rep: GammaRep, J: ComplexStructure,
                    tolerance: Optional[float], points):
    report = residual(variant, psi, rep, J, tolerance, points)
    if not report.passed:
        raise PreconditionError(f"输入不是 {variant.label} 方程的解: 残差 {report.max_residual:.3e}")


def theorem1_residual(psi: PolySection, variant: TwistorVariant, p: int, q: Optional[int] = None,
                      pairing: Optional[PairingMatrix] = None, rep: Optional[GammaRep] = None,
                      J: Optional[ComplexStructure] = None, weights: Optional[GapWeights] = None,
                      reading: str = GRADED, bigrading: str = FRAME_BIGRADING,
                      tolerance: Optional[float] = None, points=None) -> ResidualReport:
    """双线性型方程的残差

    reading='bigraded' 按 (p,q) 双分次计算；reading='graded' 时 p（或 p+q）为总次数。

    Raises:
        PreconditionError: ψ 类型不纯或不是变体方程的解
    """
    if pairing is None:
        raise ValueError("需要给出旋量配对")
    rep, J = _context(psi, rep, J)
    variant.validate(psi.m)
    _check_solution(psi, variant, rep, J, tolerance, points)
    weights = variant_weights(variant, psi.m) if weights is None else weights
    gaps = _gap_forms_from(_spinor_data(psi, pairing, rep, J), weights)
    return _theorem1_row(gaps, variant, p, q, reading, bigrading, _tolerance(psi, tolerance), points)


def _theorem1_row(gaps: GapForms, variant: TwistorVariant, p: int, q: Optional[int], reading: str,
                  bigrading: str, tolerance: float, points) -> ResidualReport:
    m = gaps.omega.m
    if reading == GRADED:
        degree = p if q is None else p + q
        if not 0 <= degree <= 2 * m:
            raise GradeError(f"次数必须在 0-{2 * m} 之间: {degree}")
        sections = graded_theorem1_sections(gaps, degree)
        return make_report('theorem1:graded', variant.label, m, sections, tolerance, points,
                           r=variant.r, p=degree, detail=gaps.weights.label)
    if reading != BIGRADED:
        raise ValueError(f"未知的定理读法: {reading}")
    if q is None:
        raise BigradeError("按双分次读法需要给出 q")
    sections = bigraded_theorem1_sections(gaps, p, q, bigrading)
    return make_report('theorem1:bigraded', variant.label, m, sections, tolerance, points,
                       r=variant.r, p=p, q=q, detail=f"{gaps.weights.label}, {bigrading}")


def cky_residual(omega: PolySection, p: int, tolerance: Optional[float] = None, points=None,
                 variant: str = '') -> ResidualReport:
    """∇_kω - 1/(p+1) i_{X_k}dω + 1/(n-p+1) e^k∧δω，n = 2m

    Raises:
        GradeError: ω 不是 p 次齐次的
    """
    m = omega.m
    if (omega - grade_section(omega, p)).coefficient_max_abs() > 0:
        raise GradeError(f"CKY 方程要求 {p} 次齐次形式")
    d_omega, delta_omega = ext_d(omega), coderiv(omega)
    up = _frac(omega, Fraction(1, p + 1))
    down = _frac(omega, Fraction(1, 2 * m - p + 1))
    sections = [nabla(k, omega) - _contract_x(k, d_omega).scale(up) + _wedge_e(k, delta_omega).scale(down)
                for k in range(2 * m)]
    return make_report('cky', variant, m, sections, _tolerance(omega, tolerance), points, p=p)


def kahlerian_cky_sections(omega: PolySection, p: int, q: Optional[int] = None,
                           J: Optional[ComplexStructure] = None, reading: str = BIGRADED) -> List[PolySection]:
    """Kähler 型 CKY 方程的残差截面

    bigraded: ∇_aω - 1/(p+1) i_{X_a}dω + 1/(m-p+1) e_a∧δω - 1/(q+1) i_{JX_a}d^cω + 1/(m-q+1) Je_a∧δ^cω，a = 1..m
    graded: 同一形式，以总次数 ρ 与 2m 代替，对全部 2m 个方向
    """
    J = flat_structure(omega.m) if J is None else J
    m = omega.m
    d_omega, delta_omega = ext_d(omega), coderiv(omega)
    dc_omega, deltac_omega = d_c(omega, J), delta_c(omega, J)
    if reading == GRADED:
        up = _frac(omega, Fraction(1, p + 1))
        down = _frac(omega, Fraction(1, 2 * m - p + 1))
        coefficients = (up, down, up, down)
        directions = range(2 * m)
    else:
        coefficients = (_frac(omega, Fraction(1, p + 1)), _frac(omega, Fraction(1, m - p + 1)),
                        _frac(omega, Fraction(1, q + 1)), _frac(omega, Fraction(1, m - q + 1)))
        directions = range(0, 2 * m, 2)
    c_d, c_delta, c_dc, c_deltac = coefficients
    sections = []
    for k in directions:
        rhs = (_contract_x(k, d_omega).scale(c_d) - _wedge_e(k, delta_omega).scale(c_delta)
               + _contract_jx(k, dc_omega, J).scale(c_dc) - _wedge_je(k, deltac_omega, J).scale(c_deltac))
        sections.append(nabla(k, omega) - rhs)
    return sections


def kahlerian_cky_residual(omega: PolySection, p: int, q: Optional[int] = None,
                           J: Optional[ComplexStructure] = None, reading: str = BIGRADED,
                           bigrading: str = FRAME_BIGRADING, tolerance: Optional[float] = None,
                           points=None, variant: str = '') -> ResidualReport:
    """Kähler 型 CKY 方程的残差

    Raises:
        BigradeError: bigraded 读法下 ω 不是纯 (p,q) 型
        GradeError: graded 读法下 ω 不是 p 次齐次的
    """
    J = flat_structure(omega.m) if J is None else J
    if reading == GRADED:
        if (omega - grade_section(omega, p)).coefficient_max_abs() > 0:
            raise GradeError(f"要求 {p} 次齐次形式")
        sections = kahlerian_cky_sections(omega, p, None, J, GRADED)
        return make_report('kahlerian-cky:graded', variant, omega.m, sections, _tolerance(omega, tolerance),
                           points, p=p)
    if q is None:
        raise BigradeError("按双分次读法需要给出 q")
    Bigrade(p, q).validate(omega.m)
    if (omega - bigrade_section(omega, p, q, J, bigrading)).coefficient_max_abs() > 0:
        raise BigradeError(f"要求纯 ({p},{q}) 型形式")
    sections = kahlerian_cky_sections(omega, p, q, J, BIGRADED)
    return make_report('kahlerian-cky:bigraded', variant, omega.m, sections, _tolerance(omega, tolerance),
                       points, p=p, q=q)


@dataclass
class Prop2Report:
    """四个约束条件的残差"""
    residuals: Dict[str, float]
    tolerance: float
    p: int
    q: Optional[int] = None
    reading: str = BIGRADED

    @property
    def passed(self) -> bool:
        return all(value <= self.tolerance for value in self.residuals.values())

    def to_dict(self) -> dict:
        return {
            'p': self.p,
            'q': self.q,
            'reading': self.reading,
            'residuals': {name: float(value) for name, value in self.residuals.items()},
            'pass': self.passed,
        }


def prop2_condition_check(gaps: GapForms, p: int, q: Optional[int] = None, reading: str = BIGRADED,
                          bigrading: str = FRAME_BIGRADING, tolerance: Optional[float] = None,
                          points=None) -> Prop2Report:
    """bigraded: Lα = -Jβ, Jα = -2Λβ, Lγ = Jμ, Jγ = -2Λμ（投影后的间隙形式）

    graded: 2Lα = Jβ, Jα = -2Λβ, 2Lγ = Jμ, Jγ = -2Λμ（α、γ 取 p-1 次，β、μ 取 p+1 次）

    四个条件都成立时，对应分量的 Kähler 型 CKY 方程也应成立（由 verify_theorem1 计入检验行）。

    Returns:
        Prop2Report: 每个条件的最大残差

    Raises:
        BigradeError: bigraded 读法下没有给出 q
    """
    J = gaps.J
    tolerance = _tolerance(gaps.omega, tolerance)
    two = gaps.omega.backend.convert(2)
    if reading == GRADED:
        g = gaps.graded(p)
        conditions = {
            '2L(alpha) = J(beta)': _L(g['alpha'], J).scale(two) - _Jder(g['beta'], J),
            'J(alpha) = -2Lambda(beta)': _Jder(g['alpha'], J) + _Lambda(g['beta'], J).scale(two),
            '2L(gamma) = J(mu)': _L(g['gamma'], J).scale(two) - _Jder(g['mu'], J),
            'J(gamma) = -2Lambda(mu)': _Jder(g['gamma'], J) + _Lambda(g['mu'], J).scale(two),
        }
    else:
        if q is None:
            raise BigradeError("按双分次读法需要给出 q")
        g = gaps.projected(p, q, bigrading)
        conditions = {
            'L(alpha) = -J(beta)': _L(g['alpha'], J) + _Jder(g['beta'], J),
            'J(alpha) = -2Lambda(beta)': _Jder(g['alpha'], J) + _Lambda(g['beta'], J).scale(two),
            'L(gamma) = J(mu)': _L(g['gamma'], J) - _Jder(g['mu'], J),
            'J(gamma) = -2Lambda(mu)': _Jder(g['gamma'], J) + _Lambda(g['mu'], J).scale(two),
        }
    residuals = {}
    for name, section in conditions.items():
        residuals[name] = measure_residual([section], points)[0]
    return Prop2Report(residuals, tolerance, p, q, reading)


# ---------------------------------------------------------------------------
# 解空间上的批量检验
# ---------------------------------------------------------------------------

@dataclass
class Theorem1Result:
    """一个解空间上全部检验行"""
    rows: List[ResidualReport] = field(default_factory=list)
    prop2: List[Dict[str, Any]] = field(default_factory=list)
    vacuous: bool = False

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def verify_theorem1(space: SolutionSpace, pairing: PairingMatrix, rep: Optional[GammaRep] = None,
                    J: Optional[ComplexStructure] = None, reading: str = GRADED,
                    weights: Optional[GapWeights] = None, bigrading: str = FRAME_BIGRADING,
                    tolerance: Optional[float] = None, seed: int = config.DEFAULT_SEED,
                    basis: Optional[Sequence[PolySection]] = None) -> Theorem1Result:
    """对解空间的每个基元素给出分解、算子作用、双线性型方程与 Kähler 型 CKY 条件检验行

    basis 可以替换解空间的基（用于负对照），前提不满足的元素记为失败的 precondition 行。
    """
    m = space.m
    rep = build_rep(m, space.backend) if rep is None else rep
    J = flat_structure(m) if J is None else J
    basis = space.basis if basis is None else list(basis)
    weights = variant_weights(space.variant, m) if weights is None else weights
    tolerance = config.get_tolerance(space.backend.name, tolerance)
    points = sample_points(m, seed=seed)
    label = space.variant.label
    result = Theorem1Result(vacuous=not basis)
    if not basis:
        logger.warning(f"解空间为空，检验为空真: {label}, m={m}")
        return result

    for index, psi in enumerate(basis):
        try:
            _check_solution(psi, space.variant, rep, J, tolerance, points)
        except PreconditionError as e:
            logger.error(f"基元素 {index} 不满足前提: {e}")
            result.rows.append(ResidualReport('precondition', label, m, float('inf'), space.backend.exact,
                                              len(points), tolerance, r=space.variant.r,
                                              detail=f"basis[{index}]: {e}"))
            continue

        gaps = _gap_forms_from(_spinor_data(psi, pairing, rep, J), weights)
        element_rows = [decomposition_residual(gaps, label, tolerance, points, space.variant.r)]
        element_rows.extend(operator_action_residual(gaps, label, tolerance, points, space.variant.r))
        if reading == GRADED:
            for degree in range(2 * m + 1):
                element_rows.append(_theorem1_row(gaps, space.variant, degree, None, GRADED, bigrading,
                                                  tolerance, points))
                entry, cky = _prop2_entry(gaps, index, degree, None, GRADED, bigrading, tolerance, points, label)
                result.prop2.append(entry)
                if cky is not None:
                    element_rows.append(cky)
        else:
            for p in range(m + 1):
                for q in range(m + 1):
                    element_rows.append(_theorem1_row(gaps, space.variant, p, q, BIGRADED, bigrading,
                                                      tolerance, points))
                    entry, cky = _prop2_entry(gaps, index, p, q, BIGRADED, bigrading, tolerance, points, label)
                    result.prop2.append(entry)
                    if cky is not None:
                        element_rows.append(cky)
        for row in element_rows:
            row.detail = f"basis[{index}]" + (f", {row.detail}" if row.detail else '')
        result.rows.extend(element_rows)
        logger.debug(f"基元素 {index} 检验完成: {sum(r.passed for r in element_rows)}/{len(element_rows)} 通过")

    logger.info(f"双线性型检验: {label}, m={m}, {len(result.rows)} 行, "
                f"{sum(row.passed for row in result.rows)} 行通过")
    return result


def _prop2_entry(gaps: GapForms, index: int, p: int, q: Optional[int], reading: str, bigrading: str,
                 tolerance: float, points, label: str) -> Tuple[Dict[str, Any], Optional[ResidualReport]]:
    """条件成立时附带对应 (p,q) 分量的 Kähler 型 CKY 残差

    条件不成立的条目只作记录；条件成立时返回的 CKY 行计入检验结果。
    """
    check = prop2_condition_check(gaps, p, q, reading, bigrading, tolerance, points)
    entry = {'basis': index, **check.to_dict()}
    report = None
    if check.passed:
        if reading == GRADED:
            omega = grade_section(gaps.omega, p)
            report = kahlerian_cky_residual(omega, p, None, gaps.J, GRADED, bigrading, tolerance, points, label)
        else:
            omega = bigrade_section(gaps.omega, p, q, gaps.J, bigrading)
            report = kahlerian_cky_residual(omega, p, q, gaps.J, BIGRADED, bigrading, tolerance, points, label)
        report.detail = 'prop2'
        entry['kahlerian_cky'] = report.to_dict()
    return entry, report
