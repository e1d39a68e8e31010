"""問題パラメータと臨界指数

(n, k, q, λ) の検証、および指数・定数・線形化スペクトルの閉形式。
ここにある関数はすべて引数のみに依存する（純粋関数）。
"""

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb
from numbers import Integral, Real
from typing import List, Optional, Tuple

from .errors import DomainError


class RegimeTag(Enum):
    """相平面の型"""
    SUBCRITICAL = "subcritical"
    CENTER = "center"
    SPIRAL = "spiral"
    NODE = "node"


class EigenCase(Enum):
    """O2 における固有値の位置"""
    REAL_POSITIVE = "real_positive"
    COMPLEX_UNSTABLE = "complex_unstable"
    IMAGINARY = "imaginary"
    COMPLEX_STABLE = "complex_stable"
    REAL_NEGATIVE = "real_negative"


REGIME_LABELS = {
    RegimeTag.SUBCRITICAL: "劣臨界（大域解は保証されない）",
    RegimeTag.CENTER: "臨界（中心、ホモクリニック軌道）",
    RegimeTag.SPIRAL: "渦状点（無限個の解）",
    RegimeTag.NODE: "結節点（解は高々1個）",
}


def c_nk(n: int, k: int) -> Fraction:
    """動径作用素の係数 binom(n,k)/n（純粋関数）"""
    return Fraction(comb(n, k), n)


def q_star(n: int, k: int) -> float:
    """臨界指数 q*(k) = (n+2)k/(n-2k)（純粋関数）"""
    return (n + 2) * k / (n - 2 * k)


def q_singular(n: int, k: int) -> float:
    """λ̃ > 0 となる下限 nk/(n-2k)（純粋関数）"""
    return n * k / (n - 2 * k)


def q_jl(n: int, k: int) -> float:
    """Joseph-Lundgren 型の指数（純粋関数）

    n <= 2k+8 では存在しないので ``math.inf`` を返す。
    IEEE の無限大は任意の有限の q より大きいので、``q >= q_jl`` は決して成り立たない。
    """
    if n <= 2 * k + 8:
        return math.inf
    m = (k + 1) * n
    root = 2.0 * math.sqrt(2.0 * (m - 2 * k))
    return k * (m - 2 * (k - 1) - root) / (m - 2 * k * (k + 3) - root)


def tau(k: int, q: float) -> float:
    """自己相似指数 2k/(q-k)"""
    return 2 * k / (q - k)


def a_coefficient(n: int, k: int, q: float) -> float:
    """a = q(n-2k) - nk。q が q* と一致するときは厳密に 2k とする。"""
    if q == q_star(n, k):
        return float(2 * k)
    return q * (n - 2 * k) - n * k


def lambda_tilde(n: int, k: int, q: float) -> float:
    """λ̃ = τ^k (n - 2k - kτ)（純粋関数）"""
    t = tau(k, q)
    return t ** k * (n - 2 * k - k * t)


def mu_star(n: int, k: int) -> Fraction:
    """臨界指数での閉形式解が存在する λ の上限 μ*(k)（純粋関数）

    binom(n,k)((n-2k)/k)^k k^k/(k+1)^(k+1) = binom(n,k)(n-2k)^k/(k+1)^(k+1)
    """
    return Fraction(comb(n, k) * (n - 2 * k) ** k, (k + 1) ** (k + 1))


def f_k(k: int, q: float) -> float:
    """n - 2k = f_k(q) の右辺（純粋関数）"""
    ratio = q / (q - k)
    return 4 * ratio + 4 * math.sqrt(ratio) + 2 * k * (k - 1) / (q - k)


@dataclass(frozen=True)
class DerivedConstants:
    """(n, k, q) から決まる定数一式"""
    c_nk: Fraction
    tau: float
    a: float
    lambda_tilde: float
    q_star: float
    q_jl: float
    q_singular: float
    mu_star: Fraction
    trace_J: float
    det_J: float
    discriminant: float

    def to_dict(self) -> dict:
        return {
            "c_nk": float(self.c_nk),
            "c_nk_exact": str(self.c_nk),
            "tau": self.tau,
            "a": self.a,
            "lambda_tilde": self.lambda_tilde,
            "q_star": self.q_star,
            "q_jl": self.q_jl,
            "q_singular": self.q_singular,
            "mu_star": float(self.mu_star),
            "mu_star_exact": str(self.mu_star),
            "trace_J": self.trace_J,
            "det_J": self.det_J,
            "discriminant": self.discriminant,
        }


def derive_constants(n: int, k: int, q: float) -> DerivedConstants:
    """派生定数をまとめて計算（純粋関数）"""
    a = a_coefficient(n, k, q)
    trace_J = (2 * k - a) / (q - k)
    det_J = 2 * a / (q - k)
    return DerivedConstants(
        c_nk=c_nk(n, k),
        tau=tau(k, q),
        a=a,
        lambda_tilde=lambda_tilde(n, k, q),
        q_star=q_star(n, k),
        q_jl=q_jl(n, k),
        q_singular=q_singular(n, k),
        mu_star=mu_star(n, k),
        trace_J=trace_J,
        det_J=det_J,
        discriminant=trace_J ** 2 - 4 * det_J,
    )


@dataclass(frozen=True)
class ProblemParams:
    """検証済みの (n, k, q, λ)

    Attributes:
        n: 次元
        k: Hessian の次数
        q: 非線形項の指数
        lam: 物理的な λ（省略可）
    """
    n: int
    k: int
    q: float
    lam: Optional[float] = None
    _cache: dict = field(default_factory=dict, init=False, compare=False, repr=False)

    @property
    def constants(self) -> DerivedConstants:
        if "constants" not in self._cache:
            self._cache["constants"] = derive_constants(self.n, self.k, self.q)
        return self._cache["constants"]

    @property
    def regime(self) -> "Regime":
        if "regime" not in self._cache:
            self._cache["regime"] = classify_regime(self)
        return self._cache["regime"]

    def with_lambda(self, lam: Optional[float]) -> "ProblemParams":
        return make_params(self.n, self.k, self.q, lam)

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "q": self.q, "lambda": self.lam}


def _as_integer(name: str, value, violations: list) -> Optional[int]:
    if isinstance(value, bool):
        violations.append(f"{name} must be an integer, got {value!r}")
        return None
    if isinstance(value, Integral):
        return int(value)
    if isinstance(value, Real) and float(value).is_integer():
        return int(value)
    violations.append(f"{name} must be an integer, got {value!r}")
    return None


def check_dimension(n: int, k: int) -> List[str]:
    """(n, k) の制約違反を列挙する（純粋関数）"""
    violations = []
    if k < 1:
        violations.append(f"k must be >= 1 (k={k})")
    if n <= 2 * k:
        violations.append(f"n must exceed 2k (n={n}, k={k})")
    return violations


def validate_dimension(n, k) -> Tuple[int, int]:
    """n, k を検証して整数で返す

    Raises:
        DomainError: 違反したすべての制約を列挙する
    """
    violations: list = []
    n_int = _as_integer("n", n, violations)
    k_int = _as_integer("k", k, violations)
    if n_int is not None and k_int is not None:
        violations.extend(check_dimension(n_int, k_int))
    if violations:
        raise DomainError(violations)
    return n_int, k_int


def make_params(n, k, q, lam: Optional[float] = None) -> ProblemParams:
    """パラメータを検証して ProblemParams を返す

    Raises:
        DomainError: 違反したすべての制約を列挙する
    """
    violations: list = []
    n_int = _as_integer("n", n, violations)
    k_int = _as_integer("k", k, violations)
    if not isinstance(q, Real) or isinstance(q, bool) or not math.isfinite(q):
        violations.append(f"q must be a finite real number, got {q!r}")
        q = None
    if n_int is not None and k_int is not None:
        violations.extend(check_dimension(n_int, k_int))
    if q is not None and k_int is not None and q <= k_int:
        violations.append(f"q must exceed k (q={q}, k={k_int})")
    if lam is not None:
        if not isinstance(lam, Real) or isinstance(lam, bool) or not math.isfinite(lam):
            violations.append(f"lambda must be a finite real number, got {lam!r}")
        elif lam <= 0:
            violations.append(f"lambda must be positive (lambda={lam})")
    if violations:
        raise DomainError(violations)
    return ProblemParams(n=n_int, k=k_int, q=float(q),
                         lam=None if lam is None else float(lam))


@dataclass(frozen=True)
class Regime:
    """O2 の線形化にもとづく相平面の分類"""
    tag: RegimeTag
    eigenvalues: Tuple[complex, complex]
    eigen_case: EigenCase
    trace: float
    det: float
    discriminant: float

    @property
    def label(self) -> str:
        return REGIME_LABELS[self.tag]

    def to_dict(self) -> dict:
        return {
            "tag": self.tag.value,
            "label": self.label,
            "eigen_case": self.eigen_case.value,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "trace": self.trace,
            "det": self.det,
            "discriminant": self.discriminant,
        }


def _eigen_case(k: int, a: float, discriminant: float) -> EigenCase:
    if a == 2 * k:
        return EigenCase.IMAGINARY
    if 2 * k - a > 0:
        return EigenCase.REAL_POSITIVE if discriminant > 0 else EigenCase.COMPLEX_UNSTABLE
    return EigenCase.REAL_NEGATIVE if discriminant >= 0 else EigenCase.COMPLEX_STABLE


def classify_regime(params: ProblemParams) -> Regime:
    """固有値を計算し相平面の型を判定（純粋関数）

    境界はε幅なしの厳密比較: q = q* は CENTER、q = q_JL は NODE。
    """
    c = params.constants
    root = cmath.sqrt(c.discriminant)
    eigenvalues = (0.5 * (c.trace_J - root), 0.5 * (c.trace_J + root))
    q = params.q
    if q < c.q_star:
        tag = RegimeTag.SUBCRITICAL
    elif q == c.q_star:
        tag = RegimeTag.CENTER
    elif q >= c.q_jl:
        tag = RegimeTag.NODE
    else:
        tag = RegimeTag.SPIRAL
    return Regime(
        tag=tag,
        eigenvalues=eigenvalues,
        eigen_case=_eigen_case(params.k, c.a, c.discriminant),
        trace=c.trace_J,
        det=c.det_J,
        discriminant=c.discriminant,
    )
