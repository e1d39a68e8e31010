"""閉形式の解

Bliss 関数、臨界指数での解、特異解、ホモクリニック軌道、Φ 変換。
数値モジュールの検算用の厳密解として使う。
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .config import SolverConfig, resolve_config
from .errors import DomainError, NumericError
from .params import c_nk, lambda_tilde, make_params, mu_star, q_star, tau
from .solution import RadialSolution, SolutionSource, solution_residuals

logger = logging.getLogger(__name__)

DOUBLE_ROOT_RTOL = 1e-10
CRITICAL_GRID_POINTS = 4001


@dataclass(frozen=True)
class BlissParams:
    """Bliss 関数 w_d の族を指定する (n, k, d)"""
    n: int
    k: int
    d: float

    def __post_init__(self):
        violations = []
        if not self.d > 0:
            violations.append(f"d must be positive (d={self.d})")
        if self.k < 1 or self.n <= 2 * self.k:
            violations.append(f"n must exceed 2k >= 2 (n={self.n}, k={self.k})")
        if violations:
            raise DomainError(violations)

    @property
    def decay(self) -> float:
        """(1+dr²) の指数 (n-2k)/(2k)"""
        return (self.n - 2 * self.k) / (2 * self.k)


def bliss_amplitude(bliss: BlissParams) -> float:
    """|w_d(0)| = [d binom(n,k)^(1/k) (n-2k)/k]^((n-2k)/(2(k+1)))"""
    n, k = bliss.n, bliss.k
    base = bliss.d * comb(n, k) ** (1.0 / k) * (n - 2 * k) / k
    return base ** ((n - 2 * k) / (2 * (k + 1)))


def bliss_value(bliss: BlissParams, radius):
    """w_d(r)（純粋関数）"""
    r = np.asarray(radius, dtype=float)
    if np.any(r < 0):
        raise DomainError(["radius must be nonnegative"])
    return -bliss_amplitude(bliss) * (1.0 + bliss.d * r ** 2) ** (-bliss.decay)


def bliss_derivative(bliss: BlissParams, radius):
    """w_d'(r)（純粋関数）"""
    r = np.asarray(radius, dtype=float)
    m = bliss.decay
    return bliss_amplitude(bliss) * 2 * m * bliss.d * r * (1.0 + bliss.d * r ** 2) ** (-m - 1)


class DRootKind(Enum):
    """d の方程式の解の個数"""
    NONE = "none"
    DOUBLE = "double"
    TWO = "two"


@dataclass(frozen=True)
class DRoots:
    """λ(d+1)^(k+1) = binom(n,k)((n-2k)/k)^k d^k の正の根"""
    kind: DRootKind
    d_minus: Optional[float] = None
    d_plus: Optional[float] = None

    @property
    def roots(self) -> Tuple[float, ...]:
        if self.kind is DRootKind.NONE:
            return ()
        if self.kind is DRootKind.DOUBLE:
            return (self.d_minus,)
        return (self.d_minus, self.d_plus)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "d_minus": self.d_minus, "d_plus": self.d_plus}


def d_equation_coefficient(n: int, k: int) -> float:
    """binom(n,k)((n-2k)/k)^k"""
    return comb(n, k) * ((n - 2 * k) / k) ** k


def d_equation_residual(lam: float, d: float, n: int, k: int) -> float:
    return lam * (d + 1) ** (k + 1) - d_equation_coefficient(n, k) * d ** k


def solve_d(lam: float, n: int, k: int, config: Optional[SolverConfig] = None) -> DRoots:
    """d の方程式を解く

    対数をとった φ(d) = log λ + (k+1)log(1+d) - k log d - log B は d = k で最小になる。
    (0, k) と (k, ∞) で符号変化を挟み込み、Brent 法で絞る。

    Raises:
        NumericError: 拡張回数の上限までに挟み込めなかった
    """
    if not lam > 0:
        raise DomainError([f"lambda must be positive (lambda={lam})"])
    config = resolve_config(config)
    mu = float(mu_star(n, k))
    if abs(lam - mu) < DOUBLE_ROOT_RTOL * mu:
        return DRoots(DRootKind.DOUBLE, float(k), float(k))
    if lam > mu:
        return DRoots(DRootKind.NONE)

    log_b = math.log(d_equation_coefficient(n, k))
    log_lam = math.log(lam)

    def phi(d: float) -> float:
        return log_lam + (k + 1) * math.log1p(d) - k * math.log(d) - log_b

    def expand(start: float, factor: float) -> float:
        d = start
        for _ in range(config.bracket_expansion_limit):
            if phi(d) > 0:
                return d
            d *= factor
        raise NumericError(f"could not bracket a root of the d-equation for lambda={lam}")

    lower = expand(k / 2.0, 0.5)
    upper = expand(2.0 * k, 2.0)
    rtol = 4 * np.finfo(float).eps
    d_minus = brentq(phi, lower, float(k), xtol=1e-300, rtol=rtol)
    d_plus = brentq(phi, float(k), upper, xtol=1e-300, rtol=rtol)
    logger.debug("d-roots for lambda=%g: %.16g, %.16g", lam, d_minus, d_plus)
    return DRoots(DRootKind.TWO, d_minus, d_plus)


def critical_solutions(lam: float, n: int, k: int, r=None,
                       config: Optional[SolverConfig] = None) -> List[RadialSolution]:
    """q = q*(k) での (P_λ) の全解（λ ≤ μ*）

    u(r) = 1 - λ^(-(n-2k)/(2k(k+1))) (-w_d(r))、d は d の方程式の根。
    d_minus が最大解（index 0）、d_plus が大きい解に対応する。

    Raises:
        DomainError: λ > μ*
    """
    roots = solve_d(lam, n, k, config)
    if roots.kind is DRootKind.NONE:
        raise DomainError([f"lambda={lam} exceeds mu*={float(mu_star(n, k))}"])
    params = make_params(n, k, q_star(n, k), lam)
    grid = np.linspace(0.0, 1.0, CRITICAL_GRID_POINTS) if r is None else np.asarray(r, float)
    scale = lam ** (-(n - 2 * k) / (2 * k * (k + 1)))

    solutions = []
    for index, d in enumerate(roots.roots):
        bliss = BlissParams(n, k, d)

        def u_func(x, bliss=bliss):
            return 1.0 + scale * bliss_value(bliss, x)

        def uprime_func(x, bliss=bliss):
            return scale * bliss_derivative(bliss, x)

        solutions.append(RadialSolution(
            r=grid,
            u=u_func(grid),
            lambda_physical=float(lam),
            params=params,
            source=SolutionSource.CLOSED_FORM,
            residuals=solution_residuals(u_func, uprime_func, lam, params),
            index=index,
            u_func=u_func,
            uprime_func=uprime_func,
        ))
    return solutions


@dataclass(frozen=True)
class SingularSolution:
    """特異解 U(r) = 1 - r^(-2k/(q-k))"""
    n: int
    k: int
    q: float
    tau: float
    lambda_sing: float

    def profile(self, r):
        return 1.0 - np.asarray(r, dtype=float) ** (-self.tau)

    def derivative(self, r):
        return self.tau * np.asarray(r, dtype=float) ** (-self.tau - 1)

    @property
    def energy_exponent(self) -> float:
        """r^(n-k)(U')^(k+1) の r の冪"""
        return self.n - self.k - (self.k + 1) * (self.tau + 1)

    @property
    def energy_finite(self) -> bool:
        return self.energy_exponent > -1

    @property
    def energy(self) -> float:
        """∫_0^1 r^(n-k)(U')^(k+1) dr（発散するときは inf）"""
        if not self.energy_finite:
            return math.inf
        return self.tau ** (self.k + 1) / (self.energy_exponent + 1)

    def identity_residual(self, r) -> float:
        """c r^(n-k)(U')^k = λ∫_0^r s^(n-1)(1-U)^q ds の最大相対誤差（両辺とも閉形式）"""
        r = np.asarray(r, dtype=float)
        n, k = self.n, self.k
        lhs = float(c_nk(n, k)) * r ** (n - k) * self.derivative(r) ** k
        power = n - self.q * self.tau
        rhs = self.lambda_sing * r ** power / power
        return float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))

    def __iter__(self) -> Iterator:
        yield self.profile
        yield self.lambda_sing


def singular_solution(n: int, k: int, q: float) -> SingularSolution:
    """特異解と対応する λ = c_{n,k} λ̃

    Raises:
        DomainError: λ̃ <= 0（q <= nk/(n-2k)）
    """
    lt = lambda_tilde(n, k, q)
    if not lt > 0:
        raise DomainError([f"lambda_tilde must be positive for a singular solution (q={q})"])
    return SingularSolution(n=n, k=k, q=q, tau=tau(k, q),
                            lambda_sing=float(c_nk(n, k)) * lt)


def critical_ivp_scale(n: int, k: int) -> float:
    """q = q*(k) で v(0) = -1 となる Bliss 縮尺 d = k(λ̃/n)^(1/k)/(n-2k)"""
    lt = lambda_tilde(n, k, q_star(n, k))
    return k * (lt / n) ** (1.0 / k) / (n - 2 * k)


def critical_ivp_profile(s, n: int, k: int):
    """q = q*(k) での初期値問題の解 v(s) = -(1+ds²)^(-(n-2k)/(2k))"""
    s = np.asarray(s, dtype=float)
    return -(1.0 + critical_ivp_scale(n, k) * s ** 2) ** (-(n - 2 * k) / (2 * k))


def homoclinic_orbit(t, d: float, n: int, k: int):
    """q = q*(k) のホモクリニック軌道 (y(t), z(t))

    大きな |t| でも溢れないよう対数で計算する。
    """
    t = np.asarray(t, dtype=float)
    growth = (n + 2) * k / (k + 1) * t
    log_bump = np.logaddexp(0.0, math.log(d) + 2 * t)
    lt = lambda_tilde(n, k, q_star(n, k))
    y = np.exp(k * math.log((n - 2 * k) * d / k) + growth - 0.5 * n * log_bump)
    z = lt * np.exp(growth - 0.5 * (n + 2) * log_bump)
    return y, z


def _check_phi_domain(s, lam: float, lam0: float, k: int, q: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    violations = []
    if not 0 < lam < lam0:
        violations.append(f"need 0 < lambda < lambda0 (lambda={lam}, lambda0={lam0})")
    if not q > k:
        violations.append(f"q must exceed k (q={q}, k={k})")
    if np.any(s > 0):
        violations.append("s must be nonpositive")
    if violations:
        raise DomainError(violations)
    return s


def phi_transform(s, lam: float, lam0: float, k: int, q: float):
    """劣解を作る変換 Φ = h̃^(-1)∘h（閉形式）

    ρ = (λ/λ0)^(1/k), e = (q-k)/k として
    Φ(s) = 1 - (1 - ρ + ρ(1-s)^(-e))^(-1/e)。
    """
    s = _check_phi_domain(s, lam, lam0, k, q)
    rho = (lam / lam0) ** (1.0 / k)
    e = (q - k) / k
    return 1.0 - (1.0 - rho + rho * (1.0 - s) ** (-e)) ** (-1.0 / e)


def phi_limit(lam: float, lam0: float, k: int, q: float) -> float:
    """s → -∞ での Φ の極限 1 - (1-ρ)^(-k/(q-k))"""
    _check_phi_domain(0.0, lam, lam0, k, q)
    rho = (lam / lam0) ** (1.0 / k)
    return 1.0 - (1.0 - rho) ** (-k / (q - k))


def torsion_solution(lam: float, n: int, k: int, r):
    """S_k(D²u) = λ, u(1) = 0 の解 u = -(λ/binom(n,k))^(1/k)(1-r²)/2"""
    r = np.asarray(r, dtype=float)
    return -((lam / comb(n, k)) ** (1.0 / k)) * (1.0 - r ** 2) / 2.0
