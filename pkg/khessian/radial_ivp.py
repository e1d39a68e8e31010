"""縮尺した初期値問題 (s^(n-k) (v')^k)' = λ̃ s^(n-1) (-v)^q, v(0) = -1, v'(0) = 0

原点近傍は級数解で始め、t = log s を独立変数として2段階で積分する。

- 原点側 (s < 1): w = log(-v), g = log(flux) - log(λ̃/n) - n t
  （どちらも s → 0 で 0 に近づく偏差変数）
- 遠方側 (s >= 1): W = w + τ t, Y = log(flux) + (2k + kτ - n) t
  （自律系になり、O2 に対応する固定点 (0, k log τ) に収束する）

流束 flux = s^(n-k) (v')^k を状態にとるので k 乗の微分は現れない。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .config import SolverConfig, resolve_config
from .errors import DomainError, NumericError, RegimeError
from .numerics import GaussPanels, PohozaevTerms, pohozaev_balance
from .params import ProblemParams, RegimeTag

logger = logging.getLogger(__name__)

_ORIGIN = "origin"
_SCALED = "scaled"


@dataclass(frozen=True)
class _Constants:
    n: int
    k: int
    q: float
    tau: float
    coefficient: float

    @property
    def log_ratio(self) -> float:
        """log(coefficient/n)"""
        return math.log(self.coefficient / self.n)

    @property
    def alpha(self) -> float:
        """級数 v = -1 + α s² の係数"""
        return 0.5 * (self.coefficient / self.n) ** (1.0 / self.k)

    @property
    def y_growth(self) -> float:
        """Y = log(flux) + y_growth * t"""
        return 2 * self.k + self.k * self.tau - self.n


def _origin_rhs(t, state, c: _Constants):
    w, g = state
    dw = -2.0 * c.alpha * np.exp(g / c.k + 2.0 * t - w)
    dg = c.n * np.expm1(c.q * w - g)
    return [dw, dg]


def _scaled_rhs(t, state, c: _Constants):
    W, Y = state
    dW = c.tau - np.exp(Y / c.k - W)
    dY = c.coefficient * np.exp(c.q * W - Y) + c.y_growth
    return [dW, dY]


@dataclass(frozen=True)
class _Phase:
    kind: str
    start: float
    end: float
    solution: object = field(repr=False)

    def evaluate(self, t: np.ndarray, c: _Constants):
        """(w, G, W, Y) をこの区間の自然な変数から計算"""
        a, b = self.solution(t)
        if self.kind == _ORIGIN:
            w, g = a, b
            G = g + c.log_ratio + c.n * t
            return w, G, w + c.tau * t, G + c.y_growth * t
        W, Y = a, b
        return W - c.tau * t, Y - c.y_growth * t, W, Y


@dataclass(frozen=True, eq=False)
class VProfile:
    """初期値問題の大域解

    Attributes:
        params: 問題パラメータ
        coefficient: 右辺の係数（通常は λ̃）
        s_init: 級数解からの切り替え半径
        tol: 積分の相対許容誤差
        t, s, v, vprime, flux: 出力点 (s = e^t)
        W, Y: 縮尺した対数状態
    """
    params: ProblemParams
    coefficient: float
    s_init: float
    tol: float
    t: np.ndarray
    s: np.ndarray
    v: np.ndarray
    vprime: np.ndarray
    flux: np.ndarray
    W: np.ndarray
    Y: np.ndarray
    _phases: Tuple[_Phase, ...] = field(default=(), repr=False)

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def t_init(self) -> float:
        return float(self.t[0])

    @property
    def _constants(self) -> _Constants:
        return _Constants(self.params.n, self.params.k, self.params.q,
                          self.params.constants.tau, self.coefficient)

    def log_state(self, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """任意の t で (w, G, W, Y) を返す（w = log(-v), G = log(flux)）"""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t > self.t[-1] * (1 + 1e-14) + 1e-14):
            raise DomainError([f"t beyond profile range (t_max={self.t[-1]})"])
        c = self._constants
        out = [np.empty_like(t) for _ in range(4)]
        below = t < self.t_init
        if np.any(below):
            tb = t[below]
            w = np.log1p(-c.alpha * np.exp(2 * tb))
            G = c.log_ratio + c.n * tb
            for slot, value in zip(out, (w, G, w + c.tau * tb, G + c.y_growth * tb)):
                slot[below] = value
        assigned = below.copy()
        for phase in self._phases:
            mask = ~assigned & (t <= phase.end)
            if phase is self._phases[-1]:
                mask = ~assigned
            if np.any(mask):
                for slot, value in zip(out, phase.evaluate(t[mask], c)):
                    slot[mask] = value
                assigned |= mask
        return tuple(out)

    def _series_split(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return s, s < self.s_init

    def v_at(self, s) -> np.ndarray:
        s, near = self._series_split(s)
        out = np.empty_like(s)
        out[near] = -1.0 + self._constants.alpha * s[near] ** 2
        if np.any(~near):
            w, _, _, _ = self.log_state(np.log(s[~near]))
            out[~near] = -np.exp(w)
        return out

    def flux_at(self, s) -> np.ndarray:
        s, near = self._series_split(s)
        out = np.empty_like(s)
        out[near] = self.coefficient * s[near] ** self.params.n / self.params.n
        if np.any(~near):
            _, G, _, _ = self.log_state(np.log(s[~near]))
            out[~near] = np.exp(G)
        return out

    def vprime_at(self, s) -> np.ndarray:
        s, near = self._series_split(s)
        out = np.empty_like(s)
        out[near] = 2.0 * self._constants.alpha * s[near]
        if np.any(~near):
            t = np.log(s[~near])
            _, G, _, _ = self.log_state(t)
            k = self.params.k
            out[~near] = np.exp((G + (k - self.params.n) * t) / k)
        return out

    def rows(self) -> List[Tuple[float, float, float, float]]:
        return list(zip(self.s.tolist(), self.v.tolist(),
                        self.vprime.tolist(), self.flux.tolist()))

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "coefficient": self.coefficient,
            "s_init": self.s_init,
            "tol": self.tol,
            "s": self.s.tolist(),
            "v": self.v.tolist(),
            "vprime": self.vprime.tolist(),
            "flux": self.flux.tolist(),
        }


def series_start(params: ProblemParams, s, coefficient: Optional[float] = None):
    """原点近傍の級数解 v = -1 + (c/n)^(1/k) s²/2, v' = (c/n)^(1/k) s

    Args:
        coefficient: 右辺の係数 c（省略時は λ̃）
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError(["s must be nonnegative"])
    coefficient = params.constants.lambda_tilde if coefficient is None else coefficient
    rate = (coefficient / params.n) ** (1.0 / params.k)
    return -1.0 + 0.5 * rate * s ** 2, rate * s


def _solve(rhs, span, y0, c: _Constants, tol: float, atol: float):
    result = solve_ivp(rhs, span, y0, method="DOP853", rtol=tol, atol=atol,
                       dense_output=True, args=(c,))
    if not result.success:
        raise NumericError(f"integration failed on t in {span}: {result.message}")
    logger.debug("integrated t in [%.3f, %.3f] with %d steps", span[0], span[1], result.t.size)
    return result


def integrate_ivp(
    params: ProblemParams,
    s_max: Optional[float] = None,
    tol: Optional[float] = None,
    config: Optional[SolverConfig] = None,
    coefficient: Optional[float] = None,
) -> VProfile:
    """初期値問題を s_max まで積分する

    Args:
        params: q >= q*(k) であること
        s_max: 積分終端（省略時は config.s_max）
        tol: 相対許容誤差（省略時は config.tol）
        config: ソルバー設定
        coefficient: λ̃ の代わりに使う係数

    Raises:
        RegimeError: q < q*(k)
        NumericError: 積分の失敗、または v が (-1, 0) を外れた
    """
    config = resolve_config(config)
    if params.regime.tag is RegimeTag.SUBCRITICAL:
        raise RegimeError(
            f"q={params.q} is below the critical exponent q*={params.constants.q_star}; "
            "a global solution of the initial value problem is not guaranteed"
        )
    s_max = config.s_max if s_max is None else float(s_max)
    tol = config.tol if tol is None else float(tol)
    coefficient = params.constants.lambda_tilde if coefficient is None else float(coefficient)
    violations = []
    if not s_max > config.s_init:
        violations.append(f"s_max must exceed s_init={config.s_init}")
    if not tol > 0:
        violations.append("tol must be positive")
    if not coefficient > 0:
        violations.append("coefficient must be positive")
    if violations:
        raise DomainError(violations)

    c = _Constants(params.n, params.k, params.q, params.constants.tau, coefficient)
    t0, t1 = math.log(config.s_init), math.log(s_max)
    t_switch = min(max(0.0, t0), t1)
    w0 = math.log1p(-c.alpha * config.s_init ** 2)

    phases = []
    if t_switch > t0:
        origin = _solve(_origin_rhs, (t0, t_switch), [w0, 0.0], c, tol, config.atol)
        phases.append(_Phase(_ORIGIN, t0, t_switch, origin.sol))
        w_end, g_end = origin.y[:, -1]
    else:
        w_end, g_end = w0, 0.0
    if t1 > t_switch:
        W0 = w_end + c.tau * t_switch
        Y0 = g_end + c.log_ratio + (2 * c.k + c.k * c.tau) * t_switch
        scaled = _solve(_scaled_rhs, (t_switch, t1), [W0, Y0], c, tol, config.atol)
        phases.append(_Phase(_SCALED, t_switch, t1, scaled.sol))

    decades = (t1 - t0) / math.log(10.0)
    num = max(2, int(math.ceil(decades * config.samples_per_decade)) + 1)
    t = np.linspace(t0, t1, num)
    profile = VProfile(params=params, coefficient=coefficient, s_init=config.s_init, tol=tol,
                       t=t, s=np.exp(t), v=np.empty(0), vprime=np.empty(0),
                       flux=np.empty(0), W=np.empty(0), Y=np.empty(0),
                       _phases=tuple(phases))
    w, G, W, Y = profile.log_state(t)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(G))):
        raise NumericError("non-finite values in the integrated profile")
    if np.any(w >= 0):
        raise NumericError("v left the interval (-1, 0); tolerance too loose")
    k = params.k
    profile = VProfile(
        params=params, coefficient=coefficient, s_init=config.s_init, tol=tol,
        t=t, s=np.exp(t), v=-np.exp(w), vprime=np.exp((G + (k - params.n) * t) / k),
        flux=np.exp(G), W=W, Y=Y, _phases=tuple(phases),
    )
    logger.info("integrated v for n=%d k=%d q=%g up to s=%.3g (%d samples)",
                params.n, k, params.q, s_max, num)
    return profile


def identity_residual(profile: VProfile, order: int = 8) -> float:
    """flux(s) = c∫_0^s σ^(n-1)(-v)^q dσ の最大相対誤差

    t 変数で c∫ e^(nt)(-v)^q dt を出力点間の Gauss 求積で累積する。
    """
    n, q = profile.params.n, profile.params.q
    panels = GaussPanels(profile.t, order=order)
    w, _, _, _ = profile.log_state(panels.nodes.ravel())
    integrand = profile.coefficient * np.exp(n * panels.nodes + q * w.reshape(panels.nodes.shape))
    _, accumulated = panels.cumulative(integrand)
    expected = profile.flux[0] + accumulated
    return float(np.max(np.abs(expected - profile.flux) / profile.flux))


def pohozaev_terms(profile: VProfile, radius: float, order: int = 8) -> PohozaevTerms:
    """半径 R での Pohozaev 恒等式の各項"""
    params = profile.params
    n, k, q = params.n, params.k, params.q
    if not 0 < radius <= profile.s_max * (1 + 1e-12):
        raise DomainError([f"radius must lie in (0, {profile.s_max}]"])
    radius = min(radius, profile.s_max)
    alpha = 0.5 * (profile.coefficient / n) ** (1.0 / k)
    head = min(radius, profile.s_init)
    # 級数区間の寄与 ∫_0^head ξ^(n-1)(1 - αξ²)^(q+1) dξ の2項近似
    integral = head ** n / n - (q + 1) * alpha * head ** (n + 2) / (n + 2)
    if radius > profile.s_init:
        t_end = math.log(radius)
        inner = profile.t[profile.t < t_end]
        edges = np.append(inner, t_end)
        if edges.size >= 2:
            panels = GaussPanels(edges, order=order)
            w, _, _, _ = profile.log_state(panels.nodes.ravel())
            w = w.reshape(panels.nodes.shape)
            integral += panels.integrate(np.exp(n * panels.nodes + (q + 1) * w))
        v = float(profile.v_at(radius)[0])
        vprime = float(profile.vprime_at(radius)[0])
    else:
        v_arr, vp_arr = series_start(params, radius, profile.coefficient)
        v, vprime = float(v_arr), float(vp_arr)
    return pohozaev_balance(radius, v, vprime, integral, profile.coefficient, n, k, q)


def pohozaev_residual(profile: VProfile, radius: float) -> float:
    """Pohozaev 恒等式の (左辺) - (右辺)"""
    return pohozaev_terms(profile, radius).residual
