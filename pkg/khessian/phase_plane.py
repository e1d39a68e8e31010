"""Emden-Fowler 型の相平面 (y, z)

y = e^Y = s^(2k+kτ-n) flux, z = λ̃ e^(qW) = λ̃ s^(qτ) (-v)^q とおくと
    dy/dt = z - b y,  dz/dt = qτ z - q λ̃^(1/q) y^(1/k) z^(1-1/q),  b = a/(q-k)
という自律系になる。軌道は常に積分済みの VProfile から変数変換で得る。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .config import SolverConfig, resolve_config
from .errors import DomainError, InsufficientRangeError, RegimeError
from .params import ProblemParams, Regime, RegimeTag
from .radial_ivp import VProfile

logger = logging.getLogger(__name__)

Point = Tuple[float, float]

# 巻き数の判定で許す丸め（回転数単位）
TURN_SLACK = 1e-3
# NODE で角度が落ち着いたとみなす O2 との相対距離
NODE_SETTLED = 1e-3


def equilibria(params: ProblemParams) -> Tuple[Point, Point]:
    """平衡点 O1 = (0, 0) と O2 = ((q-k)λ̃/a, λ̃)

    Raises:
        DomainError: a <= 0（O2 が第1象限にない）
    """
    c = params.constants
    if not c.a > 0:
        raise DomainError([f"O2 requires a > 0 (a={c.a}); need q > nk/(n-2k)"])
    return (0.0, 0.0), ((params.q - params.k) * c.lambda_tilde / c.a, c.lambda_tilde)


def vector_field(y, z, params: ProblemParams):
    """(dy/dt, dz/dt)（純粋関数）"""
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    c = params.constants
    q, k = params.q, params.k
    b = c.a / (q - k)
    dy = z - b * y
    dz = q * c.tau * z - q * c.lambda_tilde ** (1.0 / q) * y ** (1.0 / k) * z ** (1.0 - 1.0 / q)
    return dy, dz


def dulac_divergence(y, z, params: ProblemParams):
    """Dulac 関数 ψ = z^(a/(2kq)-1) を掛けた場の発散（閉形式）

    -ψ (a/(2k) - 1) λ̃^(1/q) y^(1/k) z^(-1/q)。a > 2k で負。
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any(y <= 0) or np.any(z <= 0):
        raise DomainError(["y and z must be positive"])
    c = params.constants
    q, k = params.q, params.k
    psi = z ** (c.a / (2 * k * q) - 1.0)
    return -psi * (c.a / (2 * k) - 1.0) * c.lambda_tilde ** (1.0 / q) * y ** (1.0 / k) * z ** (-1.0 / q)


def dulac_weighted_field(y, z, params: ProblemParams):
    """ψ・(dy/dt, dz/dt)"""
    c = params.constants
    psi = np.asarray(z, dtype=float) ** (c.a / (2 * params.k * params.q) - 1.0)
    dy, dz = vector_field(y, z, params)
    return psi * dy, psi * dz


def node_slopes(params: ProblemParams) -> Tuple[complex, complex]:
    """γ² - (2k+a)/(q-k) γ + 2aq/(q-k)² = 0 の根 (γ-, γ+)

    O2 での固有ベクトルの傾き μ± + a/(q-k) に一致し、q >= q_JL で実数になる。
    """
    c = params.constants
    q, k = params.q, params.k
    p = (2 * k + c.a) / (q - k)
    r = 2 * c.a * q / (q - k) ** 2
    disc = p * p - 4 * r
    if disc >= 0:
        root = math.sqrt(disc)
        return 0.5 * (p - root), 0.5 * (p + root)
    root = complex(0.0, math.sqrt(-disc))
    return 0.5 * (p - root), 0.5 * (p + root)


@dataclass(frozen=True, eq=False)
class PhaseOrbit:
    """相平面の軌道

    Attributes:
        params: 問題パラメータ
        regime: 相平面の型
        t, y, z: 出力点
        o1, o2: 平衡点
        dy_log, dz_log: log(y/y2), log(z/z2)（O2 近傍で桁落ちしない偏差）
    """
    params: ProblemParams
    regime: Regime
    t: np.ndarray
    y: np.ndarray
    z: np.ndarray
    o1: Point
    o2: Point
    dy_log: np.ndarray
    dz_log: np.ndarray
    profile: Optional[VProfile] = field(default=None, repr=False)

    @property
    def offsets(self) -> Tuple[np.ndarray, np.ndarray]:
        """O2 からの相対偏差 (y/y2 - 1, z/z2 - 1)"""
        return np.expm1(self.dy_log), np.expm1(self.dz_log)

    @property
    def distance_to_o2(self) -> np.ndarray:
        dy, dz = self.offsets
        return np.hypot(dy, dz)

    def evaluate(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """出力点の間も含めて (y, z) を評価"""
        if self.profile is None:
            raise DomainError(["orbit has no dense profile attached"])
        _, _, W, Y = self.profile.log_state(t)
        return np.exp(Y), self.profile.coefficient * np.exp(self.params.q * W)

    def resolved(self, floor: Optional[float] = None) -> "PhaseOrbit":
        """O2 と区別できる（相対距離 > floor）最初の連続区間だけを残した軌道"""
        floor = resolve_config(None).resolution_floor if floor is None else floor
        close = self.distance_to_o2 <= floor
        stop = int(np.argmax(close)) if np.any(close) else self.t.size
        cut = slice(0, stop)
        return PhaseOrbit(self.params, self.regime, self.t[cut], self.y[cut], self.z[cut],
                          self.o1, self.o2, self.dy_log[cut], self.dz_log[cut], self.profile)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "regime": self.regime.to_dict(),
            "equilibria": {"O1": list(self.o1), "O2": list(self.o2)},
            "t": self.t.tolist(),
            "y": self.y.tolist(),
            "z": self.z.tolist(),
        }


def to_phase(profile: VProfile) -> PhaseOrbit:
    """VProfile を (t, y, z) 軌道に変換"""
    params = profile.params
    o1, o2 = equilibria(params)
    q = params.q
    log_coefficient = math.log(profile.coefficient)
    return PhaseOrbit(
        params=params,
        regime=params.regime,
        t=profile.t.copy(),
        y=np.exp(profile.Y),
        z=profile.coefficient * np.exp(q * profile.W),
        o1=o1,
        o2=o2,
        dy_log=profile.Y - math.log(o2[0]),
        dz_log=log_coefficient + q * profile.W - math.log(o2[1]),
        profile=profile,
    )


def winding_count(orbit: PhaseOrbit, min_count: Optional[int] = None,
                  config: Optional[SolverConfig] = None) -> int:
    """O2 の周りを回った回数

    (y - y2, z - z2) の連続な偏角の総変化を 2π で割った整数部。
    O2 と区別できなくなった後の点は角度が丸め誤差で決まるので数えない。

    Raises:
        RegimeError: SUBCRITICAL
        InsufficientRangeError: NODE で O2 に近づき切る前に終わった、
            または SPIRAL で min_count 回に届かない
    """
    tag = orbit.regime.tag
    if tag is RegimeTag.SUBCRITICAL:
        raise RegimeError("winding around O2 is not defined below the critical exponent")
    config = resolve_config(config)
    if tag is RegimeTag.NODE and orbit.distance_to_o2[-1] > NODE_SETTLED:
        raise InsufficientRangeError(
            f"orbit ends at relative distance {orbit.distance_to_o2[-1]:.3g} from O2; "
            "increase s_max")
    part = orbit.resolved(config.resolution_floor)
    if part.t.size < 2:
        return 0
    dy, dz = part.offsets
    theta = np.unwrap(np.arctan2(dz, dy))
    count = int(math.floor(abs(theta[-1] - theta[0]) / (2 * math.pi) + TURN_SLACK))
    logger.debug("winding: total angle %.6f over %d samples -> %d", theta[-1] - theta[0],
                 part.t.size, count)
    if tag is RegimeTag.SPIRAL and min_count is not None and count < min_count:
        raise InsufficientRangeError(
            f"only {count} windings resolved before t={part.t[-1]:.2f}; "
            f"{min_count} requested")
    return count


def line_level(params: ProblemParams, lambda_query: float) -> float:
    """λ に対応する z の水平線 λ̃^(-k/(q-k)) λ^(q/(q-k))（λ は縮尺側の値）"""
    q, k = params.q, params.k
    lt = params.constants.lambda_tilde
    return lt ** (-k / (q - k)) * lambda_query ** (q / (q - k))


def line_intersections(orbit: PhaseOrbit, lambda_query: float,
                       config: Optional[SolverConfig] = None) -> List[float]:
    """z が λ の水平線を横切る時刻

    隣接点の符号変化を線形逆補間で推定し、閉形式の dz/dt で Newton 法を1回かける。
    最初の出力点ですでに水準を超えていれば、それより内側の交点を級数解から求める。
    """
    if not lambda_query > 0:
        raise DomainError([f"lambda_query must be positive (lambda_query={lambda_query})"])
    config = resolve_config(config)
    params = orbit.params
    level = line_level(params, lambda_query)
    if orbit.regime.tag is RegimeTag.NODE and level >= params.constants.lambda_tilde:
        return []
    q, k = params.q, params.k
    tau = params.constants.tau
    gap = np.log(orbit.z) - math.log(level)
    floor = config.resolution_floor
    times = []
    if gap[0] > 0:
        times.append(_crossing_below_start(orbit, level))
    for i in np.nonzero(np.sign(gap[:-1]) * np.sign(gap[1:]) <= 0)[0]:
        g0, g1 = gap[i], gap[i + 1]
        if g0 == 0 and i > 0:
            continue
        if max(abs(g0), abs(g1)) < floor:
            continue
        t0, t1 = orbit.t[i], orbit.t[i + 1]
        guess = t0 if g0 == g1 else t0 + (t1 - t0) * g0 / (g0 - g1)
        if orbit.profile is not None:
            _, _, W, Y = orbit.profile.log_state(guess)
            value = math.log(orbit.profile.coefficient) + q * W[0] - math.log(level)
            slope = q * (tau - math.exp(Y[0] / k - W[0]))
            if slope != 0:
                polished = guess - value / slope
                if t0 <= polished <= t1:
                    guess = polished
        times.append(float(guess))
    return times


def _crossing_below_start(orbit: PhaseOrbit, level: float) -> float:
    """最初の出力点より内側で z = level となる時刻

    原点近くでは z は単調増加で z <= λ̃ e^(qτt) なので、
    t_lo = log(level/λ̃)/(qτ) - 1 で必ず水準を下回る。
    """
    params = orbit.params
    q, tau = params.q, params.constants.tau
    coefficient = (params.constants.lambda_tilde if orbit.profile is None
                   else orbit.profile.coefficient)
    t_guess = math.log(level / coefficient) / (q * tau)
    if orbit.profile is None:
        return float(t_guess)
    t_start = float(orbit.t[0])

    def value(t):
        _, _, W, _ = orbit.profile.log_state(t)
        return math.log(coefficient) + q * float(W[0]) - math.log(level)

    return float(brentq(value, min(t_guess, t_start) - 1.0, t_start, xtol=1e-14))
