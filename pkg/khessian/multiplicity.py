"""分岐図と解の多重度

1本の大域軌道 v から λ ↦ u(0) の分岐図を作り、与えられた λ の解を数えて復元する。
独立な検算として最大解の Picard 反復と、それを使った λ* の二分探索を持つ。
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .closed_forms import DRootKind, critical_solutions, solve_d
from .config import SolverConfig, resolve_config
from .errors import BracketError, DomainError, NumericError, RegimeError
from .numerics import GaussPanels
from .params import ProblemParams, RegimeTag, c_nk
from .phase_plane import equilibria
from .radial_ivp import VProfile, integrate_ivp
from .solution import RadialSolution, SolutionSource, solution_residuals

logger = logging.getLogger(__name__)

LAMBDA_CONVENTIONS = (
    "lambda_rescaled = lambda_tilde * s^(2k) * (-v(s))^(q-k); "
    "lambda_physical = c_nk * lambda_rescaled"
)


def _require_supercritical(params: ProblemParams, allow_center: bool) -> None:
    tag = params.regime.tag
    if tag is RegimeTag.SUBCRITICAL or (tag is RegimeTag.CENTER and not allow_center):
        relation = "below" if tag is RegimeTag.SUBCRITICAL else "equal to"
        raise RegimeError(
            f"q={params.q} is {relation} the critical exponent q*={params.constants.q_star}; "
            "shooting needs q > q*(k) (use the closed forms at q = q*)")


def _ensure_profile(params: ProblemParams, s_max: Optional[float],
                    profile: Optional[VProfile], config: SolverConfig) -> VProfile:
    if s_max is not None and s_max <= config.s_init:
        s_max = None
    if profile is not None:
        if (profile.params.n, profile.params.k, profile.params.q) != (params.n, params.k, params.q):
            raise DomainError(["profile was integrated for different parameters"])
        if s_max is None or s_max <= profile.s_max * (1 + 1e-12):
            return profile
    return integrate_ivp(params, s_max=s_max, config=config)


@dataclass(frozen=True, eq=False)
class BifurcationCurve:
    """分岐曲線 s ↦ (λ(s), A(s))

    Attributes:
        s: 縮尺 s0
        lambda_rescaled: λ̃ s^(2k) (-v(s))^(q-k)
        lambda_physical: c_{n,k} * lambda_rescaled
        A: u(0) = 1 + 1/v(s)
        distance_to_o2: 相平面での O2 との相対距離。これが resolution_floor 未満の
            点では λ の変化が丸め誤差に埋もれる
    """
    params: ProblemParams
    s: np.ndarray
    lambda_rescaled: np.ndarray
    lambda_physical: np.ndarray
    A: np.ndarray
    distance_to_o2: np.ndarray
    conventions: str = LAMBDA_CONVENTIONS
    profile: Optional[VProfile] = field(default=None, repr=False)

    def rows(self):
        return list(zip(self.s.tolist(), self.lambda_rescaled.tolist(),
                        self.lambda_physical.tolist(), self.A.tolist()))

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "conventions": self.conventions,
            "s": self.s.tolist(),
            "lambda_rescaled": self.lambda_rescaled.tolist(),
            "lambda_physical": self.lambda_physical.tolist(),
            "A": self.A.tolist(),
            "distance_to_o2": self.distance_to_o2.tolist(),
        }

    def resolved(self, floor: Optional[float] = None) -> "BifurcationCurve":
        """O2 と区別できる最初の連続区間だけを残した分岐曲線"""
        floor = resolve_config(None).resolution_floor if floor is None else floor
        close = self.distance_to_o2 <= floor
        cut = slice(0, int(np.argmax(close)) if np.any(close) else self.s.size)
        return BifurcationCurve(self.params, self.s[cut], self.lambda_rescaled[cut],
                                self.lambda_physical[cut], self.A[cut],
                                self.distance_to_o2[cut], self.conventions, self.profile)


def bifurcation_curve(params: ProblemParams, s_grid=None, *,
                      profile: Optional[VProfile] = None,
                      config: Optional[SolverConfig] = None) -> BifurcationCurve:
    """分岐曲線を計算する

    Args:
        s_grid: 評価する s（省略時はプロファイルの出力点）

    Raises:
        RegimeError: q < q*(k)
    """
    config = resolve_config(config)
    _require_supercritical(params, allow_center=True)
    if s_grid is not None:
        s_grid = np.asarray(s_grid, dtype=float)
        if np.any(s_grid <= 0):
            raise DomainError(["s_grid must be positive"])
    s_max = None if s_grid is None else float(np.max(s_grid))
    profile = _ensure_profile(params, s_max, profile, config)
    s = profile.s if s_grid is None else s_grid
    w, _, W, Y = profile.log_state(np.log(s))
    lt = params.constants.lambda_tilde
    rescaled = lt * np.exp((params.q - params.k) * W)
    _, (y2, z2) = equilibria(params)
    dy = np.expm1(Y - math.log(y2))
    dz = np.expm1(math.log(profile.coefficient) + params.q * W - math.log(z2))
    return BifurcationCurve(
        params=params,
        s=np.array(s, dtype=float),
        lambda_rescaled=rescaled,
        lambda_physical=float(c_nk(params.n, params.k)) * rescaled,
        A=-np.expm1(-w),
        distance_to_o2=np.hypot(dy, dz),
        profile=profile,
    )


def turning_points(curve: BifurcationCurve,
                   config: Optional[SolverConfig] = None) -> List[Tuple[float, float]]:
    """分岐曲線の折り返し点（λ(s) の極値）を (s, λ_physical) で返す

    O2 と区別できない末尾（丸め誤差の揺らぎ）は見ない。
    等間隔の log s 格子では3点の放物線で頂点を補正する。
    """
    config = resolve_config(config)
    curve = curve.resolved(config.resolution_floor)
    lam = curve.lambda_physical
    if lam.size < 3:
        return []
    log_s = np.log(curve.s)
    steps = np.diff(log_s)
    uniform = np.allclose(steps, steps[0], rtol=1e-8)
    points = []
    left, right = np.diff(lam)[:-1], np.diff(lam)[1:]
    for i in np.nonzero(left * right < 0)[0] + 1:
        s_peak, lam_peak = log_s[i], lam[i]
        curvature = lam[i + 1] - 2 * lam[i] + lam[i - 1]
        if uniform and curvature != 0:
            slope = lam[i + 1] - lam[i - 1]
            s_peak = log_s[i] - steps[0] * slope / (2 * curvature)
            lam_peak = lam[i] - slope ** 2 / (8 * curvature)
        points.append((float(math.exp(s_peak)), float(lam_peak)))
    return points


@dataclass(frozen=True)
class MultiplicityReport:
    """与えられた λ に対する解の個数"""
    lambda_physical: float
    lambda_rescaled: float
    count: int
    truncated: bool
    roots: Tuple[float, ...]
    regime: RegimeTag

    def __iter__(self):
        yield self.count
        yield self.roots

    def to_dict(self) -> dict:
        return {
            "lambda_physical": self.lambda_physical,
            "lambda_rescaled": self.lambda_rescaled,
            "count": self.count,
            "truncated": self.truncated,
            "roots": list(self.roots),
            "regime": self.regime.value,
        }


def count_solutions(params: ProblemParams, lambda_physical: float,
                    s_max: Optional[float] = None, *,
                    profile: Optional[VProfile] = None,
                    config: Optional[SolverConfig] = None) -> MultiplicityReport:
    """λ_physical/c_{n,k} = λ_rescaled(s0) となる s0 ∈ (0, s_max] をすべて求める

    log s の格子で符号変化を走査し Brent 法で絞る。SPIRAL では有限の s_max で
    打ち切った下界なので、最後の1周期の振幅が水準までの距離以上なら truncated とする。

    Raises:
        RegimeError: q <= q*(k)
    """
    if not lambda_physical > 0:
        raise DomainError([f"lambda must be positive (lambda={lambda_physical})"])
    config = resolve_config(config)
    _require_supercritical(params, allow_center=False)
    profile = _ensure_profile(params, s_max, profile, config)
    t_end = profile.t[-1] if s_max is None else min(math.log(s_max), profile.t[-1])

    q, k = params.q, params.k
    lt = params.constants.lambda_tilde
    target = lambda_physical / float(c_nk(params.n, k))
    log_gap = math.log(lt) - math.log(target)

    def gap(t):
        _, _, W, _ = profile.log_state(t)
        return log_gap + (q - k) * W

    # λ_rescaled <= λ̃ s^(2k) なので t_start では必ず水準を下回る（s_init 未満は級数解）
    t_start = min(profile.t_init, math.log(target / lt) / (2 * k) - 1.0)
    decades = (t_end - t_start) / math.log(10.0)
    grid = np.linspace(t_start, t_end,
                       max(2, int(math.ceil(decades * config.scan_per_decade)) + 1))
    values = gap(grid)
    roots = []
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0)[0]:
        g0, g1 = values[i], values[i + 1]
        if g0 == 0 and i > 0:
            continue
        if max(abs(g0), abs(g1)) < config.resolution_floor:
            continue
        if g0 == 0:
            root = grid[i]
        elif g1 == 0:
            root = grid[i + 1]
        else:
            root = brentq(lambda x: float(gap(x)[0]), grid[i], grid[i + 1],
                          xtol=1e-14, rtol=config.root_rtol)
        roots.append(float(math.exp(root)))

    deviation = np.expm1(values - log_gap)
    tag = params.regime.tag
    if tag is RegimeTag.SPIRAL:
        period = 2 * math.pi / abs(params.regime.eigenvalues[1].imag)
        window = grid >= t_end - period
        amplitude = float(np.max(np.abs(deviation[window])))
        truncated = amplitude >= abs(target / lt - 1.0)
    else:
        last = lt * (1.0 + deviation[-1])
        truncated = bool(last < target < lt)
    logger.info("lambda=%g: %d solutions for s0 <= %.3g (truncated=%s)",
                lambda_physical, len(roots), math.exp(t_end), truncated)
    return MultiplicityReport(
        lambda_physical=float(lambda_physical),
        lambda_rescaled=target,
        count=len(roots),
        truncated=bool(truncated),
        roots=tuple(roots),
        regime=tag,
    )


def reconstruct_u(params: ProblemParams, s0: float, *,
                  profile: Optional[VProfile] = None,
                  r=None, index: Optional[int] = None,
                  config: Optional[SolverConfig] = None) -> RadialSolution:
    """縮尺 s0 の解 u(r) = 1 - v(s0 r)/v(s0) を復元する

    u(1) = 0、u(0) = 1 + 1/v(s0)、λ = c_{n,k} λ̃ s0^(2k) (-v(s0))^(q-k)。
    """
    if not s0 > 0:
        raise DomainError([f"s0 must be positive (s0={s0})"])
    config = resolve_config(config)
    _require_supercritical(params, allow_center=True)
    profile = _ensure_profile(params, s0, profile, config)
    grid = np.linspace(0.0, 1.0, 1001) if r is None else np.asarray(r, dtype=float)

    v0 = float(profile.v_at(s0)[0])
    _, _, W0, _ = profile.log_state(math.log(s0))
    lam = (float(c_nk(params.n, params.k)) * params.constants.lambda_tilde
           * math.exp((params.q - params.k) * W0[0]))

    def u_func(x):
        return 1.0 - profile.v_at(s0 * np.asarray(x, dtype=float)) / v0

    def uprime_func(x):
        return -s0 * profile.vprime_at(s0 * np.asarray(x, dtype=float)) / v0

    solved = params.with_lambda(lam)
    return RadialSolution(
        r=grid,
        u=u_func(grid),
        lambda_physical=lam,
        params=solved,
        source=SolutionSource.SHOOTING,
        residuals=solution_residuals(u_func, uprime_func, lam, solved),
        index=index,
        s0=float(s0),
        u_func=u_func,
        uprime_func=uprime_func,
    )


class PicardStatus(Enum):
    """Picard 反復の結果"""
    CONVERGED = "converged"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class PicardResult:
    """最大解の反復の結果

    Attributes:
        status: 収束したかどうか
        solution: 収束したときの解
        iterations: 反復回数
        change: 最後の反復での sup ノルムの変化
        monotone: すべての反復で u_{i+1} <= u_i だったか
        reason: 発散と判定した理由
    """
    status: PicardStatus
    lambda_physical: float
    iterations: int
    change: float
    monotone: bool
    solution: Optional[RadialSolution] = None
    reason: str = ""

    @property
    def converged(self) -> bool:
        return self.status is PicardStatus.CONVERGED

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "lambda_physical": self.lambda_physical,
            "iterations": self.iterations,
            "change": self.change,
            "monotone": self.monotone,
            "reason": self.reason,
            "origin_value": None if self.solution is None else self.solution.origin_value,
        }


class PicardIteration:
    """u_i(r) = -∫_r^1 [c^(-1) τ^(k-n) ∫_0^τ s^(n-1) λ(1-u_{i-1})^q ds]^(1/k) dτ

    区分 Gauss-Legendre 求積で内側・外側の積分を累積する。格子は λ によらないので
    二分探索では同じインスタンスを使い回す。
    """

    def __init__(self, params: ProblemParams, config: Optional[SolverConfig] = None):
        self.params = params
        self.config = resolve_config(config)
        n, k = params.n, params.k
        self.panels = GaussPanels(np.linspace(0.0, 1.0, self.config.picard_panels + 1),
                                  order=self.config.picard_order)
        x = self.panels.nodes
        self._weight = x ** (n - 1)
        self._scale = float(c_nk(n, k)) * x ** (n - k)

    def step(self, lam: float, u_nodes: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """1回の反復。(新しい u のノード値, 境界値, u' のノード値) を返す"""
        k, q = self.params.k, self.params.q
        inner, _ = self.panels.cumulative(lam * self._weight * (1.0 - u_nodes) ** q)
        slope = np.maximum(inner / self._scale, 0.0)
        if k != 1:
            slope = slope ** (1.0 / k)
        outer_nodes, outer_edges = self.panels.cumulative(slope)
        total = outer_edges[-1]
        return outer_nodes - total, outer_edges - total, slope

    def run(self, lam: float, tol: Optional[float] = None,
            max_iter: Optional[int] = None) -> PicardResult:
        if not lam > 0:
            raise DomainError([f"lambda must be positive (lambda={lam})"])
        tol = self.config.picard_tol if tol is None else tol
        max_iter = self.config.picard_max_iter if max_iter is None else max_iter
        u_nodes = np.zeros_like(self.panels.nodes)
        u_edges = np.zeros_like(self.panels.edges)
        monotone = True
        change = math.inf
        with np.errstate(over="ignore", invalid="ignore"):
            for i in range(1, max_iter + 1):
                new_nodes, new_edges, _ = self.step(lam, u_nodes)
                if not (np.all(np.isfinite(new_nodes)) and np.all(np.isfinite(new_edges))):
                    return self._diverged(lam, i, change, monotone, "non-finite iterate")
                if new_edges[0] < -self.config.blowup_bound:
                    return self._diverged(lam, i, change, monotone,
                                          f"u(0) below -{self.config.blowup_bound:g}")
                slack = 1e-12 * (1.0 + abs(new_edges[0]))
                if (np.max(new_nodes - u_nodes) > slack
                        or np.max(new_edges - u_edges) > slack):
                    monotone = False
                change = float(max(np.max(np.abs(new_nodes - u_nodes)),
                                   np.max(np.abs(new_edges - u_edges))))
                u_nodes, u_edges = new_nodes, new_edges
                if change < tol:
                    logger.debug("Picard lambda=%g converged after %d iterations", lam, i)
                    return PicardResult(PicardStatus.CONVERGED, float(lam), i, change,
                                        monotone, self._solution(lam, u_edges))
        return self._diverged(lam, max_iter, change, monotone, "max_iter reached")

    def _diverged(self, lam, iterations, change, monotone, reason) -> PicardResult:
        logger.debug("Picard lambda=%g diverged after %d iterations: %s", lam, iterations, reason)
        return PicardResult(PicardStatus.DIVERGED, float(lam), iterations, change,
                            monotone, None, reason)

    def _solution(self, lam: float, u_edges: np.ndarray) -> RadialSolution:
        r = self.panels.edges
        spline = CubicSpline(r, u_edges)
        params = self.params.with_lambda(lam)
        residuals = solution_residuals(spline, spline.derivative(), lam, params,
                                       usecond_func=spline.derivative(2))
        return RadialSolution(r=r.copy(), u=u_edges.copy(), lambda_physical=float(lam),
                              params=params, source=SolutionSource.PICARD,
                              residuals=residuals, index=0, u_func=spline,
                              uprime_func=spline.derivative())


def picard_maximal(params: ProblemParams, lambda_physical: float,
                   tol: Optional[float] = None, max_iter: Optional[int] = None, *,
                   config: Optional[SolverConfig] = None) -> PicardResult:
    """u_0 = 0 からの単調反復で最大解を求める（q > k なら指数域を問わない）"""
    return PicardIteration(params, config).run(lambda_physical, tol, max_iter)


def lambda_star_lower_bound(n: int, k: int, q: float) -> float:
    """λ* の下界 (1 + binom(n,k)^(-1/k)/2)^(-q)

    半径 R > 1 のねじれ関数 S_k(D²η) = 1 を劣解に使う議論で R → 1 とした値。
    """
    return (1.0 + comb(n, k) ** (-1.0 / k) / 2.0) ** (-q)


@dataclass(frozen=True)
class LambdaStarEstimate:
    """λ* の推定値と最後の挟み込み区間"""
    value: float
    lower: float
    upper: float
    evaluations: int

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"value": self.value, "lower": self.lower, "upper": self.upper,
                "evaluations": self.evaluations}


def estimate_lambda_star(params: ProblemParams, tol: Optional[float] = None, *,
                         config: Optional[SolverConfig] = None) -> LambdaStarEstimate:
    """収束する λ と発散する λ の間を二分して λ* を推定する

    Raises:
        BracketError: config.lambda_star_cap までに発散する λ が見つからない
    """
    config = resolve_config(config)
    tol = config.lambda_star_rtol if tol is None else tol
    iteration = PicardIteration(params, config)
    evaluations = 0

    def converges(lam: float) -> bool:
        nonlocal evaluations
        evaluations += 1
        return iteration.run(lam).converged

    floor = lambda_star_lower_bound(params.n, params.k, params.q)
    lt = params.constants.lambda_tilde
    guess = max(floor, float(c_nk(params.n, params.k)) * lt if lt > 0 else 1.0)
    if converges(guess):
        lower, upper = guess, 2.0 * guess
        while converges(upper):
            lower, upper = upper, 2.0 * upper
            if upper > config.lambda_star_cap:
                raise BracketError(
                    f"Picard still converges at lambda={lower:g}; cap {config.lambda_star_cap:g}")
    else:
        lower, upper = 0.5 * guess, guess
        while not converges(lower):
            lower, upper = 0.5 * lower, lower
            if lower < 1e-3 * floor:
                raise BracketError("no converging lambda found above the lower bound")
    while upper - lower > tol * 0.5 * (upper + lower):
        mid = 0.5 * (lower + upper)
        if converges(mid):
            lower = mid
        else:
            upper = mid
        logger.debug("lambda* bracket [%.8g, %.8g]", lower, upper)
    estimate = LambdaStarEstimate(0.5 * (lower + upper), lower, upper, evaluations)
    logger.info("lambda* ~ %.6g after %d Picard runs", estimate.value, evaluations)
    return estimate


def solve_all(params: ProblemParams, lambda_physical: float,
              s_max: Optional[float] = None, *,
              config: Optional[SolverConfig] = None
              ) -> Tuple[MultiplicityReport, List[RadialSolution]]:
    """λ に対するすべての解

    q > q*(k) は射撃法、q = q*(k) は閉形式。

    Raises:
        RegimeError: q < q*(k)
    """
    config = resolve_config(config)
    tag = params.regime.tag
    target = lambda_physical / float(c_nk(params.n, params.k))
    if tag is RegimeTag.CENTER:
        if solve_d(lambda_physical, params.n, params.k, config).kind is DRootKind.NONE:
            solutions = []
        else:
            solutions = critical_solutions(lambda_physical, params.n, params.k, config=config)
        report = MultiplicityReport(float(lambda_physical), target, len(solutions),
                                    False, (), tag)
        return report, solutions
    _require_supercritical(params, allow_center=False)
    profile = integrate_ivp(params, s_max=s_max, config=config)
    report = count_solutions(params, lambda_physical, profile=profile, config=config)
    solutions = [reconstruct_u(params, s0, profile=profile, index=i, config=config)
                 for i, s0 in enumerate(report.roots)]
    return report, solutions
