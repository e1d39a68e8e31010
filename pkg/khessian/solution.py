"""境界値問題 (P_λ) の解 u(r) とその残差診断"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .numerics import GaussPanels, operator_from_flux, pohozaev_balance, relative_residual
from .params import ProblemParams, c_nk, make_params

logger = logging.getLogger(__name__)

ArrayFunc = Callable[[np.ndarray], np.ndarray]


class SolutionSource(Enum):
    """解の出どころ"""
    SHOOTING = "shooting"
    PICARD = "picard"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """単位球上の動径解

    Attributes:
        r: [0, 1] の格子
        u: 格子上の値 (u(1) = 0, u < 0)
        lambda_physical: 物理的な λ
        params: 問題パラメータ
        source: 計算方法
        residuals: 残差診断
        index: 同じ λ に対する解の通し番号（0 始まり）
        s0: 射撃法の縮尺 s0（射撃法のときのみ）
    """
    r: np.ndarray
    u: np.ndarray
    lambda_physical: float
    params: ProblemParams
    source: SolutionSource
    residuals: Dict[str, float] = field(default_factory=dict)
    index: Optional[int] = None
    s0: Optional[float] = None
    u_func: Optional[ArrayFunc] = field(default=None, repr=False)
    uprime_func: Optional[ArrayFunc] = field(default=None, repr=False)

    @property
    def origin_value(self) -> float:
        """A = u(0)"""
        return float(self.u[0])

    @property
    def lambda_rescaled(self) -> float:
        return self.lambda_physical / float(c_nk(self.params.n, self.params.k))

    def evaluate(self, r) -> np.ndarray:
        """任意の r で u を評価（関数が無ければ格子の線形補間）"""
        if self.u_func is not None:
            return self.u_func(np.asarray(r, dtype=float))
        return np.interp(r, self.r, self.u)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "source": self.source.value,
            "lambda_physical": self.lambda_physical,
            "lambda_rescaled": self.lambda_rescaled,
            "origin_value": self.origin_value,
            "index": self.index,
            "s0": self.s0,
            "residuals": dict(self.residuals),
            "r": self.r.tolist(),
            "u": self.u.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RadialSolution":
        p = data["params"]
        params = make_params(p["n"], p["k"], p["q"], p.get("lambda"))
        return cls(
            r=np.asarray(data["r"], dtype=float),
            u=np.asarray(data["u"], dtype=float),
            lambda_physical=float(data["lambda_physical"]),
            params=params,
            source=SolutionSource(data.get("source", SolutionSource.CLOSED_FORM.value)),
            residuals=dict(data.get("residuals", {})),
            index=data.get("index"),
            s0=data.get("s0"),
        )


def residual_panels(decades: float = 8.0, panels: int = 480, order: int = 8) -> GaussPanels:
    """原点付近を対数的に細かくした [0, 1] の求積パネル"""
    edges = np.concatenate(([0.0], np.logspace(-decades, 0.0, panels)))
    return GaussPanels(edges, order=order)


def solution_residuals(
    u_func: ArrayFunc,
    uprime_func: ArrayFunc,
    lam: float,
    params: ProblemParams,
    usecond_func: Optional[ArrayFunc] = None,
    interior=(0.05, 0.95),
    points: int = 181,
) -> Dict[str, float]:
    """解の残差診断

    - operator: S_k(D²u) - λ(1-u)^q の相対残差（内部区間）
    - identity: c r^(n-k)(u')^k = λ∫_0^r s^(n-1)(1-u)^q の相対残差
    - pohozaev: R = 1 での Pohozaev 恒等式の相対残差
    - boundary: |u(1)|

    usecond_func が与えられれば作用素を u'' から直接計算し、
    無ければ流束の中心差分で計算する。
    """
    n, k, q = params.n, params.k, params.q
    c = float(c_nk(n, k))
    r_in = np.linspace(interior[0], interior[1], points)
    rhs = lam * (1.0 - u_func(r_in)) ** q
    if usecond_func is not None:
        up = uprime_func(r_in)
        lhs = c * r_in ** (1 - n) * (
            (n - k) * r_in ** (n - k - 1) * up ** k
            + k * r_in ** (n - k) * up ** (k - 1) * usecond_func(r_in)
        )
    else:
        lhs = operator_from_flux(lambda x: x ** (n - k) * uprime_func(x) ** k, r_in, n, k)
    operator = relative_residual(lhs, rhs)

    panels = residual_panels()
    x = panels.nodes
    one_minus_u = 1.0 - u_func(x)
    _, mass = panels.cumulative(x ** (n - 1) * one_minus_u ** q)
    r_edges = panels.edges[1:]
    flux_lhs = c * r_edges ** (n - k) * uprime_func(r_edges) ** k
    identity = relative_residual(flux_lhs, lam * mass[1:])

    energy = panels.integrate(x ** (n - 1) * one_minus_u ** (q + 1))
    u_one = float(u_func(np.array([1.0]))[0])
    up_one = float(uprime_func(np.array([1.0]))[0])
    terms = pohozaev_balance(1.0, u_one - 1.0, up_one, energy, lam / c, n, k, q)

    result = {
        "operator": operator,
        "identity": identity,
        "pohozaev": terms.relative,
        "boundary": abs(u_one),
    }
    logger.debug("residuals %s", result)
    return result


def sampled_residuals(solution: RadialSolution) -> Dict[str, float]:
    """格子上の値だけから残差を計算する（3次スプラインで補間）"""
    spline = CubicSpline(solution.r, solution.u)
    return solution_residuals(spline, spline.derivative(), solution.lambda_physical,
                              solution.params, usecond_func=spline.derivative(2))
