"""数値計算の共通部品

有限差分、動径 k-Hessian 作用素、区分 Gauss-Legendre 求積、Pohozaev 恒等式の各項。
"""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial import legendre

from .params import c_nk, q_star

ArrayFunc = Callable[[np.ndarray], np.ndarray]

DEFAULT_FD_STEP = 1e-3


def central_derivative(func: ArrayFunc, x, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """4次精度の中心差分（純粋関数）"""
    x = np.asarray(x, dtype=float)
    return (-func(x + 2 * h) + 8 * func(x + h) - 8 * func(x - h) + func(x - 2 * h)) / (12 * h)


def operator_from_flux(flux: ArrayFunc, r, n: int, k: int,
                       h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """流束 r^(n-k)(u')^k から c_{n,k} r^(1-n) (flux)' を差分で求める"""
    r = np.asarray(r, dtype=float)
    return float(c_nk(n, k)) * r ** (1 - n) * central_derivative(flux, r, h)


def radial_operator(u: ArrayFunc, r, n: int, k: int,
                    h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """S_k(D²u) = c_{n,k} r^(1-n) (r^(n-k) (u')^k)' を入れ子の中心差分で評価

    u だけを使う独立な検算用。r - 4h > 0 であること。h は r と同じ形の配列でもよい。
    """
    def flux(x):
        return x ** (n - k) * central_derivative(u, x, h) ** k

    return operator_from_flux(flux, r, n, k, h)


def relative_residual(lhs, rhs) -> float:
    """max|lhs - rhs| / max|rhs|"""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = np.max(np.abs(rhs))
    diff = np.max(np.abs(lhs - rhs))
    return float(diff / scale) if scale > 0 else float(diff)


class GaussPanels:
    """区分 Gauss-Legendre 求積

    各パネルに order 点の Gauss 点を置き、パネル内の累積積分は
    Lagrange 基底の原始関数から作るスペクトル積分行列で求める。

    Attributes:
        edges: パネル境界 (P+1,)
        nodes: Gauss 点 (P, order)
        weights: 求積重み (P, order)
    """

    def __init__(self, edges, order: int = 8):
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be a strictly increasing sequence")
        x, w = legendre.leggauss(order)
        self.edges = edges
        self.order = order
        self._half = 0.5 * np.diff(edges)[:, None]
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        self.nodes = mid + self._half * x[None, :]
        self.weights = self._half * w[None, :]
        self._partial = self._partial_matrix(x)

    @staticmethod
    def _partial_matrix(x: np.ndarray) -> np.ndarray:
        """S[i, l] = ∫_{-1}^{x_i} L_l(ξ) dξ"""
        order = x.size
        coeffs = np.linalg.inv(legendre.legvander(x, order - 1))
        matrix = np.empty((order, order))
        for l in range(order):
            matrix[:, l] = legendre.legval(x, legendre.legint(coeffs[:, l], lbnd=-1))
        return matrix

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values * self.weights))

    def cumulative(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """edges[0] からの累積積分を Gauss 点と境界で返す"""
        totals = np.sum(values * self.weights, axis=1)
        at_edges = np.concatenate(([0.0], np.cumsum(totals)))
        within = (values @ self._partial.T) * self._half
        return at_edges[:-1, None] + within, at_edges


@dataclass(frozen=True)
class PohozaevTerms:
    """Pohozaev 恒等式の内部積分項と境界項"""
    radius: float
    interior: float
    boundary: Tuple[float, float, float]

    @property
    def residual(self) -> float:
        return self.interior - sum(self.boundary)

    @property
    def relative(self) -> float:
        scale = max(abs(self.interior), *(abs(b) for b in self.boundary))
        return abs(self.residual) / scale if scale > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "interior": self.interior,
            "boundary": list(self.boundary),
            "residual": self.residual,
            "relative": self.relative,
        }


def pohozaev_balance(radius: float, w: float, wprime: float, integral: float,
                     coefficient: float, n: int, k: int, q: float) -> PohozaevTerms:
    """(r^(n-k) (w')^k)' = coefficient r^(n-1) (-w)^q の Pohozaev 恒等式（純粋関数）

    Args:
        radius: 評価半径 R
        w, wprime: R における値と導関数 (w < 0)
        integral: ∫_0^R ξ^(n-1) (-w)^(q+1) dξ
        coefficient: 右辺の係数
    """
    interior = (coefficient * (n - 2 * k) * (q_star(n, k) - q)
                / ((k + 1) * (q + 1)) * integral)
    boundary = (
        (n - 2 * k) / (k + 1) * radius ** (n - k) * w * wprime ** k,
        k / (k + 1) * radius ** (n - k + 1) * wprime ** (k + 1),
        coefficient / (q + 1) * radius ** n * (-w) ** (q + 1),
    )
    return PohozaevTerms(radius=float(radius), interior=float(interior),
                         boundary=tuple(float(b) for b in boundary))
