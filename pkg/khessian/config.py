"""ソルバー設定"""

import os
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from .errors import DomainError

TOL_ENV_VAR = "HF_TOL"


@dataclass(frozen=True)
class SolverConfig:
    """数値計算の設定

    すべての数値演算は省略可能な ``config`` 引数でこれを受け取る。
    """
    tol: float = 1e-10  # 積分の相対許容誤差
    atol: float = 1e-14  # 積分の絶対許容誤差（対数変数に対して）
    s_init: float = 1e-4  # 級数解から数値積分へ切り替える半径
    s_max: float = 1e4  # 既定の積分終端
    samples_per_decade: int = 200  # VProfile の出力点密度
    scan_per_decade: int = 400  # 根の走査点密度
    root_rtol: float = 1e-12
    bracket_expansion_limit: int = 200
    resolution_floor: float = 1e-11  # O2 との相対距離がこれ未満の点は丸め誤差と区別できない
    picard_panels: int = 512
    picard_order: int = 4  # パネルあたりの Gauss 点数
    picard_tol: float = 1e-10
    picard_max_iter: int = 5000
    blowup_bound: float = 1e6
    lambda_star_rtol: float = 5e-3
    lambda_star_cap: float = 1e3

    def __post_init__(self):
        violations = []
        for name in ("tol", "atol", "s_init", "s_max", "root_rtol",
                     "resolution_floor", "picard_tol", "blowup_bound",
                     "lambda_star_rtol", "lambda_star_cap"):
            if not getattr(self, name) > 0:
                violations.append(f"{name} must be positive")
        for name in ("samples_per_decade", "scan_per_decade", "picard_panels",
                     "picard_order", "picard_max_iter", "bracket_expansion_limit"):
            if getattr(self, name) < 1:
                violations.append(f"{name} must be at least 1")
        if self.s_max <= self.s_init:
            violations.append("s_max must exceed s_init")
        if violations:
            raise DomainError(violations)

    def with_overrides(self, **changes) -> "SolverConfig":
        """None 以外の値だけを上書きした新しい設定を返す"""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "SolverConfig":
        """環境変数 HF_TOL で許容誤差を上書きした設定を作る"""
        environ = os.environ if environ is None else environ
        raw = environ.get(TOL_ENV_VAR)
        if raw is None or raw.strip() == "":
            return cls()
        try:
            tol = float(raw)
        except ValueError:
            raise DomainError([f"{TOL_ENV_VAR} is not a number: {raw!r}"]) from None
        return cls(tol=tol)


DEFAULT_CONFIG = SolverConfig()


def resolve_config(config: Optional[SolverConfig]) -> SolverConfig:
    return config if config is not None else DEFAULT_CONFIG
