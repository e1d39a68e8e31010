"""k-Hessian ソルバーの例外階層

各例外は安定したエラーコードと CLI の終了コードを持つ。
"""

from typing import Iterable, List


class HessianError(Exception):
    """khessian が送出する全例外の基底クラス"""
    code = "ERROR"
    exit_code = 1

    def to_dict(self) -> dict:
        """API レスポンス用の辞書に変換"""
        return {"error": self.code, "message": str(self)}


class DomainError(HessianError, ValueError):
    """パラメータが定義域外（違反した制約をすべて列挙する）"""
    code = "DOMAIN_ERROR"
    exit_code = 2

    def __init__(self, violations: Iterable[str]):
        if isinstance(violations, str):
            violations = [violations]
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations))

    def to_dict(self) -> dict:
        data = super().to_dict()
        data["violations"] = list(self.violations)
        return data


class RegimeError(HessianError):
    """要求された計算がこの指数域では定義されない"""
    code = "REGIME_ERROR"
    exit_code = 3


class NumericError(HessianError):
    """数値計算の失敗"""
    code = "NUMERIC_ERROR"
    exit_code = 4


class InsufficientRangeError(NumericError):
    """軌道の積分範囲が結論を出すには短すぎる"""
    code = "INSUFFICIENT_RANGE"


class BracketError(NumericError):
    """根（または λ*）の挟み込みに失敗"""
    code = "BRACKET_ERROR"
