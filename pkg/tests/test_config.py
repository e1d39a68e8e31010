"""設定と例外のテスト"""

import pytest

from khessian.config import DEFAULT_CONFIG, SolverConfig, resolve_config
from khessian.errors import (
    BracketError,
    DomainError,
    HessianError,
    InsufficientRangeError,
    NumericError,
    RegimeError,
)


class TestSolverConfig:
    """SolverConfig のテスト"""

    def test_defaults(self):
        config = SolverConfig()
        assert config.tol == 1e-10
        assert config.s_init == 1e-4
        assert config.s_max == 1e4

    def test_rejects_nonpositive_tol(self):
        with pytest.raises(DomainError) as info:
            SolverConfig(tol=0.0)
        assert "tol must be positive" in info.value.violations

    def test_rejects_s_max_below_s_init(self):
        with pytest.raises(DomainError):
            SolverConfig(s_init=1.0, s_max=0.5)

    def test_with_overrides_skips_none(self):
        config = SolverConfig().with_overrides(tol=1e-8, s_max=None)
        assert config.tol == 1e-8
        assert config.s_max == 1e4

    def test_from_env(self):
        assert SolverConfig.from_env({"HF_TOL": "1e-7"}).tol == 1e-7
        assert SolverConfig.from_env({}).tol == 1e-10
        assert SolverConfig.from_env({"HF_TOL": " "}).tol == 1e-10

    def test_from_env_invalid(self):
        with pytest.raises(DomainError):
            SolverConfig.from_env({"HF_TOL": "tiny"})

    def test_resolve_config(self):
        custom = SolverConfig(tol=1e-6)
        assert resolve_config(None) is DEFAULT_CONFIG
        assert resolve_config(custom) is custom


class TestErrors:
    """例外階層のテスト"""

    def test_exit_codes(self):
        assert DomainError(["x"]).exit_code == 2
        assert RegimeError("x").exit_code == 3
        assert NumericError("x").exit_code == 4
        assert InsufficientRangeError("x").exit_code == 4

    def test_hierarchy(self):
        assert issubclass(BracketError, NumericError)
        assert issubclass(InsufficientRangeError, NumericError)
        assert issubclass(RegimeError, HessianError)

    def test_domain_error_to_dict(self):
        data = DomainError(["a", "b"]).to_dict()
        assert data == {"error": "DOMAIN_ERROR", "message": "a; b", "violations": ["a", "b"]}

    def test_domain_error_accepts_string(self):
        assert DomainError("bad").violations == ["bad"]

    def test_numeric_error_to_dict(self):
        assert InsufficientRangeError("short").to_dict() == {
            "error": "INSUFFICIENT_RANGE", "message": "short"}
