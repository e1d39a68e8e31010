"""初期値問題の積分のテスト"""

import numpy as np
import pytest

from khessian.closed_forms import critical_ivp_profile
from khessian.config import SolverConfig
from khessian.errors import DomainError, RegimeError
from khessian.params import make_params, q_star
from khessian.radial_ivp import (
    identity_residual,
    integrate_ivp,
    pohozaev_terms,
    series_start,
)


@pytest.fixture(scope="module")
def spiral_profile():
    return integrate_ivp(make_params(13, 2, 5))


class TestSeriesStart:
    """原点近傍の級数解のテスト"""

    def test_origin(self):
        v, vprime = series_start(make_params(13, 2, 5), 0.0)
        assert v == -1.0
        assert vprime == 0.0

    def test_coefficient_override(self):
        v, _ = series_start(make_params(5, 1, 3), 0.1, coefficient=5.0)
        assert v == pytest.approx(-1.0 + 0.5 * 0.01)

    def test_negative_radius(self):
        with pytest.raises(DomainError):
            series_start(make_params(5, 1, 3), -1.0)


class TestIntegrateIvp:
    """integrate_ivp のテスト"""

    def test_subcritical_rejected(self):
        with pytest.raises(RegimeError):
            integrate_ivp(make_params(13, 2, 3))

    def test_bad_s_max(self):
        with pytest.raises(DomainError):
            integrate_ivp(make_params(13, 2, 5), s_max=1e-6)

    def test_range(self, spiral_profile):
        assert spiral_profile.s_max == pytest.approx(1e4)
        assert spiral_profile.s[0] == pytest.approx(1e-4)
        assert np.all(spiral_profile.v < 0)
        assert np.all(spiral_profile.v > -1)
        assert np.all(spiral_profile.vprime > 0)
        assert np.all(np.diff(spiral_profile.v) > 0)

    def test_matches_critical_closed_form(self):
        """q = q* では閉形式の解と一致する"""
        for n, k in ((5, 1), (13, 2)):
            profile = integrate_ivp(make_params(n, k, q_star(n, k)), s_max=1e3)
            s = np.logspace(-3, 3, 25)
            assert np.max(np.abs(profile.v_at(s) - critical_ivp_profile(s, n, k))) < 1e-8

    def test_singular_asymptotics(self, spiral_profile):
        """v(s) s^τ → -1"""
        c = spiral_profile.params.constants
        assert spiral_profile.v_at(1e3)[0] * 1e3 ** c.tau == pytest.approx(-1.0, abs=1e-3)

    def test_scaling_with_coefficient(self, spiral_profile):
        """v_λ̃(s) = V_1(λ̃^(1/(2k)) s)"""
        params = spiral_profile.params
        stretch = params.constants.lambda_tilde ** (1.0 / (2 * params.k))
        unit = integrate_ivp(params, s_max=1e3 * stretch, coefficient=1.0)
        s = np.logspace(-2, 3, 31)
        assert np.max(np.abs(spiral_profile.v_at(s) - unit.v_at(stretch * s))) < 1e-8

    def test_identity(self):
        profile = integrate_ivp(make_params(13, 2, 5), s_max=1e3, tol=1e-9)
        assert identity_residual(profile) < 1e-8

    def test_tolerance_refinement(self):
        params = make_params(13, 2, 5)
        coarse = integrate_ivp(params, s_max=100.0, tol=1e-10)
        fine = integrate_ivp(params, s_max=100.0, tol=5e-11)
        s = np.array([0.5, 10.0, 100.0])
        change = np.abs(fine.v_at(s) / coarse.v_at(s) - 1.0)
        assert np.max(change) < 1e-8

    def test_series_below_s_init(self, spiral_profile):
        assert spiral_profile.v_at(0.0)[0] == -1.0
        assert spiral_profile.vprime_at(0.0)[0] == 0.0
        assert spiral_profile.flux_at(0.0)[0] == 0.0

    def test_dense_output_matches_samples(self, spiral_profile):
        s = spiral_profile.s[::97]
        assert np.allclose(spiral_profile.v_at(s), spiral_profile.v[::97], rtol=1e-13)

    def test_log_state_beyond_range(self, spiral_profile):
        with pytest.raises(DomainError):
            spiral_profile.log_state(spiral_profile.t[-1] + 1.0)

    def test_node(self):
        profile = integrate_ivp(make_params(11, 1, 8))
        assert np.all(np.diff(profile.v) > 0)
        assert profile.v_at(1e3)[0] * 1e3 ** (2 / 7) == pytest.approx(-1.0, abs=1e-3)

    def test_custom_config(self):
        config = SolverConfig(s_init=1e-3, s_max=10.0, samples_per_decade=20)
        profile = integrate_ivp(make_params(13, 2, 5), config=config)
        assert profile.t.size == 81
        assert profile.s_max == pytest.approx(10.0)

    def test_to_dict(self, spiral_profile):
        data = spiral_profile.to_dict()
        assert data["params"]["q"] == 5.0
        assert len(data["s"]) == len(data["v"]) == spiral_profile.s.size
        assert len(spiral_profile.rows()) == spiral_profile.s.size


class TestPohozaev:
    """Pohozaev 恒等式のテスト"""

    @pytest.mark.parametrize("radius", [1e-5, 0.5, 1.0, 10.0, 1e3])
    def test_balance(self, spiral_profile, radius):
        terms = pohozaev_terms(spiral_profile, radius)
        assert terms.relative < 1e-7

    def test_interior_sign(self, spiral_profile):
        """q > q* では内部積分項が負"""
        assert pohozaev_terms(spiral_profile, 1.0).interior < 0

    def test_radius_out_of_range(self, spiral_profile):
        with pytest.raises(DomainError):
            pohozaev_terms(spiral_profile, 1e5)
