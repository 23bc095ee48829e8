import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from cavcool import rateeq
from cavcool.analytic import (
    BlochState,
    Status,
    bloch_steady,
    bloch_trajectory,
    cooling_law_closed,
    resonance_catalogue,
    strong_drive_cooling_law,
    weak_drive_mss,
)
from cavcool.errors import ParameterError, ResonancePoleError, SingularSystemError
from cavcool.params import SystemParams


def bloch_rhs(omega, gamma):
    def f(t, z):
        z1, z2, z3 = z
        return [0.5 * omega * z3 - gamma * z1, -0.5 * gamma * z2, omega * (1 - 2 * z1) - 0.5 * gamma * z3]

    return f


class TestBloch:
    def test_steady_examples(self):
        z = bloch_steady(1.0, 1.0)
        assert (z.z1, z.z2, z.z3) == pytest.approx((1 / 3, 0.0, 2 / 3), rel=1e-15)
        assert bloch_steady(0.0, 1.0) == BlochState(0.0, 0.0, 0.0)
        big = bloch_steady(1e8, 1.0)
        assert big.z1 == pytest.approx(0.5, abs=1e-12)
        assert big.z3 == pytest.approx(0.0, abs=1e-7)

    def test_steady_undefined(self):
        with pytest.raises(ParameterError, match="undefined stationary state"):
            bloch_steady(0.0, 0.0)

    @given(st.floats(0, 100), st.floats(1e-3, 100))
    def test_steady_within_bloch_ball(self, omega, gamma):
        z = bloch_steady(omega, gamma)
        assert 0 <= z.z1 <= 0.5 + 1e-15
        assert abs(z.z3) <= 1

    def test_fixed_point(self):
        z = bloch_steady(1.7, 0.8)
        for t in (0.1, 3.0, 50.0):
            zt = bloch_trajectory(1.7, 0.8, z, t)
            assert zt.as_array() == pytest.approx(z.as_array(), abs=1e-13)

    def test_pure_decay(self):
        for t in (0.0, 0.5, 2.0, 7.0):
            assert bloch_trajectory(0.0, 1.0, BlochState(1, 0, 0), t).z1 == pytest.approx(math.exp(-t), rel=1e-12)

    def test_z2_decoupled(self):
        zt = bloch_trajectory(3.3, 1.0, BlochState(0.2, 1.0, -0.1), 2.0)
        assert zt.z2 == math.exp(-1.0)
        assert zt.z2 == pytest.approx(0.3679, abs=5e-5)

    @pytest.mark.parametrize("omega, gamma, t", [(1.0, 1.0, 3.0), (5.0, 0.5, 1.7), (0.2, 2.0, 10.0)])
    def test_matches_ode_solver(self, omega, gamma, t):
        z0 = BlochState(0.3, 0.4, -0.2)
        ref = solve_ivp(bloch_rhs(omega, gamma), (0, t), z0.as_array(), rtol=1e-12, atol=1e-13).y[:, -1]
        assert bloch_trajectory(omega, gamma, z0, t).as_array() == pytest.approx(ref, abs=1e-9)

    def test_converges(self):
        zss = bloch_steady(1.0, 1.0).as_array()
        for t in (40.0, 60.0, 200.0):
            zt = bloch_trajectory(1.0, 1.0, BlochState(0, 0, 0), t).as_array()
            assert np.max(np.abs(zt - zss)) < 1e-8

    def test_negative_time(self):
        with pytest.raises(ParameterError):
            bloch_trajectory(1, 1, BlochState(0, 0, 0), -1.0)


class TestClosedLaw:
    def test_matches_rate_steady_state(self):
        p = SystemParams(nu=1, kappa=1, omega=5, delta=6, eta=0.1, g=1)
        law = cooling_law_closed(p)
        y = rateeq.steady_state(rateeq.assemble(p))
        assert law.status is Status.COOLING
        assert law.m_ss == pytest.approx(y[0], rel=1e-9)

    def test_no_drive(self):
        law = cooling_law_closed(SystemParams(omega=0.0))
        assert law.status is Status.NO_DRIVE
        assert math.isnan(law.m_ss)

    def test_odd_in_delta(self, draws):
        for p in draws:
            a = cooling_law_closed(p).gamma_c
            b = cooling_law_closed(p.with_(delta=-p.delta)).gamma_c
            assert abs(a + b) <= 1e-12 * abs(a)

    def test_scale_invariance(self):
        base = SystemParams(nu=1.3, delta=2.2, omega=4.0, kappa=0.7)
        a = cooling_law_closed(base.with_(eta=0.1, g=1.0))
        b = cooling_law_closed(base.with_(eta=0.01, g=10.0))
        assert a.m_ss == pytest.approx(b.m_ss, rel=1e-14)
        c = cooling_law_closed(base.with_(eta=0.1, g=3.0))
        assert c.gamma_c / a.gamma_c == pytest.approx(9.0, rel=1e-12)

    @settings(max_examples=200)
    @given(st.floats(0.01, 10), st.floats(0.05, 5), st.floats(-20, 20), st.floats(0.1, 30))
    def test_status_consistent(self, s, nu, delta, omega):
        p = SystemParams(nu=nu, delta=delta, omega=omega, eta=0.05, g=s)
        law = cooling_law_closed(p)
        if law.status is Status.COOLING:
            assert law.gamma_c > 0 and law.m_ss >= 0
            assert law.m_ss == pytest.approx(law.c_source / law.gamma_c, rel=1e-10)
        else:
            assert law.status is Status.HEATING and law.gamma_c <= 0 and math.isnan(law.m_ss)

    def test_heating_at_mirror_resonance(self):
        law = cooling_law_closed(SystemParams(nu=1, delta=-1, omega=2))
        assert law.status is Status.HEATING

    def test_singular_denominator(self):
        # kappa = 0 with gamma_atom tiny is fine; an exactly vanishing denominator needs g_0 = xi = 0
        p = SystemParams(nu=1.0, delta=1.0, omega=1.0, kappa=0.0)
        with pytest.raises(SingularSystemError):
            cooling_law_closed(p)


class TestWeakDrive:
    def test_examples(self):
        assert weak_drive_mss(1.0, 1.0, 1.0) == 0.0625
        assert weak_drive_mss(1.0, 1.0, 0.0) == 0.0
        assert weak_drive_mss(-1.0, 1.0, 1.0) is Status.HEATING

    def test_divergent(self):
        with pytest.raises(SingularSystemError, match="divergent"):
            weak_drive_mss(0.0, 1.0, 1.0)

    @pytest.mark.parametrize("nu", [0.5, 1.0, 3.0])
    @pytest.mark.parametrize("factor", [0.5, 1.0, 2.0])
    def test_limit_of_closed_law(self, nu, factor):
        kappa = 1.0
        p = SystemParams(nu=nu, delta=factor * nu, kappa=kappa, gamma_atom=1e-3 * kappa, omega=1e-3 * kappa)
        weak = weak_drive_mss(p.delta, p.nu, p.kappa)
        assert abs(cooling_law_closed(p).m_ss - weak) / weak < 1e-2


class TestStrongDrive:
    base = SystemParams(nu=20.0, omega=100.0, kappa=1.0, eta=0.05, g=1.0)

    def test_pole(self):
        with pytest.raises(ResonancePoleError, match="resonance pole"):
            strong_drive_cooling_law(self.base.with_(delta=120.0))
        with pytest.raises(ResonancePoleError):
            strong_drive_cooling_law(self.base.with_(delta=20.0))

    def test_mss_vanishes_toward_delta_plus(self):
        values = [strong_drive_cooling_law(self.base.with_(delta=120.0 + eps)).m_ss for eps in (1.0, 0.1, 0.01, 0.001)]
        assert all(b < a for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-8

    def test_agrees_with_full_law(self):
        # gamma_c of the simplified law diverges at delta_+; c depends on xi_+ only and stays finite
        full = cooling_law_closed(self.base.with_(delta=120.0))
        near = strong_drive_cooling_law(self.base.with_(delta=120.0 + 1e-6))
        assert abs(full.c_source - near.c_source) / full.c_source < 0.05
        off = self.base.with_(delta=130.0)
        f, s = cooling_law_closed(off), strong_drive_cooling_law(off)
        assert abs(f.gamma_c - s.gamma_c) / f.gamma_c < 0.05
        assert abs(f.m_ss - s.m_ss) / f.m_ss < 0.05

    def test_odd(self, draws):
        for p in draws[:300]:
            try:
                a = strong_drive_cooling_law(p).gamma_c
            except ResonancePoleError:
                continue
            b = strong_drive_cooling_law(p.with_(delta=-p.delta)).gamma_c
            assert abs(a + b) <= 1e-12 * abs(a)


class TestResonances:
    def test_examples(self):
        cat = resonance_catalogue(1.0, 5.0)
        assert cat.cooling == (1.0, -4.0, 6.0)
        assert cat.heating == (-1.0, -6.0, 4.0)
        cat0 = resonance_catalogue(1.0, 0.0)
        assert cat0.cooling == (1.0, 1.0, 1.0) and cat0.heating == (-1.0, -1.0, -1.0)
        assert resonance_catalogue(0.0, 2.0).cooling == (0.0, -2.0, 2.0)

    @given(st.floats(0.01, 100), st.floats(0, 100))
    def test_spacing(self, nu, omega):
        cat = resonance_catalogue(nu, omega)
        for trip in (cat.cooling, cat.heating):
            assert trip[0] - trip[1] == pytest.approx(omega)
            assert trip[2] - trip[0] == pytest.approx(omega)
        assert cat.delta_plus == cat.cooling[2] and cat.delta_minus == cat.cooling[1]
