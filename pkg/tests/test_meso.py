"""Lattice ODE tier: flux form, equilibria, conservation, stability guard."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pedflow.meso import MesoState, MesoStabilityError, integrate_meso, meso_flux_pair, meso_rhs
from pedflow.model import VelocityParams, flux_f, flux_g

V = VelocityParams(1.0, 0.5, 0.5, 0.25)
V8 = VelocityParams(0.8, 0.4, 0.4, 0.2)

density_arrays = arrays(float, 16, elements=st.floats(0.0, 1.0))


class TestFluxPair:
    def test_empty_cell_no_flux(self):
        st_ = MesoState(np.zeros(8), np.full(8, 0.5), 1.0)
        assert meso_flux_pair(st_, 2, V)[0] == 0.0

    def test_free_block_face(self):
        rp = np.zeros(8)
        rp[2] = 1.0
        st_ = MesoState(rp, np.zeros(8), 1.0)
        assert meso_flux_pair(st_, 2, V)[0] == V.c0

    def test_uniform_state_factorizes(self):
        # on a uniform state the pair flux equals f(density) * g(opposite)
        a, b = 0.3, 0.4
        st_ = MesoState(np.full(8, a), np.full(8, b), 1.0)
        fp, fm = meso_flux_pair(st_, 5, V)
        assert fp == pytest.approx(flux_f(a) * flux_g(b, V), abs=1e-15)
        assert fm == pytest.approx(flux_f(b) * flux_g(a, V), abs=1e-15)


class TestRhs:
    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_uniform_states_are_equilibria(self, a, b):
        st_ = MesoState(np.full(12, a), np.full(12, b), 0.7)
        dp, dm = meso_rhs(st_, V)
        assert np.all(dp == 0.0) and np.all(dm == 0.0)

    def test_single_cell_pulse(self):
        rp = np.zeros(6)
        rp[0] = 1.0
        dp, _ = meso_rhs(MesoState(rp, np.zeros(6), 1.0), V)
        assert dp[0] == -V.c0 and dp[1] == V.c0 and np.all(dp[2:] == 0.0)

    @given(density_arrays, density_arrays)
    def test_total_mass_rate_vanishes(self, rp, rm):
        dp, dm = meso_rhs(MesoState(rp, rm, 0.5), V)
        assert abs(dp.sum()) <= 1e-13 and abs(dm.sum()) <= 1e-13

    @given(density_arrays, density_arrays)
    def test_mirror_symmetry_exact(self, rp, rm):
        state = MesoState(rp, rm, 0.5)
        mirror = MesoState(rm[::-1].copy(), rp[::-1].copy(), 0.5)
        dp, dm = meso_rhs(state, V)
        mdp, mdm = meso_rhs(mirror, V)
        assert np.array_equal(mdp, dm[::-1])
        assert np.array_equal(mdm, dp[::-1])


class TestIntegrate:
    def test_zero_horizon(self):
        st_ = MesoState(np.full(8, 0.2), np.zeros(8), 1.0)
        snaps = integrate_meso(st_, V, 0.0, snapshot_times=(0.0,))
        assert len(snaps) == 1 and snaps[0][0] == 0.0

    def test_uniform_stays_uniform(self):
        st_ = MesoState(np.full(8, 0.4), np.full(8, 0.1), 1.0)
        snaps = integrate_meso(st_, V, 5.0, snapshot_times=(2.5, 5.0))
        for _, s in snaps:
            assert np.all(s.rho_plus == 0.4) and np.all(s.rho_minus == 0.1)

    def test_mass_conservation(self):
        rng = np.random.default_rng(3)
        st_ = MesoState(rng.random(64) * 0.8, rng.random(64) * 0.8, 0.25)
        m0 = st_.mass()
        snaps = integrate_meso(st_, V8, 10.0, snapshot_times=(10.0,))
        m1 = snaps[-1][1].mass()
        steps = 10.0 / (0.25 * 0.25 / 0.8)
        assert abs(m1[0] - m0[0]) <= 1e-12 * m0[0] * steps
        assert abs(m1[1] - m0[1]) <= 1e-12 * m0[1] * steps

    def test_escape_raises_with_location(self):
        rp = np.zeros(8)
        rp[3] = 1.0
        st_ = MesoState(rp, np.zeros(8), 1.0)
        # dt c0 / h = 1.5: the pulse cell goes negative on the first step
        with pytest.raises(MesoStabilityError) as exc:
            integrate_meso(st_, V, 3.0, dt=1.5, snapshot_times=(3.0,))
        assert exc.value.cell == 3
        assert exc.value.time == pytest.approx(1.5)

    def test_default_step_keeps_box_on_hard_profiles(self):
        # quarter-CFL forward Euler stays inside [0,1] for packed blocks
        rp = np.zeros(60)
        rm = np.zeros(60)
        rp[5:15] = 1.0
        rm[45:55] = 1.0
        snaps = integrate_meso(MesoState(rp, rm, 0.2), V8, 8.0, snapshot_times=(8.0,))
        out = snaps[-1][1]
        for rho in (out.rho_plus, out.rho_minus):
            assert rho.min() >= -1e-10 and rho.max() <= 1.0 + 1e-10

    def test_snapshot_floor_alignment(self):
        st_ = MesoState(np.full(8, 0.3), np.zeros(8), 1.0)
        snaps = integrate_meso(st_, V, 1.0, dt=0.3, snapshot_times=(0.65, 1.0))
        # last step with time <= request: floor(0.65/0.3) = 2, floor(1.0/0.3) = 3
        assert snaps[0][0] == pytest.approx(0.6)
        assert snaps[1][0] == pytest.approx(0.9)
