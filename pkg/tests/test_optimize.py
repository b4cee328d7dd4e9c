from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import LAMBDA_24, cosine_gain, grid_search_snr, planar_mimo_exhaustive, ula_brute_snr
from rotant.channel import Scenario, WidebandConfig
from rotant.errors import ConfigurationError, InfeasibleError, InvalidParameterError
from rotant.geometry import ArrayLayout, Orientation, RotationConstraint, in_cone, project_to_cone
from rotant.optimize import (
    SensingTask,
    critical_array_size,
    fixed_orientations,
    isac_minecho_bcd,
    maxmin_rate,
    maxmin_sinr_ao,
    mimo_capacity,
    mimo_capacity_bcd,
    min_downlink_power,
    optimal_pointing_miso,
    snr_at,
    ula_snr_asymptote,
    ula_snr_closed_form,
    waterfill,
    waterfill_covariance,
    wideband_sumrate_ao,
)
from rotant.optimize._core import min_norm_combination, simplex_projection
from rotant.optimize.isac import echo_powers, optimize_covariance, project_covariance, rates
from rotant.optimize.multiuser import mmse_sinr, receive_beamformers, zf_sinr
from rotant.optimize.wideband import _rates, _user_powers, allocate
from rotant.radiation import CosinePattern

FC = 2.4e9
P10 = 1e-2  # 10 dBm
N80 = 1e-11  # -80 dBm
ZETA = (LAMBDA_24 / 2) / 15.0
TM = np.pi / 6


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_users(rng, k, lo=30.0, hi=50.0, off_deg=50.0):
    az = rng.uniform(0, 2 * np.pi, k)
    off = np.deg2rad(rng.uniform(0, off_deg, k))
    d = rng.uniform(lo, hi, k)
    return np.stack([np.cos(off), np.sin(off) * np.cos(az), np.sin(off) * np.sin(az)], axis=1) * d[:, None]


class TestWaterfill:
    def test_two_channels(self):
        assert np.allclose(waterfill([1.0, 0.5], 2.0), [1.5, 0.5])

    def test_weak_channel_dropped(self):
        assert np.allclose(waterfill([1.0, 0.25], 1.0), [1.0, 0.0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(1e-4, 1e4), min_size=1, max_size=12), st.floats(1e-3, 1e3))
    def test_budget_and_water_level(self, gains, budget):
        g = np.array(gains)
        p = waterfill(g, budget)
        assert np.all(p >= 0)
        assert np.isclose(p.sum(), budget, rtol=1e-9)
        on = p > 1e-12 * budget
        level = p[on] + 1 / g[on]
        assert np.allclose(level, level[0], rtol=1e-8)
        # inactive channels sit above the water
        assert np.all(1 / g[~on] >= level[0] * (1 - 1e-8))

    def test_equal_singular_values_split_equally(self):
        h = 3.0 * np.eye(3)
        _, p = waterfill_covariance(h, 1.5, 1.0)
        assert np.allclose(p, 0.5)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=8), st.floats(0.1, 10))
    def test_simplex_projection(self, v, total):
        x = simplex_projection(np.array(v), total)
        assert np.all(x >= -1e-12)
        assert np.isclose(x.sum(), total)

    def test_min_norm_of_opposite_pair(self):
        lam = min_norm_combination(np.array([[1.0, 0.0], [-1.0, 0.0]]))
        assert np.allclose(lam, [0.5, 0.5], atol=1e-6)


class TestMiso:
    def scenario(self, n, user, tm=TM):
        return Scenario(FC, ArrayLayout.ula(n, LAMBDA_24 / 2), [user], noise_power=N80, tx_power=P10,
                        pattern=CosinePattern(0.5), constraint=RotationConstraint(tm))

    def test_interior_user_faced_exactly(self):
        s = self.scenario(4, [10.0, 1.0, 0.5])
        r = optimal_pointing_miso(s)
        d = s.users[0] - s.layout.positions
        assert np.allclose(r.orientations.pointing, d / np.linalg.norm(d, axis=1, keepdims=True))

    def test_boundary_user_clamped(self):
        s = self.scenario(3, [1.0, 10.0, 0.0])
        p = optimal_pointing_miso(s).orientations.pointing
        assert np.allclose(p @ [1.0, 0, 0], np.cos(TM))
        assert np.all(p[:, 1] > 0)

    def test_matches_grid_search_at_fig11_parameters(self):
        a = np.deg2rad(75)
        user = [15 * np.cos(a), 15 * np.sin(a), 0.0]
        s = self.scenario(64, user)
        ra = optimal_pointing_miso(s).objective
        grid = grid_search_snr(s.layout.positions, user, TM, 0.5, P10, N80, LAMBDA_24)
        assert ra >= grid * (1 - 1e-9)
        assert 10 * np.log10(ra / grid) < 0.01

    def test_no_random_feasible_sample_beats_it(self):
        rng = np.random.default_rng(3)
        user = np.array([12.0, 6.0, -3.0])
        s = self.scenario(8, user)
        best = optimal_pointing_miso(s).objective
        pos = s.layout.positions
        d = user - pos
        r = np.linalg.norm(d, axis=1)
        f = project_to_cone(rng.standard_normal((10000, 8, 3)).reshape(-1, 3) + [2.0, 0, 0], TM).reshape(10000, 8, 3)
        c = np.einsum("snk,nk->sn", f, d / r[:, None])
        snr = P10 * s.beta0 * np.sum(cosine_gain(c, 0.5) / r ** 2, axis=1) / N80
        assert snr.max() <= best * (1 + 1e-12)

    def test_beats_fixed(self):
        s = self.scenario(16, [10.0, 8.0, 0.0])
        assert optimal_pointing_miso(s).objective > snr_at(s, fixed_orientations(16))


class TestScalingLaw:
    def test_critical_size(self):
        assert critical_array_size(ZETA, TM) == 277

    def test_asymptote_factor(self):
        base = 2 * ZETA * P10 / (np.pi ** 2 * N80)
        # pi/6 + cos(pi/6) = 1.389624 (a quoted 1.389667 does not match the formula)
        assert np.isclose(ula_snr_asymptote(ZETA, TM, P10, N80) / base, 1.389624, rtol=1e-6)

    def test_zero_cone_gives_unit_factor(self):
        base = 2 * ZETA * P10 / (np.pi ** 2 * N80)
        assert np.isclose(ula_snr_asymptote(ZETA, 0.0, P10, N80) / base, 1.0)

    @pytest.mark.parametrize("zeta", [0.0, -1.0])
    def test_nonpositive_zeta_raises(self, zeta):
        with pytest.raises(InvalidParameterError):
            ula_snr_closed_form(8, zeta, TM, P10, N80)
        with pytest.raises(InvalidParameterError):
            critical_array_size(zeta, TM)

    @pytest.mark.parametrize("n", [8, 64, 277, 2048])
    def test_closed_form_tracks_brute_force(self, n):
        brute = ula_brute_snr(n, LAMBDA_24 / 2, 15.0, TM, P10, N80, LAMBDA_24)
        cf = ula_snr_closed_form(n, ZETA, TM, P10, N80)
        assert abs(cf / brute - 1) < 0.02

    def test_closed_form_increasing(self):
        n = np.arange(1, 3000)
        v = ula_snr_closed_form(n, ZETA, TM, P10, N80)
        assert np.all(np.diff(v) > 0)

    def test_brute_force_matches_solver(self):
        n = 32
        s = Scenario(FC, ArrayLayout.ula(n, LAMBDA_24 / 2), [[15.0, 0, 0]], noise_power=N80, tx_power=P10,
                     pattern=CosinePattern(0.5))
        brute = ula_brute_snr(n, LAMBDA_24 / 2, 15.0, TM, P10, N80, LAMBDA_24)
        assert np.isclose(optimal_pointing_miso(s).objective, brute, rtol=1e-9)


def mimo_case(rho=1.0):
    tx = np.array([[0, -0.6, 0], [0, 0.6, 0]])
    rx = np.array([[6, 0.4, 0], [6, 1.9, 0]])
    s = Scenario(FC, ArrayLayout(tx), [[10.0, 0, 0]], noise_power=N80, tx_power=P10, pattern=CosinePattern(rho))
    return s, ArrayLayout(rx)


class TestMimo:
    def test_single_antenna_reduces_to_snr(self):
        s = Scenario(FC, ArrayLayout(np.zeros((1, 3))), [[5.0, 0, 0]], noise_power=N80, tx_power=P10)
        rx = ArrayLayout(np.array([[5.0, 0.5, 0.2]]))
        r = mimo_capacity_bcd(s, rx)
        d = np.linalg.norm(rx.positions[0])
        gmax = 4.0  # default rho = 1/2
        assert np.isclose(r.objective, np.log2(1 + P10 * s.beta0 * gmax ** 2 / d ** 2 / N80), rtol=1e-6)

    @pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
    def test_matches_planar_exhaustive_search(self, rho):
        s, rx = mimo_case(rho)
        best, _, _ = planar_mimo_exhaustive(s.layout.positions, rx.positions, TM, rho, P10, N80, s.wavelength)
        r = mimo_capacity_bcd(s, rx)
        assert r.objective >= best * 0.98
        assert r.objective >= r.trace[0][1]
        assert r.is_monotone()

    def test_capacity_helper_agrees_with_solver(self):
        s, rx = mimo_case()
        r = mimo_capacity_bcd(s, rx)
        c = mimo_capacity(s, rx, r.orientations, r.info["rx_orientations"])
        assert np.isclose(c, r.objective, rtol=1e-9)

    def test_beats_fixed_and_respects_cones(self):
        s, rx = mimo_case()
        r = mimo_capacity_bcd(s, rx)
        fixed_rx = Orientation(np.tile([-1.0, 0, 0], (2, 1)), np.tile([0, 0, 1.0], (2, 1)))
        assert r.objective >= mimo_capacity(s, rx, fixed_orientations(2), fixed_rx)
        assert np.all(in_cone(r.orientations.pointing, TM, tol=1e-9))
        assert np.all(in_cone(-r.info["rx_orientations"].pointing, TM, tol=1e-9))

    def test_covariance_meets_budget(self):
        s, rx = mimo_case()
        cov = mimo_capacity_bcd(s, rx).beamformers
        assert np.isclose(np.trace(cov).real, P10)
        assert np.all(np.linalg.eigvalsh(cov) > -1e-15)


def mu_scenario(rng, k=3, n=(3, 3), rho=1.0, scatter=True, **kw):
    users = random_users(rng, k)
    q = 2 * k if scatter else 0
    sc = np.repeat(users, 2, axis=0) + rng.normal(0, 5, (q, 3)) if scatter else np.zeros((0, 3))
    rcs = 10 * crandn(rng, q) if scatter else np.zeros(0)
    return Scenario(FC, ArrayLayout.upa(*n, LAMBDA_24 / 2), users, sc, rcs, noise_power=N80,
                    pattern=CosinePattern(rho), **kw)


def fd_check(func, h, coef, rng, eps=1e-7):
    """Compare the directional derivative of func at h with 2 Re sum coef * dh."""
    dh = crandn(rng, *h.shape)
    num = (func(h + eps * dh) - func(h - eps * dh)) / (2 * eps)
    ana = 2 * np.real(np.sum(coef * dh))
    return num, ana


class TestMultiuser:
    def test_single_user_equals_miso(self):
        s = Scenario(FC, ArrayLayout.ula(8, LAMBDA_24 / 2), [[10.0, 7.0, 1.0]], noise_power=N80, tx_power=P10)
        r = maxmin_sinr_ao(s)
        assert np.isclose(r.info["min_sinr"], optimal_pointing_miso(s).objective, rtol=1e-6)

    def test_zf_needs_enough_antennas(self, rng):
        s = mu_scenario(rng, k=5, n=(2, 2), scatter=False)
        with pytest.raises(InfeasibleError):
            maxmin_sinr_ao(s, receiver="ZF")
        with pytest.raises(InfeasibleError):
            zf_sinr(crandn(rng, 5, 4), np.ones(5), 1.0)

    def test_unknown_receiver(self, rng):
        with pytest.raises(ConfigurationError):
            maxmin_sinr_ao(mu_scenario(rng, scatter=False), receiver="MRC")

    def test_mirror_symmetry(self):
        users = np.array([[30.0, 12.0, 4.0], [35.0, -8.0, 9.0], [32.0, 3.0, -15.0]])
        lay = ArrayLayout.upa(3, 3, LAMBDA_24 / 2)
        s1 = Scenario(FC, lay, users, noise_power=N80)
        s2 = Scenario(FC, lay, users * [1, -1, 1], noise_power=N80)
        r1, r2 = maxmin_sinr_ao(s1), maxmin_sinr_ao(s2)
        assert abs(r1.objective - r2.objective) <= 1e-6 * abs(r1.objective)

    def test_zf_nulls_interference(self, rng):
        h = crandn(rng, 3, 6)
        w = receive_beamformers(h, np.ones(3), 1.0, "ZF")
        cross = np.abs(h @ w)  # [j, k] = |w_k^T h_j|
        off = cross[~np.eye(3, dtype=bool)]
        assert off.max() <= 1e-9 * cross.max()

    def test_mmse_sinr_matches_combiner(self, rng):
        h = crandn(rng, 3, 5)
        p = np.array([1.0, 2.0, 0.5])
        w = receive_beamformers(h, p, 0.3, "MMSE")
        r = np.abs(h @ w) ** 2 * p[:, None]
        direct = np.diag(r) / (r.sum(axis=0) - np.diag(r) + 0.3)
        assert np.allclose(mmse_sinr(h, p, 0.3), direct, rtol=1e-9)

    @pytest.mark.parametrize("receiver", ["MMSE", "ZF"])
    def test_sinr_gradients(self, rng, receiver):
        h = crandn(rng, 3, 5)
        p = np.array([1.0, 2.0, 0.5])
        fn = mmse_sinr if receiver == "MMSE" else zf_sinr
        _, coef = fn(h, p, 0.3, with_coef=True)
        for i in range(3):
            num, ana = fd_check(lambda x: fn(x, p, 0.3)[i], h, coef[i], rng)
            assert np.isclose(num, ana, rtol=1e-5, atol=1e-8)

    def test_zf_never_beats_mmse(self, rng):
        s = mu_scenario(rng)
        zf = maxmin_sinr_ao(s, receiver="ZF", max_iter=10)
        assert maxmin_rate(s, zf.orientations, "MMSE") >= zf.objective - 1e-12

    @pytest.mark.parametrize("seed", range(3))
    def test_monotone_and_feasible(self, seed):
        s = mu_scenario(np.random.default_rng(seed))
        r = maxmin_sinr_ao(s, max_iter=30)
        assert r.is_monotone()
        assert np.all(in_cone(r.orientations.pointing, TM, tol=1e-9))

    def test_tied_shares_one_pointing(self, rng):
        r = maxmin_sinr_ao(mu_scenario(rng), tied=True, max_iter=20)
        p = r.orientations.pointing
        assert np.allclose(p, p[0])


class TestWideband:
    def test_single_user_gets_every_subcarrier(self, rng):
        s = mu_scenario(rng, k=1)
        r = wideband_sumrate_ao(s, WidebandConfig(40e6, 16, 6), max_iter=5)
        assert np.all(r.beamformers["assignment"] == 0)
        assert np.isclose(r.beamformers["powers"].sum(), s.user_powers[0])

    def test_flat_channel_equal_powers(self):
        gains = np.full((1, 8), 3.0)
        assign, p, val = allocate(gains, np.array([2.0]), 8.0)
        assert np.allclose(p, 0.25)
        assert np.isclose(val, 8 * np.log2(1 + 0.75) / 8)

    def test_greedy_moves_never_hurt(self, rng):
        gains = rng.exponential(1.0, (3, 12))
        budgets = np.array([1.0, 2.0, 0.5])
        a0 = np.argmax(gains, axis=0)
        assign, p, val = allocate(gains, budgets, 12.0)
        # value of the strongest-user assignment before any move
        start = _rates(gains, a0, _user_powers(gains, a0, budgets), 12.0)
        assert val >= start
        for k in range(3):
            assert p[assign == k].sum() <= budgets[k] * (1 + 1e-12)

    def test_constraints_and_monotone(self, rng):
        s = mu_scenario(rng, k=3, user_powers=[1e-2, 2e-2, 5e-3])
        r = wideband_sumrate_ao(s, WidebandConfig(40e6, 16, 6), max_iter=20)
        a, p = r.beamformers["assignment"], r.beamformers["powers"]
        assert r.is_monotone()
        assert np.all(p >= 0)
        for k in range(3):
            assert p[a == k].sum() <= s.user_powers[k] * (1 + 1e-9)
        assert np.isclose(r.info["user_rates"].sum(), r.objective, rtol=1e-9)

    def test_optimized_beats_fixed(self, rng):
        s = mu_scenario(rng, k=2)
        wb = WidebandConfig(40e6, 16, 6)
        ra = wideband_sumrate_ao(s, wb, max_iter=20)
        fx = wideband_sumrate_ao(s, wb, init=fixed_orientations(s.n_antennas), optimize_orientation=False)
        assert ra.objective >= fx.objective


def isac_case(rate_min=2.0, users=True, **kw):
    lay = ArrayLayout.upa(3, 3, LAMBDA_24 / 2)
    u = np.array([[50.0, -30.0, 0.0], [50.0, 20.0, 0.0]]) if users else np.zeros((0, 3))
    s = Scenario(FC, lay, u, noise_power=N80)
    center = [40 * np.sin(np.pi / 3), 40 * np.cos(np.pi / 3), -10.0]
    return s, SensingTask(center, 5.0, 6, rate_min=rate_min, user_noise=1e-9, **kw)


class TestIsac:
    def test_isotropic_echo(self, rng):
        h = crandn(rng, 4, 6)
        cov = 0.5 / 6 * np.eye(6)
        e = echo_powers(h, cov, 2.0)
        nrm = np.sum(np.abs(h) ** 2, axis=1)
        assert np.allclose(e, 4.0 * nrm * 0.5 / 6 * nrm)

    def test_single_target_beam(self, rng):
        h = crandn(rng, 1, 5)
        cov, val = optimize_covariance(h, 1.0, 2.0)
        nrm = np.sum(np.abs(h) ** 2)
        assert np.isclose(val, 2.0 * nrm ** 2, rtol=1e-4)

    def test_covariance_projection(self, rng):
        a = crandn(rng, 4, 4)
        c = project_covariance(a + a.conj().T, 1.0)
        assert np.linalg.eigvalsh(c).min() > -1e-12
        assert np.trace(c).real <= 1.0 + 1e-12

    def test_no_users_single_point_faces_target(self):
        s, _ = isac_case(users=False)
        task = SensingTask([30.0, 10.0, -5.0], 0.0, 1)
        r = isac_minecho_bcd(s, task)
        d = task.center - s.layout.positions
        want = project_to_cone(d, TM)
        assert np.allclose(r.orientations.pointing, want, atol=1e-3)

    def test_min_power_meets_targets_exactly(self, rng):
        h = crandn(rng, 3, 5)
        gamma, noise = 3.0, 0.2
        p, w = min_downlink_power(h, gamma, noise)
        assert np.isclose(np.sum(np.abs(w) ** 2), p)
        assert np.allclose(rates(h, w, noise), np.log2(1 + gamma), rtol=1e-8)

    def test_min_power_gradient(self, rng):
        h = crandn(rng, 3, 5)
        _, _, coef = min_downlink_power(h, 3.0, 0.2, with_grad=True)
        num, ana = fd_check(lambda x: min_downlink_power(x, 3.0, 0.2)[0], h, coef, rng, eps=1e-6)
        assert np.isclose(num, ana, rtol=1e-4)

    def test_min_power_too_many_users(self, rng):
        p, w = min_downlink_power(crandn(rng, 4, 3), 1.0, 1.0)
        assert p == np.inf and w is None

    def test_huge_floor_is_infeasible(self):
        s, t = isac_case(rate_min=40.0)
        r = isac_minecho_bcd(s, t)
        assert r.status == "infeasible"
        assert np.isnan(r.objective)

    def test_task_validation(self):
        with pytest.raises(ConfigurationError):
            SensingTask([0, 0, 0], 1.0, 2, points=[[0, 0, 0], [3.0, 0, 0]])
        with pytest.raises(ConfigurationError):
            SensingTask([0, 0, 0], 1.0, 3, points=[[0, 0, 0], [0.5, 0, 0]])
        with pytest.raises(InvalidParameterError):
            SensingTask([0, 0, 0], -1.0)
        with pytest.raises(InvalidParameterError):
            SensingTask([0, 0, 0], 1.0, rate_min=-1.0)

    def test_solution_feasible_monotone_and_ordered(self):
        s, t = isac_case(rate_min=4.0)
        fx = isac_minecho_bcd(s, t, init=fixed_orientations(9), optimize_orientation=False)
        aw = isac_minecho_bcd(s, t, tied=True, max_iter=30)
        ra = isac_minecho_bcd(s, t, warm_start=aw, max_iter=30)
        assert ra.is_monotone() and aw.is_monotone()
        assert ra.info["comm_power"] <= t.power_comm * (1 + 1e-9)
        assert np.all(ra.info["rates"] >= t.rate_min - 1e-6)
        assert np.trace(ra.beamformers["covariance"]).real <= t.power_sense * (1 + 1e-9)
        assert ra.objective >= aw.objective
        if fx.status != "infeasible":
            assert aw.objective >= fx.objective
