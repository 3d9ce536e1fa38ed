import math

import numpy as np
import pytest

from yukawa_mc.domains import Ball, Box, FreeSpace, HalfSpace
from yukawa_mc.rng import RngStream
from yukawa_mc.sampling import (
    WalkConfig,
    duffin_path_to_exit,
    killed_path_to_exit,
    simulate_duffin,
    simulate_steps,
    simulate_wos,
    step_path_to_exit,
    wos_path_to_exit,
)
from yukawa_mc.specfun import psi

from conftest import PSI_3_1

ball3 = Ball((0.0, 0.0, 0.0), 1.0)
coarse = WalkConfig(step_h=2.5e-3, bridge_correction=True)


class TestWalkConfig:
    def test_defaults_scale_with_domain(self):
        cfg = WalkConfig().resolve(Ball((0.0, 0.0), 2.0))
        assert cfg.step_h == pytest.approx(4e-4) and cfg.eps_shell == pytest.approx(2e-4)

    @pytest.mark.parametrize("kw", [{"mu": -1.0}, {"step_h": 0.0}, {"eps_shell": -1.0}, {"max_steps": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            WalkConfig(**kw)

    def test_shell_must_be_below_scale(self):
        with pytest.raises(ValueError):
            WalkConfig(eps_shell=1.0).resolve(ball3)

    def test_round_trip(self):
        cfg = WalkConfig(mu=1.5, step_h=1e-3, bridge_correction=True)
        assert WalkConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ValueError):
            WalkConfig.from_dict({"stepsize": 1.0})


class TestStepper:
    def test_start_next_to_boundary(self):
        h = HalfSpace(3, 0.0, 3)
        b = simulate_steps(h, (0.0, 0.0, 1e-6), WalkConfig(step_h=1e-4), RngStream(1), 2000)
        # a 1-d walk from the face almost never stays out for 10^6 steps
        assert b.truncation_fraction < 0.005
        assert np.median(b.times) <= 2e-4
        assert np.all(b.points[b.landed, 2] == 0.0)

    def test_unit_weight_without_killing(self):
        b = simulate_steps(ball3, (0.3, 0.1, 0.0), coarse, RngStream(2), 5000)
        assert np.all(b.weights[b.status == 0] == 1.0)

    def test_mean_exit_time_disk(self):
        # E[tau] = (r^2 - |x|^2) / n; bridge correction removes the grid overshoot
        d = Ball((0.0, 0.0), 1.0)
        b = simulate_steps(d, (0.0, 0.0), WalkConfig(step_h=1e-3, bridge_correction=True), RngStream(3), 40_000)
        assert abs(b.times.mean() - 0.5) < 0.01

    def test_mean_exit_time_fine_step(self):
        d = Ball((0.0, 0.0), 1.0)
        b = simulate_steps(d, (0.6, 0.0), WalkConfig(step_h=1e-4), RngStream(4), 4000)
        se = b.times.std(ddof=1) / math.sqrt(len(b))
        assert abs(b.times.mean() - 0.32) < 0.015 + 3 * se

    def test_exit_points_on_boundary(self):
        for d, x in [(ball3, (0.5, 0.0, 0.0)), (Box((0.0, 0.0), (2.0, 1.0)), (0.3, 0.9)), (HalfSpace(1, 0.0, 2), (0.2, 0.0))]:
            for bridge in (False, True):
                b = simulate_steps(d, x, WalkConfig(step_h=1e-3, bridge_correction=bridge, max_steps=10**6), RngStream(5), 2000)
                pts = b.points[b.landed]
                assert all(d.on_boundary(y) for y in pts)

    def test_discount_weight(self):
        b = simulate_steps(ball3, (0.0, 0.0, 0.0), coarse.with_mu(1.3), RngStream(6), 200)
        assert np.allclose(b.weights, np.exp(-0.5 * 1.3**2 * b.times), rtol=1e-15, atol=0)

    def test_truncation(self):
        s = step_path_to_exit(RngStream(7), ball3, (0.0, 0.0, 0.0), WalkConfig(step_h=1e-6, max_steps=5))
        assert s.status == "truncated" and s.weight == 0.0 and s.steps == 5
        assert ball3.contains(s.exit_point)

    def test_free_space_runs_to_horizon(self):
        b = simulate_steps(FreeSpace(2), (0.0, 0.0), WalkConfig(step_h=0.1, max_steps=10), RngStream(8), 10)
        assert np.all(b.status == 2) and np.allclose(b.times, 1.0)

    def test_start_outside(self):
        with pytest.raises(ValueError):
            step_path_to_exit(RngStream(0), ball3, (1.0, 0.0, 0.0), coarse)

    def test_deterministic_and_chunk_independent(self):
        a = simulate_steps(ball3, (0.1, 0.0, 0.0), coarse.with_mu(1.0), RngStream(9, 100), 50)
        b = simulate_steps(ball3, (0.1, 0.0, 0.0), coarse.with_mu(1.0), RngStream(9, 100), 50)
        assert np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)
        single = step_path_to_exit(RngStream(9, 117), ball3, (0.1, 0.0, 0.0), coarse.with_mu(1.0))
        assert np.array_equal(single.exit_point, a.points[17]) and single.exit_time == a.times[17]

    def test_path_shared_across_mu(self):
        a = simulate_steps(ball3, (0.2, 0.0, 0.0), coarse.with_mu(0.5), RngStream(10), 100)
        b = simulate_steps(ball3, (0.2, 0.0, 0.0), coarse.with_mu(2.0), RngStream(10), 100)
        assert np.array_equal(a.points, b.points) and np.all(b.weights <= a.weights)


class TestKilled:
    def test_weights_are_survival_indicators(self):
        b = simulate_steps(ball3, (0.0, 0.0, 0.0), coarse.with_mu(2.0), RngStream(11), 20_000, mode="killed")
        assert set(np.unique(b.weights)) <= {0.0, 1.0}
        assert np.array_equal(b.weights == 0.0, b.status == 1)
        assert abs(b.weights.mean() - psi(3, 2.0)) < 4 * math.sqrt(0.25 / len(b))

    def test_single_path(self):
        s = killed_path_to_exit(RngStream(12), ball3, (0.0, 0.0, 0.0), coarse.with_mu(1.0))
        assert s.status in ("exited", "killed") and ball3.on_boundary(s.exit_point)


class TestWalkOnSpheres:
    def test_centre_one_jump(self):
        cfg = WalkConfig(mu=1.7, eps_shell=1e-3)
        s = wos_path_to_exit(RngStream(0), Ball((1.0, 2.0, 3.0), 2.0), (1.0, 2.0, 3.0), cfg)
        assert s.steps == 1 and s.weight == psi(3, 3.4) and s.exit_time is None

    def test_unit_weight_at_zero_mu(self):
        b = simulate_wos(Box((0.0, 0.0), (2.0, 1.0)), (0.4, 0.4), WalkConfig(), RngStream(1), 2000)
        assert np.all(b.weights == 1.0) and b.truncation_fraction == 0.0
        assert np.all(np.isnan(b.times))

    def test_off_centre_mean(self):
        b = simulate_wos(ball3, (0.0, 0.0, 0.0), WalkConfig(mu=1.0), RngStream(2), 1000)
        assert np.all(b.weights == PSI_3_1)

    def test_weights_in_unit_interval(self):
        b = simulate_wos(ball3, (0.4, 0.3, 0.0), WalkConfig(mu=3.0), RngStream(3), 5000)
        assert np.all((b.weights > 0.0) & (b.weights <= 1.0))
        assert all(ball3.on_boundary(y) for y in b.points[:200])

    def test_truncated(self):
        s = wos_path_to_exit(RngStream(4), ball3, (0.5, 0.0, 0.0), WalkConfig(mu=1.0, eps_shell=1e-12, max_steps=2))
        assert s.status == "truncated" and s.weight == 0.0

    def test_free_space_rejected(self):
        with pytest.raises(ValueError):
            simulate_wos(FreeSpace(2), (0.0, 0.0), WalkConfig(eps_shell=1e-3), RngStream(0), 2)


class TestDuffin:
    def test_weights_in_unit_interval(self):
        b = simulate_duffin(ball3, (0.2, 0.0, 0.0), coarse.with_mu(1.0), RngStream(5), 5000)
        assert np.all((b.weights >= 0.0) & (b.weights <= 1.0))
        assert np.all(b.status == 0)

    def test_narrow_strip_kills_most_paths(self):
        b = simulate_duffin(ball3, (0.0, 0.0, 0.0), WalkConfig(mu=40.0, step_h=1e-4, bridge_correction=True), RngStream(6), 2000)
        assert np.mean(b.weights == 0.0) > 0.99

    def test_wide_strip_keeps_weights_near_one(self):
        b = simulate_duffin(ball3, (0.0, 0.0, 0.0), coarse.with_mu(0.01), RngStream(7), 2000)
        assert b.weights.min() > 0.99

    def test_exit_points_on_boundary_even_after_escape(self):
        b = simulate_duffin(ball3, (0.0, 0.0, 0.0), coarse.with_mu(5.0), RngStream(8), 500)
        assert np.any(b.weights == 0.0)
        assert all(ball3.on_boundary(y) for y in b.points)

    def test_needs_positive_mu(self):
        with pytest.raises(ValueError):
            duffin_path_to_exit(RngStream(0), ball3, (0.0, 0.0, 0.0), coarse)

    def test_mean_weight_matches_psi(self):
        b = simulate_duffin(ball3, (0.0, 0.0, 0.0), coarse.with_mu(1.0), RngStream(9), 40_000)
        se = b.weights.std(ddof=1) / math.sqrt(len(b))
        assert abs(b.weights.mean() - PSI_3_1) < 3 * se
