import math

import numpy as np
import pytest

from wrenchmap.errors import OutOfDomain
from wrenchmap.simulator import (
    TOOL_KINDS,
    ForceScript,
    ToolShape,
    simulate,
    surface_height,
    surface_normal_angle,
)


class TestSurfaceHeight:
    def test_straight_is_constant(self):
        tool = ToolShape(kind="straight")
        assert surface_height(tool, 0.2) == pytest.approx(0.10)

    def test_wavy_quarter_period(self):
        tool = ToolShape(kind="wavy")
        assert surface_height(tool, 0.15) == pytest.approx(0.10 + 0.02 * math.sin(math.pi / 2))

    def test_outside_domain_raises(self):
        with pytest.raises(OutOfDomain):
            surface_height(ToolShape(kind="straight"), 0.05)

    def test_all_kinds_fit_default_grid(self):
        for kind in TOOL_KINDS:
            tool = ToolShape(kind=kind)
            xs = np.linspace(tool.x_min, tool.x_max, 2001)
            hs = [surface_height(tool, x) for x in xs]
            assert min(hs) > -0.05 and max(hs) < 0.35

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            ToolShape(kind="spoon")


class TestNormalAngle:
    def test_flat_surface_points_up(self):
        assert surface_normal_angle(ToolShape(kind="straight"), 0.2) == 0.0

    def test_known_slopes_tilt_the_normal(self):
        # angular tool: h' = +0.5 left of the peak, -0.5 right of it
        tool = ToolShape(kind="angular")
        assert surface_normal_angle(tool, 0.15) == pytest.approx(math.atan2(-0.5, 1.0))
        assert surface_normal_angle(tool, 0.25) == pytest.approx(math.atan2(0.5, 1.0))

    def test_kink_uses_mean_of_one_sided_normals(self):
        angle = surface_normal_angle(ToolShape(kind="angular"), 0.2)
        left = math.atan2(-0.5, 1.0)
        right = math.atan2(0.5, 1.0)
        assert angle == pytest.approx(0.5 * (left + right))

    def test_matches_numeric_slope(self):
        rng = np.random.default_rng(31)
        for kind in TOOL_KINDS:
            tool = ToolShape(kind=kind)
            for _ in range(50):
                x = rng.uniform(tool.x_min + 1e-4, tool.x_max - 1e-4)
                if kind == "angular" and abs(x - 0.2) < 1e-3:
                    continue
                eps = 1e-7
                slope = (surface_height(tool, x + eps) - surface_height(tool, x - eps)) / (2 * eps)
                assert surface_normal_angle(tool, x) == pytest.approx(
                    math.atan2(-slope, 1.0), abs=1e-5
                )


class TestSimulate:
    def test_row_count(self):
        sim = simulate(ToolShape(kind="straight"), ForceScript(seed=1))
        assert len(sim) == 2000

    def test_theta0_reached_at_quarter_period(self):
        # at t = 0.125 s the sinusoid peaks: theta_f - theta_perp = theta0
        sim = simulate(ToolShape(kind="straight"), ForceScript(seed=2, dt=0.005))
        k = 25
        assert math.isclose(sim.t[k], 0.125, abs_tol=1e-12)
        theta_f = math.atan2(sim.fx[k], sim.fy[k])
        assert theta_f - sim.theta_perp[k] == pytest.approx(math.pi / 6, abs=1e-9)

    def test_moment_consistency_exact_without_noise(self):
        for kind in TOOL_KINDS:
            sim = simulate(ToolShape(kind=kind), ForceScript(seed=3))
            predicted = sim.cx * sim.fy - sim.cy * sim.fx
            assert np.array_equal(predicted, sim.mz)

    def test_amplitudes_inside_range(self):
        sim = simulate(ToolShape(kind="arch"), ForceScript(seed=4))
        amp = np.hypot(sim.fx, sim.fy)
        assert amp.min() >= 1.0 and amp.max() <= 3.0

    def test_contact_on_surface(self):
        tool = ToolShape(kind="wavy")
        sim = simulate(tool, ForceScript(seed=5))
        for k in range(0, len(sim), 97):
            assert sim.cy[k] == surface_height(tool, sim.cx[k])

    def test_force_within_friction_cone(self):
        for kind in TOOL_KINDS:
            sim = simulate(ToolShape(kind=kind), ForceScript(seed=6))
            theta_f = np.arctan2(sim.fx, sim.fy)
            misalign = np.abs(theta_f - sim.theta_perp)
            assert misalign.max() <= math.pi / 6 + 1e-9

    def test_contact_and_direction_redraw_each_hold(self):
        sim = simulate(ToolShape(kind="straight"), ForceScript(seed=7))
        holds = sim.cx.reshape(20, 100)
        assert all(len(np.unique(h)) == 1 for h in holds)
        assert len(np.unique(holds[:, 0])) > 10

    def test_post_fluctuation_direction_constant_within_hold(self):
        sim = simulate(ToolShape(kind="straight"), ForceScript(seed=8))
        theta_f = np.arctan2(sim.fx, sim.fy)
        post = theta_f[1000:].reshape(10, 100)
        for h in post:
            np.testing.assert_allclose(h, h[0], atol=1e-12)

    def test_deterministic(self):
        a = simulate(ToolShape(kind="knife"), ForceScript(seed=9))
        b = simulate(ToolShape(kind="knife"), ForceScript(seed=9))
        assert np.array_equal(a.fx, b.fx)
        assert np.array_equal(a.mz, b.mz)
        assert np.array_equal(a.cx, b.cx)
        c = simulate(ToolShape(kind="knife"), ForceScript(seed=10))
        assert not np.array_equal(a.cx, c.cx)

    def test_gaps_release_contact(self):
        script = ForceScript(seed=11, gap=0.2)
        sim = simulate(ToolShape(kind="straight"), script)
        # first hold has no gap, later holds start with gap_s of zero force
        assert np.hypot(sim.fx[0], sim.fy[0]) >= 1.0
        for h in (1, 7, 13):
            sl = slice(h * 100 + 1, h * 100 + 19)  # one-sample slack at edges
            assert not sim.fx[sl].any() and not sim.fy[sl].any()
            assert np.isnan(sim.cx[sl]).all()
            after = slice(h * 100 + 22, (h + 1) * 100)
            assert (np.hypot(sim.fx[after], sim.fy[after]) >= 1.0).all()

    def test_noise_perturbs_moment(self):
        clean = simulate(ToolShape(kind="straight"), ForceScript(seed=12))
        noisy = simulate(
            ToolShape(kind="straight"),
            ForceScript(seed=12, noise_sigma_f=0.01, noise_sigma_m=1e-4),
        )
        assert not np.array_equal(clean.mz, noisy.mz)
        # residual ~ moment noise plus the lever arm acting on force noise
        resid = noisy.mz - (noisy.cx * noisy.fy - noisy.cy * noisy.fx)
        assert 0 < np.abs(resid).mean() < 1e-2

    def test_theta0_zero_keeps_force_on_normal_during_fluctuation(self):
        sim = simulate(ToolShape(kind="arch"), ForceScript(seed=13, theta0=0.0))
        theta_f = np.arctan2(sim.fx[:1000], sim.fy[:1000])
        np.testing.assert_allclose(theta_f, sim.theta_perp[:1000], atol=1e-12)
