import math

import numpy as np
import pytest

from wrenchmap.errors import DegenerateWrench
from wrenchmap.geometry import (
    Wrench,
    clip_alpha_to_box,
    line_of_action,
    moment_residual,
    point_in_double_cone,
    predict_moment,
)


def test_predict_moment_examples():
    assert predict_moment((0.2, 0.1), 0.0, 2.0) == pytest.approx(0.4)
    assert predict_moment((0.0, 0.0), 3.0, -1.0) == 0.0
    assert predict_moment((0.15, 0.10), 1.0, 1.0) == pytest.approx(0.05)


def test_predict_moment_is_bilinear():
    rng = np.random.default_rng(1)
    for _ in range(200):
        c = rng.normal(size=2)
        fx, fy = rng.normal(size=2)
        a = rng.normal()
        assert predict_moment(a * c, fx, fy) == pytest.approx(
            a * predict_moment(c, fx, fy), rel=1e-12, abs=1e-15
        )


def test_line_of_action_examples():
    line = line_of_action(Wrench(0.0, 0.0, 2.0, 0.4))
    np.testing.assert_allclose(line.base, [0.2, 0.0], atol=1e-15)
    np.testing.assert_allclose(line.direction, [0.0, 1.0], atol=1e-15)

    line = line_of_action(Wrench(0.0, 2.0, 0.0, -0.2))
    np.testing.assert_allclose(line.base, [0.0, 0.1], atol=1e-15)
    np.testing.assert_allclose(line.direction, [1.0, 0.0], atol=1e-15)


def test_line_of_action_zero_force_raises():
    with pytest.raises(DegenerateWrench):
        line_of_action(Wrench(0.0, 0.0, 0.0, 0.1))


def test_moment_residual_examples():
    w = Wrench(0.0, 0.0, 2.0, 0.4)
    assert moment_residual((0.2, 0.0), w) == 0.0
    assert moment_residual((0.3, 0.0), w) == pytest.approx(-0.2)
    # invariance along the line direction
    assert moment_residual((0.2, 5.0), w) == 0.0


def test_residual_zero_along_line():
    # every point base + alpha * dir satisfies the moment equation
    rng = np.random.default_rng(42)
    for _ in range(1000):
        fx, fy = rng.uniform(-5, 5, 2)
        if math.hypot(fx, fy) < 1e-3:
            continue
        w = Wrench(0.0, fx, fy, rng.uniform(-1, 1))
        line = line_of_action(w)
        alpha = rng.uniform(-1, 1)
        assert abs(moment_residual(line.point_at(alpha), w)) < 1e-10


def test_double_cone_examples():
    apex = (0.15, 0.10)
    axis = (0.0, 1.0)
    assert point_in_double_cone((0.15, 0.14), apex, axis, 0.108)
    assert point_in_double_cone((0.15, 0.06), apex, axis, 0.108)  # opposite half
    assert not point_in_double_cone((0.19, 0.10), apex, axis, 0.108)
    assert point_in_double_cone(apex, apex, axis, 0.108)  # apex inside


def test_double_cone_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(500):
        apex = rng.normal(size=2)
        axis = rng.normal(size=2)
        if np.linalg.norm(axis) < 1e-6:
            continue
        theta = rng.uniform(0.01, 1.5)
        p = rng.normal(size=2)
        mirrored = 2 * apex - p
        assert point_in_double_cone(p, apex, axis, theta) == point_in_double_cone(
            mirrored, apex, axis, theta
        )


def test_double_cone_matches_arccos_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(10_000):
        apex = rng.normal(size=2)
        axis = rng.normal(size=2)
        if np.linalg.norm(axis) < 1e-6:
            continue
        theta = rng.uniform(0.01, 1.5)
        p = rng.normal(size=2)
        r = np.asarray(p) - apex
        rn = np.linalg.norm(r)
        if rn == 0.0:
            expected = True
        else:
            cosang = abs(float(np.dot(r, axis))) / (rn * np.linalg.norm(axis))
            expected = math.acos(min(1.0, cosang)) <= theta
        assert point_in_double_cone(p, apex, axis, theta) == expected


def test_double_cone_rejects_bad_arguments():
    with pytest.raises(ValueError):
        point_in_double_cone((0, 0), (0, 0), (0, 0), 0.1)
    with pytest.raises(ValueError):
        point_in_double_cone((0, 0), (0, 0), (0, 1), math.pi / 2)


def test_clip_alpha_to_box():
    line = line_of_action(Wrench(0.0, 0.0, 2.0, 0.4))  # vertical through x=0.2
    span = clip_alpha_to_box(line, (0.0, -0.05), (0.4, 0.35))
    assert span is not None
    lo, hi = span
    np.testing.assert_allclose(line.point_at(lo)[1], -0.05, atol=1e-12)
    np.testing.assert_allclose(line.point_at(hi)[1], 0.35, atol=1e-12)
    # a line outside the box misses
    far = line_of_action(Wrench(0.0, 0.0, 2.0, 2.0))  # x = 1.0
    assert clip_alpha_to_box(far, (0.0, -0.05), (0.4, 0.35)) is None
