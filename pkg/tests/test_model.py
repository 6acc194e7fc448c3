import math

import numpy as np
import pytest
from conftest import make_bounds, simple_dgc

from dyncluster.errors import ConfigurationError, ModelViolation
from dyncluster.model import (
    LocalParams,
    build_rotation,
    covariance,
    dgc_violations,
    params_digest,
    random_dgc,
    reflect,
    sample_point,
    sample_points,
    upper_indices,
)
from dyncluster.stochastics import RandomStream


def givens(d, j, k, angle):
    g = np.eye(d)
    g[j, j] = g[k, k] = math.cos(angle)
    g[j, k] = -math.sin(angle)
    g[k, j] = math.sin(angle)
    return g


def rotation_oracle(theta):
    """Explicit matrix product of full Givens matrices in row-major pair order."""
    d = theta.shape[0]
    r = np.eye(d)
    for j in range(d - 1):
        for k in range(j + 1, d):
            r = r @ givens(d, j, k, theta[j, k])
    return r


def mirror_oracle(value, lo, hi):
    """Mirror step by step; slow but obviously right."""
    flipped = False
    while not lo <= value <= hi:
        value = 2 * lo - value if value < lo else 2 * hi - value
        flipped = True
    return value, flipped


def test_rotation_2d_closed_form():
    a = 0.7
    theta = np.array([[0.0, a], [0.0, 0.0]])
    expected = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    np.testing.assert_allclose(build_rotation(theta), expected, atol=1e-15)


@pytest.mark.parametrize("d", [2, 3, 4, 7])
def test_rotation_matches_givens_product(d):
    rng = np.random.default_rng(d)
    theta = np.triu(rng.uniform(-math.pi, math.pi, (d, d)), 1)
    np.testing.assert_allclose(build_rotation(theta), rotation_oracle(theta), atol=1e-12)


def test_rotation_zero_angles_is_identity():
    np.testing.assert_array_equal(build_rotation(np.zeros((4, 4))), np.eye(4))
    np.testing.assert_array_equal(build_rotation(np.zeros((1, 1))), np.eye(1))


@pytest.mark.parametrize("bad", [
    np.array([[0.0, 0.1], [0.2, 0.0]]),
    np.array([[0.1, 0.0], [0.0, 0.0]]),
    np.zeros((2, 3)),
    np.array([[0.0, np.nan], [0.0, 0.0]]),
])
def test_rotation_rejects_malformed_angles(bad):
    with pytest.raises(ModelViolation):
        build_rotation(bad)


def test_rotation_dimension_mismatch():
    with pytest.raises(ModelViolation):
        build_rotation(np.zeros((3, 3)), d=2)


def test_sample_point_axis_aligned():
    dgc = simple_dgc([1.0, -2.0], [3.0, 0.5])
    x = sample_point(dgc, dgc.rotation(), np.array([1.0, 2.0]))
    np.testing.assert_allclose(x, [4.0, -1.0])


def test_sample_point_rotated_row_convention():
    a = math.pi / 2
    dgc = simple_dgc([0.0, 0.0], [2.0, 1.0], angle=a)
    # row vector [2, 0] times [[c, -s], [s, c]] with c=0, s=1 is [0, -2]
    x = sample_point(dgc, dgc.rotation(), np.array([1.0, 0.0]))
    np.testing.assert_allclose(x, [0.0, -2.0], atol=1e-15)


def test_sample_points_shape_checks():
    dgc = simple_dgc([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(ModelViolation):
        sample_points(dgc.center, dgc.sigma, dgc.rotation(), np.zeros((4, 3)))
    with pytest.raises(ModelViolation):
        sample_point(dgc, dgc.rotation(), np.zeros((1, 2)))


def test_covariance_2d_closed_form():
    a, s1, s2 = math.pi / 4, 7.0, 20.0
    dgc = simple_dgc([0.0, 0.0], [s1, s2], angle=a)
    c, s = math.cos(a), math.sin(a)
    expected = np.array([
        [c * c * s1**2 + s * s * s2**2, -c * s * s1**2 + c * s * s2**2],
        [-c * s * s1**2 + c * s * s2**2, s * s * s1**2 + c * c * s2**2],
    ])
    np.testing.assert_allclose(covariance(dgc), expected, rtol=1e-12)


def test_rotation_cache_follows_theta():
    dgc = simple_dgc([0.0, 0.0], [1.0, 1.0], angle=0.3)
    r1 = dgc.rotation()
    assert dgc.rotation() is r1
    dgc.theta = np.array([[0.0, -0.4], [0.0, 0.0]])
    np.testing.assert_allclose(dgc.rotation(), rotation_oracle(dgc.theta))


@pytest.mark.parametrize("value,expected", [
    (5.0, (5.0, False)),
    (0.0, (0.0, False)),
    (10.0, (10.0, False)),
    (12.0, (8.0, True)),
    (-3.0, (3.0, True)),
    (25.0, (5.0, True)),
    (-21.0, (1.0, True)),
])
def test_reflect_examples(value, expected):
    assert reflect(value, 0.0, 10.0) == expected


@pytest.mark.parametrize("value", [1e3, -1e3, 1234.5, -9876.25, 1e6 + 0.5])
def test_reflect_far_overshoot_matches_mirror_oracle(value):
    got, flipped = reflect(value, -1.0, 3.0)
    want, _ = mirror_oracle(value, -1.0, 3.0)
    assert flipped
    assert -1.0 <= got <= 3.0
    assert got == pytest.approx(want, abs=1e-6)


def test_reflect_rejects_bad_input():
    with pytest.raises(ModelViolation):
        reflect(math.inf, 0.0, 1.0)
    with pytest.raises(ModelViolation):
        reflect(0.5, 1.0, 1.0)


def test_upper_indices_row_major():
    assert upper_indices(3) == [(0, 1), (0, 2), (1, 2)]
    assert upper_indices(1) == []


def test_random_dgc_is_valid(bounds):
    lb, ub = np.full(3, -100.0), np.full(3, 100.0)
    s = RandomStream(1)
    for uid in range(20):
        dgc = random_dgc(3, bounds, lb, ub, LocalParams(), uid, s)
        assert dgc_violations(dgc, bounds, lb, ub) == []
        assert dgc.uid == uid


def test_dgc_violations_reports_problems(bounds):
    lb, ub = np.full(2, -100.0), np.full(2, 100.0)
    dgc = simple_dgc([0.0, 500.0], [0.1, 1.0], weight=9.0)
    dgc.velocity = np.array([1.0, 1.0])
    problems = " ".join(dgc_violations(dgc, bounds, lb, ub))
    for word in ("velocity", "center", "sigma", "weight"):
        assert word in problems
    dgc.theta[1, 0] = 0.1
    assert any("triangular" in p for p in dgc_violations(dgc, bounds, lb, ub))


def test_digest_tracks_parameters():
    a = simple_dgc([0.0, 0.0], [1.0, 1.0])
    b = a.copy()
    assert params_digest([a]) == params_digest([b])
    b.weight = 2.0
    assert params_digest([a]) != params_digest([b])


@pytest.mark.parametrize("kw", [
    dict(w_min=0.0),
    dict(sigma_min=0.0),
    dict(sigma_min=5.0, sigma_max=5.0),
    dict(lb=[0.0] * 4, ub=[0.0] * 4),
    dict(lb=[0.0], ub=[1.0]),
])
def test_bounds_validation(kw):
    with pytest.raises(ConfigurationError):
        make_bounds(**kw)
