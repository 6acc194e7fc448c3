import math

import numpy as np
import pytest
from conftest import make_bounds, simple_dgc

from dyncluster.local import apply_local_changes, drift_scalar, shift_center, update_velocity
from dyncluster.stochastics import RandomStream


def test_update_velocity_rho_zero_is_fresh_direction():
    a, b = RandomStream(3, (1,)), RandomStream(3, (1,))
    v = np.array([1.0, 0.0, 0.0])
    out = update_velocity(v, 0.0, a)
    np.testing.assert_allclose(out, b.unit_vector(3), atol=1e-15)


@pytest.mark.parametrize("rho", [0.0, 0.3, 0.5, 0.9, 0.999])
def test_update_velocity_unit_norm(rho, stream):
    v = stream.unit_vector(4)
    for _ in range(200):
        v = update_velocity(v, rho, stream)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12


def test_update_velocity_blend_oracle():
    a, b = RandomStream(8, (2,)), RandomStream(8, (2,))
    v = np.array([0.6, 0.8])
    out = update_velocity(v, 0.7, a)
    blend = 0.3 * b.unit_vector(2) + 0.7 * v
    np.testing.assert_allclose(out, blend / np.linalg.norm(blend), atol=1e-15)


def test_higher_rho_keeps_direction_closer():
    def mean_angle(rho):
        s = RandomStream(21, (int(rho * 10),))
        v = np.array([1.0, 0.0])
        angles = [math.acos(min(1.0, float(update_velocity(v, rho, s) @ v))) for _ in range(10_000)]
        return np.mean(angles)

    assert mean_angle(0.9) < mean_angle(0.5) < mean_angle(0.0)


def test_shift_center_oracle():
    dgc = simple_dgc([10.0, -5.0], [1.0, 1.0])
    dgc.rho, dgc.shift_severity = 0.5, 2.0
    lb, ub = np.full(2, -100.0), np.full(2, 100.0)
    a, b = RandomStream(4, (9,)), RandomStream(4, (9,))
    v0 = dgc.velocity.copy()
    shift_center(dgc, lb, ub, a)
    v = update_velocity(v0, 0.5, b)
    expected = np.array([10.0, -5.0]) + b.half_normal() * 2.0 * v
    np.testing.assert_allclose(dgc.velocity, v)
    np.testing.assert_allclose(dgc.center, expected)


def test_shift_center_reflects_at_bounds():
    dgc = simple_dgc([99.9, 0.0], [1.0, 1.0])
    dgc.shift_severity, dgc.rho = 50.0, 0.99
    lb, ub = np.full(2, -100.0), np.full(2, 100.0)
    s = RandomStream(5)
    for _ in range(200):
        shift_center(dgc, lb, ub, s)
        assert np.all(dgc.center >= lb) and np.all(dgc.center <= ub)


def test_drift_scalar_oracle_and_draw_count():
    a, b = RandomStream(6, (1,)), RandomStream(6, (1,))
    step = drift_scalar(5.0, 1, 0.5, 0.0, 10.0, 0.2, a)
    flip = b.uniform01() < 0.2
    direction = -1 if flip else 1
    y = 5.0 + direction * b.half_normal() * 0.5
    assert step == (y, direction, flip, False)
    assert a.draw_count == 3


def test_drift_scalar_zero_severity_still_draws():
    s = RandomStream(1)
    step = drift_scalar(2.0, -1, 0.0, 0.0, 10.0, 0.0, s)
    assert step.value == 2.0 and step.direction == -1
    assert s.draw_count == 3


def test_drift_scalar_reflection_flips_direction():
    s = RandomStream(2)
    step = drift_scalar(9.99, 1, 100.0, 0.0, 10.0, 0.0, s)
    assert step.reflected and not step.random_flip
    assert step.direction == -1
    assert 0.0 <= step.value <= 10.0


def test_closed_gate_changes_nothing():
    dgc = simple_dgc([1.0, 2.0], [3.0, 4.0])
    dgc.local_change_prob = 0.0
    before = dgc.digest()
    s = RandomStream(3)
    _, outcome = apply_local_changes(dgc, make_bounds(), np.full(2, -100.0), np.full(2, 100.0), s)
    assert not outcome.changed and outcome.flips == []
    assert dgc.digest() == before
    assert s.draw_count == 1


def test_open_gate_bundle_draw_order():
    """Replays the bundle by hand: gate, center, each sigma, weight, each angle."""
    bounds = make_bounds()
    lb, ub = np.full(2, -100.0), np.full(2, 100.0)
    dgc = simple_dgc([0.0, 0.0], [10.0, 12.0], angle=0.2, weight=1.0)
    dgc.local_change_prob, dgc.flip_prob = 1.0, 0.3
    dgc.sigma_severity, dgc.weight_severity, dgc.theta_severity = 1.0, 0.1, 0.05
    twin = dgc.copy()
    a, b = RandomStream(7, (3,)), RandomStream(7, (3,))
    _, outcome = apply_local_changes(dgc, bounds, lb, ub, a)
    assert outcome.changed and outcome.before != outcome.after

    assert b.bernoulli(1.0)
    shift_center(twin, lb, ub, b)
    for j in range(2):
        st = drift_scalar(twin.sigma[j], twin.dir_sigma[j], 1.0, bounds.sigma_min, bounds.sigma_max, 0.3, b)
        twin.sigma[j] = st.value
    st = drift_scalar(twin.weight, twin.dir_weight, 0.1, bounds.w_min, bounds.w_max, 0.3, b)
    twin.weight = st.value
    st = drift_scalar(twin.theta[0, 1], twin.dir_theta[0, 1], 0.05, -math.pi, math.pi, 0.3, b)
    twin.theta[0, 1] = st.value
    assert dgc.digest() == twin.digest()
    assert a.draw_count == b.draw_count


def test_flip_records_match_direction_changes():
    bounds = make_bounds(sigma_min=1.0, sigma_max=3.0)
    lb, ub = np.full(2, -100.0), np.full(2, 100.0)
    dgc = simple_dgc([0.0, 0.0], [2.0, 2.0])
    dgc.local_change_prob, dgc.flip_prob, dgc.sigma_severity = 1.0, 0.1, 0.5
    s = RandomStream(11)
    for _ in range(500):
        before = dgc.dir_sigma.copy()
        _, outcome = apply_local_changes(dgc, bounds, lb, ub, s)
        for j in range(2):
            n = sum(1 for name, _ in outcome.flips if name == f"sigma[{j}]")
            # each recorded flip inverts the sign once
            assert dgc.dir_sigma[j] == before[j] * (-1) ** n
