import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dyncluster.config import from_dict, parse_config, serialize_config
from dyncluster.engine import DatasetWindow
from dyncluster.evaluation import intra_cluster_distance
from dyncluster.local import drift_scalar
from dyncluster.model import build_rotation, reflect
from dyncluster.shocks import step_count
from dyncluster.stochastics import RandomStream

finite = st.floats(-1e6, 1e6, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)


@st.composite
def interval(draw):
    lo = draw(st.floats(-1e3, 1e3, allow_nan=False))
    width = draw(st.floats(1e-3, 1e3, allow_nan=False))
    return lo, lo + width


@given(finite, interval())
def test_reflect_lands_in_range(value, bounds):
    lo, hi = bounds
    out, flipped = reflect(value, lo, hi)
    assert lo <= out <= hi
    assert flipped == (not lo <= value <= hi)


@given(st.floats(-50, 50, allow_nan=False), interval())
def test_reflect_matches_step_by_step_mirror(value, bounds):
    lo, hi = bounds
    want = value
    while not lo <= want <= hi:
        want = 2 * lo - want if want < lo else 2 * hi - want
    assert math.isclose(reflect(value, lo, hi)[0], want, rel_tol=1e-9, abs_tol=1e-9)


@given(st.integers(1, 7).flatmap(lambda d: st.lists(angle, min_size=d * (d - 1) // 2,
                                                       max_size=d * (d - 1) // 2).map(lambda a: (d, a))))
def test_rotation_is_proper_orthogonal(case):
    d, angles = case
    theta = np.zeros((d, d))
    theta[np.triu_indices(d, 1)] = angles
    r = build_rotation(theta)
    np.testing.assert_allclose(r @ r.T, np.eye(d), atol=1e-12)
    assert abs(np.linalg.det(r) - 1.0) < 1e-12


@given(st.integers(0, 20), st.integers(1, 10), st.sampled_from([-1, 1]), st.integers(0, 10), st.integers(0, 10))
def test_step_count_stays_in_range(value, step, sign, lo, width):
    hi = lo + width
    value = min(max(value, lo), hi)
    new, used = step_count(value, step, sign, lo, hi)
    assert lo <= new <= hi
    assert used in (-1, 1)


@settings(max_examples=50)
@given(arrays(float, st.tuples(st.integers(1, 6), st.just(2)), elements=st.floats(-100, 100)),
       arrays(float, st.tuples(st.integers(0, 40), st.just(2)), elements=st.floats(-100, 100)),
       st.randoms(use_true_random=False))
def test_distance_properties(centers, points, rnd):
    base = intra_cluster_distance(centers, points)
    assert base >= 0.0
    perm = list(range(len(centers)))
    rnd.shuffle(perm)
    assert intra_cluster_distance(centers[perm], points) == base
    more = np.vstack([centers, [[0.0, 0.0]]])
    assert intra_cluster_distance(more, points) <= base


@given(st.integers(1, 12), st.lists(st.integers(0, 8), max_size=15))
def test_window_never_exceeds_capacity(capacity, sizes):
    win = DatasetWindow.empty(capacity, 1)
    total = 0
    for tick, n in enumerate(sizes):
        win.push(np.full((n, 1), float(tick)), tick, np.zeros(n))
        total += n
        assert len(win) == min(capacity, total)
        assert np.all(np.diff(win.birth) >= 0)


@given(st.floats(0.0, 1.0), st.sampled_from([-1, 1]), st.floats(0.0, 50.0), st.floats(0.0, 1.0),
       st.integers(0, 2**32))
def test_drift_stays_in_range(frac, direction, severity, flip, seed):
    lo, hi = 1.0, 4.0
    y = lo + frac * (hi - lo)
    s = RandomStream(seed)
    for _ in range(20):
        step = drift_scalar(y, direction, severity, lo, hi, flip, s)
        assert lo <= step.value <= hi
        y, direction = step.value, step.direction


@settings(max_examples=40)
@given(
    st.integers(0, 2**63), st.integers(0, 10**6),
    st.floats(0.0, 1.0), st.floats(0.0, 0.99), st.floats(0.01, 5.0),
    st.integers(1, 5000), st.floats(0.0, 100.0),
)
def test_config_round_trip(seed, ticks, prob, rho, alpha, window, refresh):
    cfg = from_dict({
        "run": {"seed": seed, "ticks": ticks},
        "local": {"rho": rho, "change_prob": prob},
        "global": {"alpha": alpha, "prob": prob / 10},
        "sampling": {"window": window, "refresh_percent": refresh, "prob": prob / 100},
    })
    assert parse_config(serialize_config(cfg)) == cfg
