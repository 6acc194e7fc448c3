import math

import numpy as np
import pytest

from dyncluster.model import Bounds, DgcState, LocalParams, random_dgc
from dyncluster.state import GeneratorState, GlobalSeverities
from dyncluster.stochastics import RandomStream


def make_bounds(d_max: int = 4, **kw) -> Bounds:
    args = dict(
        lb=[-100.0] * d_max, ub=[100.0] * d_max,
        sigma_min=1.0, sigma_max=30.0, w_min=0.5, w_max=3.0,
        d_min=1, d_max=d_max, m_min=1, m_max=6, kappa_min=1, kappa_max=6,
    )
    args.update(kw)
    return Bounds(**args)


def make_state(d: int = 2, m: int = 3, seed: int = 1, bounds: Bounds | None = None,
               globals_: GlobalSeverities | None = None, params: LocalParams | None = None,
               window: int = 100) -> GeneratorState:
    bounds = bounds or make_bounds()
    params = params or LocalParams()
    stream = RandomStream(seed, (99,))
    lb, ub = np.array(bounds.lb[:d]), np.array(bounds.ub[:d])
    dgcs = [random_dgc(d, bounds, lb, ub, params, i, stream) for i in range(m)]
    return GeneratorState(
        bounds=bounds, dgcs=dgcs, dims=list(range(d)), kappa=2,
        globals=globals_ or GlobalSeverities(), local_defaults=params,
        sample_prob=0.05, refresh_fraction=0.02, window_size=window, t_max=10**9, next_uid=m,
    )


def simple_dgc(center, sigma, angle: float = 0.0, weight: float = 1.0) -> DgcState:
    d = len(center)
    theta = np.zeros((d, d))
    if d >= 2:
        theta[0, 1] = angle
    return DgcState(
        center=np.array(center, dtype=float), sigma=np.array(sigma, dtype=float), theta=theta,
        weight=weight, velocity=np.eye(d)[0], dir_sigma=np.ones(d, dtype=np.int64), dir_weight=1,
        dir_theta=np.triu(np.ones((d, d), dtype=np.int64), 1),
    )


@pytest.fixture
def stream():
    return RandomStream(12345, (7,))


@pytest.fixture
def state():
    return make_state()


@pytest.fixture
def bounds():
    return make_bounds()


TWO_PI = 2 * math.pi


def pytest_terminal_summary(terminalreporter):
    import sys

    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 12):
        if n in results:
            ok, detail = results[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: FAIL  did not run to completion")
