"""Large-impact changes: heavy-tailed global shocks and structural changes.

Each function draws its own gate from ``stream``, mutates ``state`` in place
when the gate fires, and returns an event payload (``None`` when it did not
fire). Shocks and count changes of components or variables flag the state for
a full resample; cluster-count changes do not touch the data.
"""
from __future__ import annotations

import numpy as np

from .model import DgcState, random_dgc, reflect, upper_indices
from .state import GeneratorState
from .stochastics import RandomStream


def step_count(value: int, step: int, sign: int, lo: int, hi: int) -> tuple[int, int]:
    """Integer move ``value + sign * step`` kept inside ``{lo, ..., hi}``.

    A move that would leave the range is mirrored by inverting ``sign``; if
    both directions leave the range the result is clamped. Returns the new
    value and the sign actually used.
    """
    new = value + sign * step
    if new < lo or new > hi:
        sign = -sign
        new = value + sign * step
        if new < lo or new > hi:
            new = min(max(new, lo), hi)
    return new, sign


def _shock_dgc(dgc: DgcState, state: GeneratorState, lb, ub, stream: RandomStream) -> None:
    g = state.globals
    b = state.bounds
    d = dgc.d
    scale = stream.beta_symmetric(g.alpha) * g.shift_hat
    moved = dgc.center + scale * stream.unit_vector(d)
    dgc.center = np.array([reflect(float(moved[j]), lb[j], ub[j])[0] for j in range(d)])
    dgc.weight = reflect(dgc.weight + stream.beta_symmetric(g.alpha) * g.weight_hat, b.w_min, b.w_max)[0]
    sigma = dgc.sigma.copy()
    for j in range(d):
        sigma[j] = reflect(
            float(sigma[j]) + stream.beta_symmetric(g.alpha) * g.sigma_hat, b.sigma_min, b.sigma_max
        )[0]
    dgc.sigma = sigma
    pairs = upper_indices(d)
    if pairs:
        theta = dgc.theta.copy()
        for j, k in pairs:
            theta[j, k] = reflect(
                float(theta[j, k]) + stream.beta_symmetric(g.alpha) * g.theta_hat,
                b.theta_min, b.theta_max,
            )[0]
        dgc.theta = theta


def global_shock(state: GeneratorState, stream: RandomStream) -> dict | None:
    """Shift every component's center, weight, widths and angles at once.

    Every scalar gets its own ``2 Beta(alpha, alpha) - 1`` factor and every
    component its own random shift direction. Direction factors and
    velocities of the local dynamics are left alone.
    """
    if not stream.bernoulli(state.globals.prob_global):
        return None
    before = state.digest()
    lb, ub = state.box()
    for dgc in state.dgcs:
        _shock_dgc(dgc, state, lb, ub, stream)
    state.needs_resample = True
    return {"before": before, "after": state.digest(), "direction": "per-dgc"}


def change_dgc_count(state: GeneratorState, stream: RandomStream) -> dict | None:
    """Add or remove components; removal picks uniformly, addition draws uniformly in range."""
    g = state.globals
    if not stream.bernoulli(g.prob_dgc_count):
        return None
    b = state.bounds
    before_m, before = state.m, state.digest()
    target, sign = step_count(state.m, g.step_dgc, stream.rand_sign(), b.m_min, b.m_max)
    removed, added = [], []
    lb, ub = state.box()
    while state.m > target:
        idx = stream.uniform_int(0, state.m - 1)
        removed.append({"index": idx, "uid": state.dgcs[idx].uid})
        del state.dgcs[idx]
    while state.m < target:
        uid = state.next_uid
        state.next_uid += 1
        state.dgcs.append(random_dgc(state.d, b, lb, ub, state.local_defaults, uid, stream))
        added.append(uid)
    state.needs_resample = True
    return {
        "before_m": before_m,
        "after_m": state.m,
        "sign": sign,
        "removed": removed,
        "added": added,
        "before": before,
        "after": state.digest(),
    }


def _remove_var(dgc: DgcState, j: int, stream: RandomStream) -> None:
    keep = [i for i in range(dgc.d) if i != j]
    dgc.center = dgc.center[keep]
    dgc.sigma = dgc.sigma[keep]
    dgc.dir_sigma = dgc.dir_sigma[keep]
    dgc.theta = dgc.theta[np.ix_(keep, keep)]
    dgc.dir_theta = dgc.dir_theta[np.ix_(keep, keep)]
    v = dgc.velocity[keep]
    norm = float(np.sqrt(np.dot(v, v)))
    dgc.velocity = v / norm if norm > 0.0 else stream.unit_vector(len(keep))


def _insert_var(dgc: DgcState, j: int, lo: float, hi: float, state: GeneratorState, stream: RandomStream) -> None:
    b = state.bounds
    d = dgc.d
    old = [i if i < j else i + 1 for i in range(d)]
    pairs = [(r, c) for r, c in upper_indices(d + 1) if j in (r, c)]

    center = np.insert(dgc.center, j, stream.uniform(lo, hi))
    sigma = np.insert(dgc.sigma, j, stream.uniform(b.sigma_min, b.sigma_max))
    theta = np.zeros((d + 1, d + 1))
    theta[np.ix_(old, old)] = dgc.theta
    for r, c in pairs:
        theta[r, c] = stream.uniform(b.theta_min, b.theta_max)
    velocity = np.insert(dgc.velocity, j, stream.normal())
    dir_sigma = np.insert(dgc.dir_sigma, j, stream.rand_sign())
    dir_theta = np.zeros((d + 1, d + 1), dtype=np.int64)
    dir_theta[np.ix_(old, old)] = dgc.dir_theta
    for r, c in pairs:
        dir_theta[r, c] = stream.rand_sign()

    dgc.center, dgc.sigma, dgc.theta = center, sigma, theta
    dgc.velocity = velocity / float(np.sqrt(np.dot(velocity, velocity)))
    dgc.dir_sigma, dgc.dir_theta = dir_sigma, dir_theta


def remove_variable(state: GeneratorState, j: int, stream: RandomStream) -> None:
    """Delete variable ``j`` from every component and free its data-range slot."""
    for dgc in state.dgcs:
        _remove_var(dgc, j, stream)
    del state.dims[j]


def insert_variable(state: GeneratorState, j: int, stream: RandomStream) -> None:
    """Insert a fresh variable at position ``j``; later variables shift up by one."""
    free = [s for s in range(len(state.bounds.lb)) if s not in state.dims]
    slot = free[0]
    lo, hi = state.bounds.lb[slot], state.bounds.ub[slot]
    for dgc in state.dgcs:
        _insert_var(dgc, j, lo, hi, state, stream)
    state.dims.insert(j, slot)


def change_var_count(state: GeneratorState, stream: RandomStream) -> dict | None:
    """Add or remove variables at uniformly random positions."""
    g = state.globals
    if not stream.bernoulli(g.prob_var_count):
        return None
    b = state.bounds
    before_d = state.d
    target, sign = step_count(state.d, g.step_var, stream.rand_sign(), b.d_min, b.d_max)
    removed, inserted = [], []
    while state.d > target:
        j = stream.uniform_int(0, state.d - 1)
        remove_variable(state, j, stream)
        removed.append(j)
    while state.d < target:
        j = stream.uniform_int(0, state.d)
        insert_variable(state, j, stream)
        inserted.append(j)
    state.needs_resample = True
    return {"before_d": before_d, "after_d": state.d, "sign": sign, "removed": removed, "inserted": inserted}


def change_cluster_count(state: GeneratorState, stream: RandomStream) -> dict | None:
    """Step the externally imposed number of clusters; the data is untouched."""
    g = state.globals
    if not stream.bernoulli(g.prob_cluster_count):
        return None
    b = state.bounds
    before = state.kappa
    state.kappa, sign = step_count(state.kappa, g.step_cluster, stream.rand_sign(), b.kappa_min, b.kappa_max)
    return {"before_kappa": before, "after_kappa": state.kappa, "sign": sign}
