"""Discrete-event run loop: one tick per function evaluation.

Each tick evaluates the gates in a fixed order: local changes of every
component (in list order), global shock, component count, variable count,
cluster count, and finally data sampling. If the shock or either count change
of components/variables fired, the whole window is resampled; otherwise the
incremental-sampling gate may replace the oldest fraction of the window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .config import ScenarioConfig
from .errors import ModelViolation, RunComplete
from .local import apply_local_changes
from .model import Bounds, DgcState, LocalParams, build_rotation, random_dgc, sample_points
from .shocks import change_cluster_count, change_dgc_count, change_var_count, global_shock
from .state import GeneratorState, GlobalSeverities
from .stochastics import RandomStream, StreamSet

KINDS = (
    "local",
    "global-shock",
    "dgc-count",
    "var-count",
    "cluster-count",
    "incremental-sample",
    "full-resample",
)
DATA_KINDS = frozenset({"incremental-sample", "full-resample"})


@dataclass(frozen=True)
class ChangeEvent:
    tick: int
    kind: str
    dgc_index: int | None = None
    payload: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"record": "event", "tick": self.tick, "kind": self.kind,
                "dgc": self.dgc_index, "payload": self.payload}


@dataclass(eq=False)
class DatasetWindow:
    """Fixed-capacity FIFO buffer; row order is insertion order, oldest first."""

    capacity: int
    points: np.ndarray
    birth: np.ndarray
    source: np.ndarray

    @classmethod
    def empty(cls, capacity: int, d: int) -> DatasetWindow:
        return cls(capacity, np.empty((0, d)), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def copy(self) -> DatasetWindow:
        return DatasetWindow(self.capacity, self.points.copy(), self.birth.copy(), self.source.copy())

    def push(self, points: np.ndarray, tick: int, source: np.ndarray) -> None:
        """Append rows, evicting as many of the oldest as needed to stay at capacity."""
        n = len(points)
        overflow = max(len(self) + n - self.capacity, 0)
        self.points = np.concatenate([self.points, points])[overflow:]
        self.birth = np.concatenate([self.birth, np.full(n, tick, dtype=np.int64)])[overflow:]
        self.source = np.concatenate([self.source, np.asarray(source, dtype=np.int64)])[overflow:]


def _check_weights(weights: np.ndarray) -> np.ndarray:
    if len(weights) == 0 or np.any(weights <= 0) or not np.all(np.isfinite(weights)):
        raise ModelViolation("component weights must be positive and finite")
    return np.cumsum(weights)


def draw_dgc_index(weights, stream: RandomStream) -> int:
    """Component index chosen with probability proportional to its weight."""
    weights = np.asarray(weights, dtype=float)
    _check_weights(weights)
    return stream.choice(weights)


def draw_dgc_indices(weights, stream: RandomStream, n: int) -> np.ndarray:
    """``n`` independent weight-proportional indices; one base draw each."""
    cumulative = _check_weights(np.asarray(weights, dtype=float))
    u = stream.uniforms(n) * cumulative[-1]
    return np.minimum(np.searchsorted(cumulative, u, side="right"), len(cumulative) - 1)


def sample_from_state(state: GeneratorState, stream: RandomStream, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` points from the current mixture.

    Consumes ``n`` draws for component selection, then an ``n x d`` block of
    normals in row-major order.
    """
    idx = draw_dgc_indices(state.weights, stream, n)
    noise = stream.normals(n * state.d).reshape(n, state.d)
    points = np.empty((n, state.d))
    for i in np.unique(idx):
        rows = idx == i
        dgc = state.dgcs[i]
        points[rows] = sample_points(dgc.center, dgc.sigma, dgc.rotation(), noise[rows])
    return points, idx


def refresh_count(fraction: float, capacity: int) -> int:
    """``ceil(fraction * capacity)``, robust to float noise like 0.07 * 100."""
    return min(capacity, math.ceil(fraction * capacity - 1e-9))


def incremental_sample(state: GeneratorState, window: DatasetWindow, stream: RandomStream) -> int:
    """Replace the oldest ``ceil(refresh_fraction * capacity)`` points with fresh ones."""
    count = refresh_count(state.refresh_fraction, window.capacity)
    if count == 0:
        return 0
    points, source = sample_from_state(state, stream, count)
    window.push(points, state.tick, source)
    return count


def full_resample(state: GeneratorState, window: DatasetWindow, stream: RandomStream) -> DatasetWindow:
    """Discard every point and refill the window from the current state."""
    points, source = sample_from_state(state, stream, window.capacity)
    window.points = points
    window.birth = np.full(window.capacity, state.tick, dtype=np.int64)
    window.source = source.astype(np.int64)
    state.needs_resample = False
    return window


def build_state(cfg: ScenarioConfig, streams: StreamSet) -> GeneratorState:
    """Initial environment: pinned components from the config, the rest drawn uniformly."""
    b = cfg.bounds
    lb, ub = cfg.data_bounds()
    bounds = Bounds(
        lb=lb, ub=ub,
        sigma_min=b.sigma[0], sigma_max=b.sigma[1],
        w_min=b.weight[0], w_max=b.weight[1],
        theta_min=b.theta[0], theta_max=b.theta[1],
        d_min=b.d[0], d_max=b.d[1],
        m_min=b.m[0], m_max=b.m[1],
        kappa_min=b.kappa[0], kappa_max=b.kappa[1],
    )
    loc = cfg.local
    defaults = LocalParams(
        shift_severity=loc.shift_severity,
        sigma_severity=loc.sigma_severity,
        weight_severity=loc.weight_severity,
        theta_severity=loc.theta_severity,
        rho=loc.rho,
        flip_prob=loc.flip_prob,
        change_prob=loc.change_prob,
    )
    g, s = cfg.global_, cfg.structure
    severities = GlobalSeverities(
        shift_hat=g.shift, weight_hat=g.weight, sigma_hat=g.sigma, theta_hat=g.theta, alpha=g.alpha,
        prob_global=g.prob, prob_dgc_count=s.dgc_prob, prob_var_count=s.var_prob,
        prob_cluster_count=s.cluster_prob, step_dgc=s.dgc_step, step_var=s.var_step,
        step_cluster=s.cluster_step,
    )
    d = cfg.initial.d
    dims = list(range(d))
    lb_active, ub_active = np.array(lb[:d]), np.array(ub[:d])
    stream = streams["init"]
    dgcs = []
    for i in range(cfg.initial.m):
        if cfg.dgc:
            dgcs.append(_pinned_dgc(cfg, i, defaults, stream))
        else:
            dgcs.append(random_dgc(d, bounds, lb_active, ub_active, defaults, i, stream))
    state = GeneratorState(
        bounds=bounds,
        dgcs=dgcs,
        dims=dims,
        kappa=cfg.initial.kappa,
        globals=severities,
        local_defaults=defaults,
        sample_prob=cfg.sampling.prob,
        refresh_fraction=cfg.sampling.refresh_percent / 100.0,
        window_size=cfg.sampling.window,
        t_max=cfg.run.ticks,
        next_uid=cfg.initial.m,
    )
    state.validate()
    return state


def _pinned_dgc(cfg: ScenarioConfig, i: int, defaults: LocalParams, stream: RandomStream) -> DgcState:
    p = cfg.dgc[i]
    d = cfg.initial.d
    theta = np.zeros((d, d)) if p.theta is None else np.array(p.theta, dtype=float)
    build_rotation(theta)
    if p.velocity is None:
        velocity = stream.unit_vector(d)
    else:
        velocity = np.array(p.velocity, dtype=float)
        velocity /= np.linalg.norm(velocity)
    dir_sigma = np.array([stream.rand_sign() for _ in range(d)], dtype=np.int64)
    dir_weight = stream.rand_sign()
    dir_theta = np.zeros((d, d), dtype=np.int64)
    for j in range(d - 1):
        for k in range(j + 1, d):
            dir_theta[j, k] = stream.rand_sign()

    def pick(name, default):
        value = getattr(p, name)
        return default if value is None else value

    return DgcState(
        center=np.array(p.center, dtype=float),
        sigma=np.array(p.sigma, dtype=float),
        theta=theta,
        weight=float(p.weight),
        velocity=velocity,
        dir_sigma=dir_sigma,
        dir_weight=dir_weight,
        dir_theta=dir_theta,
        shift_severity=pick("shift_severity", defaults.shift_severity),
        sigma_severity=pick("sigma_severity", defaults.sigma_severity),
        weight_severity=pick("weight_severity", defaults.weight_severity),
        theta_severity=pick("theta_severity", defaults.theta_severity),
        rho=pick("rho", defaults.rho),
        flip_prob=pick("flip_prob", defaults.flip_prob),
        local_change_prob=pick("change_prob", defaults.change_prob),
        uid=i,
    )


def advance_tick(state: GeneratorState, window: DatasetWindow, streams: StreamSet) -> list[ChangeEvent]:
    """Advance one tick and return the events that fired, in gate order.

    Raises:
        RunComplete: when ``state.tick`` already equals ``state.t_max``.
    """
    if state.tick >= state.t_max:
        raise RunComplete(f"tick budget {state.t_max} exhausted")
    state.tick += 1
    t = state.tick
    events = []
    lb, ub = state.box()
    for i, dgc in enumerate(state.dgcs):
        _, outcome = apply_local_changes(dgc, state.bounds, lb, ub, streams.local(dgc.uid))
        if outcome.changed:
            events.append(ChangeEvent(t, "local", i, outcome.payload()))

    big = False
    payload = global_shock(state, streams["global-shock"])
    if payload is not None:
        events.append(ChangeEvent(t, "global-shock", None, payload))
        big = True
    payload = change_dgc_count(state, streams["dgc-count"])
    if payload is not None:
        events.append(ChangeEvent(t, "dgc-count", None, payload))
        for removed in payload["removed"]:
            streams.drop_local(removed["uid"])
        big = True
    payload = change_var_count(state, streams["var-count"])
    if payload is not None:
        events.append(ChangeEvent(t, "var-count", None, payload))
        big = True
    payload = change_cluster_count(state, streams["cluster-count"])
    if payload is not None:
        events.append(ChangeEvent(t, "cluster-count", None, payload))

    sampling = streams["sampling"]
    if big:
        full_resample(state, window, sampling)
        events.append(ChangeEvent(t, "full-resample", None, {"count": window.capacity, "d": state.d}))
    elif sampling.bernoulli(state.sample_prob):
        count = incremental_sample(state, window, sampling)
        if count:
            events.append(ChangeEvent(t, "incremental-sample", None, {"count": count}))
    return events


class Engine:
    """A seeded generator instance: state, window and substreams.

    The initial window fill happens at tick 0 and fires no dynamics.
    """

    def __init__(self, cfg: ScenarioConfig, seed: int | None = None, t_max: int | None = None):
        self.config = cfg
        self.seed = cfg.run.seed if seed is None else int(seed)
        self.streams = StreamSet(self.seed)
        self.state = build_state(cfg, self.streams)
        if t_max is not None:
            self.state.t_max = int(t_max)
        self.window = DatasetWindow.empty(cfg.sampling.window, self.state.d)
        full_resample(self.state, self.window, self.streams["sampling"])

    @property
    def tick(self) -> int:
        return self.state.tick

    @property
    def done(self) -> bool:
        return self.state.tick >= self.state.t_max

    def advance(self) -> list[ChangeEvent]:
        return advance_tick(self.state, self.window, self.streams)


@dataclass
class RunResult:
    state: GeneratorState
    events: list[ChangeEvent]
    snapshots: list[tuple[int, DatasetWindow]]


def iter_run(cfg: ScenarioConfig, seed: int | None = None, t_max: int | None = None
             ) -> Iterator[tuple[Engine, list[ChangeEvent]]]:
    """Yield the engine after initialization (no events) and after every tick."""
    engine = Engine(cfg, seed, t_max)
    yield engine, []
    while not engine.done:
        yield engine, engine.advance()


def wants_snapshot(tick: int, events: list[ChangeEvent], every: int, final: bool) -> bool:
    if tick == 0 or final:
        return True
    if every > 0:
        return tick % every == 0
    return any(e.kind == "full-resample" for e in events)


def run(cfg: ScenarioConfig, seed: int | None = None, t_max: int | None = None,
        snapshot_every: int | None = None) -> RunResult:
    """Run a scenario in generate-only mode and collect everything in memory."""
    every = cfg.run.snapshot_every if snapshot_every is None else snapshot_every
    events: list[ChangeEvent] = []
    snapshots = []
    engine = None
    for engine, tick_events in iter_run(cfg, seed, t_max):
        events.extend(tick_events)
        if wants_snapshot(engine.tick, tick_events, every, engine.done):
            if not snapshots or snapshots[-1][0] != engine.tick:
                snapshots.append((engine.tick, engine.window.copy()))
    return RunResult(engine.state, events, snapshots)
