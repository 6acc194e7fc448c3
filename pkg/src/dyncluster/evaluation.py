"""Clustering objective, dynamic performance measures and a baseline optimizer.

The harness (:class:`DynamicClusteringProblem`) advances the engine by one
tick per objective evaluation. After any change to the data or the cluster
count, the incumbent best is re-scored on the new window before the next
evaluation is compared with it. Re-scoring is bookkeeping: it consumes no
budget and fires no dynamics. Offline performance is averaged over
evaluations, one per tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .engine import DATA_KINDS, ChangeEvent, Engine
from .errors import ConfigurationError, RunComplete, StaleSolutionError
from .stochastics import RandomStream


@dataclass(frozen=True)
class ClusteringSolution:
    """``kappa`` prototype centers in ``d``-dimensional space."""

    centers: np.ndarray

    def __post_init__(self):
        centers = np.atleast_2d(np.array(self.centers, dtype=float))
        if centers.ndim != 2 or centers.shape[0] < 1:
            raise ValueError("a solution needs at least one center")
        if not np.all(np.isfinite(centers)):
            raise ValueError("solution centers must be finite")
        object.__setattr__(self, "centers", centers)

    @property
    def kappa(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


def _points(window) -> np.ndarray:
    return window.points if hasattr(window, "points") else np.asarray(window, dtype=float)


def _sq_dist(columns: np.ndarray, center: np.ndarray) -> np.ndarray:
    total = np.zeros(columns.shape[1])
    for j, col in enumerate(columns):
        diff = col - center[j]
        total += diff * diff
    return total


def nearest_center(centers: np.ndarray, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of, and distance to, the nearest center for every point (ties -> lowest index)."""
    columns = points.T
    best = _sq_dist(columns, centers[0])
    idx = np.zeros(len(points), dtype=np.intp)
    for c in range(1, len(centers)):
        sq = _sq_dist(columns, centers[c])
        closer = sq < best
        best = np.where(closer, sq, best)
        idx[closer] = c
    return idx, np.sqrt(best)


def _min_distances(centers: np.ndarray, points: np.ndarray) -> np.ndarray:
    columns = points.T
    best = _sq_dist(columns, centers[0])
    for c in range(1, len(centers)):
        np.minimum(best, _sq_dist(columns, centers[c]), out=best)
    return np.sqrt(best)


def intra_cluster_distance(solution, window) -> float:
    """Sum over points of the Euclidean distance to the nearest center.

    Raises:
        StaleSolutionError: if the solution's dimension differs from the data's.
    """
    sol = solution if isinstance(solution, ClusteringSolution) else ClusteringSolution(solution)
    points = _points(window)
    if points.shape[1] != sol.d:
        raise StaleSolutionError(f"solution has d={sol.d} but the data has d={points.shape[1]}")
    if len(points) == 0:
        return 0.0
    return float(np.sum(_min_distances(sol.centers, points)))


Objective = Callable[[ClusteringSolution, object], float]


@dataclass(frozen=True)
class EvaluationRecord:
    """One objective evaluation.

    Attributes:
        tick: engine tick at which the solution was scored.
        value: objective of the evaluated solution.
        best: running best after re-scoring (if ``changed``) and this evaluation.
        changed: the problem changed since the previous evaluation.
        rescored: re-scored incumbent value after the change, ``None`` when
            there was no valid incumbent to re-score.
        deployed_value: objective of the deployed solution at this evaluation,
            ``inf`` if it became stale.
    """

    tick: int
    value: float
    best: float
    changed: bool
    rescored: float | None
    deployed_value: float


class BudgetExhausted(RunComplete):
    pass


class DynamicClusteringProblem:
    """Evaluation-driven view of an engine: every ``evaluate`` call is one tick.

    Args:
        engine: generator to drive; its tick budget is extended to ``budget``.
        budget: number of objective evaluations allowed.
        root_threshold: a deployed solution is replaced by the current best
            once its objective exceeds this value.
        objective: ``f(solution, window) -> float`` to minimize.
    """

    def __init__(self, engine: Engine, budget: int, root_threshold: float = math.inf,
                 objective: Objective = intra_cluster_distance):
        if budget < 1:
            raise ConfigurationError("budget must be >= 1")
        self.engine = engine
        self.budget = int(budget)
        self.root_threshold = float(root_threshold)
        self.objective = objective
        engine.state.t_max = max(engine.state.t_max, engine.tick + self.budget)
        self.records: list[EvaluationRecord] = []
        self.events: list[ChangeEvent] = []
        self.evaluations = 0
        self._incumbent: ClusteringSolution | None = None
        self._best: float | None = None
        self._deployed: ClusteringSolution | None = None
        self._deployed_value = math.inf
        self._changed = False
        self._change_count = 0

    @property
    def d(self) -> int:
        return self.engine.state.d

    @property
    def kappa(self) -> int:
        return self.engine.state.kappa

    @property
    def window(self) -> np.ndarray:
        return self.engine.window.points

    @property
    def tick(self) -> int:
        return self.engine.tick

    @property
    def remaining(self) -> int:
        return self.budget - self.evaluations

    @property
    def change_count(self) -> int:
        """Number of problem changes seen so far; algorithms poll it to detect changes."""
        return self._change_count

    @property
    def incumbent(self) -> ClusteringSolution | None:
        return self._incumbent

    def check(self, solution: ClusteringSolution) -> None:
        if solution.d != self.d or solution.kappa != self.kappa:
            raise StaleSolutionError(
                f"solution is {solution.kappa}x{solution.d}, problem is {self.kappa}x{self.d}"
            )

    def _score(self, solution: ClusteringSolution | None) -> float | None:
        if solution is None:
            return None
        try:
            self.check(solution)
        except StaleSolutionError:
            return None
        return self.objective(solution, self.engine.window)

    def evaluate(self, centers) -> float:
        """Score ``centers`` on the current window, then advance the engine one tick."""
        if self.remaining <= 0:
            raise BudgetExhausted(f"evaluation budget {self.budget} exhausted")
        solution = centers if isinstance(centers, ClusteringSolution) else ClusteringSolution(centers)
        self.check(solution)

        changed, rescored = self._changed, None
        deployed_value = None
        if changed:
            rescored = self._score(self._incumbent)
            if rescored is None:
                self._incumbent = None
            self._best = rescored
            if self._deployed is not None:
                score = self._score(self._deployed)
                deployed_value = math.inf if score is None else score
            self._changed = False

        value = float(self.objective(solution, self.engine.window))
        if self._best is None or value < self._best:
            self._best = value
            self._incumbent = solution
        if self._deployed is None:
            self._deployed, deployed_value = solution, value
        elif deployed_value is None:
            deployed_value = self._deployed_value
        self.records.append(
            EvaluationRecord(self.tick, value, self._best, changed, rescored, deployed_value)
        )
        if deployed_value > self.root_threshold:
            self._deployed, deployed_value = self._incumbent, self._best
        self._deployed_value = deployed_value

        self.evaluations += 1
        events = self.engine.advance()
        self.events.extend(events)
        if any(e.kind in DATA_KINDS or e.kind == "cluster-count" for e in events):
            self._changed = True
            self._change_count += 1
        return value


def offline_performance(records: Sequence[EvaluationRecord]) -> float:
    """Mean of the running-best objective over all evaluations."""
    if not records:
        raise ValueError("offline performance needs at least one record")
    return math.fsum(r.best for r in records) / len(records)


def deployment_intervals(records: Sequence[EvaluationRecord], threshold: float) -> list[int]:
    """Lengths, in evaluations, of consecutive deployments.

    A deployment ends with the first evaluation at which the deployed
    solution's objective exceeds ``threshold``; the next deployment starts
    with the following evaluation.
    """
    if not math.isfinite(threshold):
        raise ConfigurationError(f"ROOT threshold must be finite, got {threshold}")
    intervals, length = [], 0
    for r in records:
        length += 1
        if r.deployed_value > threshold:
            intervals.append(length)
            length = 0
    if length:
        intervals.append(length)
    return intervals


def root_survival(records: Sequence[EvaluationRecord], threshold: float) -> float:
    """Mean number of evaluations a deployed solution keeps acceptable quality."""
    intervals = deployment_intervals(records, threshold)
    if not intervals:
        raise ValueError("ROOT survival needs at least one deployment")
    return sum(intervals) / len(intervals)


# baseline optimizer

@dataclass
class _Member:
    centers: np.ndarray
    fitness: float | None
    step: float


def _random_centers(points: np.ndarray, kappa: int, stream: RandomStream) -> np.ndarray:
    idx = [stream.uniform_int(0, len(points) - 1) for _ in range(kappa)]
    return points[idx].copy()


def _repair(centers: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Snap centers that attract no points onto their nearest data point."""
    owner, _ = nearest_center(centers, points)
    empty = np.flatnonzero(np.bincount(owner, minlength=len(centers)) == 0)
    for c in empty:
        diff = points - centers[c]
        centers[c] = points[np.argmin(np.einsum("ij,ij->i", diff, diff))]
    return centers


def _resize(centers: np.ndarray, kappa: int, points: np.ndarray, stream: RandomStream) -> np.ndarray:
    while len(centers) > kappa:
        centers = np.delete(centers, stream.uniform_int(0, len(centers) - 1), axis=0)
    if len(centers) < kappa:
        centers = np.vstack([centers, _random_centers(points, kappa - len(centers), stream)])
    return centers


def baseline_optimize(problem: DynamicClusteringProblem, budget: int, stream: RandomStream,
                      population: int = 5) -> list[EvaluationRecord]:
    """Population of (1+1)-ES searchers with one-fifth success step control.

    Each member mutates all its centers with isotropic Gaussian noise; empty
    clusters are repaired by snapping to the nearest data point. After a
    change the whole population is re-evaluated (this costs evaluations);
    after a dimension change members restart from random data points and
    after a cluster-count change they gain or lose random centers.
    """
    if budget < 1:
        raise ConfigurationError("budget must be >= 1")
    budget = min(budget, problem.remaining)
    used = 0

    def spread() -> float:
        pts = problem.window
        return float(np.mean(pts.max(axis=0) - pts.min(axis=0))) or 1.0

    def fresh() -> _Member:
        return _Member(_random_centers(problem.window, problem.kappa, stream), None, 0.1 * spread())

    members = [fresh() for _ in range(population)]
    seen = problem.change_count
    turn = 0
    grow, shrink = 1.5, 1.5**-0.25
    while used < budget:
        if problem.change_count != seen:
            seen = problem.change_count
            for i, m in enumerate(members):
                if m.centers.shape[1] != problem.d:
                    members[i] = fresh()
                    continue
                if len(m.centers) != problem.kappa:
                    m.centers = _resize(m.centers, problem.kappa, problem.window, stream)
                m.fitness = None
        m = members[turn % population]
        turn += 1
        if m.fitness is None:
            m.fitness = problem.evaluate(m.centers)
            used += 1
            continue
        noise = stream.normals(m.centers.size).reshape(m.centers.shape)
        child = _repair(m.centers + m.step * noise, problem.window)
        f = problem.evaluate(child)
        used += 1
        if f < m.fitness:
            m.centers, m.fitness = child, f
            m.step *= grow
        else:
            m.step = max(m.step * shrink, 1e-12)
    return problem.records
