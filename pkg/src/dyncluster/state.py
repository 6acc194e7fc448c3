"""Full environment state shared by the dynamics and the engine."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ModelViolation
from .model import Bounds, DgcState, LocalParams, dgc_violations, params_digest


@dataclass(frozen=True)
class GlobalSeverities:
    """Severities, shape and gate probabilities of the large-impact changes."""

    shift_hat: float = 30.0
    weight_hat: float = 0.5
    sigma_hat: float = 5.0
    theta_hat: float = math.pi / 4
    alpha: float = 0.1
    prob_global: float = 1e-4
    prob_dgc_count: float = 1e-4
    prob_var_count: float = 1e-4
    prob_cluster_count: float = 1e-4
    step_dgc: int = 1
    step_var: int = 1
    step_cluster: int = 1

    def __post_init__(self):
        for name in ("shift_hat", "weight_hat", "sigma_hat", "theta_hat"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        for name in ("prob_global", "prob_dgc_count", "prob_var_count", "prob_cluster_count"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1]")
        for name in ("step_dgc", "step_var", "step_cluster"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if not self.alpha > 0:
            raise ConfigurationError("alpha must be > 0")


@dataclass(eq=False)
class GeneratorState:
    """The environment at one tick.

    ``dims`` maps each active dimension to its slot in ``bounds.lb``/``ub``;
    removing a variable frees its slot and adding one takes the lowest free
    slot, so data ranges travel with their variables.
    """

    bounds: Bounds
    dgcs: list[DgcState]
    dims: list[int]
    kappa: int
    globals: GlobalSeverities
    local_defaults: LocalParams
    sample_prob: float
    refresh_fraction: float
    window_size: int
    t_max: int
    tick: int = 0
    next_uid: int = 0
    needs_resample: bool = field(default=False)
    _box: tuple = field(default=(), repr=False)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def m(self) -> int:
        return len(self.dgcs)

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        """Current per-dimension data bounds ``(lb, ub)``."""
        key = tuple(self.dims)
        if not self._box or self._box[0] != key:
            lb = np.array([self.bounds.lb[s] for s in key])
            ub = np.array([self.bounds.ub[s] for s in key])
            self._box = (key, lb, ub)
        return self._box[1], self._box[2]

    @property
    def lb(self) -> np.ndarray:
        return self.box()[0]

    @property
    def ub(self) -> np.ndarray:
        return self.box()[1]

    @property
    def weights(self) -> np.ndarray:
        return np.array([g.weight for g in self.dgcs])

    def digest(self) -> str:
        return params_digest(self.dgcs)

    def violations(self) -> list[str]:
        b = self.bounds
        problems = []
        if not b.d_min <= self.d <= b.d_max:
            problems.append(f"d={self.d} outside [{b.d_min}, {b.d_max}]")
        if not b.m_min <= self.m <= b.m_max:
            problems.append(f"m={self.m} outside [{b.m_min}, {b.m_max}]")
        if not b.kappa_min <= self.kappa <= b.kappa_max:
            problems.append(f"kappa={self.kappa} outside [{b.kappa_min}, {b.kappa_max}]")
        if len(set(self.dims)) != len(self.dims):
            problems.append("duplicate dimension slots")
        lb, ub = self.lb, self.ub
        for i, dgc in enumerate(self.dgcs):
            problems.extend(f"dgc {i}: {p}" for p in dgc_violations(dgc, b, lb, ub))
        return problems

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ModelViolation("; ".join(problems))
