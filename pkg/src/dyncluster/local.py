"""Gradual per-component changes: momentum center drift and directed random walks.

All functions update the component in place and return it, so the engine can
step thousands of components per second without copying. Draws come from the
component's own substream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import Bounds, DgcState, reflect, upper_indices
from .stochastics import RandomStream


class Drift(NamedTuple):
    value: float
    direction: int
    random_flip: bool
    reflected: bool


@dataclass
class LocalChangeOutcome:
    """What one local-change gate did to a component.

    ``flips`` lists ``(parameter, reason)`` pairs with reason ``"random"`` or
    ``"reflect"``; it is empty whenever ``changed`` is false.
    """

    changed: bool
    flips: list[tuple[str, str]] = field(default_factory=list)
    before: str | None = None
    after: str | None = None

    def payload(self) -> dict:
        return {
            "before": self.before,
            "after": self.after,
            "flips": [list(f) for f in self.flips],
        }


def update_velocity(v: np.ndarray, rho: float, stream: RandomStream) -> np.ndarray:
    """Blend a fresh random direction with the previous one and renormalize.

    ``rho`` weights the previous direction. A zero blend (only possible when
    the fresh direction is exactly antipodal at rho = 0.5) triggers a redraw.
    """
    while True:
        u = stream.unit_vector(len(v))
        blend = (1.0 - rho) * u + rho * v
        norm = float(np.sqrt(np.dot(blend, blend)))
        if norm > 0.0:
            return blend / norm


def shift_center(dgc: DgcState, lb: np.ndarray, ub: np.ndarray, stream: RandomStream) -> DgcState:
    """Move the center one half-normal step along the updated velocity."""
    dgc.velocity = update_velocity(dgc.velocity, dgc.rho, stream)
    step = stream.half_normal() * dgc.shift_severity
    moved = dgc.center + step * dgc.velocity
    dgc.center = np.array([reflect(float(moved[j]), lb[j], ub[j])[0] for j in range(len(moved))])
    return dgc


def drift_scalar(
    y: float,
    direction: int,
    severity: float,
    lo: float,
    hi: float,
    flip_prob: float,
    stream: RandomStream,
) -> Drift:
    """One step of the directed random walk ``y + direction * |N(0,1)| * severity``.

    The direction is inverted with probability ``flip_prob`` before the step,
    and again whenever the step has to be reflected back into ``[lo, hi]``.
    Always consumes one flip draw and one half-normal, even at zero severity.
    """
    random_flip = stream.bernoulli(flip_prob)
    if random_flip:
        direction = -direction
    y = y + direction * stream.half_normal() * severity
    y, reflected = reflect(y, lo, hi)
    if reflected:
        direction = -direction
    return Drift(y, direction, random_flip, reflected)


def _note(flips: list, name: str, step: Drift) -> None:
    if step.random_flip:
        flips.append((name, "random"))
    if step.reflected:
        flips.append((name, "reflect"))


def apply_local_changes(
    dgc: DgcState,
    bounds: Bounds,
    lb: np.ndarray,
    ub: np.ndarray,
    stream: RandomStream,
) -> tuple[DgcState, LocalChangeOutcome]:
    """Gate the local-change bundle and, when it fires, apply it.

    Order inside the bundle: center shift, each width, the weight, then every
    above-diagonal angle in row-major order. The rotation cache notices moved
    angles on its own.
    """
    if not stream.bernoulli(dgc.local_change_prob):
        return dgc, LocalChangeOutcome(False)

    outcome = LocalChangeOutcome(True, before=dgc.digest())
    shift_center(dgc, lb, ub, stream)

    p = dgc.flip_prob
    sigma = dgc.sigma.copy()
    for j in range(len(sigma)):
        step = drift_scalar(
            float(sigma[j]), int(dgc.dir_sigma[j]), dgc.sigma_severity,
            bounds.sigma_min, bounds.sigma_max, p, stream,
        )
        sigma[j] = step.value
        dgc.dir_sigma[j] = step.direction
        _note(outcome.flips, f"sigma[{j}]", step)
    dgc.sigma = sigma

    step = drift_scalar(
        dgc.weight, dgc.dir_weight, dgc.weight_severity, bounds.w_min, bounds.w_max, p, stream
    )
    dgc.weight = step.value
    dgc.dir_weight = step.direction
    _note(outcome.flips, "weight", step)

    pairs = upper_indices(dgc.d)
    if pairs:
        theta = dgc.theta.copy()
        for j, k in pairs:
            step = drift_scalar(
                float(theta[j, k]), int(dgc.dir_theta[j, k]), dgc.theta_severity,
                bounds.theta_min, bounds.theta_max, p, stream,
            )
            theta[j, k] = step.value
            dgc.dir_theta[j, k] = step.direction
            _note(outcome.flips, f"theta[{j}][{k}]", step)
        dgc.theta = theta

    outcome.after = dgc.digest()
    return dgc, outcome
