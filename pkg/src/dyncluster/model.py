"""Static model of the generator: Gaussian components, rotations, boundary control.

A component draws a point as the row vector ``(noise * sigma) @ R + center``
where ``R`` is the ordered product of Givens rotations encoded by the strictly
upper-triangular angle matrix ``theta``. Generated points are never clipped;
only the component parameters are kept inside their ranges.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ModelViolation
from .stochastics import RandomStream

VELOCITY_TOL = 1e-12


@dataclass(frozen=True)
class Bounds:
    """Stationary parameter ranges.

    ``lb``/``ub`` hold one data range per potential dimension (``d_max`` of
    them); the generator state records which of these slots are active.
    """

    lb: tuple[float, ...]
    ub: tuple[float, ...]
    sigma_min: float
    sigma_max: float
    w_min: float
    w_max: float
    theta_min: float = -math.pi
    theta_max: float = math.pi
    d_min: int = 1
    d_max: int = 2
    m_min: int = 1
    m_max: int = 2
    kappa_min: int = 1
    kappa_max: int = 2

    def __post_init__(self):
        object.__setattr__(self, "lb", tuple(float(x) for x in self.lb))
        object.__setattr__(self, "ub", tuple(float(x) for x in self.ub))
        if len(self.lb) != len(self.ub):
            raise ConfigurationError("bounds.lb and bounds.ub differ in length")
        if len(self.lb) < self.d_max:
            raise ConfigurationError(
                f"bounds need one data range per dimension up to d_max={self.d_max}, got {len(self.lb)}"
            )
        for j, (lo, hi) in enumerate(zip(self.lb, self.ub)):
            if not lo < hi:
                raise ConfigurationError(f"bounds.lb[{j}] must be < bounds.ub[{j}]")
        for name in ("sigma", "w", "theta", "d", "m", "kappa"):
            lo, hi = getattr(self, f"{name}_min"), getattr(self, f"{name}_max")
            if not lo < hi:
                raise ConfigurationError(f"bounds.{name}_min must be < bounds.{name}_max ({lo} >= {hi})")
        if self.sigma_min <= 0:
            raise ConfigurationError("bounds.sigma_min must be > 0")
        if self.w_min <= 0:
            raise ConfigurationError("bounds.w_min must be > 0 so selection probabilities stay defined")
        if self.d_min < 1 or self.m_min < 1 or self.kappa_min < 1:
            raise ConfigurationError("bounds.d_min, m_min and kappa_min must be >= 1")


@dataclass(frozen=True)
class LocalParams:
    """Per-component severities and probabilities of the gradual dynamics."""

    shift_severity: float = 1.0
    sigma_severity: float = 1.0
    weight_severity: float = 0.125
    theta_severity: float = 0.1 * math.pi
    rho: float = 0.9
    flip_prob: float = 0.05
    change_prob: float = 0.05


@dataclass(eq=False)
class DgcState:
    """One dynamic Gaussian component and the private state of its dynamics."""

    center: np.ndarray
    sigma: np.ndarray
    theta: np.ndarray
    weight: float
    velocity: np.ndarray
    dir_sigma: np.ndarray
    dir_weight: int
    dir_theta: np.ndarray
    shift_severity: float = 1.0
    sigma_severity: float = 0.0
    weight_severity: float = 0.0
    theta_severity: float = 0.0
    rho: float = 0.9
    flip_prob: float = 0.0
    local_change_prob: float = 0.0
    uid: int = 0
    _rot: np.ndarray | None = field(default=None, repr=False)
    _rot_theta: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return len(self.center)

    def rotation(self) -> np.ndarray:
        """Rotation matrix for the current angles, rebuilt only when they change."""
        if self._rot is None or self._rot_theta.shape != self.theta.shape or not np.array_equal(
            self._rot_theta, self.theta
        ):
            self._rot = build_rotation(self.theta)
            self._rot_theta = self.theta.copy()
        return self._rot

    def copy(self) -> DgcState:
        return DgcState(
            center=self.center.copy(),
            sigma=self.sigma.copy(),
            theta=self.theta.copy(),
            weight=self.weight,
            velocity=self.velocity.copy(),
            dir_sigma=self.dir_sigma.copy(),
            dir_weight=self.dir_weight,
            dir_theta=self.dir_theta.copy(),
            shift_severity=self.shift_severity,
            sigma_severity=self.sigma_severity,
            weight_severity=self.weight_severity,
            theta_severity=self.theta_severity,
            rho=self.rho,
            flip_prob=self.flip_prob,
            local_change_prob=self.local_change_prob,
            uid=self.uid,
        )

    def digest(self) -> str:
        return params_digest([self])


def params_digest(dgcs: Sequence[DgcState]) -> str:
    """Short content hash of the sampled parameters of ``dgcs``."""
    h = hashlib.sha256()
    for dgc in dgcs:
        for arr in (dgc.center, dgc.sigma, dgc.theta):
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
        h.update(np.float64(dgc.weight).tobytes())
    return h.hexdigest()[:16]


def check_angles(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise ModelViolation(f"angle matrix must be square, got shape {theta.shape}")
    if np.any(np.tril(theta) != 0.0):
        raise ModelViolation("angle matrix must be zero on and below the diagonal")
    if not np.all(np.isfinite(theta)):
        raise ModelViolation("angle matrix has non-finite entries")
    return theta


def build_rotation(theta: np.ndarray, d: int | None = None) -> np.ndarray:
    """Rotation matrix from a strictly upper-triangular angle matrix.

    Right-multiplies the identity by one Givens factor per nonzero angle,
    visiting ``(j, k)`` with ``j`` in the outer loop and ``k > j`` inner.
    Each factor has ``G[j,j] = G[k,k] = cos``, ``G[j,k] = -sin``,
    ``G[k,j] = sin``; right-multiplying by it only mixes columns j and k.
    """
    theta = check_angles(theta)
    n = theta.shape[0]
    if d is not None and d != n:
        raise ModelViolation(f"angle matrix is {n}x{n} but d={d}")
    rot = np.eye(n)
    for j in range(n - 1):
        for k in range(j + 1, n):
            angle = theta[j, k]
            if angle == 0.0:
                continue
            c, s = math.cos(angle), math.sin(angle)
            col_j = rot[:, j].copy()
            col_k = rot[:, k].copy()
            rot[:, j] = c * col_j + s * col_k
            rot[:, k] = c * col_k - s * col_j
    return rot


def sample_points(
    center: np.ndarray, sigma: np.ndarray, rotation: np.ndarray, noise: np.ndarray
) -> np.ndarray:
    """Map standard-normal ``noise`` rows of shape (n, d) to component samples."""
    noise = np.asarray(noise, dtype=float)
    d = len(center)
    if noise.ndim != 2 or noise.shape[1] != d or len(sigma) != d or rotation.shape != (d, d):
        raise ModelViolation(
            f"shape mismatch: noise {noise.shape}, center {len(center)}, sigma {len(sigma)}, "
            f"rotation {rotation.shape}"
        )
    return (noise * sigma) @ rotation + center


def sample_point(dgc: DgcState, rotation: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """One sample of ``dgc`` for a single noise vector."""
    noise = np.asarray(noise, dtype=float)
    if noise.ndim != 1:
        raise ModelViolation("noise must be a vector")
    return sample_points(dgc.center, dgc.sigma, rotation, noise[None, :])[0]


def covariance(dgc: DgcState) -> np.ndarray:
    """Covariance ``R^T diag(sigma^2) R`` of the component's samples."""
    rot = dgc.rotation()
    return rot.T @ np.diag(dgc.sigma**2) @ rot


def reflect(value: float, lo: float, hi: float) -> tuple[float, bool]:
    """Fold ``value`` back into ``[lo, hi]`` by mirroring at the violated edge.

    The mirror step is repeated until the value is in range, so overshoots
    larger than the range width are handled. Returns the folded value and
    whether any mirror step happened.
    """
    if not math.isfinite(value):
        raise ModelViolation(f"cannot reflect non-finite value {value}")
    if not lo < hi:
        raise ModelViolation(f"reflect needs lo < hi, got [{lo}, {hi}]")
    if lo <= value <= hi:
        return value, False
    width = hi - lo
    if abs(value - lo) > 64 * width:
        # triangle-wave fold, same result as repeated mirroring
        phase = math.fmod(value - lo, 2.0 * width)
        if phase < 0:
            phase += 2.0 * width
        value = lo + phase if phase <= width else hi - (phase - width)
        return min(max(value, lo), hi), True
    while True:
        if value < lo:
            value = 2.0 * lo - value
        elif value > hi:
            value = 2.0 * hi - value
        else:
            return value, True


def upper_indices(d: int) -> list[tuple[int, int]]:
    """Row-major ``(j, k)`` pairs with ``j < k``."""
    return [(j, k) for j in range(d - 1) for k in range(j + 1, d)]


def random_dgc(
    d: int,
    bounds: Bounds,
    lb: np.ndarray,
    ub: np.ndarray,
    params: LocalParams,
    uid: int,
    stream: RandomStream,
) -> DgcState:
    """A component with every parameter drawn uniformly inside its range.

    Draw order: center coords, sigma coords, upper angles (row-major), weight,
    velocity, sigma directions, weight direction, angle directions.
    """
    center = np.array([stream.uniform(lb[j], ub[j]) for j in range(d)])
    sigma = np.array([stream.uniform(bounds.sigma_min, bounds.sigma_max) for _ in range(d)])
    theta = np.zeros((d, d))
    for j, k in upper_indices(d):
        theta[j, k] = stream.uniform(bounds.theta_min, bounds.theta_max)
    weight = stream.uniform(bounds.w_min, bounds.w_max)
    velocity = stream.unit_vector(d)
    dir_sigma = np.array([stream.rand_sign() for _ in range(d)], dtype=np.int64)
    dir_weight = stream.rand_sign()
    dir_theta = np.zeros((d, d), dtype=np.int64)
    for j, k in upper_indices(d):
        dir_theta[j, k] = stream.rand_sign()
    return DgcState(
        center=center,
        sigma=sigma,
        theta=theta,
        weight=weight,
        velocity=velocity,
        dir_sigma=dir_sigma,
        dir_weight=dir_weight,
        dir_theta=dir_theta,
        shift_severity=params.shift_severity,
        sigma_severity=params.sigma_severity,
        weight_severity=params.weight_severity,
        theta_severity=params.theta_severity,
        rho=params.rho,
        flip_prob=params.flip_prob,
        local_change_prob=params.change_prob,
        uid=uid,
    )


def dgc_violations(dgc: DgcState, bounds: Bounds, lb: np.ndarray, ub: np.ndarray) -> list[str]:
    """Every broken invariant of ``dgc``, as readable messages."""
    d = len(lb)
    problems = []
    shapes = {
        "center": (dgc.center.shape, (d,)),
        "sigma": (dgc.sigma.shape, (d,)),
        "velocity": (dgc.velocity.shape, (d,)),
        "dir_sigma": (dgc.dir_sigma.shape, (d,)),
        "theta": (dgc.theta.shape, (d, d)),
        "dir_theta": (dgc.dir_theta.shape, (d, d)),
    }
    for name, (got, want) in shapes.items():
        if got != want:
            problems.append(f"{name} has shape {got}, expected {want}")
    if problems:
        return problems
    # plain lists: these arrays are tiny and numpy call overhead dominates
    theta, dir_theta = dgc.theta.tolist(), dgc.dir_theta.tolist()
    lower = [theta[j][k] for j in range(d) for k in range(j + 1)]
    upper = [theta[j][k] for j in range(d) for k in range(j + 1, d)]
    if any(x != 0.0 for x in lower):
        problems.append("theta is not strictly upper triangular")
    norm = math.sqrt(math.fsum(x * x for x in dgc.velocity.tolist()))
    if abs(norm - 1.0) > VELOCITY_TOL:
        problems.append(f"velocity norm {norm!r} is not 1")
    lo, hi = lb.tolist(), ub.tolist()
    if any(not lo[j] <= c <= hi[j] for j, c in enumerate(dgc.center.tolist())):
        problems.append("center outside data bounds")
    if any(not bounds.sigma_min <= s <= bounds.sigma_max for s in dgc.sigma.tolist()):
        problems.append("sigma outside [sigma_min, sigma_max]")
    if not bounds.w_min <= dgc.weight <= bounds.w_max:
        problems.append(f"weight {dgc.weight} outside [w_min, w_max]")
    if any(x != 0.0 and not bounds.theta_min <= x <= bounds.theta_max for x in upper):
        problems.append("angle outside [theta_min, theta_max]")
    if any(x not in (-1, 1) for x in dgc.dir_sigma.tolist()) or dgc.dir_weight not in (-1, 1):
        problems.append("direction factors must be +-1")
    dir_upper = [dir_theta[j][k] for j in range(d) for k in range(j + 1, d)]
    dir_lower = [dir_theta[j][k] for j in range(d) for k in range(j + 1)]
    if any(x not in (-1, 1) for x in dir_upper) or any(x != 0 for x in dir_lower):
        problems.append("angle direction factors must be +-1 above the diagonal and 0 elsewhere")
    return problems
