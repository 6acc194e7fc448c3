"""Scenario configuration: TOML schema, validation, serialization and presets.

A scenario file is TOML with the sections ``[run]``, ``[bounds]``,
``[initial]``, ``[local]``, ``[global]``, ``[structure]``, ``[sampling]``
and an optional ``[[dgc]]`` array pinning the initial components. Unknown
keys are rejected. A dynamic is disabled by setting its probability to zero;
a single parameter is frozen by setting its severity to zero.

The numeric defaults are this repository's choices, not certified values.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from typing import Optional, Union

import tomli
import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigurationError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


Pair = tuple[float, float]
IntPair = tuple[int, int]


class RunSection(_Section):
    seed: int = Field(0, ge=0, lt=2**64)
    ticks: int = Field(1000, ge=0)
    snapshot_every: int = Field(0, ge=0, description="0 = snapshot on every full resample")


class BoundsSection(_Section):
    lb: Union[float, list[float]] = -100.0
    ub: Union[float, list[float]] = 100.0
    sigma: Pair = (5.0, 25.0)
    weight: Pair = (0.5, 3.0)
    theta: Pair = (-math.pi, math.pi)
    d: IntPair = (2, 5)
    m: IntPair = (2, 10)
    kappa: IntPair = (2, 10)


class InitialSection(_Section):
    d: int = 2
    m: int = 5
    kappa: int = 5


class LocalSection(_Section):
    shift_severity: float = Field(1.0, ge=0)
    sigma_severity: float = Field(1.0, ge=0)
    weight_severity: float = Field(0.125, ge=0)
    theta_severity: float = Field(0.1 * math.pi, ge=0)
    rho: float = Field(0.9, ge=0, lt=1)
    flip_prob: float = Field(0.05, ge=0, le=1)
    change_prob: float = Field(0.05, ge=0, le=1)


class GlobalSection(_Section):
    alpha: float = Field(0.1, gt=0)
    shift: float = Field(30.0, ge=0)
    weight: float = Field(0.5, ge=0)
    sigma: float = Field(5.0, ge=0)
    theta: float = Field(math.pi / 4, ge=0)
    prob: float = Field(1e-4, ge=0, le=1)


class StructureSection(_Section):
    dgc_prob: float = Field(1e-4, ge=0, le=1)
    var_prob: float = Field(1e-4, ge=0, le=1)
    cluster_prob: float = Field(1e-4, ge=0, le=1)
    dgc_step: int = Field(1, ge=1)
    var_step: int = Field(1, ge=1)
    cluster_step: int = Field(1, ge=1)


class SamplingSection(_Section):
    prob: float = Field(0.05, ge=0, le=1)
    refresh_percent: float = Field(2.0, ge=0, le=100)
    window: int = Field(2500, ge=1)


class DgcSection(_Section):
    """A pinned initial component; unset local fields fall back to ``[local]``."""

    center: list[float]
    sigma: list[float]
    weight: float
    theta: Optional[list[list[float]]] = None
    velocity: Optional[list[float]] = None
    shift_severity: Optional[float] = Field(None, ge=0)
    sigma_severity: Optional[float] = Field(None, ge=0)
    weight_severity: Optional[float] = Field(None, ge=0)
    theta_severity: Optional[float] = Field(None, ge=0)
    rho: Optional[float] = Field(None, ge=0, lt=1)
    flip_prob: Optional[float] = Field(None, ge=0, le=1)
    change_prob: Optional[float] = Field(None, ge=0, le=1)


class ScenarioConfig(_Section):
    name: str = "custom"
    run: RunSection = RunSection()
    bounds: BoundsSection = BoundsSection()
    initial: InitialSection = InitialSection()
    local: LocalSection = LocalSection()
    global_: GlobalSection = Field(GlobalSection(), alias="global")
    structure: StructureSection = StructureSection()
    sampling: SamplingSection = SamplingSection()
    dgc: list[DgcSection] = []

    @model_validator(mode="after")
    def _check(self) -> ScenarioConfig:
        b = self.bounds
        for name in ("sigma", "weight", "theta", "d", "m", "kappa"):
            lo, hi = getattr(b, name)
            if not lo < hi:
                raise ValueError(f"bounds.{name}: min must be < max, got [{lo}, {hi}]")
        if b.sigma[0] <= 0:
            raise ValueError("bounds.sigma: minimum width must be > 0")
        if b.weight[0] <= 0:
            raise ValueError("bounds.weight: minimum weight must be > 0 (selection probabilities divide by the weight sum)")
        if min(b.d[0], b.m[0], b.kappa[0]) < 1:
            raise ValueError("bounds.d/m/kappa: minimum must be >= 1")
        lb, ub = self.data_bounds()
        if len(lb) != len(ub):
            raise ValueError("bounds.lb/ub: lists differ in length")
        if len(lb) < b.d[1]:
            raise ValueError(f"bounds.lb/ub: need a data range for every dimension up to d_max={b.d[1]}")
        for j, (lo, hi) in enumerate(zip(lb, ub)):
            if not lo < hi:
                raise ValueError(f"bounds.lb[{j}]: must be < bounds.ub[{j}]")
        ini = self.initial
        for name in ("d", "m", "kappa"):
            lo, hi = getattr(b, name)
            if not lo <= getattr(ini, name) <= hi:
                raise ValueError(f"initial.{name}: {getattr(ini, name)} outside bounds.{name} [{lo}, {hi}]")
        if self.dgc:
            if len(self.dgc) != ini.m:
                raise ValueError(f"dgc: {len(self.dgc)} pinned components but initial.m = {ini.m}")
            for i, pinned in enumerate(self.dgc):
                _check_pinned(pinned, i, self, lb, ub)
        return self

    def data_bounds(self) -> tuple[list[float], list[float]]:
        """Per-dimension data ranges for all ``d_max`` slots."""
        n = self.bounds.d[1]
        lb, ub = self.bounds.lb, self.bounds.ub
        n_lists = [len(x) for x in (lb, ub) if isinstance(x, list)]
        if n_lists:
            n = max(n_lists)
        lb = lb if isinstance(lb, list) else [lb] * n
        ub = ub if isinstance(ub, list) else [ub] * n
        return [float(x) for x in lb], [float(x) for x in ub]


def _check_pinned(pinned: DgcSection, i: int, cfg: ScenarioConfig, lb, ub) -> None:
    d = cfg.initial.d
    b = cfg.bounds
    where = f"dgc[{i}]"
    if len(pinned.center) != d or len(pinned.sigma) != d:
        raise ValueError(f"{where}.center/sigma: length must equal initial.d = {d}")
    for j in range(d):
        if not lb[j] <= pinned.center[j] <= ub[j]:
            raise ValueError(f"{where}.center[{j}]: outside data bounds")
        if not b.sigma[0] <= pinned.sigma[j] <= b.sigma[1]:
            raise ValueError(f"{where}.sigma[{j}]: outside bounds.sigma")
    if not b.weight[0] <= pinned.weight <= b.weight[1]:
        raise ValueError(f"{where}.weight: outside bounds.weight")
    if pinned.theta is not None:
        theta = pinned.theta
        if len(theta) != d or any(len(row) != d for row in theta):
            raise ValueError(f"{where}.theta: must be a {d}x{d} matrix")
        for j in range(d):
            for k in range(d):
                val = theta[j][k]
                if k <= j and val != 0.0:
                    raise ValueError(f"{where}.theta[{j}][{k}]: entries on/below the diagonal must be 0")
                if k > j and val != 0.0 and not b.theta[0] <= val <= b.theta[1]:
                    raise ValueError(f"{where}.theta[{j}][{k}]: outside bounds.theta")
    if pinned.velocity is not None:
        if len(pinned.velocity) != d:
            raise ValueError(f"{where}.velocity: length must equal initial.d = {d}")
        if math.sqrt(sum(v * v for v in pinned.velocity)) == 0.0:
            raise ValueError(f"{where}.velocity: must be nonzero")


def _warn_soft(cfg: ScenarioConfig) -> None:
    g, loc = cfg.global_, cfg.local
    pairs = [("shift", loc.shift_severity), ("weight", loc.weight_severity),
             ("sigma", loc.sigma_severity), ("theta", loc.theta_severity)]
    if g.prob > 0:
        weak = [name for name, local in pairs if getattr(g, name) > 0 and getattr(g, name) <= local]
        if weak:
            warnings.warn(f"global severities do not exceed local ones for: {', '.join(weak)}", stacklevel=3)
    s = cfg.sampling
    if s.prob * s.refresh_percent > 50.0:
        warnings.warn(
            "sampling.prob * sampling.refresh_percent is large: the whole window turns over "
            "within a few ticks", stacklevel=3,
        )


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def from_dict(data: dict) -> ScenarioConfig:
    try:
        cfg = ScenarioConfig.model_validate(data)
    except ValidationError as err:
        raise ConfigurationError(_format_validation(err)) from None
    _warn_soft(cfg)
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a TOML scenario.

    Raises:
        ConfigurationError: on TOML syntax errors (message carries line and
            column) or on semantic errors (message carries the field path).
    """
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigurationError(f"syntax error: {err}") from None
    return from_dict(data)


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def to_dict(cfg: ScenarioConfig) -> dict:
    return cfg.model_dump(by_alias=True, exclude_none=True, mode="json")


def serialize_config(cfg: ScenarioConfig) -> str:
    """Normalized TOML text; ``parse_config(serialize_config(c)) == c``."""
    return tomli_w.dumps(to_dict(cfg))


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()


def with_overrides(cfg: ScenarioConfig, seed: int | None = None, ticks: int | None = None,
                   snapshot_every: int | None = None) -> ScenarioConfig:
    data = to_dict(cfg)
    if seed is not None:
        data["run"]["seed"] = seed
    if ticks is not None:
        data["run"]["ticks"] = ticks
    if snapshot_every is not None:
        data["run"]["snapshot_every"] = snapshot_every
    return from_dict(data)


# presets

_STATIC = {
    "global": {"prob": 0.0},
    "structure": {"dgc_prob": 0.0, "var_prob": 0.0, "cluster_prob": 0.0},
    "sampling": {"prob": 0.0},
}


def _static(name: str, **sections) -> dict:
    data = {"name": name, "local": {"change_prob": 0.0}}
    for key, value in _STATIC.items():
        data[key] = dict(value)
    for key, value in sections.items():
        if isinstance(value, list):
            data[key] = value
        else:
            data.setdefault(key, {}).update(value)
    return data


def _rot2(angle: float) -> list[list[float]]:
    return [[0.0, angle], [0.0, 0.0]]


def _fig1() -> dict:
    dgcs = [
        {"center": [0.0, 45.0], "sigma": [15.0, 10.0], "weight": 0.3, "theta": _rot2(math.pi / 6)},
        {"center": [-45.0, -35.0], "sigma": [15.0, 10.0], "weight": 0.5, "theta": _rot2(-math.pi / 4)},
        {"center": [45.0, -35.0], "sigma": [15.0, 10.0], "weight": 0.2, "theta": _rot2(math.pi / 3)},
    ]
    return _static(
        "fig1",
        bounds={"weight": (0.1, 1.0), "m": (1, 5), "kappa": (1, 5), "d": (1, 3)},
        initial={"d": 2, "m": 3, "kappa": 3},
        sampling={"window": 1000},
        dgc=dgcs,
    )


def _single(name: str, center, sigma, angle: float = 0.0, **sections) -> dict:
    theta = _rot2(angle)
    base = _static(
        name,
        bounds={"m": (1, 2), "kappa": (1, 2), "d": (1, 3)},
        initial={"d": 2, "m": 1, "kappa": 1},
        sampling={"window": 300},
        dgc=[{"center": list(center), "sigma": list(sigma), "weight": 1.0, "theta": theta}],
    )
    for key, value in sections.items():
        base.setdefault(key, {}).update(value)
    return base


def _fig3(rho: float, tag: str) -> dict:
    data = _single(f"fig3-{tag}", [0.0, 0.0], [10.0, 10.0])
    # wide box so reflection does not cap long correlated trajectories
    data["bounds"].update({"lb": -1000.0, "ub": 1000.0})
    data["local"] = {
        "change_prob": 1.0, "shift_severity": 1.0, "rho": rho,
        "sigma_severity": 0.0, "weight_severity": 0.0, "theta_severity": 0.0, "flip_prob": 0.0,
    }
    data["sampling"] = {"window": 300, "prob": 0.0}
    return data


def _fig4(severity: float, flip: float, tag: str) -> dict:
    data = _single(f"fig4-{tag}", [0.0], [50.0])
    data["bounds"].update({"sigma": (0.001, 100.0), "d": (1, 2), "lb": -1000.0, "ub": 1000.0})
    data["initial"]["d"] = 1
    data["dgc"][0]["theta"] = [[0.0]]
    data["local"] = {
        "change_prob": 1.0, "shift_severity": 0.0, "sigma_severity": severity, "flip_prob": flip,
        "weight_severity": 0.0, "theta_severity": 0.0,
    }
    return data


def _kitchen_sink() -> dict:
    return {"name": "kitchen-sink"}


PRESETS = {
    "fig1": _fig1,
    "fig2a": lambda: _single("fig2a", [0.0, 0.0], [20.0, 20.0]),
    "fig2b": lambda: _single("fig2b", [-20.0, 50.0], [7.0, 7.0]),
    "fig2c": lambda: _single("fig2c", [0.0, 0.0], [7.0, 20.0]),
    "fig2d": lambda: _single("fig2d", [0.0, 0.0], [7.0, 20.0], math.pi / 4),
    "fig3-rho00": lambda: _fig3(0.0, "rho00"),
    "fig3-rho05": lambda: _fig3(0.5, "rho05"),
    "fig3-rho09": lambda: _fig3(0.9, "rho09"),
    "fig4a": lambda: _fig4(1.0, 0.0, "a"),
    "fig4b": lambda: _fig4(1.0, 0.1, "b"),
    "fig4c": lambda: _fig4(1.0, 0.5, "c"),
    "fig4d": lambda: _fig4(0.1, 0.5, "d"),
    "kitchen-sink": _kitchen_sink,
}


def preset(name: str) -> ScenarioConfig:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return from_dict(builder())
