"""Domain types for the periodic handover-skipping model.

Internal units are fixed: distances in km, time in slots, speeds in
km/slot, rates in nats per slot and handover rates in HOs per slot.
Conversions from user-facing units happen in :mod:`hoskip.cli`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "ValidationError",
    "NetworkParams",
    "Constant",
    "Exponential",
    "Erlang2",
    "HyperExp2",
    "SpeedDistribution",
    "UniformAngle",
    "FixedAngle",
    "MobilityModel",
    "Scenario0",
    "Periodic",
    "Alternate",
    "SkippingPolicy",
    "UtilityParams",
    "validate",
    "mean_speed",
    "speed_from_dict",
    "policy_from_string",
]


class ValidationError(ValueError):
    """A parameter violates a model invariant; the message names it."""


@dataclass(frozen=True)
class NetworkParams:
    """PPP base-station layer with Rayleigh fading and power-law path loss.

    ``lam`` is the BS intensity (per km^2), ``beta`` the path-loss exponent
    and ``sigma2`` the noise power relative to unit transmit power.
    """

    lam: float
    beta: float
    sigma2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValidationError(f"lambda must be positive (got {self.lam})")
        if not (math.isfinite(self.beta) and self.beta > 2):
            raise ValidationError(f"beta must exceed 2 (got {self.beta})")
        if not (math.isfinite(self.sigma2) and self.sigma2 >= 0):
            raise ValidationError(f"sigma2 must be nonnegative (got {self.sigma2})")

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "beta": self.beta, "sigma2": self.sigma2}


def _check_mean(mean: float, allow_zero: bool = False):
    ok = mean >= 0 if allow_zero else mean > 0
    if not (math.isfinite(mean) and ok):
        bound = "nonnegative" if allow_zero else "positive"
        raise ValidationError(f"mean speed must be {bound} (got {mean})")


# Speed distributions.  ``components`` expresses each family as a mixture of
# gamma laws (weight, shape, scale), which is all the analytic code needs.

@dataclass(frozen=True)
class Constant:
    v: float
    kind = "constant"

    def __post_init__(self):
        _check_mean(self.v, allow_zero=True)

    @property
    def mean(self) -> float:
        return self.v

    @property
    def variance(self) -> float:
        return 0.0

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return np.full(size, self.v, dtype=float)


@dataclass(frozen=True)
class Exponential:
    mean: float
    kind = "exponential"

    def __post_init__(self):
        _check_mean(self.mean)

    @property
    def variance(self) -> float:
        return self.mean ** 2

    def components(self):
        return [(1.0, 1, self.mean)]

    def sample(self, rng, size):
        return rng.exponential(self.mean, size)


@dataclass(frozen=True)
class Erlang2:
    mean: float
    kind = "erlang2"

    def __post_init__(self):
        _check_mean(self.mean)

    @property
    def variance(self) -> float:
        return self.mean ** 2 / 2

    def components(self):
        return [(1.0, 2, self.mean / 2)]

    def sample(self, rng, size):
        return rng.gamma(2.0, self.mean / 2, size)


@dataclass(frozen=True)
class HyperExp2:
    """Equal-weight mixture of exponentials with means mean/2 and 3*mean/2."""

    mean: float
    kind = "hyperexp2"

    def __post_init__(self):
        _check_mean(self.mean)

    @property
    def variance(self) -> float:
        # second moment 0.5*2*(m/2)^2 + 0.5*2*(3m/2)^2 = 2.5 m^2
        return 1.5 * self.mean ** 2

    def components(self):
        return [(0.5, 1, self.mean / 2), (0.5, 1, 1.5 * self.mean)]

    def sample(self, rng, size):
        pick = rng.random(size) < 0.5
        scale = np.where(pick, self.mean / 2, 1.5 * self.mean)
        return rng.exponential(1.0, size) * scale


SpeedDistribution = Union[Constant, Exponential, Erlang2, HyperExp2]

_SPEED_KINDS = {cls.kind: cls for cls in (Constant, Exponential, Erlang2, HyperExp2)}


def speed_from_dict(d: dict) -> SpeedDistribution:
    kind = d.get("kind")
    if kind not in _SPEED_KINDS:
        raise ValidationError(f"unknown speed distribution {kind!r}; "
                              f"expected one of {sorted(_SPEED_KINDS)}")
    value = float(d["mean"])
    return _SPEED_KINDS[kind](value)


def speed_to_dict(dist: SpeedDistribution) -> dict:
    return {"kind": dist.kind, "mean": dist.mean}


@dataclass(frozen=True)
class UniformAngle:
    kind = "uniform"

    def sample(self, rng, size):
        return rng.uniform(0.0, 2 * math.pi, size)


@dataclass(frozen=True)
class FixedAngle:
    psi: float
    kind = "fixed"

    def sample(self, rng, size):
        return np.full(size, self.psi, dtype=float)


@dataclass(frozen=True)
class MobilityModel:
    """Random walk with i.i.d. per-cycle speed and heading.

    During a cycle of ``s`` slots the UE moves ``s * V_n`` km in a straight
    line at heading ``psi_n``.
    """

    speed: SpeedDistribution
    direction: UniformAngle | FixedAngle = field(default_factory=UniformAngle)

    def as_dict(self) -> dict:
        d = {"kind": self.direction.kind}
        if isinstance(self.direction, FixedAngle):
            d["psi"] = self.direction.psi
        return {"speed": speed_to_dict(self.speed), "direction": d}


@dataclass(frozen=True)
class Scenario0:
    """Always served by the nearest BS; every boundary crossing is an HO."""

    name = "scenario0"

    def label(self) -> str:
        return "scenario0"


@dataclass(frozen=True)
class Periodic:
    """Connection re-examined every ``s`` slots."""

    s: int
    name = "periodic"

    def __post_init__(self):
        if isinstance(self.s, bool) or int(self.s) != self.s or self.s < 1:
            raise ValidationError(f"skipping period must be an integer >= 1 slot (got {self.s})")
        object.__setattr__(self, "s", int(self.s))

    def label(self) -> str:
        return f"periodic:{self.s}"


@dataclass(frozen=True)
class Alternate:
    """Executes every other handover opportunity, starting with an execute."""

    name = "alternate"

    def label(self) -> str:
        return "alternate"


SkippingPolicy = Union[Scenario0, Periodic, Alternate]


def policy_from_string(text: str) -> SkippingPolicy:
    """Parse ``scenario0``, ``alternate`` or ``periodic:<s>``."""
    key, _, arg = text.strip().lower().partition(":")
    if key in ("scenario0", "s0", "nearest"):
        return Scenario0()
    if key == "alternate":
        return Alternate()
    if key == "periodic":
        if not arg:
            raise ValidationError("periodic policy needs a period, e.g. periodic:4000")
        try:
            s = float(arg)
        except ValueError:
            raise ValidationError(f"skipping period must be numeric (got {arg!r})") from None
        return Periodic(int(s) if s == int(s) else s)
    raise ValidationError(f"unknown policy {text!r}")


@dataclass(frozen=True)
class UtilityParams:
    """``c`` converts HOs per slot into nats per slot of utility loss."""

    c: float
    slot_duration: float = 1e-3

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ValidationError(f"utility constant c must be positive (got {self.c})")
        if not (math.isfinite(self.slot_duration) and self.slot_duration > 0):
            raise ValidationError(f"slot_duration must be positive (got {self.slot_duration})")


def validate(params):
    """Return ``params`` unchanged if every invariant holds.

    The dataclasses check themselves on construction, so this re-runs those
    checks, which catches instances mutated through ``object.__setattr__``.
    """
    if isinstance(params, (NetworkParams, UtilityParams, Periodic)):
        params.__post_init__()
    elif isinstance(params, MobilityModel):
        sp = params.speed
        if not isinstance(sp, (Constant, Exponential, Erlang2, HyperExp2)):
            raise ValidationError(f"unsupported speed distribution {sp!r}")
        sp.__post_init__()
        if not isinstance(params.direction, (UniformAngle, FixedAngle)):
            raise ValidationError(f"unsupported direction law {params.direction!r}")
    elif isinstance(params, (Scenario0, Alternate)):
        pass
    else:
        raise ValidationError(f"cannot validate object of type {type(params).__name__}")
    return params


def mean_speed(mob: MobilityModel) -> float:
    """Average per-cycle speed E[V] in km/slot."""
    return float(mob.speed.mean)
