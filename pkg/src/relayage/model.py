"""Model parameters and the handful of formulas every other module shares.

A model instance is the rate tuple ``(lambda1, mu1, s, w)``:

* ``lambda1`` -- Poisson arrival rate of the monitored stream,
* ``mu1`` -- exponential service rate of that stream,
* ``s`` -- rate at which the server leaves for a vacation (``0`` disables vacations),
* ``w`` -- rate at which a vacation ends.

In the relay application the vacation is the service of a preempting second
stream, so ``s`` is that stream's arrival rate and ``w`` its service rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import NonFiniteRate, NonPositiveRate, Unstable


class Mode(str, Enum):
    VACATION = "vacation"
    RELAY = "relay"


@dataclass(frozen=True)
class SystemParams:
    lambda1: float
    mu1: float
    s: float
    w: float

    def __post_init__(self):
        validate(self)

    @classmethod
    def relay(cls, lambda1: float, mu1: float, lambda2: float, mu2: float) -> "SystemParams":
        """Parameters of the relay application: vacations are stream-2 services."""
        return cls(lambda1, mu1, s=lambda2, w=mu2)

    @property
    def lambda2(self) -> float:
        return self.s

    @property
    def mu2(self) -> float:
        return self.w

    def with_lambda1(self, lambda1: float) -> "SystemParams":
        return SystemParams(lambda1, self.mu1, self.s, self.w)

    def scaled(self, k: float) -> "SystemParams":
        return SystemParams(k * self.lambda1, k * self.mu1, k * self.s, k * self.w)


def validate(params: SystemParams) -> SystemParams:
    """Check the rate constraints and return ``params`` unchanged."""
    rates = {"lambda1": params.lambda1, "mu1": params.mu1, "s": params.s, "w": params.w}
    for name, value in rates.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise NonFiniteRate(f"{name} must be a real number, got {value!r}")
        if not math.isfinite(value):
            raise NonFiniteRate(f"{name} must be finite, got {value!r}")
    for name in ("lambda1", "mu1", "w"):
        if rates[name] <= 0:
            raise NonPositiveRate(f"{name} must be > 0, got {rates[name]!r}")
    if params.s < 0:
        raise NonPositiveRate(f"s must be >= 0, got {params.s!r}")
    return params


def stability_margin(params: SystemParams) -> float:
    """``mu1 - lambda1 * (1 + s/w)``; the queue is stable iff this is positive."""
    return params.mu1 - params.lambda1 * (1.0 + params.s / params.w)


def max_stable_lambda1(mu1: float, s: float, w: float) -> float:
    """Supremum of the stable arrival rates, ``mu1 / (1 + s/w)``."""
    return mu1 / (1.0 + s / w)


def is_stable(params: SystemParams) -> bool:
    return stability_margin(params) > 0


def require_stable(params: SystemParams) -> SystemParams:
    margin = stability_margin(params)
    if not margin > 0:
        raise Unstable(
            f"unstable parameters: need mu1 > lambda1*(1 + s/w), got "
            f"mu1={params.mu1:g} <= {params.lambda1:g}*(1 + {params.s:g}/{params.w:g})"
            f" = {params.lambda1 * (1 + params.s / params.w):g}"
        )
    return params


def vacation_fraction(params: SystemParams) -> float:
    """Long-run fraction of time the server is on vacation, ``s / (s + w)``.

    This is also the throughput share left to the relayed stream. It depends
    on the rates only through the ratio ``s/w``.
    """
    ratio = params.s / params.w
    return ratio / (ratio + 1.0)
