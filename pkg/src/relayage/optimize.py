"""Age-optimal generation rate of stream 1.

The average age is convex in ``lambda1`` on the stability interval and blows up
at both ends, so the minimiser is the unique zero of its derivative. We find
it by bisection on a central-difference derivative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .analytic import average_age_stream1, average_age_stream2
from .errors import NumericalFailure, NonPositiveRate
from .model import SystemParams, max_stable_lambda1, vacation_fraction

EDGE_EPS = 1e-6
# bisection stops at this width relative to mu1; tighter than 1e-9 so that the
# derivative residual stays small when the optimum sits close to zero
BRACKET_RTOL = 1e-12
MAX_ITER = 200
FD_REL_STEP = 1e-6

AgeFunction = Callable[[SystemParams], float]


@dataclass(frozen=True)
class OptimizerResult:
    lambda1_star: float
    delta1_star: float
    derivative_residual: float
    bracket: tuple[float, float]
    iterations: int
    lambda1_max: float


def age_derivative(params: SystemParams, age: AgeFunction = average_age_stream1) -> float:
    """Central difference of the age in ``lambda1`` with step ``1e-6 * lambda1``."""
    lam = params.lambda1
    h = FD_REL_STEP * lam
    return (age(params.with_lambda1(lam + h)) - age(params.with_lambda1(lam - h))) / (2 * h)


def minimize_age(mu1: float, s: float, w: float, age: AgeFunction = average_age_stream1) -> OptimizerResult:
    """Minimise the average age of stream 1 over the stable range of ``lambda1``.

    Parameters
    ----------
    mu1, s, w : float
        Fixed service, vacation-start and vacation-end rates.
    age : callable, optional
        Objective; defaults to the published closed form. Pass
        :func:`relayage.analytic.corrected_average_age` for the exact age.

    Returns
    -------
    OptimizerResult
        ``derivative_residual`` is ``|d age / d lambda1| * lambda1* / age*``,
        the slope made dimensionless.
    """
    if not mu1 > 0 or not w > 0:
        raise NonPositiveRate(f"mu1 and w must be > 0, got mu1={mu1!r}, w={w!r}")
    if not s >= 0:
        raise NonPositiveRate(f"s must be >= 0, got {s!r}")
    lam_max = max_stable_lambda1(mu1, s, w)
    lo, hi = EDGE_EPS * lam_max, (1 - EDGE_EPS) * lam_max

    def slope(lam: float) -> float:
        d = age_derivative(SystemParams(lam, mu1, s, w), age)
        if not math.isfinite(d):
            raise NumericalFailure(f"non-finite derivative at lambda1={lam!r}")
        return d

    if not (slope(lo) < 0 < slope(hi)):
        raise NumericalFailure("derivative does not change sign across the stability interval")

    it = 0
    while hi - lo > BRACKET_RTOL * mu1 and it < MAX_ITER:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if slope(mid) < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    if hi - lo > 1e-9 * mu1:
        raise NumericalFailure(f"bracket [{lo!r}, {hi!r}] did not collapse in {it} iterations")

    lam_star = 0.5 * (lo + hi)
    p = SystemParams(lam_star, mu1, s, w)
    d_star = age(p)
    resid = abs(age_derivative(p, age)) * lam_star / d_star
    return OptimizerResult(lam_star, d_star, resid, (lo, hi), it, lam_max)


@dataclass(frozen=True)
class GranularityRow:
    scale: float
    s: float
    w: float
    vacation_fraction: float
    lambda1_star: float
    delta1_star: float


def compare_vacation_granularity(
    mu1: float, ratio: float, scales: Iterable[float], w0: float = 1.0, age: AgeFunction = average_age_stream1
) -> list[GranularityRow]:
    """Minimal age for vacations of equal total share but different granularity.

    Scale ``k`` uses ``w = k * w0`` and ``s = ratio * w``: larger ``k`` means
    shorter, more frequent vacations with the same vacation fraction.
    """
    rows = []
    for k in scales:
        if not k > 0:
            raise ValueError(f"scales must be > 0, got {k!r}")
        w = k * w0
        s = ratio * w
        res = minimize_age(mu1, s, w, age)
        frac = vacation_fraction(SystemParams(res.lambda1_star, mu1, s, w))
        rows.append(GranularityRow(k, s, w, frac, res.lambda1_star, res.delta1_star))
    return rows


@dataclass(frozen=True)
class LoadRow:
    lambda2: float
    lambda1_star: float
    delta1_star: float
    delta2: float


def optimal_rate_vs_load(
    mu1: float, mu2: float, lambda2_list: Sequence[float], age: AgeFunction = average_age_stream1
) -> list[LoadRow]:
    """Optimal stream-1 rate as the relayed (preempting) stream-2 load grows.

    Rows come back sorted by ``lambda2``. A zero ``lambda2`` gives the plain
    M/M/1 optimum with ``delta2 = inf``.
    """
    rows = []
    for lam2 in sorted(lambda2_list):
        if lam2 < 0:
            raise NonPositiveRate(f"lambda2 must be >= 0, got {lam2!r}")
        res = minimize_age(mu1, lam2, mu2, age)
        d2 = average_age_stream2(lam2, mu2) if lam2 > 0 else math.inf
        rows.append(LoadRow(lam2, res.lambda1_star, res.delta1_star, d2))
    return rows
