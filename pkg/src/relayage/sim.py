"""Discrete-event simulation of the vacation / relay queue.

The event loop itself lives in :mod:`relayage._kernel` (compiled with numba);
this module handles configuration, seeding, per-packet bookkeeping and
aggregation across replications.

Random numbers come from NumPy's ``PCG64`` bit generator. Replication ``k`` of
a run with base seed ``seed`` uses ``SeedSequence(seed, spawn_key=(k,))``, so
every replication is reproducible on its own and independent of how many
others are run.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import IO

import numpy as np
from scipy import stats

from . import _kernel
from .analytic import SojournMixture
from .errors import InvalidConfig
from .model import Mode, SystemParams, is_stable

MIN_RETAINED = 10_000
MIN_SOJOURN_SAMPLES = 100_000
Z95 = 1.959963984540054


class ShortHorizonWarning(UserWarning):
    pass


class UnstableSimulationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SimConfig:
    """One simulation experiment.

    ``packets`` is the number of stream-1 arrivals per replication. ``warmup``
    is a packet count (int), a fraction of ``packets`` (float in ``(0, 1)``), or
    ``None`` for the default of 5% with a floor of 1000 packets (never more
    than half the run).
    """

    params: SystemParams
    mode: Mode = Mode.VACATION
    packets: int = 1_000_000
    warmup: int | float | None = None
    seed: int = 0
    replications: int = 1
    resume_service: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not isinstance(self.packets, (int, np.integer)) or self.packets < 2:
            raise InvalidConfig(f"packets must be an integer >= 2, got {self.packets!r}")
        if not isinstance(self.replications, (int, np.integer)) or self.replications < 1:
            raise InvalidConfig(f"replications must be >= 1, got {self.replications!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InvalidConfig(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.params.s == 0 and self.mode is Mode.RELAY:
            raise InvalidConfig("relay mode needs lambda2 > 0")
        self.warmup_count  # validates warmup

    @property
    def warmup_count(self) -> int:
        wu = self.warmup
        if wu is None:
            k = max(int(0.05 * self.packets), 1000)
            return max(1, min(k, self.packets // 2))
        if isinstance(wu, float):
            if not 0 < wu < 1:
                raise InvalidConfig(f"fractional warmup must lie in (0, 1), got {wu}")
            return max(1, int(wu * self.packets))
        if not 1 <= wu < self.packets:
            raise InvalidConfig(f"warmup count must lie in [1, packets), got {wu}")
        return int(wu)

    @property
    def retained(self) -> int:
        return self.packets - self.warmup_count


def replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


@dataclass(frozen=True)
class PacketRecords:
    """Per-packet quantities for the retained packets.

    ``A`` is the interarrival time preceding the packet, ``T`` its sojourn,
    ``B`` its waiting time and ``Y`` its virtual service time; ``T = B + Y``.
    ``found`` encodes the state the packet saw on arrival (see
    ``relayage._kernel.FOUND_*``) and ``interruptions`` counts the vacations
    that started while it was in service.
    """

    j: np.ndarray
    t_arrival: np.ndarray
    t_depart: np.ndarray
    A: np.ndarray
    T: np.ndarray
    B: np.ndarray
    Y: np.ndarray
    interruptions: np.ndarray
    found: np.ndarray

    def __len__(self):
        return len(self.j)

    @property
    def found_idle_vacation(self) -> np.ndarray:
        return self.found == _kernel.FOUND_IDLE_VACATION

    def to_csv(self, dest: str | IO[str]) -> None:
        """Write ``j,t_arrival,t_depart,A,T,B,Y`` with 12 significant digits."""
        table = np.column_stack([self.t_arrival, self.t_depart, self.A, self.T, self.B, self.Y])
        own = isinstance(dest, str)
        fh = open(dest, "w", newline="") if own else dest
        try:
            fh.write("j,t_arrival,t_depart,A,T,B,Y\n")
            for j, row in zip(self.j, table):
                fh.write(str(int(j)) + "," + ",".join(f"{v:.12g}" for v in row) + "\n")
        finally:
            if own:
                fh.close()


@dataclass(frozen=True)
class SimSummary:
    avg_age_stream1: float
    avg_age_stream2: float | None
    e_at: float
    e_ab: float
    e_ay: float
    mean_sojourn: float
    mean_waiting: float
    e_y_idle: float
    e_y_busy: float
    e_y_vac: float
    p_found_idle_vacation: float
    vacation_fraction_emp: float
    n_retained: int
    replications: int = 1
    ci95: dict[str, float] | None = None
    records: PacketRecords | None = field(default=None, compare=False, repr=False)
    per_replication: tuple["SimSummary", ...] = field(default=(), compare=False, repr=False)
    stable: bool = True

    def ci(self, name: str) -> float | None:
        if self.ci95 is None:
            return None
        return self.ci95.get(name)


STAT_FIELDS = (
    "avg_age_stream1",
    "avg_age_stream2",
    "e_at",
    "e_ab",
    "e_ay",
    "mean_sojourn",
    "mean_waiting",
    "e_y_idle",
    "e_y_busy",
    "e_y_vac",
    "p_found_idle_vacation",
    "vacation_fraction_emp",
)


def _mean_or_nan(x: np.ndarray) -> float:
    return float(x.mean()) if len(x) else math.nan


def _summarize(out, config: SimConfig, keep_records: bool) -> SimSummary:
    t_arr, t_dep, intr, found, w0, w1, vac_time, age2_area, _ = out
    warmup = config.warmup_count
    if np.any(np.diff(t_dep) < 0):
        raise AssertionError("stream-1 departures out of arrival order")

    j = np.arange(warmup, config.packets)
    ta, td = t_arr[j], t_dep[j]
    ta_prev, td_prev = t_arr[j - 1], t_dep[j - 1]
    A = ta - ta_prev
    T = td - ta
    start = np.maximum(td_prev, ta)
    B = start - ta
    Y = td - start
    f = found[j]

    duration = w1 - w0
    # exact area under the sawtooth between consecutive departures
    area = np.sum((td - td_prev) * ((td - ta_prev) + (td_prev - ta_prev))) * 0.5
    not_upsilon = f != _kernel.FOUND_IDLE_VACATION

    records = None
    if keep_records:
        records = PacketRecords(j, ta, td, A, T, B, Y, intr[j], f)
    return SimSummary(
        avg_age_stream1=float(area / duration),
        avg_age_stream2=float(age2_area / duration) if config.mode is Mode.RELAY else None,
        e_at=float(np.mean(A * T)),
        e_ab=float(np.mean(A * B)),
        e_ay=float(np.mean(A * Y)),
        mean_sojourn=float(T.mean()),
        mean_waiting=float(B.mean()),
        e_y_idle=_mean_or_nan(Y[f == _kernel.FOUND_IDLE]),
        e_y_busy=_mean_or_nan(Y[not_upsilon]),
        e_y_vac=_mean_or_nan(Y[~not_upsilon]),
        p_found_idle_vacation=float(np.mean(~not_upsilon)),
        vacation_fraction_emp=float(vac_time / duration),
        n_retained=len(j),
        records=records,
        stable=is_stable(config.params),
    )


def run_replication(config: SimConfig, replication_index: int = 0, keep_records: bool = False) -> SimSummary:
    """Simulate one replication.

    Unstable parameters are accepted (with a warning); the queue then grows
    without bound and the summary has ``stable=False``.
    """
    if not 0 <= replication_index:
        raise InvalidConfig(f"replication index must be >= 0, got {replication_index}")
    p = config.params
    if not is_stable(p):
        warnings.warn(f"simulating unstable parameters {p}", UnstableSimulationWarning, stacklevel=2)
    if config.retained < MIN_RETAINED:
        warnings.warn(
            f"only {config.retained} packets retained after warmup (< {MIN_RETAINED}); estimates will be noisy",
            ShortHorizonWarning,
            stacklevel=2,
        )
    rng = replication_rng(config.seed, replication_index)
    out = _kernel.simulate(
        rng,
        float(p.lambda1),
        float(p.mu1),
        float(p.s),
        float(p.w),
        config.mode is Mode.RELAY,
        bool(config.resume_service),
        int(config.packets),
        int(config.warmup_count),
    )
    return _summarize(out, config, keep_records)


def aggregate(runs: list[SimSummary]) -> SimSummary:
    """Means across replications with 95% normal-approximation half-widths."""
    if not runs:
        raise InvalidConfig("nothing to aggregate")
    means: dict[str, float | None] = {}
    ci: dict[str, float] | None = {} if len(runs) >= 2 else None
    for name in STAT_FIELDS:
        vals = [getattr(r, name) for r in runs]
        if any(v is None for v in vals):
            means[name] = None
            continue
        arr = np.asarray(vals, dtype=float)
        arr = arr[np.isfinite(arr)]
        means[name] = float(arr.mean()) if len(arr) else math.nan
        if ci is not None:
            ci[name] = float(Z95 * arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) >= 2 else math.nan
    return SimSummary(
        **means,
        n_retained=sum(r.n_retained for r in runs),
        replications=len(runs),
        ci95=ci,
        records=runs[0].records,
        per_replication=tuple(replace(r, records=None) for r in runs),
        stable=runs[0].stable,
    )


def run_experiment(config: SimConfig, keep_records: bool = False) -> SimSummary:
    """Run all replications and aggregate them.

    With ``keep_records`` the per-packet records of replication 0 are attached.
    """
    runs = [
        run_replication(config, k, keep_records=keep_records and k == 0) for k in range(config.replications)
    ]
    return aggregate(runs)


@dataclass(frozen=True)
class SojournReport:
    n: int
    sufficient: bool
    mean_emp: float
    mean_model: float
    mean_rel_err: float
    second_moment_emp: float
    second_moment_model: float
    cdf_sup_distance: float


def empirical_sojourn_check(
    records: PacketRecords, mixture: SojournMixture, min_samples: int = MIN_SOJOURN_SAMPLES
) -> SojournReport:
    """Compare simulated sojourn times with the two-exponential mixture law.

    The sup-norm distance is the Kolmogorov-Smirnov statistic; sojourn times
    of consecutive packets are correlated, so no p-value is reported.
    """
    T = np.asarray(records.T)
    n = len(T)
    mean_emp = float(T.mean()) if n else math.nan
    mean_model = mixture.mean()
    dist = float(stats.kstest(T, mixture.cdf).statistic) if n else math.nan
    return SojournReport(
        n=n,
        sufficient=n >= min_samples,
        mean_emp=mean_emp,
        mean_model=mean_model,
        mean_rel_err=abs(mean_emp - mean_model) / mean_model,
        second_moment_emp=float(np.mean(T**2)) if n else math.nan,
        second_moment_model=mixture.second_moment(),
        cdf_sup_distance=dist,
    )


@dataclass(frozen=True)
class GeometricReport:
    p: float
    n: int
    observed: np.ndarray
    expected: np.ndarray
    chi2: float
    pvalue: float
    mean_emp: float
    mean_model: float


def interruption_count_check(records: PacketRecords, params: SystemParams, min_expected: float = 5.0) -> GeometricReport:
    """Chi-square test of the per-packet interruption counts against Geometric(mu1 / (mu1 + s)).

    Bins are ``0, 1, ..., k-1`` plus a tail bin ``>= k`` where ``k`` keeps
    every expected count at least ``min_expected``.
    """
    L = np.asarray(records.interruptions)
    n = len(L)
    p = params.mu1 / (params.mu1 + params.s)
    if p == 1.0:
        # no vacations: the law is a point mass at zero
        clean = bool(np.all(L == 0))
        return GeometricReport(
            p=p,
            n=n,
            observed=np.array([float(np.sum(L == 0)), float(np.sum(L > 0))]),
            expected=np.array([float(n), 0.0]),
            chi2=0.0 if clean else math.inf,
            pvalue=1.0 if clean else 0.0,
            mean_emp=float(L.mean()) if n else math.nan,
            mean_model=0.0,
        )
    k = 1
    while n * (1 - p) ** (k + 1) >= min_expected:
        k += 1
    probs = np.array([p * (1 - p) ** i for i in range(k)] + [(1 - p) ** k])
    observed = np.array([np.sum(L == i) for i in range(k)] + [np.sum(L >= k)], dtype=float)
    expected = n * probs
    res = stats.chisquare(observed, expected)
    return GeometricReport(
        p=p,
        n=n,
        observed=observed,
        expected=expected,
        chi2=float(res.statistic),
        pvalue=float(res.pvalue),
        mean_emp=float(L.mean()),
        mean_model=(1 - p) / p,
    )


__all__ = [
    "SimConfig",
    "PacketRecords",
    "SimSummary",
    "SojournReport",
    "GeometricReport",
    "ShortHorizonWarning",
    "UnstableSimulationWarning",
    "replication_rng",
    "run_replication",
    "run_experiment",
    "aggregate",
    "empirical_sojourn_check",
    "interruption_count_check",
]

# keep dataclass field order in sync with STAT_FIELDS
assert set(STAT_FIELDS) <= {f.name for f in fields(SimSummary)}
