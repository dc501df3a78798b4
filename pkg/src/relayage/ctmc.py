"""Truncated two-dimensional Markov chain used as an independent numerical oracle.

States are ``(i, status)`` with ``i`` the number of stream-1 packets in the
system and ``status`` either ``"B"`` (server available) or ``"V"`` (on
vacation). The chain is cut at level ``n_max``; arrivals that would exceed it
are dropped, which keeps the generator conservative.

State ``(i, "B")`` has index ``2*i`` and ``(i, "V")`` has index ``2*i + 1``, so
every transition stays within a band of three off-diagonals.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NotLumpable, SingularSystem, TruncationInsufficient
from .model import SystemParams, validate

DEFAULT_N_MAX = 500
DEFAULT_TAIL_TOL = 1e-12
MAX_N_MAX = 4000

State = tuple[int, str]


def state_index(i: int, status: str) -> int:
    return 2 * i + (1 if status == "V" else 0)


def index_state(k: int) -> State:
    return k // 2, "V" if k % 2 else "B"


@dataclass(frozen=True)
class GeneratorSpec:
    params: SystemParams
    n_max: int
    src: np.ndarray
    dst: np.ndarray
    rate: np.ndarray

    @property
    def n_states(self) -> int:
        return 2 * (self.n_max + 1)

    def transitions(self) -> list[tuple[State, State, float]]:
        return [(index_state(a), index_state(b), float(r)) for a, b, r in zip(self.src, self.dst, self.rate)]

    def outgoing(self, state: State) -> dict[State, float]:
        k = state_index(*state)
        sel = self.src == k
        return {index_state(b): float(r) for b, r in zip(self.dst[sel], self.rate[sel])}

    def matrix(self) -> sp.csr_matrix:
        """Infinitesimal generator ``Q`` with rows summing to zero."""
        n = self.n_states
        q = sp.coo_matrix((self.rate, (self.src, self.dst)), shape=(n, n)).tocsr()
        out = np.asarray(q.sum(axis=1)).ravel()
        return (q - sp.diags(out)).tocsr()


def build_generator(params: SystemParams, n_max: int = DEFAULT_N_MAX, *, arrivals: bool = True) -> GeneratorSpec:
    """Transition list of the chain truncated at ``n_max``.

    ``arrivals=False`` drops the stream-1 arrival transitions, which gives the
    process observed between two consecutive arrivals.
    """
    validate(params)
    if n_max < 2:
        raise ValueError(f"n_max must be >= 2, got {n_max}")
    lam, mu, s, w = params.lambda1, params.mu1, params.s, params.w
    src, dst, rate = [], [], []

    def add(a: State, b: State, r: float):
        src.append(state_index(*a))
        dst.append(state_index(*b))
        rate.append(r)

    for i in range(n_max + 1):
        if arrivals and i < n_max:
            add((i, "B"), (i + 1, "B"), lam)
        add((i, "B"), (i, "V"), s)
        if i >= 1:
            add((i, "B"), (i - 1, "B"), mu)
        if arrivals and i < n_max:
            add((i, "V"), (i + 1, "V"), lam)
        add((i, "V"), (i, "B"), w)
    return GeneratorSpec(
        params,
        n_max,
        np.asarray(src, dtype=np.int64),
        np.asarray(dst, dtype=np.int64),
        np.asarray(rate, dtype=float),
    )


@dataclass(frozen=True)
class TruncatedDistribution:
    n_max: int
    pi_b: np.ndarray
    pi_v: np.ndarray
    tail_mass_bound: float

    @property
    def pi(self) -> np.ndarray:
        """Marginal queue-length distribution ``pi_b + pi_v``."""
        return self.pi_b + self.pi_v

    @property
    def vacation_mass(self) -> float:
        return float(self.pi_v.sum())

    def as_vector(self) -> np.ndarray:
        v = np.empty(2 * (self.n_max + 1))
        v[0::2] = self.pi_b
        v[1::2] = self.pi_v
        return v


def _tail_bound(level: np.ndarray) -> float:
    """Geometric extrapolation of the probability mass above the truncation level.

    Far levels sit at the round-off floor of the solve (and the top level also
    collects the dropped arrivals), so the decay rate is measured over the
    last levels that are still well above round-off.
    """
    top = float(level.max())
    usable = np.flatnonzero(level[:-1] > 1e-8 * top)
    k = int(usable[-1])
    span = min(10, k)
    if span == 0 or level[k - span] <= 0:
        return float("inf")
    r = (level[k] / level[k - span]) ** (1.0 / span)
    if r >= 1:
        return float("inf")
    return float(level[k] * r ** (len(level) - k) / (1.0 - r))


def _pinned_solve(qt, pin: int) -> np.ndarray:
    # replace the last balance equation by pi[pin] = 1
    a = qt.tolil()
    n = a.shape[0]
    a[n - 1, :] = 0.0
    a[n - 1, pin] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    with np.errstate(all="ignore"):
        return spla.spsolve(a.tocsc(), b)


def solve_stationary(gen: GeneratorSpec, tol: float = DEFAULT_TAIL_TOL) -> TruncatedDistribution:
    """Solve ``pi Q = 0, sum(pi) = 1`` by sparse LU.

    One balance equation is replaced by fixing ``pi`` at a single state, which
    keeps the system banded, and the result is normalised afterwards. The
    state ``(0, B)`` is tried first; if the unnormalised solution overflows
    (mass piled up at the truncation level, e.g. unstable rates) the top
    level is pinned instead.
    """
    qt = gen.matrix().T
    try:
        pi = _pinned_solve(qt, state_index(0, "B"))
        if not np.all(np.isfinite(pi)):
            pi = _pinned_solve(qt, state_index(gen.n_max, "B"))
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(pi)) or not pi.sum() > 0:
        raise SingularSystem("stationary solve produced non-finite values")
    # round-off can leave entries like -1e-300
    pi = np.where(pi < 0, 0.0, pi)
    pi /= pi.sum()
    pi_b, pi_v = pi[0::2].copy(), pi[1::2].copy()
    tail = _tail_bound(pi_b + pi_v)
    if not tail <= tol:
        raise TruncationInsufficient(f"tail mass bound {tail:g} above tolerance {tol:g} at n_max={gen.n_max}")
    return TruncatedDistribution(gen.n_max, pi_b, pi_v, tail)


def stationary_distribution(
    params: SystemParams,
    n_max: int = DEFAULT_N_MAX,
    tol: float = DEFAULT_TAIL_TOL,
    max_n_max: int = MAX_N_MAX,
) -> TruncatedDistribution:
    """Build and solve, doubling ``n_max`` until the tail bound is below ``tol``."""
    while True:
        try:
            return solve_stationary(build_generator(params, n_max), tol)
        except TruncationInsufficient:
            if 2 * n_max > max_n_max:
                raise
            n_max *= 2


def verify_balance(dist: TruncatedDistribution, params: SystemParams) -> float:
    """Largest absolute residual of the level-by-level balance equations.

    Checks both equation families at every level below ``n_max`` (the rows
    that the truncation leaves untouched).
    """
    lam, mu, s, w = params.lambda1, params.mu1, params.s, params.w
    pb, pv = dist.pi_b, dist.pi_v
    n = dist.n_max
    prev_v = np.concatenate(([0.0], pv[: n - 1]))
    res_v = (lam + w) * pv[:n] - lam * prev_v - s * pb[:n]

    prev_b = np.concatenate(([0.0], pb[: n - 1]))
    busy = np.where(np.arange(n) > 0, mu, 0.0)
    res_b = (lam + s + busy) * pb[:n] - mu * pb[1 : n + 1] - lam * prev_b - w * pv[:n]
    return float(max(np.abs(res_v).max(), np.abs(res_b).max()))


@dataclass(frozen=True)
class LumpedChain:
    blocks: tuple[frozenset, ...]
    rates: dict[tuple[int, int], float]
    pi: np.ndarray

    def rate(self, src_block: int, dst_block: int) -> float:
        return self.rates.get((src_block, dst_block), 0.0)


def vacation_partition(n_max: int) -> tuple[frozenset, frozenset]:
    """The ``(all V states, all B states)`` partition."""
    return (
        frozenset((i, "V") for i in range(n_max + 1)),
        frozenset((i, "B") for i in range(n_max + 1)),
    )


def check_lumpability(
    gen: GeneratorSpec,
    partition: Sequence[Iterable[State]] | None = None,
    atol: float = 1e-12,
) -> LumpedChain:
    """Verify that aggregate rates between blocks do not depend on the state within a block.

    With the default ``(V, B)`` partition the returned chain has two states
    and its stationary vector is ``(pi_V, pi_B)``.

    Raises
    ------
    NotLumpable
        If two states of one block have block-to-block rate sums that differ
        by more than ``atol``.
    """
    if partition is None:
        partition = vacation_partition(gen.n_max)
    blocks = tuple(frozenset(b) for b in partition)
    label = np.full(gen.n_states, -1, dtype=np.int64)
    for bi, block in enumerate(blocks):
        for st in block:
            k = state_index(*st)
            if label[k] != -1:
                raise ValueError(f"state {st} appears in more than one block")
            label[k] = bi
    if np.any(label < 0):
        missing = [index_state(k) for k in np.flatnonzero(label < 0)[:5]]
        raise ValueError(f"partition does not cover every state, e.g. {missing}")

    nb = len(blocks)
    # sums[k, j] = total rate from state k into block j
    sums = np.zeros((gen.n_states, nb))
    np.add.at(sums, (gen.src, label[gen.dst]), gen.rate)

    rates: dict[tuple[int, int], float] = {}
    for bi in range(nb):
        rows = sums[label == bi]
        for bj in range(nb):
            if bi == bj:
                continue
            col = rows[:, bj]
            if col.max() - col.min() > atol:
                raise NotLumpable(
                    f"rates from block {bi} to block {bj} range over [{col.min():g}, {col.max():g}]"
                )
            if col[0] != 0:
                rates[(bi, bj)] = float(col[0])

    q = np.zeros((nb, nb))
    for (bi, bj), r in rates.items():
        q[bi, bj] = r
    q -= np.diag(q.sum(axis=1))
    a = q.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(nb)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError:
        # reducible lumped chain, e.g. s = 0: V-block is transient
        pi = np.linalg.lstsq(a, rhs, rcond=None)[0]
    return LumpedChain(blocks, rates, pi)


def arrival_state_moments(params: SystemParams, dist: TruncatedDistribution) -> tuple[float, float]:
    """``P(arrival finds (0, V))`` and ``E(A * 1{arrival finds (0, V)})`` from the chain.

    The state right after an arrival is the stationary state shifted up one
    level; between arrivals the chain evolves with the arrival transitions
    removed (generator ``Q0``). Then, with ``M = lambda1*I - Q0``::

        P = lambda1 * pi_plus M^{-1} e,    E = lambda1 * pi_plus M^{-2} e
    """
    lam = params.lambda1
    n = dist.n_max
    q0 = build_generator(params, n, arrivals=False).matrix()
    m = (lam * sp.identity(q0.shape[0]) - q0).T.tocsc()
    plus = np.zeros(q0.shape[0])
    plus[2:: 2] = dist.pi_b[:n]
    plus[3:: 2] = dist.pi_v[:n]
    lu = spla.splu(m)
    x = lu.solve(plus)
    y = lu.solve(x)
    k = state_index(0, "V")
    return float(lam * x[k]), float(lam * y[k])
