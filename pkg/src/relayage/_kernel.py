"""Compiled event loop behind :mod:`relayage.sim`."""
import numpy as np
from numba import njit

# state an arriving stream-1 packet finds
FOUND_IDLE = 0  # empty queue, server available
FOUND_IDLE_VACATION = 1  # empty queue, server on vacation
FOUND_BUSY = 2  # packets ahead, server available
FOUND_BUSY_VACATION = 3  # packets ahead, server on vacation

INF = np.inf


@njit(cache=True)
def simulate(rng, lam, mu, s, w, relay, resume, n_packets, warmup):
    """Run until ``n_packets`` stream-1 packets have departed.

    Returns per-packet arrays and window totals; the measurement window runs
    from the departure of packet ``warmup - 1`` to the last departure.
    In relay mode ``s``/``w`` are the stream-2 arrival/service rates and a
    stream-2 arrival preempts whatever is in service.
    """
    t_arr = np.empty(n_packets)
    t_dep = np.empty(n_packets)
    interruptions = np.zeros(n_packets, dtype=np.int64)
    found = np.empty(n_packets, dtype=np.int8)

    t = 0.0
    n_in = 0
    n_arrived = 0
    n_departed = 0
    on_vac = False

    next_arr = rng.exponential(1.0 / lam)
    next_dep = INF
    next_vac_end = INF
    # vacation mode: vacation-start timer, runs only while the server is available
    # relay mode: stream-2 arrival clock, always running
    next_vac_start = rng.exponential(1.0 / s) if s > 0 else INF
    remaining = 0.0
    has_remaining = False

    # stream-2 bookkeeping (relay mode)
    u2 = 0.0  # generation time of the last delivered stream-2 packet
    gen2 = 0.0  # generation time of the stream-2 packet in service
    n2_delivered = 0

    in_window = False
    window_start = 0.0
    vac_time = 0.0
    age2_area = 0.0

    while True:
        # ties: departure, vacation end, vacation start / stream-2 arrival, arrival
        t_next = next_dep
        ev = 0
        if next_vac_end < t_next:
            t_next = next_vac_end
            ev = 1
        if next_vac_start < t_next:
            t_next = next_vac_start
            ev = 2
        if next_arr < t_next:
            t_next = next_arr
            ev = 3

        if in_window:
            dt = t_next - t
            if on_vac:
                vac_time += dt
            if relay:
                age2_area += dt * ((t - u2) + (t_next - u2)) * 0.5
        t = t_next

        if ev == 0:
            # stream-1 departure; always happens with the server available
            t_dep[n_departed] = t
            n_departed += 1
            n_in -= 1
            if n_departed == warmup:
                in_window = True
                window_start = t
            if n_departed == n_packets:
                break
            if n_in > 0:
                next_dep = t + rng.exponential(1.0 / mu)
            else:
                next_dep = INF
        elif ev == 1:
            # vacation ends (relay: stream-2 delivery)
            on_vac = False
            next_vac_end = INF
            if relay:
                u2 = gen2
                n2_delivered += 1
            else:
                next_vac_start = t + rng.exponential(1.0 / s)
            if n_in > 0:
                if resume and has_remaining:
                    next_dep = t + remaining
                else:
                    next_dep = t + rng.exponential(1.0 / mu)
            has_remaining = False
        elif ev == 2:
            if relay:
                next_vac_start = t + rng.exponential(1.0 / s)
                gen2 = t
                # a fresh stream-2 packet replaces the one in service
                next_vac_end = t + rng.exponential(1.0 / w)
                if not on_vac:
                    on_vac = True
                    if n_in > 0:
                        interruptions[n_departed] += 1
                        remaining = next_dep - t
                        has_remaining = True
                        next_dep = INF
            else:
                on_vac = True
                next_vac_start = INF
                next_vac_end = t + rng.exponential(1.0 / w)
                if n_in > 0:
                    interruptions[n_departed] += 1
                    remaining = next_dep - t
                    has_remaining = True
                    next_dep = INF
        else:
            j = n_arrived
            t_arr[j] = t
            if n_in == 0:
                found[j] = FOUND_IDLE_VACATION if on_vac else FOUND_IDLE
                if not on_vac:
                    next_dep = t + rng.exponential(1.0 / mu)
            else:
                found[j] = FOUND_BUSY_VACATION if on_vac else FOUND_BUSY
            n_in += 1
            n_arrived += 1
            if n_arrived < n_packets:
                next_arr = t + rng.exponential(1.0 / lam)
            else:
                next_arr = INF

    return t_arr, t_dep, interruptions, found, window_start, t, vac_time, age2_area, n2_delivered
