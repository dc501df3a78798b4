"""Simulate the queue and compare with both versions of the average age.

The closed form treats the interarrival time before a packet as independent
of the state the packet finds; in fact a long gap makes an idle vacation more
likely. The simulation sides with the exact version.

Run:  python demos/03_simulation.py
"""
from relayage import SystemParams, average_age_stream1, corrected_average_age
from relayage.sim import SimConfig, run_experiment

for rates in [(0.3, 1, 1, 1), (0.2, 1, 0.2, 0.2)]:
    p = SystemParams(*rates)
    s = run_experiment(SimConfig(p, packets=1_000_000, replications=10, seed=1))
    half = s.ci("avg_age_stream1")
    print(f"{rates}: simulated {s.avg_age_stream1:.4f} +/- {half:.4f}")
    print(f"    closed form {average_age_stream1(p):.4f}, exact {corrected_average_age(p):.4f}")
    print(f"    vacation fraction {s.vacation_fraction_emp:.4f}, E(A*B) {s.e_ab:.4f}, E(A*Y) {s.e_ay:.4f}")
