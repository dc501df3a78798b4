"""A relay that forwards a second stream with preemptive priority.

From the monitored stream's point of view, serving a stream-2 packet is a
vacation: it starts at rate lambda2 and ends at rate mu2.

Run:  python demos/05_relay.py
"""
from relayage import SystemParams, optimal_rate_vs_load
from relayage.model import Mode
from relayage.sim import SimConfig, run_experiment

print("lambda2  lambda1*  age1*    age2   | simulated age1  age2")
for row in optimal_rate_vs_load(mu1=1.0, mu2=4.0, lambda2_list=[0.5, 1, 2, 4]):
    p = SystemParams.relay(row.lambda1_star, 1.0, row.lambda2, 4.0)
    s = run_experiment(SimConfig(p, mode=Mode.RELAY, packets=500_000, replications=2, seed=3))
    print(
        f"{row.lambda2:7g}  {row.lambda1_star:.4f}   {row.delta1_star:.4f}  {row.delta2:.4f} |"
        f" {s.avg_age_stream1:.4f}          {s.avg_age_stream2:.4f}"
    )
