"""Closed-form quantities for one instance of the vacation queue.

Run:  python demos/01_closed_forms.py
"""
from relayage import SystemParams, age_breakdown, sojourn_mixture

p = SystemParams(lambda1=0.4, mu1=1.0, s=1.0, w=1.0)
print(f"instance: {p}")

# The server is away half the time (s = w), so the effective capacity is 0.5
# and the stream runs at 80% of it.
b = age_breakdown(p)
print(f"P(empty, server available)  {b.pi_b0:.6f}")
print(f"P(empty, server on vacation) {b.pi_v0:.6f}")
print(f"fraction of time on vacation {b.vacation_fraction:.6f}")

m = sojourn_mixture(p)
print(f"sojourn density  {m.c1:+.5f} exp({m.alpha1:.5f} t) {m.c2:+.5f} exp({m.alpha2:.5f} t)")
print(f"mean sojourn     {m.mean():.6f}")

print(f"E(A*B)           {b.e_ab:.6f}")
print(f"E(A*Y) closed    {b.e_ay:.6f}")
print(f"E(A*Y) exact     {b.e_ay_corrected:.6f}")
print(f"average age      {b.delta1:.6f} (closed form)")
print(f"                 {b.delta1_corrected:.6f} (with the exact E(A*Y))")
