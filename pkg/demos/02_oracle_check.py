"""Cross-check the closed forms against the truncated Markov chain.

The chain knows nothing about generating functions; it is a sparse linear
solve on the (queue length, server status) state space.

Run:  python demos/02_oracle_check.py
"""
import numpy as np

from relayage import SystemParams, pgf_coefficients, pi_b0
from relayage.ctmc import build_generator, check_lumpability, stationary_distribution, verify_balance

p = SystemParams(0.3, 1.0, 0.5, 1.0)
dist = stationary_distribution(p)
coef = pgf_coefficients(p, 51)

print(f"truncation level        {dist.n_max} (tail mass <= {dist.tail_mass_bound:.1e})")
print(f"balance residual        {verify_balance(dist, p):.1e}")
print(f"pi_B(0) chain / formula {dist.pi_b[0]:.12f} / {pi_b0(p):.12f}")
print(f"max |pi_i - coef_i|     {np.abs(dist.pi[:51] - coef).max():.1e}  (i <= 50)")

# Lumping all vacation states and all available states gives a two-state chain.
lumped = check_lumpability(build_generator(p, 200))
print(f"lumped rates V->B, B->V {lumped.rate(0, 1)}, {lumped.rate(1, 0)}")
print(f"lumped P(vacation)      {lumped.pi[0]:.12f}")
