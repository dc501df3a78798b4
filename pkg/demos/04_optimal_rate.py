"""Age-optimal update rate, and why many short vacations beat few long ones.

Run:  python demos/04_optimal_rate.py
"""
from relayage import compare_vacation_granularity, minimize_age

res = minimize_age(mu1=1.0, s=0.0, w=1.0)
print(f"no vacations:  lambda1* = {res.lambda1_star:.5f}, age = {res.delta1_star:.5f}")

# Same 50% vacation share in every row, split into ever shorter pieces.
print("\n  s=w   lambda1*   min age")
for row in compare_vacation_granularity(mu1=1.0, ratio=1.0, scales=[0.5, 1, 4, 16]):
    print(f"{row.s:5g}   {row.lambda1_star:.5f}   {row.delta1_star:.5f}")
