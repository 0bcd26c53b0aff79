"""Exact mixing curve on a small segment, bracketed by the two Monte Carlo bounds.

The exact curve comes from uniformization of the full generator; the
upper bound is the tail of the hitting time from the minimal to the
maximal configuration, and the lower bound tests the event that the
leftmost particle has not yet travelled far enough.
"""

from asep_cutoff.experiments import exact_mixing_curve, tv_lower_bound_mc, tv_upper_bound_mc

N, k, Q = 8, 4, 0.5
p = 1 / (1 + Q)
grid = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0]

upper = tv_upper_bound_mc(N, k, p, grid, reps=4000, seed=1)
lower = tv_lower_bound_mc(N, k, p, grid, reps=4000, seed=2)
exact = exact_mixing_curve(N, k, p, [u.t for u in upper])

print(f"{'c':>5} {'t':>8} {'lower':>8} {'exact':>8} {'upper':>8}")
for u, lo, ex in zip(upper, lower, exact):
    print(f"{u.c:5.1f} {u.t:8.3f} {lo.lower:8.4f} {ex.exact:8.4f} {u.upper:8.4f}")
