"""Current fluctuations of step ASEP against the Tracy-Widom GUE law.

At time g(k, c) the k-th particle of the step configuration is behind
position N - 2k with probability close to 1 - F_GUE(c f(k/N)); the same
function governs the cutoff profile of the segment process.
"""

from asep_cutoff.experiments import event_B_mc, kolmogorov_distance, step_fluct_mc
from asep_cutoff.tracy_widom import f_alpha, f_gue

N, k, p = 128, 64, 0.85
grid = [float(c) for c in range(-4, 5)]

points = step_fluct_mc(N, k, p, grid, reps=1000, seed=3)
est, se = event_B_mc(N, k, p, grid, reps=1000, seed=4)
fa = f_alpha(k / N)

print(f"{'c':>5} {'step':>7} {'1-F':>7} {'B':>7} {'F':>7}")
for pt, b in zip(points, est):
    print(f"{pt.c:5.1f} {pt.empirical:7.3f} {pt.predicted:7.3f} {b:7.3f} {f_gue(pt.c * fa):7.3f}")
print(f"Kolmogorov distance of the step profile: {kolmogorov_distance(points):.3f}")
