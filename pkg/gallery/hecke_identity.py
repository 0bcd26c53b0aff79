"""Particle-hole versus two-species duality, exactly and by simulation.

On a short interval the two random permutations are computed exactly in
the Hecke algebra and compared coefficient by coefficient.  On a long
interval only the event probabilities are accessible, so both sides are
simulated and compared through a z-score.
"""

from asep_cutoff.experiments import auxiliary_identity_mc
from asep_cutoff.hecke import corollary_event_check, distribution_identity_check

Q, t = 0.5, 1.0
p = 1 / (1 + Q)

print("sup-norm gap at S=R=M=1:", distribution_identity_check(1, 1, 1, t, p, Q))
for x, y in [(-2, 1), (-1, 0), (0, 2)]:
    lhs, rhs = corollary_event_check(1, 1, 1, t, p, Q, x, y)
    print(f"x={x:+d} y={y:+d}: {lhs:.12f} {rhs:.12f}")

est = auxiliary_identity_mc(50, 20, 20, 10.0, p, Q, -22, 22, reps=2000, seed=5)
print(f"S=50: lhs {est.lhs:.4f} +- {est.lhs_se:.4f}, rhs {est.rhs:.4f} +- {est.rhs_se:.4f}, z {est.z_score:.2f}")
