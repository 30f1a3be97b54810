"""Dominance relations and nondominated filtering on toy point clouds.

Walks through the two core relations (componentwise order and strict
dominance), filters a random cloud down to its front, and shows the
analytic benchmark problems the solvers are verified against.
"""

import numpy as np

from mocp.mop import dominates, leq_p, nondominated_filter
from mocp.problems import analytic_mops

print("== pairwise relations ==")
pairs = [((1, 2), (2, 3)), ((1, 2), (1, 2)), ((0, 5), (5, 0))]
for v, w in pairs:
    print(f"  v={v} w={w}: v <=_p w: {leq_p(v, w)}, v dominates w: {dominates(v, w)}")

print("\n== filtering a random cloud ==")
rng = np.random.default_rng(0)
cloud = rng.random((200, 2))
front = nondominated_filter(cloud)
print(f"  {len(cloud)} points -> {len(front)} nondominated")
order = np.argsort(front[:, 0])
print("  front (sorted by J1):")
for j1, j2 in front[order][:8]:
    print(f"    ({j1:.3f}, {j2:.3f})")

print("\n== analytic benchmark problems ==")
for name, prob in analytic_mops().items():
    xs = np.linspace(prob.bounds[0][0], prob.bounds[0][1], 5)
    sample = prob.evaluate(np.full(prob.decision_dim, xs[2]))
    print(f"  {name}: m={prob.decision_dim}, J(center)={np.round(sample, 3)}")

print("\nThe convex pair has the closed-form front sqrt(J1) + sqrt(J2) = 1;")
print("the two-valley problem has a disconnected front that defeats")
print("continuation but not the box covering (see demo 02/03).")
