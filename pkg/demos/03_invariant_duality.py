"""Transport constrained to permutation-invariant couplings: the restricted
primal equals its restricted dual, the full quadratic cost equals the
dimension times the single-coordinate invariant cost for transitive actions,
and the mixture-target counterexample where no invariant map exists.
"""

import numpy as np

from seqot import (
    DiscreteMeasure,
    haar_project,
    invariant_duality_value,
    no_map_counterexample,
    solve_invariant_ot,
    symmetric_group,
    transitive_identity_check,
)
from seqot.invariance import close_support

g = symmetric_group(2)
mu = DiscreteMeasure([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])
nu = DiscreteMeasure([[0.0, 2.0], [2.0, 0.0]], [0.5, 0.5])

primal = solve_invariant_ot(mu, nu, g)
dual = invariant_duality_value(mu, nu, g)
print(f"invariant primal  {primal.value:.10f}")
print(f"invariant dual    {dual.value:.10f}")
print(f"orbit variables   {primal.n_orbits} (instead of {2 * 2} pair weights)")

rep = transitive_identity_check(mu, nu, g)
print(f"\nfull quadratic cost          {rep.full_value:.10f}")
print(f"dim x single-coordinate cost {rep.dim_times_invariant:.10f}")
print(f"per-coordinate costs         {np.round(rep.per_coordinate_costs, 10)}")

# Haar averaging projects any function onto the invariant subspace
pts = close_support(mu, g).points
f = pts[:, 0]  # the first coordinate, not invariant
fbar = haar_project(f, pts, g)
print(f"\ncoordinate function on the support: {f}")
print(f"its group average:                  {fbar}")

# a symmetric source with a mixture target: the optimal invariant plan splits
a = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
b = DiscreteMeasure([[0.0], [2.0]], [0.5, 0.5])
nomap = no_map_counterexample(a, b, 2, g)
print(f"\nmixture-target graph concentration {nomap.concentration:.3f} "
      f"(a transport map would give 1.0)")
same = no_map_counterexample(a, a, 2, g)
print(f"identical components give the diagonal plan: {same.concentration:.3f}")
