"""The entropy side of transport: relative entropy dominates the squared gap
between transport maps onto a uniformly log-concave target, and shift-density
moments control increments of the transport potential.
"""

import numpy as np

from seqot import (
    assumption_A_probe,
    gaussian1d,
    gaussian_grid,
    lemma21_check,
    mixture_grid,
    relative_entropy,
    talagrand_gap,
)

# a shifted Gaussian is the equality case of the transport-entropy bound
for a in (0.5, 1.0, 2.0):
    rep = talagrand_gap(gaussian1d(a, 1), gaussian1d(0, 1), gaussian1d(0, 1), K=1.0)
    print(f"shift a={a}: entropy {rep.lhs:.6f}  (K/2) map gap {rep.rhs:.6f}  "
          f"slack {rep.slack:+.2e}")

# mixtures against a Gaussian keep genuine slack
mu = mixture_grid([0.4, 0.6], [-0.8, 1.1], [1.0, 1.2], lo=-14, hi=14)
nu = mixture_grid([0.5, 0.5], [0.0, 0.4], [1.0, 1.1], lo=-14, hi=14)
rep = talagrand_gap(mu, nu, gaussian1d(0, 1), K=1.0)
print(f"mixture pair: entropy {rep.lhs:.6f} >= map gap {rep.rhs:.6f}")
print(f"relative entropy (quadrature) {relative_entropy(mu, nu).value:.6f}")

# increments of the transport potential against shift-density moments
g = gaussian_grid(0, 1)
shift = lemma21_check(g, g, t=0.1, epsilon=1.0, p=2.0, q=2.0)
print(f"\npotential increment estimate: {shift.lhs_increment:.6f} <= "
      f"{shift.rhs_increment:.6f}")
print(f"linearization estimate:       {shift.lhs_linearization:.6f} <= "
      f"{shift.rhs_linearization:.6f}")

probe = assumption_A_probe(g, g, p=2.0, q=2.0, epsilon=1.0,
                           t_grid=[0.01, 0.03, 0.1, 0.3, 1.0])
print("\nshift-density decay p(t):",
      " ".join(f"{t}:{v:.2e}" for t, v in zip(probe.t_grid, probe.p_values)))
print(f"decays to zero: {probe.decays_to_zero}; "
      f"moment finite: {probe.moment_finite}")
