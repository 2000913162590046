#!/usr/bin/env python3
"""Counting-process tails for continuous-time dynamics.

A resonantly driven, decaying qubit produces a photon-click record; the
click rate concentrates around its stationary intensity m = tr(L*L sigma).
The bound needs the gap of the additive symmetrization of the generator
plus the KMS norms of the counted jump map.  A second model makes the
counted jump proportional to a unitary, which turns the record into an
exact Poisson process and lets the sampler and bound be compared against
closed-form tails.
"""

import numpy as np
from scipy import stats

from qmcbounds import (
    counting_aux_bounds,
    counting_bound,
    counting_constants,
    gkls_steady_state,
    mc_counting_tail,
    sample_counting,
)
from qmcbounds.fixtures import driven_qubit, poisson_counting_qubit
from qmcbounds.trajectory import counting_counts

gen = driven_qubit(omega=1.0, kappa=0.5)
sigma = gkls_steady_state(gen)
print("driven qubit steady state diagonal:", np.diag(sigma.matrix).real)

constants = counting_constants(gen, "click", sigma=sigma)
print(f"constants: m={constants.m:.6f} b={constants.b:.6f} "
      f"alpha={constants.alpha:.6f} eps={constants.epsilon:.6f}")
aux = counting_aux_bounds(gen, "click", sigma)
print(f"closed-form caps: b <= {aux['b_upper']:.6f}, "
      f"alpha <= {aux['alpha_upper']:.6f}")

record = sample_counting(gen, sigma.matrix, 60.0, seed=7)
print(f"\none record on [0, 60]: {len(record.events)} clicks, "
      f"first three at {[round(t, 3) for t, _ in record.events[:3]]}")

print("\nempirical rate and bound dominance (stationary start):")
for t in (50.0, 100.0):
    counts = counting_counts(gen, sigma.matrix, t, 2000, seed=int(t))
    rates = counts[:, 0] / t
    print(f"  t={t:5.0f}: mean rate {rates.mean():.5f} (m = {constants.m:.5f})")
    for gamma in (0.05, 0.1):
        tail = mc_counting_tail(gen, "click", sigma.matrix, t, gamma,
                                trials=2000, seed=int(t), m=constants.m)
        bound = counting_bound(constants, gamma, t)
        print(f"    gamma={gamma:.2f}: tail <= {tail.ci_high:.4f} (MC), "
              f"bound {bound.probability_bound:.4f}")

print("\nPoisson degeneration (counted jump proportional to a unitary):")
genp = poisson_counting_qubit(kappa=0.4, damping=0.6)
sigp = gkls_steady_state(genp)
cp = counting_constants(genp, "poisson", sigma=sigp)
t = 80.0
counts = counting_counts(genp, sigp.matrix, t, 3000, seed=3)[:, 0]
print(f"  empirical mean {counts.mean():.3f} vs Poisson mean {cp.m * t:.3f}")
for gamma in (0.05, 0.1):
    threshold = int(np.ceil((cp.m + gamma) * t - 1e-9))
    exact = stats.poisson.sf(threshold - 1, cp.m * t)
    bound = counting_bound(cp, gamma, t)
    print(f"  gamma={gamma:.2f}: exact Poisson tail {exact:.6f} "
          f"<= bound {bound.probability_bound:.6f}")
