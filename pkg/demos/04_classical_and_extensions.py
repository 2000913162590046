#!/usr/bin/env python3
"""Classical fluxes, reducible channels, time-dependent measurements,
multi-time windows, and confidence intervals.

The flux bounds control time averages of functions of the *jumps* of a
classical chain using the transition matrix itself (the doubled-up chain
on edges is shown only to illustrate why it cannot carry such bounds).
The diagonal embedding maps every classical computation onto a quantum
channel whose exact tails agree to machine precision.  The remaining
sections exercise the extensions: invariant-block mixtures for reducible
channels, per-step unravellings, sliding pair windows, and the coverage
guarantee for the plug-in estimator of the hop asymmetry.
"""

import numpy as np

from qmcbounds import (
    MarkovChain,
    TimeStep,
    Unravelling,
    bernstein_bound,
    bernstein_constants,
    confidence_lower_bound,
    decompose_invariant_subspaces,
    doubled_chain,
    embed_diagonal,
    exact_flux_tail,
    exact_tail_dp,
    flux_bernstein,
    flux_hoeffding,
    hoeffding_bound,
    hoeffding_constants,
    invariant_state,
    multitime_hoeffding,
    reducible_bound,
    stationary_distribution,
    time_dependent_bernstein,
)
from qmcbounds.classical import edge_stationary_law, flux_matrix
from qmcbounds.fixtures import ring_channel, two_block_ring, two_state_chain

# ---- classical fluxes -------------------------------------------------------
chain = two_state_chain()
sigma = stationary_distribution(chain)
print("two-state chain, stationary law:", sigma, "(= 4/7, 3/7)")

flux = {e: (1.0 if e == ("a", "b") else 0.0) for e in chain.edges()}
mean = float(np.sum(edge_stationary_law(chain, sigma) * flux_matrix(flux, chain)))
print(f"edge (a -> b) visited with stationary frequency {mean:.4f}")

print("\nflux bounds vs exact tails (deviation gamma from the mean):")
for n, gamma in ((10, 0.25), (16, 0.45)):
    exact = exact_flux_tail(chain, sigma, flux, n, mean + gamma)
    ber = flux_bernstein(chain, sigma, flux, gamma, n)
    hoe = flux_hoeffding(chain, flux, gamma, n)
    hoe_str = f"{hoe.probability_bound:.4f}" if hoe.valid else "(regime)"
    print(f"  n={n:2d} gamma={gamma}: exact {exact:.6f}, "
          f"bernstein {ber.probability_bound:.4f}, hoeffding {hoe_str}")

doubled = doubled_chain(chain)
print(f"\ndoubled-up chain lives on {doubled.size} edges; its multiplicative "
      "symmetrization is degenerate, which is why the flux bounds use P itself")

channel, payoff = embed_diagonal(chain, flux)
rho0 = np.diag(sigma).astype(complex)
q = exact_tail_dp(channel, rho0, payoff, 10, mean + 0.25)
c = exact_flux_tail(chain, sigma, flux, 10, mean + 0.25)
print(f"diagonal embedding: quantum tail {q:.12f} = classical tail {c:.12f}")

# ---- reducible channels -----------------------------------------------------
print("\nreducible channel: direct sum of two biased rings")
big, big_payoff = two_block_ring(bias_a=0.3, bias_b=-0.4)
decomposition = decompose_invariant_subspaces(big)
print(f"  {decomposition.blocks} invariant blocks, commutation residual "
      f"{decomposition.commutation_residual:.2e}")
rho = np.eye(6, dtype=complex) / 6
mixture = reducible_bound(decomposition, rho, big_payoff, 0.5, 12,
                          flavor="bernstein")
print(f"  block means {np.round(mixture.block_means, 3)}, "
      f"weights {np.round(mixture.weights, 3)}")
print(f"  two-sided mixture bound at (n=12, gamma=0.5): "
      f"{mixture.mixture_bound:.4f}")

# ---- time-dependent measurements -------------------------------------------
print("\nalternating measurement bases on the ring:")
ring, ring_payoff = ring_channel()
ring_sigma = invariant_state(ring)
rotated, labels = [], []
for k in range(3):
    up, dn = ring.kraus[2 * k], ring.kraus[2 * k + 1]
    rotated += [((up + dn) / np.sqrt(2),), ((up - dn) / np.sqrt(2),)]
    labels += [f"{k}s", f"{k}d"]
unr = Unravelling(rotated, labels)
payoff_rot = {l: (1.0 if l.endswith("s") else -1.0) for l in labels}
steps = [TimeStep(Unravelling.standard(ring), ring_payoff) if k % 2 == 0
         else TimeStep(unr, payoff_rot) for k in range(12)]
res = time_dependent_bernstein(ring, steps, ring_sigma.matrix,
                               ring_sigma.matrix, 0.4)
print(f"  bernstein with per-step moments: b_n={res.constants.b:.4f} "
      f"c_n={res.constants.c:.4f} bound={res.probability_bound:.4f}")

# ---- multi-time windows -----------------------------------------------------
pair = {(a, b): (1.0 if a.endswith("+") and b.endswith("+") else 0.0)
        for a in ring.labels for b in ring.labels}
res = multitime_hoeffding(ring, ring_sigma.matrix, pair, 0.45, 32)
print(f"\nsliding pair windows (consecutive up-hops), n=32 windows: "
      f"G={res.constants.g:.3f}, bound={res.probability_bound:.4f}")

# ---- confidence intervals ---------------------------------------------------
print("\ncoverage guarantee for the hop-asymmetry estimator:")
theta = 0.1
biased, biased_payoff = ring_channel(bias=theta)
bsig = invariant_state(biased)
ber = bernstein_bound(bernstein_constants(biased, biased_payoff, sigma=bsig),
                      0.1, 5000)
hoe = hoeffding_bound(hoeffding_constants(biased, biased_payoff, sigma=bsig),
                      0.1, 5000)
for n in (5000, 20000):
    b = bernstein_bound(bernstein_constants(biased, biased_payoff, sigma=bsig),
                        0.1, n)
    h = hoeffding_bound(hoeffding_constants(biased, biased_payoff, sigma=bsig),
                        0.1, n)
    lower = confidence_lower_bound(n, 0.1, b, h)
    print(f"  n={n:6d}: P(|estimate - {theta}| < 0.1) >= {lower:.4f}")
