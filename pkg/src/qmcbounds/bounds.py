"""Concentration bounds for time-averaged measurement statistics.

Every entry point evaluates one of the finite-time tail bounds for the
output process of a quantum Markov chain (Bernstein and Hoeffding flavors
for discrete time, a Bernstein-type bound for continuous-time counting
processes, and their time-dependent / multi-time / reducible extensions).
Results come back as :class:`BoundResult` records carrying the probability
bound, the exponent, a validity flag and all intermediate constants, so a
caller scanning parameter grids always gets a total function.

Two deliberate policies apply everywhere:

* observation functions are auto-centered against the stationary law before
  any constant is computed, so misuse with an uncentered function is
  impossible;
* Hoeffding-type constants consume the *certified* upper bound of the
  pseudoresolvent norm, never the heuristic lower estimate, so an emitted
  bound is rigorous up to floating point (a larger constant only weakens
  the bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .operators import (
    GKLSGenerator,
    KrausChannel,
    Superoperator,
    as_complex_matrix,
    dagger,
    kms_adjoint,
    kms_norm,
    kms_operator_norm,
    observation_vector,
    state_matrix,
    state_power,
    superoperator_matrix,
    uniform_norm,
)
from .spectral import (
    HypothesisError,
    additive_gap_report,
    gkls_steady_state,
    invariant_state,
    is_irreducible,
    multiplicative_gap_report,
    phi_power_norms,
    poisson_solve,
    pseudoresolvent_norm,
)


def h_function(x: float) -> float:
    """h(x) = 1 / (sqrt(1 + x) + x/2 + 1), strictly decreasing on x >= 0."""
    if x < 0:
        raise ValueError("h is defined for x >= 0")
    return 1.0 / (math.sqrt(1.0 + x) + 0.5 * x + 1.0)


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StationaryStats:
    """Stationary outcome law and moments of a centered observation."""

    pi: np.ndarray            # stationary probability per outcome label
    mean: float               # pi(f) before centering
    centered: np.ndarray      # f - pi(f), aligned with the channel labels
    b: float                  # sqrt(pi(centered^2))
    c: float                  # max |centered|


def stationary_stats(channel: KrausChannel, sigma, f) -> StationaryStats:
    """pi(i) = tr(sigma V_i^* V_i) plus centered moments of f."""
    s = state_matrix(sigma)
    fv = observation_vector(f, channel.labels)
    pi = np.asarray([float(np.trace(s @ dagger(v) @ v).real) for v in channel.kraus])
    pi = np.clip(pi, 0.0, None)
    total = float(pi.sum())
    if abs(total - 1.0) > 1e-9:
        raise HypothesisError(f"stationary law sums to {total!r}; state not invariant?")
    pi = pi / total
    mean = float(pi @ fv)
    centered = fv - mean
    # a constant payoff should be exactly degenerate, not 1e-16 noise
    if np.max(np.abs(centered), initial=0.0) <= 1e-13 * max(1.0, abs(mean)):
        centered = np.zeros_like(centered)
    b = float(np.sqrt(max(pi @ centered**2, 0.0)))
    c = float(np.max(np.abs(centered))) if centered.size else 0.0
    return StationaryStats(pi=pi, mean=mean, centered=centered, b=b, c=c)


def n_rho(rho, sigma) -> float:
    """KMS norm of sigma^(-1/2) rho sigma^(-1/2); equals 1 at rho = sigma."""
    s = state_matrix(sigma)
    r = state_matrix(rho)
    half_inv = state_power(s, -0.5)
    return kms_norm(half_inv @ r @ half_inv, s)


@dataclass(frozen=True)
class BoundConstants:
    """Inputs of the bound formulas, with hypothesis flags.

    ``g`` always carries the certified pseudoresolvent upper bound;
    ``epsilon`` is the spectral gap of the relevant symmetrization and is 0
    whenever the corresponding irreducibility hypothesis fails.
    """

    b: float | None = None
    c: float | None = None
    epsilon: float | None = None
    n_rho: float | None = None
    g: float | None = None
    m: float | None = None
    alpha: float | None = None
    hypothesis_ok: bool = True
    g_provenance: str = "certified-upper"
    note: str = ""


@dataclass(frozen=True)
class BoundResult:
    """A probability bound with its exponent, validity flag and constants."""

    probability_bound: float
    exponent: float
    valid: bool
    constants: BoundConstants
    flavor: str
    gamma: float
    horizon: float            # n for discrete time, t for continuous time
    two_sided: bool = False
    reason: str = ""


def _clip_bound(prefactor: float, exponent: float) -> float:
    return float(min(1.0, prefactor * math.exp(min(exponent, 0.0))))


def _invalid(flavor: str, gamma: float, horizon: float, constants: BoundConstants,
             reason: str, two_sided: bool) -> BoundResult:
    return BoundResult(probability_bound=1.0, exponent=0.0, valid=False,
                       constants=constants, flavor=flavor, gamma=gamma,
                       horizon=horizon, two_sided=two_sided, reason=reason)


def bernstein_constants(channel: KrausChannel, f, rho=None, sigma=None) -> BoundConstants:
    """Gap of the multiplicative symmetrization plus centered moments of f."""
    sig = invariant_state(channel) if sigma is None else sigma
    stats = stationary_stats(channel, sig, f)
    report = multiplicative_gap_report(channel, sig)
    nr = 1.0 if rho is None else n_rho(rho, sig)
    eps = report.epsilon if report.irreducible else 0.0
    return BoundConstants(b=stats.b, c=stats.c, epsilon=eps, n_rho=nr,
                          hypothesis_ok=report.irreducible,
                          note=report.note)


def bernstein_bound(constants: BoundConstants, gamma: float, n: int,
                    two_sided: bool = False) -> BoundResult:
    """Tail bound N_rho exp(-n gamma^2 eps / (6 b^2) h(10 c gamma / (3 b^2))).

    Requires the multiplicative symmetrization to be irreducible (flag on the
    constants) and b > 0; a deterministic average (b = 0) deviates with
    probability 0, which is returned as an exact bound.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if n < 1:
        raise ValueError("n must be a positive integer")
    pref = (2.0 if two_sided else 1.0) * float(constants.n_rho or 1.0)
    if constants.b == 0.0:
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="bernstein", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="deterministic average (b = 0): deviation has probability 0")
    if not constants.hypothesis_ok or not constants.epsilon or constants.epsilon <= 0.0:
        return _invalid("bernstein", gamma, n, constants,
                        "multiplicative symmetrization reducible (epsilon <= 0)", two_sided)
    b2 = constants.b**2
    exponent = -n * (gamma**2 * constants.epsilon / (6.0 * b2)) * h_function(
        10.0 * constants.c * gamma / (3.0 * b2))
    return BoundResult(probability_bound=_clip_bound(pref, exponent), exponent=exponent,
                       valid=True, constants=constants, flavor="bernstein",
                       gamma=gamma, horizon=n, two_sided=two_sided)


def hoeffding_constants(channel: KrausChannel, f, rho=None, sigma=None) -> BoundConstants:
    """G = (1 + ||(Id - phi)^(-1)|F||_inf) c with the certified norm bound."""
    sig = invariant_state(channel) if sigma is None else sigma
    stats = stationary_stats(channel, sig, f)
    evidence = is_irreducible(channel)
    if not evidence.irreducible:
        return BoundConstants(b=stats.b, c=stats.c, n_rho=1.0, hypothesis_ok=False,
                              note="channel reducible: pseudoresolvent undefined")
    norm = pseudoresolvent_norm(channel, sig)
    g = (1.0 + norm.certified_upper) * stats.c
    nr = 1.0 if rho is None else n_rho(rho, sig)
    return BoundConstants(b=stats.b, c=stats.c, n_rho=nr, g=g, hypothesis_ok=True)


def hoeffding_bound(constants: BoundConstants, gamma: float, n: int,
                    two_sided: bool = False) -> BoundResult:
    """Tail bound exp(-(n gamma - 2G)^2 / (2 (n-1) G^2)) for n gamma >= 2G."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if n < 1:
        raise ValueError("n must be a positive integer")
    if not constants.hypothesis_ok:
        return _invalid("hoeffding", gamma, n, constants,
                        "channel reducible: Hoeffding constant undefined", two_sided)
    g = constants.g
    if g is None or g <= 0.0:
        raise ValueError("degenerate Hoeffding constant (c = 0)")
    pref = 2.0 if two_sided else 1.0
    if n * gamma < 2.0 * g:
        return _invalid("hoeffding", gamma, n, constants, "outside regime", two_sided)
    if n == 1:
        # in regime, gamma >= 2G >= 2c strictly exceeds the range of f
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="hoeffding", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="n = 1 and gamma >= 2c: single outcome cannot deviate")
    exponent = -((n * gamma - 2.0 * g)**2) / (2.0 * (n - 1) * g**2)
    return BoundResult(probability_bound=_clip_bound(pref, exponent), exponent=exponent,
                       valid=True, constants=constants, flavor="hoeffding",
                       gamma=gamma, horizon=n, two_sided=two_sided)


# ---------------------------------------------------------------------------
# continuous-time counting bound
# ---------------------------------------------------------------------------

def _real_part_superop(mapping, sigma, dim: int) -> Superoperator:
    m = superoperator_matrix(mapping, dim).matrix
    m_dag = kms_adjoint(Superoperator(dim, m), state_matrix(sigma)).matrix
    return Superoperator(dim, (m + m_dag) / 2)


def counting_constants(gen: GKLSGenerator, label, rho=None, sigma=None) -> BoundConstants:
    """m, b, alpha and the additive-symmetrization gap for one detector."""
    sig = gkls_steady_state(gen) if sigma is None else sigma
    s = state_matrix(sig)
    l = gen.jumps[gen.index(label)]
    m_intensity = float(np.trace(dagger(l) @ l @ s).real)
    jump_super = superoperator_matrix(lambda x: gen.jump(label, x), gen.dim)
    b_op = _real_part_superop(jump_super, s, gen.dim)
    b_val = kms_norm(b_op.apply(np.eye(gen.dim)), s)
    alpha = kms_operator_norm(b_op, s)
    report = additive_gap_report(gen, s)
    nr = 1.0 if rho is None else n_rho(rho, sig)
    eps = report.epsilon if report.irreducible else 0.0
    return BoundConstants(b=b_val, epsilon=eps, n_rho=nr, m=m_intensity, alpha=alpha,
                          hypothesis_ok=report.irreducible, note=report.note)


def counting_bound(constants: BoundConstants, gamma: float, t: float,
                   two_sided: bool = False) -> BoundResult:
    """Counting tail N_rho exp(-t gamma^2 / (2 (m + 2b^2/eps + (5a/eps v 5/2) gamma)))."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not constants.hypothesis_ok or not constants.epsilon or constants.epsilon <= 0.0:
        return _invalid("counting", gamma, t, constants,
                        "additive symmetrization reducible (epsilon <= 0)", two_sided)
    eps = constants.epsilon
    denom = 2.0 * (constants.m + 2.0 * constants.b**2 / eps
                   + max(5.0 * constants.alpha / eps, 2.5) * gamma)
    exponent = -t * gamma**2 / denom
    pref = (2.0 if two_sided else 1.0) * float(constants.n_rho or 1.0)
    return BoundResult(probability_bound=_clip_bound(pref, exponent), exponent=exponent,
                       valid=True, constants=constants, flavor="counting",
                       gamma=gamma, horizon=t, two_sided=two_sided)


def counting_aux_bounds(gen: GKLSGenerator, label, sigma) -> dict:
    """Closed-form upper bounds on b and alpha from the jump operator alone.

    These dominate the directly computed values and are cheap diagnostics:
    ``b_upper`` comes from the triangle + Cauchy-Schwarz chain, ``alpha_upper``
    from operator monotonicity against the smallest eigenvalue of sigma.
    """
    s = state_matrix(sigma)
    l = gen.jumps[gen.index(label)]
    m_intensity = float(np.trace(dagger(l) @ l @ s).real)
    half = state_power(s, 0.5)
    half_inv = state_power(s, -0.5)
    tilted = half @ dagger(l) @ half_inv
    term1 = math.sqrt(uniform_norm(dagger(l) @ l))
    term2 = math.sqrt(uniform_norm(dagger(tilted) @ tilted))
    b_upper = 0.5 * (term1 + term2) * math.sqrt(m_intensity)
    min_eig = float(np.min(np.linalg.eigvalsh(s)))
    alpha_upper = min(uniform_norm(l @ dagger(l)),
                      uniform_norm(tilted @ dagger(tilted))) / min_eig
    return {"m": m_intensity, "b_upper": b_upper, "alpha_upper": alpha_upper}


# ---------------------------------------------------------------------------
# time-dependent measurements
# ---------------------------------------------------------------------------

class Unravelling:
    """A channel split into completely positive sub-unital outcome maps.

    ``maps`` is one Kraus tuple per outcome (Heisenberg convention); the sum
    over outcomes must reproduce the channel being unravelled.
    """

    def __init__(self, maps: Sequence[Sequence[np.ndarray]], labels: Sequence | None = None):
        self.maps = tuple(tuple(as_complex_matrix(w) for w in ops) for ops in maps)
        if not self.maps or not all(self.maps):
            raise ValueError("each outcome needs at least one Kraus operator")
        self.dim = self.maps[0][0].shape[0]
        self.labels = tuple(labels) if labels is not None else tuple(range(len(self.maps)))
        if len(self.labels) != len(self.maps):
            raise ValueError("one label per outcome required")

    @classmethod
    def standard(cls, channel: KrausChannel) -> "Unravelling":
        return cls([(v,) for v in channel.kraus], channel.labels)

    def outcome_probabilities(self, rho) -> np.ndarray:
        r = state_matrix(rho)
        probs = [sum(float(np.trace(w @ r @ dagger(w)).real) for w in ops)
                 for ops in self.maps]
        return np.clip(np.asarray(probs), 0.0, None)

    def apply_outcome_dual(self, i: int, rho) -> np.ndarray:
        r = state_matrix(rho)
        return sum(w @ r @ dagger(w) for w in self.maps[i])

    def total_matrix(self) -> np.ndarray:
        d2 = self.dim * self.dim
        total = np.zeros((d2, d2), dtype=complex)
        for ops in self.maps:
            for w in ops:
                total += np.kron(w.T, w.conj().T)
        return total


@dataclass(frozen=True)
class TimeStep:
    """One measurement step: an unravelling of the channel plus its payoff."""

    unravelling: Unravelling
    f: Mapping


def _validate_steps(channel: KrausChannel, steps: Sequence[TimeStep],
                    tol: float = 1e-9) -> None:
    ref = superoperator_matrix(channel).matrix
    for k, step in enumerate(steps):
        dev = float(np.max(np.abs(step.unravelling.total_matrix() - ref)))
        if dev > tol:
            raise ValueError(
                f"step {k}: unravelling does not sum to the channel (deviation {dev:.3e})")


def _step_stats(steps: Sequence[TimeStep], sigma) -> tuple[list[np.ndarray], float, float]:
    """Per-step centered payoffs, c_n = max_k range, b_n^2 = mean variance."""
    s = state_matrix(sigma)
    centered, c_n, var_sum = [], 0.0, 0.0
    for step in steps:
        pi = np.asarray([float(np.trace(step.unravelling.apply_outcome_dual(i, s)).real)
                         for i in range(len(step.unravelling.maps))])
        pi = np.clip(pi, 0.0, None)
        pi = pi / pi.sum()
        fv = observation_vector(step.f, step.unravelling.labels)
        fc = fv - float(pi @ fv)
        centered.append(fc)
        c_n = max(c_n, float(np.max(np.abs(fc))))
        var_sum += float(pi @ fc**2)
    return centered, c_n, var_sum / len(steps)


def time_dependent_bernstein(channel: KrausChannel, steps: Sequence[TimeStep],
                             sigma, rho, gamma: float,
                             two_sided: bool = False) -> BoundResult:
    """Bernstein bound with step-dependent unravellings and payoffs.

    The gap is still the one of the time-homogeneous multiplicative
    symmetrization; only the moments b_n^2 (average stationary variance) and
    c_n (worst centered range) change.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    _validate_steps(channel, steps)
    n = len(steps)
    _, c_n, b_n2 = _step_stats(steps, sigma)
    report = multiplicative_gap_report(channel, sigma)
    nr = n_rho(rho, sigma) if rho is not None else 1.0
    constants = BoundConstants(b=math.sqrt(b_n2), c=c_n,
                               epsilon=report.epsilon if report.irreducible else 0.0,
                               n_rho=nr, hypothesis_ok=report.irreducible)
    if b_n2 == 0.0:
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="tdm-bernstein", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="deterministic payoffs (b_n = 0)")
    if not report.irreducible:
        return _invalid("tdm-bernstein", gamma, n, constants,
                        "multiplicative symmetrization reducible", two_sided)
    eps = report.epsilon
    exponent = -n * (gamma**2 * eps / (6.0 * b_n2)) * h_function(
        10.0 * c_n * gamma / (3.0 * b_n2))
    pref = (2.0 if two_sided else 1.0) * nr
    return BoundResult(probability_bound=_clip_bound(pref, exponent), exponent=exponent,
                       valid=True, constants=constants, flavor="tdm-bernstein",
                       gamma=gamma, horizon=n, two_sided=two_sided)


def time_dependent_hoeffding(channel: KrausChannel, steps: Sequence[TimeStep],
                             sigma, rho, gamma: float,
                             two_sided: bool = False) -> BoundResult:
    """Hoeffding bound with G_n = (1 + sum_{j<=n-2} ||phi^j|F||) c_n.

    The power norms are certified upper bounds, so G_n (and with it the
    emitted probability bound) stays rigorous.  In the regime n gamma >= G_n
    the exponent is -(n gamma - G_n)^2 / ((n-1) G_n^2).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    _validate_steps(channel, steps)
    n = len(steps)
    _, c_n, b_n2 = _step_stats(steps, sigma)
    if c_n == 0.0:
        constants = BoundConstants(b=0.0, c=0.0, n_rho=1.0)
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="tdm-hoeffding", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="deterministic payoffs (c_n = 0)")
    powers = phi_power_norms(channel, sigma, max(n - 2, 0))
    g_n = (1.0 + sum(powers[:max(n - 1, 0)])) * c_n
    constants = BoundConstants(b=math.sqrt(b_n2), c=c_n, g=g_n, n_rho=1.0)
    pref = 2.0 if two_sided else 1.0
    if n == 1:
        # G_1 = c_1; a single centered payoff can attain its range, so the
        # zero bound is only claimed strictly beyond it
        if gamma > c_n + 1e-12:
            return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                               constants=constants, flavor="tdm-hoeffding", gamma=gamma,
                               horizon=n, two_sided=two_sided,
                               reason="n = 1 and gamma > c_1: outside the payoff range")
        return _invalid("tdm-hoeffding", gamma, n, constants,
                        "n = 1 at the regime boundary", two_sided)
    if n * gamma < g_n:
        return _invalid("tdm-hoeffding", gamma, n, constants, "outside regime", two_sided)
    exponent = -((n * gamma - g_n)**2) / ((n - 1) * g_n**2)
    return BoundResult(probability_bound=_clip_bound(pref, exponent), exponent=exponent,
                       valid=True, constants=constants, flavor="tdm-hoeffding",
                       gamma=gamma, horizon=n, two_sided=two_sided)


# ---------------------------------------------------------------------------
# multi-time statistics
# ---------------------------------------------------------------------------

def multitime_stationary_law(channel: KrausChannel, sigma, m: int) -> dict:
    """Stationary law of m consecutive outcomes: tuple -> probability."""
    s = state_matrix(sigma)
    law: dict = {}

    def recurse(prefix, product):
        if len(prefix) == m:
            op = dagger(product) @ product
            law[prefix] = float(np.trace(s @ op).real)
            return
        for lab, v in zip(channel.labels, channel.kraus):
            recurse(prefix + (lab,), v @ product)

    recurse((), np.eye(channel.dim, dtype=complex))
    return law


def multitime_hoeffding(channel: KrausChannel, sigma, f: Mapping, gamma: float, n: int,
                        two_sided: bool = False) -> BoundResult:
    """Hoeffding bound for sliding-window payoffs f on m consecutive outcomes.

    f is a mapping from m-tuples of outcome labels to reals; it is centered
    against the m-step stationary law, the window Poisson equation is solved
    (which checks solvability), and G = (m + ||(Id-phi)^(-1)|F||) c feeds the
    usual exponent in the regime n gamma >= 2G.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if n < 1:
        raise ValueError("n must be a positive integer")
    keys = list(f.keys())
    if not keys:
        raise ValueError("empty multi-time payoff")
    m = len(keys[0])
    if any(len(k) != m for k in keys):
        raise ValueError("all payoff keys must be m-tuples of equal length")
    law = multitime_stationary_law(channel, sigma, m)
    missing = [k for k in law if k not in f]
    if missing:
        raise KeyError(f"payoff undefined on outcome tuples, e.g. {missing[0]}")
    mean = sum(law[k] * float(f[k]) for k in law)
    centered = {k: float(f[k]) - mean for k in law}
    c = max(abs(v) for v in centered.values())
    s = state_matrix(sigma)
    if c == 0.0:
        constants = BoundConstants(b=0.0, c=0.0, n_rho=1.0)
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="multitime", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="deterministic window payoff (c = 0)")

    # right-hand side of the window Poisson equation: the full m-step
    # conditional expectation operator of the centered payoff
    f_m = np.zeros((channel.dim, channel.dim), dtype=complex)

    def accumulate(prefix, product):
        if len(prefix) == m:
            f_m_local = centered[prefix] * (dagger(product) @ product)
            return f_m_local
        out = np.zeros((channel.dim, channel.dim), dtype=complex)
        for lab, v in zip(channel.labels, channel.kraus):
            out += accumulate(prefix + (lab,), v @ product)
        return out

    f_m = accumulate((), np.eye(channel.dim, dtype=complex))
    norm = pseudoresolvent_norm(channel, sigma)
    poisson_solve(channel, f_m, sigma, certified_upper=norm.certified_upper)
    g = (m + norm.certified_upper) * c
    constants = BoundConstants(b=None, c=c, g=g, n_rho=1.0)
    pref = 2.0 if two_sided else 1.0
    if n * gamma < 2.0 * g:
        return _invalid("multitime", gamma, n, constants, "outside regime", two_sided)
    if n == 1:
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="multitime", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="n = 1 and gamma >= 2c: single window cannot deviate")
    exponent = -((n * gamma - 2.0 * g)**2) / (2.0 * (n - 1) * g**2)
    return BoundResult(probability_bound=_clip_bound(pref, exponent), exponent=exponent,
                       valid=True, constants=constants, flavor="multitime",
                       gamma=gamma, horizon=n, two_sided=two_sided)


# ---------------------------------------------------------------------------
# reducible channels: mixtures over invariant blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducibleBound:
    """Per-block two-sided bounds and their convex mixture."""

    mixture_bound: float
    weights: np.ndarray
    block_results: tuple[BoundResult | None, ...]
    block_means: tuple[float, ...]


def reducible_bound(decomposition, rho, f, gamma: float, n: int,
                    flavor: str = "bernstein") -> ReducibleBound:
    """Mixture bound sum_j lambda_j(rho) * (two-sided block bound).

    Deviations are measured around the block-dependent limit, so each block
    bound is the two-sided (union-bound doubled) variant.  Blocks whose
    hypotheses fail contribute their full weight, which keeps the mixture a
    valid upper bound.
    """
    if flavor not in ("bernstein", "hoeffding"):
        raise ValueError(f"unknown flavor {flavor!r}")
    weights = decomposition.weights(rho)
    results: list[BoundResult | None] = []
    means: list[float] = []
    mixture = 0.0
    for j, (channel_j, sigma_j) in enumerate(
            zip(decomposition.restricted_channels, decomposition.block_states)):
        stats = stationary_stats(channel_j, sigma_j, f)
        means.append(stats.mean)
        if weights[j] <= 1e-15:
            results.append(None)
            continue
        rho_j = decomposition.block_state(rho, j)
        if flavor == "bernstein":
            constants = bernstein_constants(channel_j, f, rho=rho_j, sigma=sigma_j)
            res = bernstein_bound(constants, gamma, n, two_sided=True)
        else:
            constants = hoeffding_constants(channel_j, f, rho=rho_j, sigma=sigma_j)
            res = hoeffding_bound(constants, gamma, n, two_sided=True)
        results.append(res)
        mixture += weights[j] * res.probability_bound
    return ReducibleBound(mixture_bound=float(min(1.0, mixture)), weights=weights,
                          block_results=tuple(results), block_means=tuple(means))


# ---------------------------------------------------------------------------
# confidence intervals
# ---------------------------------------------------------------------------

def confidence_lower_bound(n: int, gamma: float, bernstein: BoundResult,
                           hoeffding: BoundResult) -> float:
    """Coverage lower bound 1 - 2 min(bernstein, hoeffding), clipped to [0, 1].

    Both inputs must be one-sided bounds for the same (n, gamma); an invalid
    flavor contributes nothing (its bound is 1).
    """
    for res, name in ((bernstein, "bernstein"), (hoeffding, "hoeffding")):
        if abs(res.gamma - gamma) > 1e-12 or abs(res.horizon - n) > 1e-12:
            raise ValueError(f"{name} result was computed for different (n, gamma)")
        if res.two_sided:
            raise ValueError("confidence interval needs one-sided inputs")
    best = min(bernstein.probability_bound if bernstein.valid else 1.0,
               hoeffding.probability_bound if hoeffding.valid else 1.0)
    return float(min(1.0, max(0.0, 1.0 - 2.0 * best)))
