"""Sampling and exact tail computation for measurement output processes.

Discrete-time trajectories are sampled by drawing outcome i with probability
tr(V_i rho V_i^*) and updating the conditional state through the filter
rho -> V_i rho V_i^* / tr(...).  Continuous-time counting records use
jump / no-jump sampling: the waiting time solves tr(exp(tau G) rho exp(tau G)^*)
= u by bracketed bisection, the jump label is drawn proportionally to the
detector intensities tr(L_i rho L_i^*), and the state is reset through the
jump map.

Randomness comes from counter-based Philox streams keyed as
``(master_seed, trajectory_index)``: every trajectory owns its stream, so
results are reproducible bit-for-bit from the seed and independent of how
trajectories are batched or parallelized.  Uniform variates are consumed
from fixed-size per-trajectory tapes (block size ``_TAPE_BLOCK``), which
keeps the consumption order a function of the trajectory alone.

Exact tails on small instances come from dynamic programming over a
rational score lattice, carrying unnormalized conditioned operators
``T[s]`` updated as ``T'[s + f(i)] += V_i T[s] V_i^*``; total mass is
conserved, and a brute-force enumeration over outcome sequences is
available as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .operators import (
    GKLSGenerator,
    KrausChannel,
    dagger,
    observation_vector,
    state_matrix,
    uniform_norm,
    vec,
)

_TAPE_BLOCK = 64          # uniforms drawn per refill of a trajectory tape
_PROB_FLOOR = 1e-15       # outcome probabilities below this count as zero


class FilterCollapseError(RuntimeError):
    """All outcome probabilities vanished along a trajectory."""


class LatticeError(ValueError):
    """Observation values do not fit a rational score lattice."""


class SurvivalMonotonicityError(RuntimeError):
    """The no-jump survival function increased beyond numerical tolerance."""


# ---------------------------------------------------------------------------
# records and intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled discrete-time outcome sequence with its RNG coordinates."""

    outcomes: tuple
    seed: int
    index: int = 0
    conditional_states: tuple | None = None


@dataclass(frozen=True)
class CountingRecord:
    """Timed jump events (time, label) on [0, horizon]."""

    horizon: float
    events: tuple
    seed: int
    index: int = 0


@dataclass(frozen=True)
class EmpiricalTail:
    estimate: float
    ci_low: float
    ci_high: float
    trials: int


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054
                    ) -> tuple[float, float]:
    """95% Wilson score interval; well defined down to trials = 1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _empirical_tail(successes: int, trials: int) -> EmpiricalTail:
    low, high = wilson_interval(successes, trials)
    return EmpiricalTail(estimate=successes / trials, ci_low=low, ci_high=high,
                         trials=trials)


# ---------------------------------------------------------------------------
# counter-based per-trajectory randomness
# ---------------------------------------------------------------------------

def _stream(seed: int, index: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64(index & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _uniform_rows(seed: int, indices: Sequence[int], count: int) -> np.ndarray:
    """count uniforms per trajectory, row i from stream (seed, indices[i])."""
    return np.vstack([_stream(seed, idx).random(count) for idx in indices])


class _Tape:
    """Per-trajectory uniform tapes refilled in fixed-size blocks."""

    def __init__(self, seed: int, indices: Sequence[int]):
        self._gens = [_stream(seed, idx) for idx in indices]
        self._buf = np.vstack([g.random(_TAPE_BLOCK) for g in self._gens])
        self._cursor = np.zeros(len(self._gens), dtype=np.int64)

    def take(self, rows: np.ndarray) -> np.ndarray:
        exhausted = rows[self._cursor[rows] >= _TAPE_BLOCK]
        for r in exhausted:
            self._buf[r] = self._gens[r].random(_TAPE_BLOCK)
            self._cursor[r] = 0
        out = self._buf[rows, self._cursor[rows]]
        self._cursor[rows] += 1
        return out


# ---------------------------------------------------------------------------
# discrete-time sampling
# ---------------------------------------------------------------------------

def _discrete_outcomes_batch(channel: KrausChannel, rho0, n: int, seed: int,
                             indices: Sequence[int]) -> np.ndarray:
    """Outcome index matrix (len(indices), n); row i uses stream (seed, i)."""
    stack = channel._stack
    batch = len(indices)
    rho = np.broadcast_to(state_matrix(rho0), (batch, channel.dim, channel.dim)).copy()
    u = _uniform_rows(seed, indices, n)
    picks = np.empty((batch, n), dtype=np.int64)
    for k in range(n):
        probs = np.einsum("ipq,bqr,ipr->bi", stack, rho, stack.conj()).real
        probs = np.where(probs < _PROB_FLOOR, 0.0, probs)
        totals = probs.sum(axis=1)
        if np.any(totals <= 0.0):
            raise FilterCollapseError(f"filter collapse at step {k}")
        cum = np.cumsum(probs, axis=1)
        target = u[:, k] * totals
        pick = (cum < target[:, None]).sum(axis=1)
        pick = np.minimum(pick, len(channel.kraus) - 1)
        picks[:, k] = pick
        v = stack[pick]
        rho = np.einsum("bpq,bqr,bsr->bps", v, rho, v.conj())
        tr = np.einsum("bpp->b", rho).real
        rho /= tr[:, None, None]
    return picks


def sample_discrete(channel: KrausChannel, rho0, n: int, seed: int, index: int = 0,
                    keep_states: bool = False) -> TrajectoryRecord:
    """One trajectory of n measurement outcomes from stream (seed, index)."""
    picks = _discrete_outcomes_batch(channel, rho0, n, seed, [index])[0]
    states = None
    if keep_states:
        from .operators import DensityMatrix
        rho = state_matrix(rho0)
        collected = []
        for p in picks:
            v = channel.kraus[p]
            rho = v @ rho @ dagger(v)
            rho = rho / np.trace(rho).real
            collected.append(DensityMatrix(rho))
        states = tuple(collected)
    return TrajectoryRecord(outcomes=tuple(channel.labels[p] for p in picks),
                            seed=seed, index=index, conditional_states=states)


def mc_tail(channel: KrausChannel, rho0, f, n: int, gamma: float, trials: int,
            seed: int, chunk_size: int = 4096) -> EmpiricalTail:
    """Monte Carlo estimate of P(mean of f over n outcomes >= gamma).

    Deterministic given the seed and independent of ``chunk_size``: each
    trajectory consumes only its own Philox stream.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    fv = observation_vector(f, channel.labels)
    threshold = n * gamma - 1e-12
    hits = 0
    for start in range(0, trials, chunk_size):
        idx = range(start, min(start + chunk_size, trials))
        picks = _discrete_outcomes_batch(channel, rho0, n, seed, list(idx))
        sums = fv[picks].sum(axis=1)
        hits += int(np.sum(sums >= threshold))
    return _empirical_tail(hits, trials)


def sample_unravelled_batch(steps, rho0, seed: int, indices: Sequence[int]) -> np.ndarray:
    """Outcome indices for per-step unravellings (time-dependent measurements)."""
    n = len(steps)
    batch = len(indices)
    dim = steps[0].unravelling.dim
    rho = np.broadcast_to(state_matrix(rho0), (batch, dim, dim)).copy()
    u = _uniform_rows(seed, indices, n)
    picks = np.empty((batch, n), dtype=np.int64)
    for k, step in enumerate(steps):
        unr = step.unravelling
        probs = np.stack([
            sum(np.einsum("pq,bqr,pr->b", w, rho, w.conj()).real for w in ops)
            for ops in unr.maps], axis=1)
        probs = np.where(probs < _PROB_FLOOR, 0.0, probs)
        totals = probs.sum(axis=1)
        if np.any(totals <= 0.0):
            raise FilterCollapseError(f"filter collapse at step {k}")
        cum = np.cumsum(probs, axis=1)
        pick = (cum < (u[:, k] * totals)[:, None]).sum(axis=1)
        pick = np.minimum(pick, len(unr.maps) - 1)
        picks[:, k] = pick
        new_rho = np.zeros_like(rho)
        for i, ops in enumerate(unr.maps):
            rows = pick == i
            if not np.any(rows):
                continue
            sub = rho[rows]
            out = sum(np.einsum("pq,bqr,sr->bps", w, sub, w.conj()) for w in ops)
            new_rho[rows] = out
        tr = np.einsum("bpp->b", new_rho).real
        rho = new_rho / tr[:, None, None]
    return picks


def mc_tail_unravelled(steps, sigma, rho0, gamma: float, trials: int, seed: int,
                       chunk_size: int = 4096) -> EmpiricalTail:
    """Tail of (1/n) sum_k (f_k(X_k) - pi_k(f_k)) >= gamma under per-step unravellings."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    s = state_matrix(sigma)
    n = len(steps)
    centered = []
    for step in steps:
        pi = np.asarray([float(np.trace(step.unravelling.apply_outcome_dual(i, s)).real)
                         for i in range(len(step.unravelling.maps))])
        pi = np.clip(pi, 0.0, None)
        pi = pi / pi.sum()
        fv = observation_vector(step.f, step.unravelling.labels)
        centered.append(fv - float(pi @ fv))
    threshold = n * gamma - 1e-12
    hits = 0
    for start in range(0, trials, chunk_size):
        idx = range(start, min(start + chunk_size, trials))
        picks = sample_unravelled_batch(steps, rho0, seed, list(idx))
        sums = sum(centered[k][picks[:, k]] for k in range(n))
        hits += int(np.sum(sums >= threshold))
    return _empirical_tail(hits, trials)


# ---------------------------------------------------------------------------
# exact tails by dynamic programming on a rational score lattice
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreDistribution:
    """Exact law of the n-step score sum on an integer lattice."""

    numerators: np.ndarray    # integer scores; actual sum = numerators / denominator
    masses: np.ndarray
    denominator: int
    n: int

    def tail(self, gamma: float) -> float:
        """P(score sum / n >= gamma)."""
        threshold = gamma * self.n * self.denominator - 1e-9
        return float(self.masses[self.numerators >= threshold].sum())

    def laplace(self, u: float) -> float:
        """E[exp(u * score sum)]."""
        return float(np.exp(self.log_laplace(u)))

    def log_laplace(self, u: float) -> float:
        log_terms = u * self.numerators / self.denominator
        keep = self.masses > 0.0
        shift = np.max(log_terms[keep])
        return float(shift + np.log(np.sum(
            self.masses[keep] * np.exp(log_terms[keep] - shift))))


def _score_lattice(fv: np.ndarray, max_denominator: int = 10**6,
                   rel_tol: float = 1e-12) -> tuple[np.ndarray, int]:
    fracs = [Fraction(float(x)).limit_denominator(max_denominator) for x in fv]
    for x, fr in zip(fv, fracs):
        if abs(float(fr) - float(x)) > rel_tol * max(1.0, abs(float(x))):
            raise LatticeError(
                f"observation value {x!r} has no rational approximation with "
                f"denominator <= {max_denominator}; use the enumeration fallback")
    denom = 1
    for fr in fracs:
        denom = denom * fr.denominator // math.gcd(denom, fr.denominator)
    nums = np.asarray([int(fr * denom) for fr in fracs], dtype=np.int64)
    return nums, denom


def score_distribution_dp(channel: KrausChannel, rho0, f, n: int,
                          max_denominator: int = 10**6,
                          mass_tol: float = 1e-11) -> ScoreDistribution:
    """Exact distribution of sum_k f(X_k) by operator-valued DP.

    State: unnormalized conditioned operators T[s] per lattice score s,
    updated as T'[s + f(i)] += V_i T[s] V_i^*.  Mass conservation
    sum_s tr(T_n[s]) = 1 is checked at ``mass_tol``.
    """
    fv = observation_vector(f, channel.labels)
    nums, denom = _score_lattice(fv, max_denominator)
    table: dict[int, np.ndarray] = {0: state_matrix(rho0).astype(complex)}
    for _ in range(n):
        new: dict[int, np.ndarray] = {}
        for s, t in table.items():
            for num, v in zip(nums, channel.kraus):
                key = s + int(num)
                acc = new.get(key)
                upd = v @ t @ dagger(v)
                new[key] = upd if acc is None else acc + upd
        table = new
    scores = np.asarray(sorted(table.keys()), dtype=np.int64)
    masses = np.asarray([float(np.trace(table[s]).real) for s in scores])
    masses = np.clip(masses, 0.0, None)
    total = float(masses.sum())
    if abs(total - 1.0) > mass_tol:
        raise RuntimeError(f"DP mass {total!r} deviates from 1 beyond {mass_tol:g}")
    return ScoreDistribution(numerators=scores, masses=masses, denominator=denom, n=n)


def exact_tail_dp(channel: KrausChannel, rho0, f, n: int, gamma: float,
                  max_denominator: int = 10**6) -> float:
    """Exact P((1/n) sum_k f(X_k) >= gamma) on a desk-scale instance."""
    return score_distribution_dp(channel, rho0, f, n, max_denominator).tail(gamma)


def exact_tail_enumeration(channel: KrausChannel, rho0, f, n: int, gamma: float,
                           max_denominator: int = 10**6) -> float:
    """Brute-force cross-check over all |I|^n outcome sequences."""
    if len(channel.kraus) ** n > 2**24:
        raise ValueError("enumeration fallback limited to |I|^n <= 2^24")
    fv = observation_vector(f, channel.labels)
    nums, denom = _score_lattice(fv, max_denominator)
    threshold = gamma * n * denom - 1e-9
    total = 0.0

    def recurse(depth: int, score: int, op: np.ndarray):
        nonlocal total
        if depth == n:
            if score >= threshold:
                total += float(np.trace(op).real)
            return
        for num, v in zip(nums, channel.kraus):
            recurse(depth + 1, score + int(num), v @ op @ dagger(v))

    recurse(0, 0, state_matrix(rho0).astype(complex))
    return total


def score_distribution_windowed(channel: KrausChannel, rho0, f: Mapping, n: int,
                                max_denominator: int = 10**6,
                                mass_tol: float = 1e-11) -> ScoreDistribution:
    """Exact law of sum_k f(X_k, ..., X_{k+m-1}) over n sliding windows.

    The DP state is (last m-1 outcomes, lattice score); n windows involve
    n + m - 1 outcomes in total.
    """
    keys = list(f.keys())
    m = len(keys[0])
    if m < 1 or any(len(k) != m for k in keys):
        raise ValueError("windowed payoff needs constant-length tuple keys")
    vals = np.asarray([float(f[k]) for k in keys])
    nums_list, denom = _score_lattice(vals, max_denominator)
    nums = {k: int(v) for k, v in zip(keys, nums_list)}
    labels = channel.labels

    # roll out the first m-1 outcomes without scoring
    table: dict[tuple, np.ndarray] = {((), 0): state_matrix(rho0).astype(complex)}
    for _ in range(m - 1):
        new: dict[tuple, np.ndarray] = {}
        for (hist, s), t in table.items():
            for lab, v in zip(labels, channel.kraus):
                key = (hist + (lab,), s)
                upd = v @ t @ dagger(v)
                acc = new.get(key)
                new[key] = upd if acc is None else acc + upd
        table = new
    for _ in range(n):
        new = {}
        for (hist, s), t in table.items():
            for lab, v in zip(labels, channel.kraus):
                window = hist + (lab,)
                if window not in nums:
                    raise KeyError(f"windowed payoff undefined on {window}")
                key = (window[1:], s + nums[window])
                upd = v @ t @ dagger(v)
                acc = new.get(key)
                new[key] = upd if acc is None else acc + upd
        table = new
    collapsed: dict[int, float] = {}
    for (_, s), t in table.items():
        collapsed[s] = collapsed.get(s, 0.0) + float(np.trace(t).real)
    scores = np.asarray(sorted(collapsed.keys()), dtype=np.int64)
    masses = np.clip(np.asarray([collapsed[s] for s in scores]), 0.0, None)
    if abs(float(masses.sum()) - 1.0) > mass_tol:
        raise RuntimeError("windowed DP lost probability mass")
    return ScoreDistribution(numerators=scores, masses=masses, denominator=denom, n=n)


def windowed_sums(record: TrajectoryRecord, f: Mapping) -> np.ndarray:
    """Sliding-window payoffs f(X_k, ..., X_{k+m-1}) along one record."""
    keys = list(f.keys())
    m = len(keys[0])
    outcomes = record.outcomes
    if len(outcomes) < m:
        raise ValueError(f"record of length {len(outcomes)} is shorter than the window {m}")
    return np.asarray([float(f[tuple(outcomes[k:k + m])])
                       for k in range(len(outcomes) - m + 1)])


def mc_tail_windowed(channel: KrausChannel, rho0, f: Mapping, n: int, gamma: float,
                     trials: int, seed: int, chunk_size: int = 4096) -> EmpiricalTail:
    """Monte Carlo tail of the sliding-window mean over n windows."""
    keys = list(f.keys())
    m = len(keys[0])
    label_index = {lab: i for i, lab in enumerate(channel.labels)}
    lookup = np.zeros((len(channel.labels),) * m)
    for k, v in f.items():
        lookup[tuple(label_index[lab] for lab in k)] = float(v)
    steps = n + m - 1
    threshold = n * gamma - 1e-12
    hits = 0
    for start in range(0, trials, chunk_size):
        idx = range(start, min(start + chunk_size, trials))
        picks = _discrete_outcomes_batch(channel, rho0, steps, seed, list(idx))
        windows = [picks[:, k:k + m] for k in range(n)]
        sums = sum(lookup[tuple(w[:, j] for j in range(m))] for w in windows)
        hits += int(np.sum(sums >= threshold))
    return _empirical_tail(hits, trials)


# ---------------------------------------------------------------------------
# Laplace transforms
# ---------------------------------------------------------------------------

def laplace_transform_exact(channel: KrausChannel, rho0, f, n: int, u: float,
                            agreement_tol: float = 1e-10) -> float:
    """E[exp(u sum_k f(X_k))], cross-validated along two independent routes.

    Route one iterates the tilted Heisenberg family on the identity and
    pairs with the initial state; route two sums the exact DP score law.
    Both are carried in log-domain; a log-value above ~700 is reported as
    an overflow rather than returned as inf.
    """
    fv = observation_vector(f, channel.labels)
    weights = np.exp(0.5 * u * fv)  # applied on both sides of x
    x = np.eye(channel.dim, dtype=complex)
    log_scale = 0.0
    for _ in range(n):
        x = np.einsum("i,iqp,qr,irs->ps", weights**2, channel._stack.conj(), x,
                      channel._stack)
        norm = uniform_norm(x)
        if norm == 0.0:
            raise RuntimeError("tilted iteration annihilated the identity")
        x = x / norm
        log_scale += math.log(norm)
    value = float(np.trace(state_matrix(rho0) @ x).real)
    if value <= 0.0:
        raise RuntimeError("tilted expectation lost positivity")
    log_operator = log_scale + math.log(value)
    log_dp = score_distribution_dp(channel, rho0, f, n).log_laplace(u)
    if abs(log_operator - log_dp) > agreement_tol * max(1.0, abs(log_dp)):
        raise RuntimeError(
            f"Laplace transform routes disagree: {log_operator!r} vs {log_dp!r} (log scale)")
    if log_operator > 700.0:
        raise OverflowError(
            f"Laplace transform overflows double precision; log value {log_operator:.6f}")
    return float(math.exp(log_operator))


# ---------------------------------------------------------------------------
# continuous-time counting processes
# ---------------------------------------------------------------------------

def _vec_rows(rho_batch: np.ndarray) -> np.ndarray:
    """Column-stacking vec per batch row."""
    b, d, _ = rho_batch.shape
    return np.swapaxes(rho_batch, 1, 2).reshape(b, d * d)


def _unvec_rows(vecs: np.ndarray, d: int) -> np.ndarray:
    b = vecs.shape[0]
    return np.swapaxes(vecs.reshape(b, d, d), 1, 2)


class _CountingSampler:
    """Batched jump / no-jump unravelling of a GKLS generator."""

    def __init__(self, gen: GKLSGenerator, bisect_rel_tol: float = 1e-10):
        self.gen = gen
        self.dim = gen.dim
        g = gen.no_jump_generator_matrix
        m0 = np.kron(g.conj(), np.eye(self.dim)) + np.kron(np.eye(self.dim), g)
        w, r = np.linalg.eig(m0)
        if np.linalg.cond(r) > 1e10:
            raise RuntimeError("no-jump generator eigenbasis is too ill conditioned")
        self.eigenvalues = w
        self.right_t = r.T.copy()
        self.right_inv_t = np.linalg.inv(r).T.copy()
        self.trace_row = vec(np.eye(self.dim)).conj() @ r
        self.t0 = 1.0 / max(uniform_norm(g), 1e-30)
        self.rel_tol = bisect_rel_tol
        self.jump_stack = np.stack(gen.jumps)

    def _coefficients(self, rho_batch: np.ndarray) -> np.ndarray:
        """survival(tau) = Re sum_k a_k exp(w_k tau), one row per trajectory."""
        return (_vec_rows(rho_batch) @ self.right_inv_t) * self.trace_row[None, :]

    @staticmethod
    def _survival(coeff: np.ndarray, eigenvalues: np.ndarray, taus: np.ndarray) -> np.ndarray:
        return np.einsum("bk,bk->b", coeff, np.exp(np.outer(taus, eigenvalues))).real

    def propagate(self, rho_batch: np.ndarray, taus: np.ndarray) -> np.ndarray:
        coeff = _vec_rows(rho_batch) @ self.right_inv_t
        out = (coeff * np.exp(np.outer(taus, self.eigenvalues))) @ self.right_t
        return _unvec_rows(out, self.dim)

    def waiting_times(self, rho_batch: np.ndarray, targets: np.ndarray,
                      remaining: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve survival(tau) = target per trajectory by bracketed bisection.

        Returns (tau, jumps) where ``jumps`` marks trajectories whose jump
        happens before their remaining horizon; for the others tau equals the
        remaining time.  Each trajectory's arithmetic involves only its own
        row, so results do not depend on the batch composition.
        """
        coeff = self._coefficients(rho_batch)
        w = self.eigenvalues
        batch = rho_batch.shape[0]
        s_rem = self._survival(coeff, w, remaining)
        jumps = s_rem <= targets
        tau = remaining.astype(float).copy()
        if not np.any(jumps):
            return tau, jumps

        idx = np.nonzero(jumps)[0]
        c = coeff[idx]
        tgt = targets[idx]
        rem = remaining[idx]
        lo = np.zeros(idx.size)
        hi = np.minimum(np.full(idx.size, self.t0), rem)
        s_hi = self._survival(c, w, hi)
        s_prev = np.ones(idx.size)
        # grow brackets geometrically until the survival crosses the target
        for _ in range(200):
            need = s_hi > tgt
            if not np.any(need):
                break
            if np.any(s_hi[need] > s_prev[need] + 1e-8):
                raise SurvivalMonotonicityError(
                    "survival function increased while growing the bracket")
            s_prev = np.where(need, s_hi, s_prev)
            lo = np.where(need, hi, lo)
            hi = np.where(need, np.minimum(hi * 2.0, rem), hi)
            s_hi = np.where(need, self._survival(c, w, hi), s_hi)
        else:
            raise SurvivalMonotonicityError("bracket growth failed to converge")
        # masked bisection: converged rows freeze, so each result is a
        # function of its own trajectory data only
        for _ in range(100):
            active = (hi - lo) > self.rel_tol * np.maximum(hi, 1e-300)
            if not np.any(active):
                break
            mid = np.where(active, 0.5 * (lo + hi), hi)
            s_mid = self._survival(c, w, mid)
            go_right = active & (s_mid > tgt)
            lo = np.where(go_right, mid, lo)
            hi = np.where(active & ~go_right, mid, hi)
        tau[idx] = 0.5 * (lo + hi)
        return tau, jumps

    def jump_probabilities(self, rho_batch: np.ndarray) -> np.ndarray:
        p = np.einsum("ipq,bqr,ipr->bi", self.jump_stack, rho_batch,
                      self.jump_stack.conj()).real
        return np.clip(p, 0.0, None)


def _counting_batch(gen: GKLSGenerator, rho0, t: float, seed: int,
                    indices: Sequence[int], collect_events: bool):
    """Counts per label (and optionally event lists) for a batch of trajectories."""
    sampler = _CountingSampler(gen)
    batch = len(indices)
    d = gen.dim
    rho = np.broadcast_to(state_matrix(rho0), (batch, d, d)).copy()
    tape = _Tape(seed, indices)
    clock = np.zeros(batch)
    active = np.arange(batch)
    counts = np.zeros((batch, len(gen.jumps)), dtype=np.int64)
    events: list[list] = [[] for _ in range(batch)] if collect_events else []

    while active.size:
        u_wait = tape.take(active)
        remaining = t - clock[active]
        tau, jumped = sampler.waiting_times(rho[active], u_wait, remaining)
        rho_evolved = sampler.propagate(rho[active], tau)
        tr = np.einsum("bpp->b", rho_evolved).real
        if np.any(tr <= 0.0):
            raise FilterCollapseError("no-jump propagation lost all probability")
        rho[active] = rho_evolved / tr[:, None, None]
        clock[active] += tau

        jump_rows = active[jumped]
        if jump_rows.size:
            probs = sampler.jump_probabilities(rho[jump_rows])
            probs = np.where(probs < _PROB_FLOOR, 0.0, probs)
            totals = probs.sum(axis=1)
            if np.any(totals <= 0.0):
                raise FilterCollapseError("vanishing jump intensities at a jump time")
            u_label = tape.take(jump_rows)
            cum = np.cumsum(probs, axis=1)
            pick = (cum < (u_label * totals)[:, None]).sum(axis=1)
            pick = np.minimum(pick, len(gen.jumps) - 1)
            l = sampler.jump_stack[pick]
            updated = np.einsum("bpq,bqr,bsr->bps", l, rho[jump_rows], l.conj())
            tr_j = np.einsum("bpp->b", updated).real
            rho[jump_rows] = updated / tr_j[:, None, None]
            counts[jump_rows, pick] += 1
            if collect_events:
                for row, p in zip(jump_rows, pick):
                    events[row].append((float(clock[row]), gen.labels[p]))
        active = active[jumped]
    return counts, events


def sample_counting(gen: GKLSGenerator, rho0, t: float, seed: int,
                    index: int = 0) -> CountingRecord:
    """One counting record on [0, t] from stream (seed, index)."""
    if t < 0:
        raise ValueError("horizon t must be nonnegative")
    if t == 0.0:
        return CountingRecord(horizon=0.0, events=(), seed=seed, index=index)
    _, events = _counting_batch(gen, rho0, t, seed, [index], collect_events=True)
    return CountingRecord(horizon=t, events=tuple(events[0]), seed=seed, index=index)


def counting_counts(gen: GKLSGenerator, rho0, t: float, trials: int, seed: int,
                    chunk_size: int = 2048) -> np.ndarray:
    """Matrix of per-label click counts, one row per trajectory."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if t == 0.0:
        return np.zeros((trials, len(gen.jumps)), dtype=np.int64)
    rows = []
    for start in range(0, trials, chunk_size):
        idx = list(range(start, min(start + chunk_size, trials)))
        counts, _ = _counting_batch(gen, rho0, t, seed, idx, collect_events=False)
        rows.append(counts)
    return np.vstack(rows)


def mc_counting_tail(gen: GKLSGenerator, label, rho0, t: float, gamma: float,
                     trials: int, seed: int, m: float | None = None,
                     chunk_size: int = 2048) -> EmpiricalTail:
    """Monte Carlo tail of N_label(t)/t - m >= gamma.

    The stationary intensity m = tr(L^* L sigma) is computed from the steady
    state unless passed explicitly.
    """
    if m is None:
        from .spectral import gkls_steady_state
        sigma = gkls_steady_state(gen)
        l = gen.jumps[gen.index(label)]
        m = float(np.trace(dagger(l) @ l @ sigma.matrix).real)
    col = gen.index(label)
    if t == 0.0:
        hit = 1 if -m >= gamma - 1e-12 else 0
        return _empirical_tail(hit * trials, trials)
    counts = counting_counts(gen, rho0, t, trials, seed, chunk_size)
    deviations = counts[:, col] / t - m
    hits = int(np.sum(deviations >= gamma - 1e-12))
    return _empirical_tail(hits, trials)
