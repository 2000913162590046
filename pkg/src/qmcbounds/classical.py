"""Concentration bounds for empirical fluxes of classical Markov chains.

A flux is a time average of a function of the *jumps* (x, y) of a chain
rather than of its states.  The bounds here work directly with the
transition matrix P: the Bernstein flavor uses the spectral gap of the
multiplicative symmetrization Q = P_dagger P (adjoint in l2(sigma)), the
Hoeffding flavor the sup norm of the pseudoresolvent (Id - P)^(-1) on the
centered subspace.  The doubled-up chain on edges is provided as a
diagnostic of why bounds through the enlarged chain degenerate, and the
diagonal quantum embedding (Kraus operators sqrt(p_xy) |y><x|) links every
classical computation to its quantum counterpart for cross-validation.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product
from typing import Hashable, Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .bounds import BoundConstants, BoundResult, h_function, _clip_bound, _invalid
from .operators import KrausChannel
from .spectral import HypothesisError


class MarkovChain:
    """Finite chain given by a row-stochastic transition matrix."""

    def __init__(self, transition, states: Sequence[Hashable] | None = None,
                 tol: float = 1e-12):
        p = np.asarray(transition, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"transition matrix must be square, got {p.shape}")
        if np.any(p < -tol):
            raise ValueError("transition probabilities must be nonnegative")
        rows = p.sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > max(tol, 1e-12):
            raise ValueError(f"rows must sum to 1, worst deviation {np.max(np.abs(rows-1)):.3e}")
        self.transition = np.clip(p, 0.0, None)
        self.states = tuple(states) if states is not None else tuple(range(p.shape[0]))
        if len(self.states) != p.shape[0]:
            raise ValueError("one state label per row required")
        self.size = p.shape[0]

    def edges(self) -> tuple[tuple, ...]:
        """Positive-probability jumps (x, y), in row-major order."""
        return tuple((self.states[x], self.states[y])
                     for x in range(self.size) for y in range(self.size)
                     if self.transition[x, y] > 0.0)

    def index(self, state) -> int:
        return self.states.index(state)


class FluxFunction:
    """Real value per positive-probability edge of a chain."""

    def __init__(self, values: Mapping):
        self.values = {tuple(k): float(v) for k, v in values.items()}
        if not all(np.isfinite(v) for v in self.values.values()):
            raise ValueError("flux values must be finite")

    def matrix(self, chain: MarkovChain) -> np.ndarray:
        """Edge values as a matrix, zero on non-edges; errors on missing edges."""
        out = np.zeros((chain.size, chain.size))
        for x, y in chain.edges():
            key = (x, y)
            if key not in self.values:
                raise KeyError(f"flux undefined on edge {key}")
            out[chain.index(x), chain.index(y)] = self.values[key]
        return out


def flux_matrix(f, chain: MarkovChain) -> np.ndarray:
    if isinstance(f, FluxFunction):
        return f.matrix(chain)
    return FluxFunction(f).matrix(chain)


def _strongly_connected(mask: np.ndarray) -> bool:
    def reach(adj: np.ndarray) -> np.ndarray:
        seen = np.zeros(adj.shape[0], dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            x = stack.pop()
            for y in np.nonzero(adj[x])[0]:
                if not seen[y]:
                    seen[y] = True
                    stack.append(int(y))
        return seen
    return bool(reach(mask).all() and reach(mask.T).all())


def is_chain_irreducible(chain: MarkovChain) -> bool:
    return _strongly_connected(chain.transition > 0.0)


def stationary_distribution(chain: MarkovChain, tol: float = 1e-12) -> np.ndarray:
    """Unique invariant law sigma P = sigma; errors on a reducible chain."""
    if not is_chain_irreducible(chain):
        raise HypothesisError("chain is reducible: no unique invariant law")
    p = chain.transition
    a = np.vstack([p.T - np.eye(chain.size), np.ones(chain.size)])
    b = np.concatenate([np.zeros(chain.size), [1.0]])
    sigma, *_ = np.linalg.lstsq(a, b, rcond=None)
    sigma = np.clip(sigma, 0.0, None)
    sigma = sigma / sigma.sum()
    residual = float(np.max(np.abs(sigma @ p - sigma)))
    if residual > tol:
        raise HypothesisError(f"stationary solve residual {residual:.3e} exceeds {tol:g}")
    return sigma


def stationary_l2_adjoint(chain: MarkovChain, sigma: np.ndarray | None = None) -> np.ndarray:
    """Adjoint of P in l2(sigma): D^(-1) P^T D with D = diag(sigma)."""
    s = stationary_distribution(chain) if sigma is None else np.asarray(sigma, dtype=float)
    return (chain.transition.T * s[None, :]) / s[:, None]


def edge_stationary_law(chain: MarkovChain, sigma: np.ndarray | None = None) -> np.ndarray:
    """pi(x, y) = sigma_x p_xy as a matrix."""
    s = stationary_distribution(chain) if sigma is None else np.asarray(sigma, dtype=float)
    return s[:, None] * chain.transition


def _centered_flux(chain: MarkovChain, f, sigma: np.ndarray) -> tuple[np.ndarray, float, float, float]:
    fm = flux_matrix(f, chain)
    pi = edge_stationary_law(chain, sigma)
    mean = float(np.sum(pi * fm))
    centered = np.where(chain.transition > 0.0, fm - mean, 0.0)
    b = math.sqrt(max(float(np.sum(pi * centered**2)), 0.0))
    mask = chain.transition > 0.0
    c = float(np.max(np.abs(centered[mask]))) if mask.any() else 0.0
    return centered, mean, b, c


def flux_bernstein(chain: MarkovChain, nu, f, gamma: float, n: int,
                   two_sided: bool = False) -> BoundResult:
    """Bernstein-type flux bound via the gap of Q = P_dagger P in l2(sigma)."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    sigma = stationary_distribution(chain)
    nu = np.asarray(nu, dtype=float)
    _, _, b, c = _centered_flux(chain, f, sigma)
    n_nu = math.sqrt(float(np.sum(nu**2 / sigma)))
    q = stationary_l2_adjoint(chain, sigma) @ chain.transition
    q_irreducible = _strongly_connected(q > 1e-15)
    root = np.sqrt(sigma)
    sym = (root[:, None] * q) / root[None, :]
    eigs = np.sort(np.linalg.eigvalsh((sym + sym.T) / 2))
    epsilon = float(1.0 - eigs[-2]) if eigs.size >= 2 else 1.0
    constants = BoundConstants(b=b, c=c, epsilon=epsilon if q_irreducible else 0.0,
                               n_rho=n_nu, hypothesis_ok=q_irreducible)
    pref = (2.0 if two_sided else 1.0) * n_nu
    if b == 0.0:
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="flux-bernstein", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="deterministic flux (b = 0)")
    if not q_irreducible or epsilon <= 0.0:
        return _invalid("flux-bernstein", gamma, n, constants,
                        "multiplicative symmetrization of P is reducible", two_sided)
    b2 = b * b
    exponent = -n * (gamma**2 * epsilon / (6.0 * b2)) * h_function(10.0 * c * gamma / (3.0 * b2))
    return BoundResult(probability_bound=_clip_bound(pref, exponent), exponent=exponent,
                       valid=True, constants=constants, flavor="flux-bernstein",
                       gamma=gamma, horizon=n, two_sided=two_sided)


def _centered_subspace_vertices(sigma: np.ndarray) -> np.ndarray:
    """Extreme points of {h: ||h||_inf <= 1, sigma . h = 0}, |E| small.

    Vertices have all coordinates at +-1 except at most one, fixed by the
    centering constraint.
    """
    e = sigma.size
    vertices = []
    for free in range(e):
        others = [i for i in range(e) if i != free]
        for signs in product((-1.0, 1.0), repeat=e - 1):
            h = np.zeros(e)
            h[others] = signs
            val = -float(sigma[others] @ h[others]) / sigma[free]
            if abs(val) <= 1.0 + 1e-12:
                h[free] = np.clip(val, -1.0, 1.0)
                vertices.append(h)
    return np.asarray(vertices)


def chain_pseudoresolvent_norm(chain: MarkovChain, sigma: np.ndarray | None = None,
                               exact_limit: int = 12) -> float:
    """Certified || (Id - P)^(-1) ||_inf on {h: sigma(h) = 0}.

    Exact vertex enumeration for small chains, otherwise the same
    sqrt(|E|) * (2 -> 2) norm-equivalence chain used for channels.
    """
    s = stationary_distribution(chain) if sigma is None else np.asarray(sigma, dtype=float)
    p = chain.transition
    e = chain.size
    q_basis = sla.null_space(s[None, :])
    p_f = q_basis.T @ p @ q_basis
    try:
        inv_f = np.linalg.solve(np.eye(e - 1) - p_f, np.eye(e - 1))
    except np.linalg.LinAlgError as exc:
        raise HypothesisError("Id - P singular on the centered subspace") from exc
    m_full = q_basis @ inv_f @ q_basis.T
    if e <= exact_limit:
        vertices = _centered_subspace_vertices(s)
        images = vertices @ m_full.T
        return float(np.max(np.abs(images)))
    root_e = math.sqrt(e)
    best = root_e * float(np.linalg.norm(inv_f, 2))
    partial, power = 0.0, np.eye(e - 1)
    for j in range(32):
        term = 1.0 if j == 0 else min(1.0, root_e * float(np.linalg.norm(power, 2)))
        partial += term
        power = p_f @ power
        best = min(best, partial + root_e * float(np.linalg.norm(power @ inv_f, 2)))
    return best


def flux_hoeffding(chain: MarkovChain, f, gamma: float, n: int,
                   two_sided: bool = False) -> BoundResult:
    """Hoeffding-type flux bound with G = (1 + ||(Id-P)^(-1)|F||_inf) c."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    sigma = stationary_distribution(chain)
    _, _, b, c = _centered_flux(chain, f, sigma)
    if c == 0.0:
        constants = BoundConstants(b=0.0, c=0.0, n_rho=1.0)
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="flux-hoeffding", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="deterministic flux (c = 0)")
    norm = chain_pseudoresolvent_norm(chain, sigma)
    g = (1.0 + norm) * c
    constants = BoundConstants(b=b, c=c, g=g, n_rho=1.0)
    pref = 2.0 if two_sided else 1.0
    if n * gamma < 2.0 * g:
        return _invalid("flux-hoeffding", gamma, n, constants, "outside regime", two_sided)
    if n == 1:
        return BoundResult(probability_bound=0.0, exponent=-math.inf, valid=True,
                           constants=constants, flavor="flux-hoeffding", gamma=gamma,
                           horizon=n, two_sided=two_sided,
                           reason="n = 1 and gamma >= 2c: single jump cannot deviate")
    exponent = -((n * gamma - 2.0 * g)**2) / (2.0 * (n - 1) * g**2)
    return BoundResult(probability_bound=_clip_bound(pref, exponent), exponent=exponent,
                       valid=True, constants=constants, flavor="flux-hoeffding",
                       gamma=gamma, horizon=n, two_sided=two_sided)


def doubled_chain(chain: MarkovChain) -> MarkovChain:
    """Chain on edges with p_(x,y)(z,w) = delta(y, z) p_yw.

    Inherits irreducibility from P, with invariant law sigma_x p_xy; shipped
    as a diagnostic: its multiplicative symmetrization is degenerate for any
    chain with more than one state, which is why the flux bounds work with P
    itself instead.
    """
    edges = chain.edges()
    p = np.zeros((len(edges), len(edges)))
    for a, (_, y) in enumerate(edges):
        for b, (z, w) in enumerate(edges):
            if y == z:
                p[a, b] = chain.transition[chain.index(z), chain.index(w)]
    return MarkovChain(p, states=edges)


def embed_diagonal(chain: MarkovChain, f) -> tuple[KrausChannel, dict]:
    """Quantum dilation: Kraus sqrt(p_xy) |y><x| per edge, payoff per edge label.

    The output process of the embedded channel started in diag(nu) is the
    edge process of the chain started in nu, so exact tails agree.
    """
    fm = flux_matrix(f, chain)
    ops, labels, payoff = [], [], {}
    for x, y in chain.edges():
        i, j = chain.index(x), chain.index(y)
        v = np.zeros((chain.size, chain.size), dtype=complex)
        v[j, i] = math.sqrt(chain.transition[i, j])
        ops.append(v)
        labels.append((x, y))
        payoff[(x, y)] = float(fm[i, j])
    return KrausChannel(ops, labels), payoff


def deformed_transition(chain: MarkovChain, f, u: float) -> np.ndarray:
    """Tilted matrix (p_xy exp(u f(x,y))); its powers give the flux MGF."""
    fm = flux_matrix(f, chain)
    return chain.transition * np.exp(u * fm)


def flux_mgf(chain: MarkovChain, nu, f, n: int, u: float) -> float:
    """E_nu[exp(u sum_{k<=n} f(X_k, X_{k+1}))] = nu P_u^n 1."""
    p_u = deformed_transition(chain, f, u)
    vec_ = np.ones(chain.size)
    for _ in range(n):
        vec_ = p_u @ vec_
    return float(np.asarray(nu, dtype=float) @ vec_)


def exact_flux_tail(chain: MarkovChain, nu, f, n: int, gamma: float,
                    max_denominator: int = 10**6) -> float:
    """Exact P((1/n) sum_k f(X_k, X_{k+1}) >= gamma) by (state, score) DP."""
    fm = flux_matrix(f, chain)
    mask = chain.transition > 0.0
    vals = fm[mask]
    fracs = [Fraction(float(v)).limit_denominator(max_denominator) for v in vals]
    for v, fr in zip(vals, fracs):
        if abs(float(fr) - float(v)) > 1e-12 * max(1.0, abs(float(v))):
            raise ValueError("flux values do not fit the rational score lattice")
    denom = 1
    for fr in fracs:
        denom = denom * fr.denominator // math.gcd(denom, fr.denominator)
    nums = np.zeros_like(fm, dtype=np.int64)
    nums[mask] = [int(fr * denom) for fr in fracs]

    table: dict[tuple[int, int], float] = {}
    for x, w in enumerate(np.asarray(nu, dtype=float)):
        if w > 0.0:
            table[(x, 0)] = table.get((x, 0), 0.0) + float(w)
    for _ in range(n):
        new: dict[tuple[int, int], float] = {}
        for (x, s), w in table.items():
            for y in np.nonzero(mask[x])[0]:
                key = (int(y), s + int(nums[x, y]))
                new[key] = new.get(key, 0.0) + w * chain.transition[x, y]
        table = new
    threshold = gamma * n * denom - 1e-9
    return float(sum(w for (x, s), w in table.items() if s >= threshold))
