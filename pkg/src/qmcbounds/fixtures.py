"""Desk-scale reference models used by the demos and the test suite."""

from __future__ import annotations

import numpy as np

from .classical import MarkovChain
from .operators import GKLSGenerator, KrausChannel

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |g><e|, e = index 1


def ring_channel(bias: float = 0.0, size: int = 3) -> tuple[KrausChannel, dict]:
    """Nearest-neighbour hopping on a ring, one Kraus operator per directed edge.

    Hop up (k -> k+1) with probability (1 + bias)/2, down with (1 - bias)/2;
    the returned payoff is +1 per up edge and -1 per down edge, so its
    stationary mean equals ``bias``.  The maximally mixed state is invariant
    for every bias.
    """
    if not -1.0 < bias < 1.0:
        raise ValueError("bias must lie in (-1, 1)")
    p_up = (1.0 + bias) / 2.0
    ops, labels, payoff = [], [], {}
    for k in range(size):
        up = np.zeros((size, size), dtype=complex)
        up[(k + 1) % size, k] = np.sqrt(p_up)
        dn = np.zeros((size, size), dtype=complex)
        dn[(k - 1) % size, k] = np.sqrt(1.0 - p_up)
        lab_up, lab_dn = f"{k}+", f"{k}-"
        ops += [up, dn]
        labels += [lab_up, lab_dn]
        payoff[lab_up] = 1.0
        payoff[lab_dn] = -1.0
    return KrausChannel(ops, labels), payoff


def rotation_x(theta: float) -> np.ndarray:
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * PAULI_X


def rotation_z(theta: float) -> np.ndarray:
    return np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])


def two_unitary_qubit(weights: tuple[float, float] = (0.7, 0.3),
                      angles: tuple[float, float] = (1.0, 0.7)
                      ) -> tuple[KrausChannel, dict]:
    """Qubit channel mixing two unitary rotations, outcome payoffs (+1, -1).

    Irreducible with invariant state 1/2, but its multiplicative
    symmetrization is always reducible (every eigenvector of U1 U2^* spans
    an invariant line), so only the Hoeffding-flavor hypotheses hold.
    """
    w1, w2 = weights
    channel = KrausChannel([np.sqrt(w1) * rotation_x(angles[0]),
                            np.sqrt(w2) * rotation_z(angles[1])],
                           labels=("u1", "u2"))
    return channel, {"u1": 1.0, "u2": -1.0}


def driven_qubit(omega: float = 1.0, kappa: float = 0.5) -> GKLSGenerator:
    """Resonantly driven qubit with photon-counting decay.

    Steady excited population omega^2 / (kappa^2 + 2 omega^2); the click
    intensity at stationarity is kappa times that population.
    """
    h = 0.5 * omega * PAULI_X
    return GKLSGenerator(h, [np.sqrt(kappa) * SIGMA_MINUS], labels=("click",))


def poisson_counting_qubit(kappa: float = 0.4, damping: float = 0.6) -> GKLSGenerator:
    """Counted jump proportional to a unitary, plus a damping channel.

    The counted detector has state-independent intensity kappa, so its
    record is exactly a Poisson process; the auxiliary damping makes the
    semigroup irreducible so the counting-bound hypotheses hold.
    """
    h = np.zeros((2, 2), dtype=complex)
    jumps = [np.sqrt(kappa) * PAULI_X, np.sqrt(damping) * SIGMA_MINUS]
    return GKLSGenerator(h, jumps, labels=("poisson", "damping"))


def two_block_ring(bias_a: float = 0.3, bias_b: float = -0.4) -> tuple[KrausChannel, dict]:
    """Direct sum of two biased rings: a reducible, positive-recurrent channel.

    The payoff is +-1 per hop direction in both blocks, so the two blocks
    have different asymptotic means (bias_a and bias_b).
    """
    ch_a, f_a = ring_channel(bias_a)
    ch_b, f_b = ring_channel(bias_b)
    dim = 6
    ops, labels, payoff = [], [], {}
    for lab, v in zip(ch_a.labels, ch_a.kraus):
        z = np.zeros((dim, dim), dtype=complex)
        z[:3, :3] = v
        ops.append(z)
        labels.append(f"A{lab}")
        payoff[f"A{lab}"] = f_a[lab]
    for lab, v in zip(ch_b.labels, ch_b.kraus):
        z = np.zeros((dim, dim), dtype=complex)
        z[3:, 3:] = v
        ops.append(z)
        labels.append(f"B{lab}")
        payoff[f"B{lab}"] = f_b[lab]
    return KrausChannel(ops, labels), payoff


def nondemolition_channel(seed: int = 5, dim: int = 3) -> KrausChannel:
    """Measurement that preserves a pointer basis: every |a_j><a_j| is invariant.

    Kraus operators V_i = sum_j <i|U_j|chi> |a_j><a_j| for random ancilla
    unitaries U_j; decomposing the channel recovers one block per pointer
    state.
    """
    rng = np.random.default_rng(seed)
    chi = np.array([1.0, 0.0], dtype=complex)
    ops = [np.zeros((dim, dim), dtype=complex) for _ in range(2)]
    for j in range(dim):
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        u, _ = np.linalg.qr(a)
        amp = u @ chi
        for i in range(2):
            ops[i][j, j] = amp[i]
    return KrausChannel(ops, labels=("0", "1"))


def two_state_chain() -> MarkovChain:
    """The 2-state chain with stationary law (4/7, 3/7)."""
    return MarkovChain([[0.7, 0.3], [0.4, 0.6]], states=("a", "b"))


def random_channel(dim: int, n_kraus: int, seed: int) -> KrausChannel:
    """Haar-ish random channel: generically irreducible with faithful state."""
    rng = np.random.default_rng(seed)
    raw = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
           for _ in range(n_kraus)]
    gram = sum(v.conj().T @ v for v in raw)
    w, u = np.linalg.eigh(gram)
    normalizer = (u * (1.0 / np.sqrt(w))) @ u.conj().T
    return KrausChannel([v @ normalizer for v in raw])
